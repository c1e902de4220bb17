// Copyright 2026 The condsim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CONDSIM_TESTS_TEST_UTIL_H_
#define CONDSIM_TESTS_TEST_UTIL_H_

#include <optional>
#include <ostream>
#include <random>

#include "condsim/error.h"
#include "condsim/geometry.h"

namespace condsim {

inline std::ostream& operator<<(std::ostream& os, ErrorCode code) {
  return os << ErrorCodeName(code);
}

// Runs `f` and returns the code of the condsim::Error it throws, if any.
template <typename F>
std::optional<ErrorCode> ErrorOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline Vector RandomGaussian(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> g;
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = g(rng);
  return v;
}

inline UnitVector RandomUnit(std::mt19937_64& rng, Eigen::Index d) {
  return Normalize(RandomGaussian(rng, d));
}

inline UnitVector Unit(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return Normalize(v);
}

}  // namespace condsim

#endif  // CONDSIM_TESTS_TEST_UTIL_H_
