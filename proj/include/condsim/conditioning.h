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

// The condition modulator and the similarities built on it.
//
//   modulate(v) = P_c log_{mu_c}(H v)        (manifold, rotation)
//   modulate(v) = P_c log_{mu_c}(v)          (manifold, no rotation)
//   modulate(v) = P_c^{euclid} v             (Euclidean ablation)
//
// csim is the cosine between two modulated vectors (symmetric form) or
// between a modulated query and a raw database vector (asymmetric form).

#ifndef CONDSIM_CONDITIONING_H_
#define CONDSIM_CONDITIONING_H_

#include <compare>

#include "condsim/geometry.h"
#include "condsim/subspace.h"

namespace condsim {

// Modulated vectors with norm at or below this are "zero projections".
inline constexpr double kZeroProjectionNorm = 1e-10;

enum class ZeroProjectionPolicy {
  kError,      // throw kZeroProjection
  kScoreZero,  // similarity is 0
};

struct ModulatorConfig {
  bool use_rotation = true;
  bool use_manifold = true;
  ZeroProjectionPolicy zero_projection_policy = ZeroProjectionPolicy::kScoreZero;

  // Rotation only makes sense together with the manifold mapping.
  // Throws kInvalidConfig.
  void Validate() const;
};

struct SimilarityScore {
  double value = 0.0;

  auto operator<=>(const SimilarityScore&) const = default;
};

// Throws kInvalidConfig when cfg is inconsistent or the subspace kind does not
// match cfg.use_manifold, kDimensionMismatch, kAntipodalPoint.
Vector Modulate(const ConditionSubspace& s, const Rotation& r,
                const UnitVector& v, const ModulatorConfig& cfg);

// Cosine between two already-modulated vectors under the zero policy.
SimilarityScore CosineOfModulated(const Vector& a, const Vector& b,
                                  ZeroProjectionPolicy policy);

// Symmetric conditional similarity: cos(modulate(q), modulate(d)).
SimilarityScore ConditionalSimilarity(const ConditionSubspace& s,
                                      const Rotation& r, const UnitVector& q,
                                      const UnitVector& d,
                                      const ModulatorConfig& cfg);

// Unconditioned baseline q . d.
SimilarityScore RawSimilarity(const UnitVector& q, const UnitVector& d);

// Asymmetric form: cos(modulate(q), d); the database vector is left as is.
SimilarityScore AsymmetricSimilarity(const ConditionSubspace& s,
                                     const Rotation& r, const UnitVector& q,
                                     const UnitVector& d,
                                     const ModulatorConfig& cfg);

// Rotation to use for a database with spherical mean mu_v: aligns mu_v to
// s.mu_c when cfg.use_rotation, identity otherwise.
Rotation RotationFor(const UnitVector& mu_v, const ConditionSubspace& s,
                     const ModulatorConfig& cfg);

}  // namespace condsim

#endif  // CONDSIM_CONDITIONING_H_
