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

#include "condsim/conditioning.h"

#include <cmath>

#include "condsim/error.h"

namespace condsim {
namespace {

void CheckKind(const ConditionSubspace& s, const ModulatorConfig& cfg) {
  cfg.Validate();
  const bool tangent = s.kind() == SubspaceKind::kTangent;
  if (tangent != cfg.use_manifold) {
    throw Error(ErrorCode::kInvalidConfig,
                cfg.use_manifold
                    ? "manifold modulation needs a tangent subspace"
                    : "Euclidean modulation needs a Euclidean subspace");
  }
}

}  // namespace

void ModulatorConfig::Validate() const {
  if (use_rotation && !use_manifold) {
    throw Error(ErrorCode::kInvalidConfig,
                "rotation requires the manifold mapping");
  }
}

Vector Modulate(const ConditionSubspace& s, const Rotation& r,
                const UnitVector& v, const ModulatorConfig& cfg) {
  CheckKind(s, cfg);
  if (v.dim() != s.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "modulate: dimension");
  }
  if (!cfg.use_manifold) return s.ProjectRaw(v.coords());
  if (cfg.use_rotation) {
    const UnitVector rotated = Normalize(r.Apply(v.coords()));
    return s.Project(LogMap(s.mu_c(), rotated));
  }
  return s.Project(LogMap(s.mu_c(), v));
}

SimilarityScore CosineOfModulated(const Vector& a, const Vector& b,
                                  ZeroProjectionPolicy policy) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cosine: dimension");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na <= kZeroProjectionNorm || nb <= kZeroProjectionNorm) {
    if (policy == ZeroProjectionPolicy::kError) {
      throw Error(ErrorCode::kZeroProjection,
                  "modulated vector projects to zero");
    }
    return {0.0};
  }
  return {a.dot(b) / (na * nb)};
}

SimilarityScore ConditionalSimilarity(const ConditionSubspace& s,
                                      const Rotation& r, const UnitVector& q,
                                      const UnitVector& d,
                                      const ModulatorConfig& cfg) {
  return CosineOfModulated(Modulate(s, r, q, cfg), Modulate(s, r, d, cfg),
                           cfg.zero_projection_policy);
}

SimilarityScore RawSimilarity(const UnitVector& q, const UnitVector& d) {
  return {q.Dot(d)};
}

SimilarityScore AsymmetricSimilarity(const ConditionSubspace& s,
                                     const Rotation& r, const UnitVector& q,
                                     const UnitVector& d,
                                     const ModulatorConfig& cfg) {
  return CosineOfModulated(Modulate(s, r, q, cfg), d.coords(),
                           cfg.zero_projection_policy);
}

Rotation RotationFor(const UnitVector& mu_v, const ConditionSubspace& s,
                     const ModulatorConfig& cfg) {
  cfg.Validate();
  if (!cfg.use_rotation) return Rotation::Identity(s.dim());
  return HouseholderAlign(mu_v, s.mu_c());
}

}  // namespace condsim
