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

// Condition subspaces: prompt embeddings for a condition are mapped onto the
// tangent space at their normalized mean, and the top right singular vectors
// of that tangent matrix span the subspace visual features are projected on.

#ifndef CONDSIM_SUBSPACE_H_
#define CONDSIM_SUBSPACE_H_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "condsim/geometry.h"

namespace condsim {

inline constexpr int kDefaultSubspaceRank = 50;
// Singular values at or below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-7;

// Unit-norm text embeddings t_1..t_n of the prompts describing one or more
// conditions, one per row.
class PromptMatrix {
 public:
  // Normalizes every row. Throws kTooFewItems (n < 2), kZeroVector,
  // kInvalidArgument (d < 2 or prompt_texts size mismatch).
  static PromptMatrix Create(RowMatrix rows,
                             std::vector<std::string> condition_names,
                             std::vector<std::string> prompt_texts = {});

  const RowMatrix& rows() const { return rows_; }
  Eigen::Index size() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }
  const std::vector<std::string>& condition_names() const {
    return condition_names_;
  }
  // Empty, or one entry per row.
  const std::vector<std::string>& prompt_texts() const {
    return prompt_texts_;
  }

 private:
  friend PromptMatrix MergeConditions(std::span<const PromptMatrix> parts);

  PromptMatrix() = default;

  RowMatrix rows_;
  std::vector<std::string> condition_names_;
  std::vector<std::string> prompt_texts_;
};

// Row-wise concatenation of several prompt sets. The subspace built from the
// result has its mean recomputed over the union.
// Throws kEmptyInput, kDimensionMismatch.
PromptMatrix MergeConditions(std::span<const PromptMatrix> parts);

enum class SubspaceKind {
  // SVD of the tangent-mapped prompts; basis columns are tangent at mu_c.
  kTangent,
  // SVD of the raw prompt rows (Euclidean ablation); no tangency.
  kEuclidean,
};

class ConditionSubspace {
 public:
  // Validates the invariants: orthonormal basis (1e-5), tangency of every
  // column when kind == kTangent, non-negative non-increasing spectrum,
  // 1 <= k <= min(spectrum length, d). Throws kOrthonormalityViolation or
  // kInvalidArgument.
  static ConditionSubspace FromParts(SubspaceKind kind, UnitVector mu_c,
                                     Eigen::MatrixXd basis,
                                     Vector singular_values,
                                     std::vector<std::string> condition_names,
                                     int requested_k);

  SubspaceKind kind() const { return kind_; }
  const UnitVector& mu_c() const { return mu_c_; }
  // d x k, columns are the retained right singular vectors.
  const Eigen::MatrixXd& basis() const { return basis_; }
  // Full spectrum, descending.
  const Vector& singular_values() const { return singular_values_; }
  int k() const { return static_cast<int>(basis_.cols()); }
  int requested_k() const { return requested_k_; }
  bool clamped() const { return k() < requested_k_; }
  Eigen::Index dim() const { return basis_.rows(); }
  const std::vector<std::string>& condition_names() const {
    return condition_names_;
  }

  // V_k (V_k^T t). Throws kBaseMismatch when t is based elsewhere.
  Vector Project(const TangentVector& t) const;

  // V_k (V_k^T x) for an arbitrary vector, without base checks.
  Vector ProjectRaw(const Eigen::Ref<const Vector>& x) const;

  // sum_{i<=j} sigma_i^2 / sum_i sigma_i^2. Throws kIndexOutOfRange unless
  // 1 <= j <= singular_values().size().
  double ExplainedEnergy(int j) const;

 private:
  ConditionSubspace(SubspaceKind kind, UnitVector mu_c)
      : kind_(kind), mu_c_(std::move(mu_c)) {}

  SubspaceKind kind_;
  UnitVector mu_c_;
  Eigen::MatrixXd basis_;
  Vector singular_values_;
  std::vector<std::string> condition_names_;
  int requested_k_ = 0;
};

// Tangent-space subspace: mu_c = spherical mean of the prompts, each prompt
// log-mapped at mu_c, SVD of the stacked n x d tangent matrix with no further
// centering. The effective rank is min(k, numerical rank) where the numerical
// rank counts sigma_i > 1e-7 sigma_1. Right singular vectors are sign-fixed so
// their largest-magnitude coordinate is positive.
// Throws kInvalidArgument (k < 1), kDegenerateMean, kRankZero.
ConditionSubspace BuildSubspace(const PromptMatrix& prompts,
                                int k = kDefaultSubspaceRank);

// Euclidean ablation: the same truncation applied to the raw prompt rows.
ConditionSubspace BuildEuclideanSubspace(const PromptMatrix& prompts,
                                         int k = kDefaultSubspaceRank);

double ExplainedEnergy(const ConditionSubspace& s, int j);

}  // namespace condsim

#endif  // CONDSIM_SUBSPACE_H_
