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

#include "condsim/subspace.h"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "condsim/error.h"

namespace condsim {
namespace {

constexpr double kOrthonormalTolerance = 1e-5;

// Flips each column so its largest-magnitude coordinate is positive. The
// first index wins among equal magnitudes.
void FixSigns(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0.0) v.col(j) *= -1.0;
  }
}

ConditionSubspace Truncate(SubspaceKind kind, const RowMatrix& matrix,
                           UnitVector mu_c,
                           std::vector<std::string> condition_names, int k) {
  if (k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "subspace rank k must be >= 1");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(matrix),
                                     Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma[0] > kZeroNormThreshold)) {
    throw Error(ErrorCode::kRankZero,
                "prompt matrix has rank zero (all prompts identical?)");
  }
  int rank = 0;
  while (rank < sigma.size() && sigma[rank] > kRankThreshold * sigma[0]) {
    ++rank;
  }
  const int effective = std::min(k, rank);
  Eigen::MatrixXd basis = svd.matrixV().leftCols(effective);
  FixSigns(basis);
  return ConditionSubspace::FromParts(kind, std::move(mu_c), std::move(basis),
                                      sigma, std::move(condition_names), k);
}

}  // namespace

PromptMatrix PromptMatrix::Create(RowMatrix rows,
                                  std::vector<std::string> condition_names,
                                  std::vector<std::string> prompt_texts) {
  if (rows.rows() < 2) {
    throw Error(ErrorCode::kTooFewItems,
                "a prompt matrix needs at least 2 prompts");
  }
  if (rows.cols() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "prompt embeddings need dimension >= 2");
  }
  if (!prompt_texts.empty() &&
      static_cast<Eigen::Index>(prompt_texts.size()) != rows.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "prompt_texts must be empty or one per row");
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(norm > kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector,
                  "prompt row " + std::to_string(i) + " is zero");
    }
    rows.row(i) /= norm;
  }
  PromptMatrix m;
  m.rows_ = std::move(rows);
  m.condition_names_ = std::move(condition_names);
  m.prompt_texts_ = std::move(prompt_texts);
  return m;
}

PromptMatrix MergeConditions(std::span<const PromptMatrix> parts) {
  if (parts.empty()) {
    throw Error(ErrorCode::kEmptyInput, "nothing to merge");
  }
  const Eigen::Index dim = parts.front().dim();
  Eigen::Index total = 0;
  bool all_texts = true;
  for (const auto& p : parts) {
    if (p.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "merged prompt sets must share a dimension");
    }
    total += p.size();
    all_texts = all_texts && !p.prompt_texts().empty();
  }
  RowMatrix rows(total, dim);
  std::vector<std::string> names;
  std::vector<std::string> texts;
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    rows.middleRows(offset, p.size()) = p.rows();
    offset += p.size();
    names.insert(names.end(), p.condition_names().begin(),
                 p.condition_names().end());
    if (all_texts) {
      texts.insert(texts.end(), p.prompt_texts().begin(),
                   p.prompt_texts().end());
    }
  }
  PromptMatrix m;
  m.rows_ = std::move(rows);
  m.condition_names_ = std::move(names);
  m.prompt_texts_ = std::move(texts);
  return m;
}

ConditionSubspace ConditionSubspace::FromParts(
    SubspaceKind kind, UnitVector mu_c, Eigen::MatrixXd basis,
    Vector singular_values, std::vector<std::string> condition_names,
    int requested_k) {
  const Eigen::Index d = mu_c.dim();
  const Eigen::Index k = basis.cols();
  if (basis.rows() != d) {
    throw Error(ErrorCode::kDimensionMismatch,
                "basis rows must equal the embedding dimension");
  }
  if (k < 1 || k > singular_values.size() || k > d) {
    throw Error(ErrorCode::kInvalidArgument,
                "subspace rank out of range: k=" + std::to_string(k));
  }
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    if (!(singular_values[i] >= 0.0) ||
        (i > 0 && singular_values[i] > singular_values[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "singular values must be non-negative and non-increasing");
    }
  }
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  const double ortho_err =
      (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (!(ortho_err <= kOrthonormalTolerance)) {
    throw Error(ErrorCode::kOrthonormalityViolation,
                "basis is not orthonormal (max error " +
                    std::to_string(ortho_err) + ")");
  }
  if (kind == SubspaceKind::kTangent) {
    const double along =
        (basis.transpose() * mu_c.coords()).cwiseAbs().maxCoeff();
    if (!(along <= kOrthonormalTolerance)) {
      throw Error(ErrorCode::kOrthonormalityViolation,
                  "basis column not tangent at mu_c (component " +
                      std::to_string(along) + ")");
    }
  }
  ConditionSubspace s(kind, std::move(mu_c));
  s.basis_ = std::move(basis);
  s.singular_values_ = std::move(singular_values);
  s.condition_names_ = std::move(condition_names);
  s.requested_k_ = std::max<int>(requested_k, static_cast<int>(k));
  return s;
}

Vector ConditionSubspace::Project(const TangentVector& t) const {
  if (t.base().dim() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "projection dimension");
  }
  if ((t.base().coords() - mu_c_.coords()).cwiseAbs().maxCoeff() > 1e-4) {
    throw Error(ErrorCode::kBaseMismatch,
                "tangent vector is not based at the subspace mean");
  }
  return ProjectRaw(t.coords());
}

Vector ConditionSubspace::ProjectRaw(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "projection dimension");
  }
  const Vector coeffs = basis_.transpose() * x;
  return basis_ * coeffs;
}

double ConditionSubspace::ExplainedEnergy(int j) const {
  if (j < 1 || j > singular_values_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "explained energy index " + std::to_string(j) +
                    " outside [1, " + std::to_string(singular_values_.size()) +
                    "]");
  }
  const double total = singular_values_.squaredNorm();
  if (j == singular_values_.size()) return 1.0;
  return std::min(1.0, singular_values_.head(j).squaredNorm() / total);
}

double ExplainedEnergy(const ConditionSubspace& s, int j) {
  return s.ExplainedEnergy(j);
}

ConditionSubspace BuildSubspace(const PromptMatrix& prompts, int k) {
  UnitVector mu_c = SphericalMean(prompts.rows());
  RowMatrix tangent = prompts.rows();
  LogMapRows(mu_c, tangent);
  return Truncate(SubspaceKind::kTangent, tangent, std::move(mu_c),
                  prompts.condition_names(), k);
}

ConditionSubspace BuildEuclideanSubspace(const PromptMatrix& prompts, int k) {
  UnitVector mu_c = SphericalMean(prompts.rows());
  return Truncate(SubspaceKind::kEuclidean, prompts.rows(), std::move(mu_c),
                  prompts.condition_names(), k);
}

}  // namespace condsim
