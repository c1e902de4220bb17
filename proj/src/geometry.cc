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

#include "condsim/geometry.h"

#include <cmath>
#include <numbers>
#include <string>

#include "condsim/error.h"

namespace condsim {
namespace {

void CheckDim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": dimension " + std::to_string(a) +
                    " vs " + std::to_string(b));
  }
}

// theta / sin(theta), with the series 1 + theta^2 / 6 near zero.
double AngleOverSine(double theta) {
  if (theta < kSeriesAngle) return 1.0 + theta * theta / 6.0;
  return theta / std::sin(theta);
}

// Maps one unit vector `x` (given with its cosine to mu) onto the tangent
// space at mu, writing into `out`. `out` may alias `x`.
template <typename In, typename Out>
void LogMapInto(const Vector& mu, const In& x, double cosine, Out&& out) {
  if (cosine <= -1.0 + kAntipodeEpsilon) {
    throw Error(ErrorCode::kAntipodalPoint,
                "log map undefined at the antipode of the reference point "
                "(x.mu = " + std::to_string(cosine) + ")");
  }
  out = x - cosine * mu.transpose();
  const double perp = out.norm();
  const double theta = std::atan2(perp, cosine);
  if (theta < kZeroAngle) {
    out.setZero();
    return;
  }
  out *= AngleOverSine(theta);
}

}  // namespace

UnitVector UnitVector::FromUnit(Vector coords) {
  if (coords.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "unit vectors need dimension >= 2");
  }
  const double norm = coords.norm();
  if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
    throw Error(ErrorCode::kNotUnitNorm,
                "expected unit norm, got " + std::to_string(norm));
  }
  return UnitVector(std::move(coords));
}

UnitVector UnitVector::Axis(Eigen::Index dim, Eigen::Index i) {
  if (i < 0 || i >= dim) {
    throw Error(ErrorCode::kIndexOutOfRange, "axis index out of range");
  }
  Vector e = Vector::Zero(dim);
  e[i] = 1.0;
  return FromUnit(std::move(e));
}

double UnitVector::Dot(const UnitVector& other) const {
  CheckDim(dim(), other.dim(), "dot");
  return coords_.dot(other.coords_);
}

UnitVector Normalize(const Eigen::Ref<const Vector>& v) {
  const double norm = v.norm();
  if (!(norm > kZeroNormThreshold)) {
    throw Error(ErrorCode::kZeroVector, "cannot normalize a zero vector");
  }
  return UnitVector::FromUnit(v / norm);
}

TangentVector::TangentVector(Vector coords, UnitVector base)
    : coords_(std::move(coords)), base_(std::move(base)) {
  CheckDim(coords_.size(), base_.dim(), "tangent vector");
  const double along = coords_.dot(base_.coords());
  if (!(std::abs(along) <= kTangencyTolerance)) {
    throw Error(ErrorCode::kNotTangent,
                "vector is not tangent at its base (component " +
                    std::to_string(along) + ")");
  }
  if (!(coords_.norm() <= std::numbers::pi + 1e-6)) {
    throw Error(ErrorCode::kNotTangent,
                "tangent vector longer than pi");
  }
}

TangentVector TangentVector::Zero(UnitVector base) {
  Vector zero = Vector::Zero(base.dim());
  return TangentVector(std::move(zero), std::move(base));
}

UnitVector SphericalMean(std::span<const UnitVector> rows) {
  if (rows.empty()) {
    throw Error(ErrorCode::kEmptyInput, "spherical mean of no rows");
  }
  Vector sum = Vector::Zero(rows.front().dim());
  for (const auto& row : rows) {
    CheckDim(row.dim(), sum.size(), "spherical mean");
    sum += row.coords();
  }
  if (!(sum.norm() > kZeroNormThreshold)) {
    throw Error(ErrorCode::kDegenerateMean, "rows cancel to a zero mean");
  }
  return Normalize(sum);
}

UnitVector SphericalMean(const RowMatrix& rows) {
  if (rows.rows() == 0) {
    throw Error(ErrorCode::kEmptyInput, "spherical mean of no rows");
  }
  const Vector sum = rows.colwise().sum().transpose();
  if (!(sum.norm() > kZeroNormThreshold)) {
    throw Error(ErrorCode::kDegenerateMean, "rows cancel to a zero mean");
  }
  return Normalize(sum);
}

TangentVector LogMap(const UnitVector& mu, const UnitVector& x) {
  CheckDim(mu.dim(), x.dim(), "log map");
  Vector out(x.dim());
  LogMapInto(mu.coords(), x.coords().transpose(), mu.Dot(x),
             out.transpose());
  return TangentVector(std::move(out), mu);
}

void LogMapRows(const UnitVector& mu, RowMatrix& rows) {
  CheckDim(rows.cols(), mu.dim(), "log map");
  const Vector cosines = rows * mu.coords();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    auto row = rows.row(i);
    LogMapInto(mu.coords(), row, cosines[i], row);
  }
}

UnitVector ExpMap(const UnitVector& mu, const TangentVector& t) {
  CheckDim(mu.dim(), t.base().dim(), "exp map");
  if ((t.base().coords() - mu.coords()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kBaseMismatch,
                "tangent vector is based at a different point");
  }
  const double norm = t.Norm();
  if (norm == 0.0) return mu;
  const Vector p =
      std::cos(norm) * mu.coords() + (std::sin(norm) / norm) * t.coords();
  return Normalize(p);
}

Rotation Rotation::Identity(Eigen::Index dim) { return Rotation(dim); }

Vector Rotation::Apply(const Eigen::Ref<const Vector>& x) const {
  Vector out = x;
  ApplyInPlace(out);
  return out;
}

void Rotation::ApplyInPlace(Eigen::Ref<Vector> x) const {
  CheckDim(x.size(), dim_, "rotation");
  if (first_) x -= (2.0 * first_->dot(x)) * *first_;
  if (second_) x -= (2.0 * second_->dot(x)) * *second_;
}

void Rotation::ApplyToRows(RowMatrix& rows) const {
  CheckDim(rows.cols(), dim_, "rotation");
  for (const auto* normal : {&first_, &second_}) {
    if (!*normal) continue;
    const Vector& u = **normal;
    const Vector along = rows * u;
    rows.noalias() -= (2.0 * along) * u.transpose();
  }
}

Rotation HouseholderAlign(const UnitVector& from, const UnitVector& to) {
  CheckDim(from.dim(), to.dim(), "householder align");
  const Vector sum = from.coords() + to.coords();
  const double sum_norm = sum.norm();
  if (!(sum_norm > kAntipodeEpsilon)) {
    throw Error(ErrorCode::kAntipodalMeans,
                "cannot align antipodal means");
  }
  const Vector bisector = sum / sum_norm;

  Rotation r(from.dim());
  auto normal = [](const Vector& v) -> std::optional<Vector> {
    const double n = v.norm();
    if (n <= kIdentityReflection) return std::nullopt;
    return v / n;
  };
  r.first_ = normal(from.coords() - bisector);
  r.second_ = normal(bisector - to.coords());
  return r;
}

}  // namespace condsim
