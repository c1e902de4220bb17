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

// Hypersphere primitives: unit vectors, the normalized-Euclidean mean, the
// logarithm/exponential maps at a reference point, and mean-aligning
// rotations built from two Householder reflections.
//
// Storage is double precision throughout. Inputs that arrive as float are
// widened before any accumulation.

#ifndef CONDSIM_GEOMETRY_H_
#define CONDSIM_GEOMETRY_H_

#include <Eigen/Core>
#include <optional>
#include <span>

namespace condsim {

using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kUnitNormTolerance = 1e-6;
inline constexpr double kZeroNormThreshold = 1e-12;
inline constexpr double kAntipodeEpsilon = 1e-7;
inline constexpr double kTangencyTolerance = 1e-5;
// Below this angle the log map returns the zero tangent vector.
inline constexpr double kZeroAngle = 1e-8;
// Below this angle theta/sin(theta) uses its Taylor series.
inline constexpr double kSeriesAngle = 1e-4;
// A reflection whose normal is shorter than this is treated as identity.
inline constexpr double kIdentityReflection = 1e-9;

// A point on the unit hypersphere S^{d-1}, d >= 2.
class UnitVector {
 public:
  // Adopts coordinates that are already unit norm (within 1e-6).
  // Throws kNotUnitNorm or kInvalidArgument (d < 2).
  static UnitVector FromUnit(Vector coords);

  // Standard basis vector e_i in R^dim.
  static UnitVector Axis(Eigen::Index dim, Eigen::Index i);

  const Vector& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double Dot(const UnitVector& other) const;

 private:
  explicit UnitVector(Vector coords) : coords_(std::move(coords)) {}

  Vector coords_;
};

// Returns v / ||v||. Throws kZeroVector when ||v|| <= 1e-12.
UnitVector Normalize(const Eigen::Ref<const Vector>& v);

// An element of the tangent space at `base`: coords . base = 0 and
// ||coords|| <= pi.
class TangentVector {
 public:
  // Throws kNotTangent when the tangency or norm bound is violated and
  // kDimensionMismatch when sizes differ.
  TangentVector(Vector coords, UnitVector base);

  static TangentVector Zero(UnitVector base);

  const Vector& coords() const { return coords_; }
  const UnitVector& base() const { return base_; }
  double Norm() const { return coords_.norm(); }

 private:
  Vector coords_;
  UnitVector base_;
};

// Normalized arithmetic mean of unit rows. Throws kEmptyInput for no rows and
// kDegenerateMean when the sum cancels (||sum|| <= 1e-12).
UnitVector SphericalMean(std::span<const UnitVector> rows);
UnitVector SphericalMean(const RowMatrix& rows);

// log_mu(x) = (x - mu (x.mu)) * theta / sin(theta), theta = angle(x, mu).
// Throws kAntipodalPoint when x.mu <= -1 + 1e-7.
TangentVector LogMap(const UnitVector& mu, const UnitVector& x);

// Row-wise log map of unit rows at mu, in place. Rows are assumed unit norm.
void LogMapRows(const UnitVector& mu, RowMatrix& rows);

// exp_mu(t) = cos(||t||) mu + sin(||t||) t / ||t||.
// Throws kBaseMismatch when t is not based at mu.
UnitVector ExpMap(const UnitVector& mu, const TangentVector& t);

// Orthonormal map H = H2 H1 composed of two Householder reflections. Each
// reflection is stored as a unit normal u and applied as x - 2 u (u.x), so
// applying the rotation costs O(d) and never forms a d x d matrix.
class Rotation {
 public:
  static Rotation Identity(Eigen::Index dim);

  Eigen::Index dim() const { return dim_; }
  bool IsIdentity() const { return !first_ && !second_; }
  const std::optional<Vector>& first_normal() const { return first_; }
  const std::optional<Vector>& second_normal() const { return second_; }

  // Throws kDimensionMismatch.
  Vector Apply(const Eigen::Ref<const Vector>& x) const;
  void ApplyInPlace(Eigen::Ref<Vector> x) const;
  void ApplyToRows(RowMatrix& rows) const;

 private:
  friend Rotation HouseholderAlign(const UnitVector&, const UnitVector&);

  explicit Rotation(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim_ = 0;
  std::optional<Vector> first_;
  std::optional<Vector> second_;
};

// Builds H with H(from) = to via the bisector m = (from + to) / ||from + to||:
// H1 reflects from onto m, H2 reflects m onto to. A reflection whose normal
// vanishes (already aligned) is flagged identity.
// Throws kAntipodalMeans when ||from + to|| <= 1e-7.
Rotation HouseholderAlign(const UnitVector& from, const UnitVector& to);

inline Vector ApplyRotation(const Rotation& r,
                            const Eigen::Ref<const Vector>& x) {
  return r.Apply(x);
}

}  // namespace condsim

#endif  // CONDSIM_GEOMETRY_H_
