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

#include <random>
#include <vector>

#include "dense_oracle.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace condsim {
namespace {

struct Fixture {
  PromptMatrix prompts;
  ConditionSubspace subspace;
  UnitVector mu_v;
};

// Text prompts around e0 and images around e1 in dimension d.
Fixture MakeFixture(std::uint64_t seed, int d, int n_prompts, int k) {
  std::mt19937_64 rng(seed);
  oracle::Vec text = oracle::Vec::Zero(d);
  text(0) = 1.0;
  oracle::Vec image = oracle::Vec::Zero(d);
  image(0) = 0.8;
  image(1) = 0.6;
  PromptMatrix prompts = PromptMatrix::Create(
      oracle::ConeRows(rng, text, n_prompts, 0.3), {"c"});
  ConditionSubspace s = BuildSubspace(prompts, k);
  return {std::move(prompts), std::move(s), Normalize(image)};
}

TEST(ModulateTest, ReferencePointMapsToZero) {
  const Fixture f = MakeFixture(1, 8, 20, 4);
  const ModulatorConfig cfg{.use_rotation = false};
  const Vector m = Modulate(f.subspace, Rotation::Identity(8),
                            f.subspace.mu_c(), cfg);
  EXPECT_LE(m.norm(), 1e-12);
}

TEST(ModulateTest, VisualMeanMapsToZeroUnderAlignment) {
  const Fixture f = MakeFixture(2, 8, 20, 4);
  const ModulatorConfig cfg;
  const Rotation r = RotationFor(f.mu_v, f.subspace, cfg);
  EXPECT_LE(Modulate(f.subspace, r, f.mu_v, cfg).norm(), 1e-7);
}

TEST(ModulateTest, MatchesDensePipeline) {
  const Fixture f = MakeFixture(3, 16, 40, 6);
  const oracle::Subspace dense = oracle::BuildTangent(f.prompts.rows(), 6);
  const oracle::Mat h = oracle::Alignment(f.mu_v.coords(), dense.mu);
  const ModulatorConfig cfg;
  const Rotation r = RotationFor(f.mu_v, f.subspace, cfg);
  std::mt19937_64 rng(30);
  for (int i = 0; i < 50; ++i) {
    const UnitVector v = RandomUnit(rng, 16);
    EXPECT_LE((Modulate(f.subspace, r, v, cfg) -
               oracle::Modulate(dense, h, v.coords()))
                  .norm(),
              1e-5);
  }
}

TEST(ModulateTest, KindMustMatchConfig) {
  const Fixture f = MakeFixture(4, 8, 20, 4);
  const ModulatorConfig euclid{.use_rotation = false, .use_manifold = false};
  EXPECT_EQ(ErrorOf([&] {
              Modulate(f.subspace, Rotation::Identity(8), f.mu_v, euclid);
            }),
            ErrorCode::kInvalidConfig);
  const ModulatorConfig invalid{.use_rotation = true, .use_manifold = false};
  EXPECT_EQ(ErrorOf([&] { invalid.Validate(); }), ErrorCode::kInvalidConfig);
}

TEST(ModulateTest, EuclideanProjectsRawFeatures) {
  const Fixture f = MakeFixture(5, 8, 20, 4);
  const ConditionSubspace e = BuildEuclideanSubspace(f.prompts, 4);
  const ModulatorConfig cfg{.use_rotation = false, .use_manifold = false};
  const Vector m = Modulate(e, Rotation::Identity(8), f.mu_v, cfg);
  EXPECT_LE((m - e.basis() * (e.basis().transpose() * f.mu_v.coords())).norm(),
            1e-14);
}

TEST(SimilarityTest, RawCosineCases) {
  const auto e1 = UnitVector::Axis(3, 0);
  const auto e2 = UnitVector::Axis(3, 1);
  EXPECT_EQ(RawSimilarity(e1, e1).value, 1.0);
  EXPECT_EQ(RawSimilarity(e1, e2).value, 0.0);
  EXPECT_EQ(RawSimilarity(e1, UnitVector::FromUnit(-e1.coords())).value, -1.0);
}

TEST(SimilarityTest, SelfSimilarityAndSymmetry) {
  const Fixture f = MakeFixture(6, 12, 30, 5);
  const ModulatorConfig cfg;
  const Rotation r = RotationFor(f.mu_v, f.subspace, cfg);
  std::mt19937_64 rng(60);
  for (int i = 0; i < 50; ++i) {
    const UnitVector a = RandomUnit(rng, 12);
    const UnitVector b = RandomUnit(rng, 12);
    EXPECT_NEAR(ConditionalSimilarity(f.subspace, r, a, a, cfg).value, 1.0,
                1e-6);
    const double ab = ConditionalSimilarity(f.subspace, r, a, b, cfg).value;
    EXPECT_EQ(ab, ConditionalSimilarity(f.subspace, r, b, a, cfg).value);
    EXPECT_LE(std::abs(ab), 1.0 + 1e-6);
  }
}

TEST(SimilarityTest, OrthogonalModulatedImagesScoreZero) {
  // With identity rotation and mean e1, points along e2 and e3 land on
  // orthogonal basis directions.
  RowMatrix rows(4, 4);
  const double a = 0.3;
  rows << std::cos(a), std::sin(a), 0, 0,  //
      std::cos(a), -std::sin(a), 0, 0,      //
      std::cos(a), 0, std::sin(a), 0,       //
      std::cos(a), 0, -std::sin(a), 0;
  const PromptMatrix p = PromptMatrix::Create(rows, {"c"});
  const ConditionSubspace s = BuildSubspace(p, 2);
  const ModulatorConfig cfg{.use_rotation = false};
  const UnitVector q = Unit({1, 1, 0, 0.2});
  const UnitVector d = Unit({1, 0, 1, 0.2});
  const oracle::Subspace dense = oracle::BuildTangent(rows, 2);
  const oracle::Mat id = oracle::Mat::Identity(4, 4);
  EXPECT_NEAR(oracle::Cosine(oracle::Modulate(dense, id, q.coords()),
                             oracle::Modulate(dense, id, d.coords())),
              0.0, 1e-12);
  EXPECT_NEAR(ConditionalSimilarity(s, Rotation::Identity(4), q, d, cfg).value,
              0.0, 1e-5);
}

TEST(SimilarityTest, ZeroProjectionPolicy) {
  const Fixture f = MakeFixture(7, 8, 20, 4);
  ModulatorConfig cfg{.use_rotation = false};
  const UnitVector other = Unit({0.3, 0.9, 0.1, 0, 0, 0, 0, 0.2});
  EXPECT_EQ(ConditionalSimilarity(f.subspace, Rotation::Identity(8),
                                  f.subspace.mu_c(), other, cfg)
                .value,
            0.0);
  EXPECT_EQ(AsymmetricSimilarity(f.subspace, Rotation::Identity(8),
                                 f.subspace.mu_c(), other, cfg)
                .value,
            0.0);
  cfg.zero_projection_policy = ZeroProjectionPolicy::kError;
  EXPECT_EQ(ErrorOf([&] {
              ConditionalSimilarity(f.subspace, Rotation::Identity(8),
                                    f.subspace.mu_c(), other, cfg);
            }),
            ErrorCode::kZeroProjection);
}

TEST(SimilarityTest, AsymmetricWithFullTangentSubspace) {
  // k = d - 1 spans the whole tangent space, so the projection is the
  // identity on tangent vectors.
  std::mt19937_64 rng(8);
  const int d = 6;
  const UnitVector center = Unit({1, 0.2, 0, 0, 0, 0});
  const PromptMatrix p = PromptMatrix::Create(
      oracle::ConeRows(rng, center.coords(), 40, 0.5), {"c"});
  const ConditionSubspace s = BuildSubspace(p, d - 1);
  ASSERT_EQ(s.k(), d - 1);
  const ModulatorConfig cfg{.use_rotation = false};
  for (int i = 0; i < 20; ++i) {
    const UnitVector q = RandomUnit(rng, d);
    const UnitVector x = RandomUnit(rng, d);
    const double expected = oracle::Cosine(
        oracle::LogMap(s.mu_c().coords(), q.coords()), x.coords());
    EXPECT_NEAR(
        AsymmetricSimilarity(s, Rotation::Identity(d), q, x, cfg).value,
        expected, 1e-9);
  }
}

TEST(SimilarityTest, AsymmetricRegressionValue) {
  std::mt19937_64 rng(2024);
  const int d = 6;
  const UnitVector center = Unit({1, 0.2, 0, 0, 0, 0});
  const PromptMatrix p = PromptMatrix::Create(
      oracle::ConeRows(rng, center.coords(), 40, 0.5), {"c"});
  const ConditionSubspace s = BuildSubspace(p, d - 1);
  const UnitVector q = Unit({0.5, -0.1, 0.3, 0.7, 0.2, -0.4});
  const UnitVector x = Unit({0.1, 0.6, -0.3, 0.2, 0.5, 0.1});
  const ModulatorConfig cfg{.use_rotation = false};
  const double expected = oracle::Cosine(
      oracle::LogMap(s.mu_c().coords(), q.coords()), x.coords());
  EXPECT_NEAR(AsymmetricSimilarity(s, Rotation::Identity(d), q, x, cfg).value,
              expected, 1e-9);
}

TEST(SimilarityTest, GlobalRotationLeavesFullRankRankingUnchanged) {
  // Apply one extra orthonormal map G to prompts, database and query. With a
  // projection covering the whole tangent space the ranking must not change.
  std::mt19937_64 rng(9);
  const int d = 8;
  const UnitVector center = Unit({1, 0.3, 0, 0, 0, 0, 0, 0});
  const RowMatrix prompts = oracle::ConeRows(rng, center.coords(), 60, 0.5);
  const RowMatrix images = oracle::ConeRows(
      rng, Unit({0.7, 0, 0.7, 0, 0, 0, 0, 0.1}).coords(), 40, 0.5);
  const oracle::Mat g = oracle::Alignment(RandomUnit(rng, d).coords(),
                                          RandomUnit(rng, d).coords());
  auto ranking = [&](const oracle::Mat& map) {
    const PromptMatrix p =
        PromptMatrix::Create(RowMatrix(prompts * map.transpose()), {"c"});
    const ConditionSubspace s = BuildSubspace(p, d - 1);
    const RowMatrix rows = images * map.transpose();
    const UnitVector mu_v = SphericalMean(rows);
    const ModulatorConfig cfg;
    const Rotation r = RotationFor(mu_v, s, cfg);
    const UnitVector q = Normalize(rows.row(0).transpose());
    std::vector<double> scores;
    for (int i = 1; i < rows.rows(); ++i) {
      scores.push_back(ConditionalSimilarity(
                           s, r, q, Normalize(rows.row(i).transpose()), cfg)
                           .value);
    }
    return oracle::RankDescending(scores);
  };
  EXPECT_EQ(ranking(oracle::Mat::Identity(d, d)), ranking(g));
}

TEST(SimilarityTest, EuclideanFullRankReducesToRawRanking) {
  std::mt19937_64 rng(10);
  const int d = 6;
  const PromptMatrix p =
      PromptMatrix::Create(oracle::RandomUnitRows(rng, 30, d), {"c"});
  const ConditionSubspace s = BuildEuclideanSubspace(p, d);
  ASSERT_EQ(s.k(), d);
  const ModulatorConfig cfg{.use_rotation = false, .use_manifold = false};
  const UnitVector q = RandomUnit(rng, d);
  std::vector<double> conditioned;
  std::vector<double> raw;
  for (int i = 0; i < 30; ++i) {
    const UnitVector x = RandomUnit(rng, d);
    conditioned.push_back(
        ConditionalSimilarity(s, Rotation::Identity(d), q, x, cfg).value);
    raw.push_back(RawSimilarity(q, x).value);
  }
  EXPECT_EQ(oracle::RankDescending(conditioned), oracle::RankDescending(raw));
}

TEST(SimilarityScoreTest, Ordering) {
  EXPECT_LT(SimilarityScore{0.1}, SimilarityScore{0.2});
  EXPECT_EQ(SimilarityScore{0.5}, SimilarityScore{0.5});
}

}  // namespace
}  // namespace condsim
