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

#include "condsim/index.h"

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "condsim/conditioning.h"
#include "dense_oracle.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace condsim {
namespace {

std::vector<std::string> Ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "id%04d", i);
    ids.emplace_back(buf);
  }
  return ids;
}

struct World {
  RowMatrix prompts;
  RowMatrix images;
  std::shared_ptr<const Database> db;
  std::shared_ptr<const ConditionSubspace> subspace;
};

World MakeWorld(std::uint64_t seed, int n, int d, int k) {
  std::mt19937_64 rng(seed);
  oracle::Vec text = oracle::Vec::Zero(d);
  text(0) = 1.0;
  oracle::Vec image = oracle::Vec::Zero(d);
  image(0) = 0.8;
  image(1) = 0.6;
  World w;
  w.prompts = oracle::ConeRows(rng, text, 4 * k, 0.4);
  w.images = oracle::ConeRows(rng, image, n, 0.4);
  w.db = std::make_shared<const Database>(Database::Build(w.images, Ids(n)));
  w.subspace = std::make_shared<const ConditionSubspace>(
      BuildSubspace(PromptMatrix::Create(w.prompts, {"c"}), k));
  return w;
}

TEST(DatabaseTest, BuildsFromRows) {
  std::mt19937_64 rng(1);
  const Database db =
      Database::Build(oracle::RandomUnitRows(rng, 3, 4), {"a", "b", "c"});
  EXPECT_EQ(db.size(), 3);
  EXPECT_EQ(db.Find("b"), 1);
  EXPECT_FALSE(db.Find("z").has_value());
}

TEST(DatabaseTest, RejectsBadInput) {
  std::mt19937_64 rng(2);
  const RowMatrix rows = oracle::RandomUnitRows(rng, 3, 4);
  EXPECT_EQ(ErrorOf([&] { Database::Build(rows, {"a", "b", "a"}); }),
            ErrorCode::kDuplicateId);
  EXPECT_EQ(ErrorOf([&] { Database::Build(rows, {"a", "b"}); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(ErrorOf([&] {
              Database::Build(rows, {"a", "b", "c"}, {{"color", {"red"}}});
            }),
            ErrorCode::kLabelCoverage);
  EXPECT_EQ(ErrorOf([&] { Database::Build(RowMatrix(0, 4), {}); }),
            ErrorCode::kTooFewItems);
  auto single = std::make_shared<const Database>(
      Database::Build(rows.topRows(1), {"a"}));
  EXPECT_EQ(ErrorOf([&] { RawCosineRanker ranker(single); }),
            ErrorCode::kTooFewItems);
  const Database db = Database::Build(rows, {"a", "b", "c"});
  EXPECT_EQ(ErrorOf([&] { db.Labels("color"); }), ErrorCode::kMissingLabel);
}

TEST(DatabaseTest, SubsetKeepsLabelsAndOrder) {
  std::mt19937_64 rng(3);
  const Database db = Database::Build(oracle::RandomUnitRows(rng, 4, 3),
                                      {"a", "b", "c", "d"},
                                      {{"x", {"0", "1", "0", "1"}}});
  const std::vector<Eigen::Index> rows = {3, 1};
  const Database sub = db.Subset(rows);
  EXPECT_EQ(sub.ids(), (std::vector<std::string>{"d", "b"}));
  EXPECT_EQ(sub.Labels("x"), (std::vector<std::string>{"1", "1"}));
  EXPECT_EQ(sub.embeddings().row(0), db.embeddings().row(3));
}

TEST(EncoderTest, CountsInvocations) {
  std::mt19937_64 rng(4);
  const RowMatrix rows = oracle::RandomUnitRows(rng, 3, 4);
  TableEncoder encoder({"a", "b", "c"}, rows);
  const auto before = Encoder::TotalInvocations();
  const Database db = Database::FromEncoder(encoder, {"c", "a"});
  EXPECT_EQ(Encoder::TotalInvocations() - before, 2u);
  EXPECT_TRUE(db.embeddings().row(0).isApprox(rows.row(2)));
}

TEST(ConditionedViewTest, CacheMatchesDenseOracle) {
  const World w = MakeWorld(5, 200, 64, 8);
  auto view = PrepareCondition(w.db, w.subspace);
  const oracle::Subspace dense = oracle::BuildTangent(w.prompts, 8);
  const oracle::Mat h =
      oracle::Alignment(w.db->mu_v().coords(), dense.mu);
  for (Eigen::Index i = 0; i < w.db->size(); ++i) {
    const oracle::Vec expected =
        oracle::Modulate(dense, h, w.db->embeddings().row(i).transpose());
    EXPECT_LE((view->cache().row(i).transpose() - expected).norm(), 1e-5);
  }
}

TEST(ConditionedViewTest, CacheRowsMatchModulate) {
  const World w = MakeWorld(6, 50, 16, 4);
  auto view = PrepareCondition(w.db, w.subspace);
  for (Eigen::Index i = 0; i < w.db->size(); ++i) {
    const Vector m =
        Modulate(*w.subspace, view->rotation(), w.db->Row(i), view->config());
    EXPECT_LE((view->cache().row(i).transpose() - m).norm(), 1e-6);
  }
}

TEST(ConditionedViewTest, PrepareIsDeterministic) {
  const World w = MakeWorld(7, 100, 32, 6);
  auto a = PrepareCondition(w.db, w.subspace);
  auto b = PrepareCondition(w.db, w.subspace);
  EXPECT_EQ(a->cache(), b->cache());
}

TEST(ConditionedViewTest, PrepareNeverEncodes) {
  const World w = MakeWorld(8, 100, 32, 6);
  const auto before = Encoder::TotalInvocations();
  auto view = PrepareCondition(w.db, w.subspace);
  EXPECT_EQ(view->stats().encoder_calls, 0u);
  EXPECT_EQ(Encoder::TotalInvocations(), before);
}

TEST(ConditionedViewTest, OperationCountsScaleLinearly) {
  for (int n : {50, 100, 200}) {
    const World w = MakeWorld(9, n, 16, 4);
    const PrepareStats& st = PrepareCondition(w.db, w.subspace)->stats();
    EXPECT_EQ(st.rows, static_cast<std::size_t>(n));
    EXPECT_EQ(st.rotations, static_cast<std::size_t>(n));
    EXPECT_EQ(st.log_maps, static_cast<std::size_t>(n));
    EXPECT_EQ(st.basis_multiplications, static_cast<std::size_t>(2 * n));
  }
  const World w = MakeWorld(9, 50, 16, 4);
  const ModulatorConfig no_rotation{.use_rotation = false};
  EXPECT_EQ(PrepareCondition(w.db, w.subspace, no_rotation)->stats().rotations,
            0u);
}

TEST(ConditionedViewTest, RejectsMismatchedInputs) {
  const World a = MakeWorld(10, 20, 8, 3);
  const World b = MakeWorld(10, 20, 9, 3);
  EXPECT_EQ(ErrorOf([&] { PrepareCondition(a.db, b.subspace); }),
            ErrorCode::kDimensionMismatch);
  const ModulatorConfig euclid{.use_rotation = false, .use_manifold = false};
  EXPECT_EQ(ErrorOf([&] { PrepareCondition(a.db, a.subspace, euclid); }),
            ErrorCode::kInvalidConfig);
}

TEST(QueryTopKTest, SelfRetrievalRanksFirst) {
  const World w = MakeWorld(11, 100, 32, 6);
  auto view = PrepareCondition(w.db, w.subspace);
  for (Eigen::Index i : {0, 17, 99}) {
    const auto hits = QueryTopK(*view, w.db->Row(i), 5);
    ASSERT_EQ(hits.size(), 5u);
    EXPECT_EQ(hits[0].id, w.db->id(i));
    EXPECT_NEAR(hits[0].score.value, 1.0, 1e-6);
  }
}

TEST(QueryTopKTest, MatchesBruteForceOracle) {
  const World w = MakeWorld(12, 200, 64, 8);
  auto view = PrepareCondition(w.db, w.subspace);
  const oracle::Subspace dense = oracle::BuildTangent(w.prompts, 8);
  const oracle::Mat h = oracle::Alignment(w.db->mu_v().coords(), dense.mu);
  std::mt19937_64 rng(120);
  for (int t = 0; t < 10; ++t) {
    const UnitVector q = RandomUnit(rng, 64);
    const oracle::Vec mq = oracle::Modulate(dense, h, q.coords());
    std::vector<double> scores;
    for (Eigen::Index i = 0; i < w.db->size(); ++i) {
      scores.push_back(oracle::Cosine(
          mq, oracle::Modulate(dense, h,
                               w.db->embeddings().row(i).transpose())));
    }
    const auto order = oracle::RankDescending(scores);
    const auto hits = QueryTopK(*view, q, 10);
    for (int r = 0; r < 10; ++r) {
      EXPECT_EQ(hits[r].row, order[r]);
      EXPECT_NEAR(hits[r].score.value, scores[order[r]], 1e-5);
    }
  }
}

TEST(QueryTopKTest, TiesBreakByAscendingId) {
  RowMatrix rows(4, 3);
  rows.rowwise() = Eigen::RowVector3d(0.0, 0.6, 0.8);
  const auto db = std::make_shared<const Database>(
      Database::Build(rows, {"d", "b", "c", "a"}));
  const RawCosineRanker ranker(db);
  const auto hits = ranker.TopK(db->Row(0), 4);
  std::vector<std::string> ids;
  for (const auto& h : hits) ids.push_back(h.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(QueryTopKTest, SmallerKIsPrefix) {
  const World w = MakeWorld(13, 80, 16, 4);
  auto view = PrepareCondition(w.db, w.subspace);
  std::mt19937_64 rng(130);
  const UnitVector q = RandomUnit(rng, 16);
  const auto all = QueryTopK(*view, q, 80);
  const auto few = QueryTopK(*view, q, 7);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(few[i].id, all[i].id);
  EXPECT_EQ(view->Rank(q).size(), 80u);
}

TEST(QueryTopKTest, RejectsBadK) {
  const World w = MakeWorld(14, 20, 8, 3);
  auto view = PrepareCondition(w.db, w.subspace);
  EXPECT_EQ(ErrorOf([&] { QueryTopK(*view, w.db->Row(0), 0); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(ErrorOf([&] { QueryTopK(*view, w.db->Row(0), 21); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(ErrorOf([&] { QueryTopK(*view, UnitVector::Axis(9, 0), 3); }),
            ErrorCode::kDimensionMismatch);
}

TEST(AsymmetricRankerTest, ScoresAgainstRawRows) {
  const World w = MakeWorld(15, 40, 16, 4);
  auto view = PrepareCondition(w.db, w.subspace);
  const AsymmetricRanker ranker(view);
  std::mt19937_64 rng(150);
  const UnitVector q = RandomUnit(rng, 16);
  const auto scores = ranker.Score(q);
  for (Eigen::Index i = 0; i < w.db->size(); ++i) {
    EXPECT_NEAR(scores[i],
                AsymmetricSimilarity(*w.subspace, view->rotation(), q,
                                     w.db->Row(i), view->config())
                    .value,
                1e-12);
  }
}

TEST(ViewCacheTest, HitsMissesAndEviction) {
  const World w = MakeWorld(16, 30, 8, 3);
  std::vector<std::shared_ptr<const ConditionSubspace>> subspaces;
  std::mt19937_64 rng(160);
  for (int i = 0; i < 3; ++i) {
    subspaces.push_back(std::make_shared<const ConditionSubspace>(
        BuildSubspace(PromptMatrix::Create(oracle::RandomUnitRows(rng, 12, 8),
                                           {"c" + std::to_string(i)}),
                      3)));
  }
  ViewCache cache(2);
  auto a = cache.GetOrPrepare(w.db, subspaces[0]);
  EXPECT_EQ(cache.GetOrPrepare(w.db, subspaces[0]), a);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
  cache.GetOrPrepare(w.db, subspaces[1]);
  cache.GetOrPrepare(w.db, subspaces[0]);  // refresh c0
  cache.GetOrPrepare(w.db, subspaces[2]);  // evicts c1
  EXPECT_EQ(cache.size(), 2u);
  const ModulatorConfig cfg;
  EXPECT_TRUE(cache.Contains(ConditionKey(*subspaces[0], cfg)));
  EXPECT_FALSE(cache.Contains(ConditionKey(*subspaces[1], cfg)));
  EXPECT_TRUE(cache.Contains(ConditionKey(*subspaces[2], cfg)));
  const ModulatorConfig no_rotation{.use_rotation = false};
  EXPECT_NE(cache.GetOrPrepare(w.db, subspaces[0], no_rotation), a);
}

TEST(BenchTest, ReportsEveryConditionWithoutEncoding) {
  const World w = MakeWorld(17, 300, 32, 6);
  std::mt19937_64 rng(170);
  std::vector<std::shared_ptr<const ConditionSubspace>> subspaces = {
      w.subspace,
      std::make_shared<const ConditionSubspace>(BuildSubspace(
          PromptMatrix::Create(oracle::RandomUnitRows(rng, 30, 32), {"other"}),
          6))};
  std::vector<UnitVector> queries;
  for (int i = 0; i < 5; ++i) queries.push_back(RandomUnit(rng, 32));
  const TimingReport report =
      BenchConditionSwitch(w.db, subspaces, queries, 10, {.runs = 3});
  ASSERT_EQ(report.conditions.size(), 2u);
  for (const auto& c : report.conditions) {
    EXPECT_EQ(c.encoder_calls, 0u);
    EXPECT_GE(c.prepare_ms, 0.0);
    EXPECT_GT(c.query_ms_mean, 0.0);
  }
  EXPECT_EQ(report.queries, 5u);
  EXPECT_EQ(report.runs, 3);
  const auto j = ToJson(report);
  EXPECT_EQ(j["conditions"].size(), 2u);
  EXPECT_EQ(ErrorOf([&] {
              BenchConditionSwitch(w.db, std::span(subspaces).first(1),
                                   queries, 10);
            }),
            ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace condsim
