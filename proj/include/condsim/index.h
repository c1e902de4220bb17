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

// Database container, condition-specific modulated caches and exhaustive
// top-k retrieval.
//
// A ConditionedView holds every database row already pushed through the
// modulator for one condition. Switching conditions builds a new view from
// the stored embeddings; no image is re-encoded.

#ifndef CONDSIM_INDEX_H_
#define CONDSIM_INDEX_H_

#include <atomic>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "condsim/conditioning.h"
#include "condsim/geometry.h"
#include "condsim/subspace.h"
#include "json.hpp"

namespace condsim {

// attribute name -> label value of each row, in row order.
using LabelTable = std::map<std::string, std::vector<std::string>>;

// Source of image embeddings. Every call goes through Encode(), which counts
// invocations process-wide so tests can assert that condition switches never
// reach an encoder.
class Encoder {
 public:
  virtual ~Encoder() = default;

  Vector Encode(std::string_view id);

  static std::uint64_t TotalInvocations();

 protected:
  virtual Vector DoEncode(std::string_view id) = 0;

 private:
  static std::atomic<std::uint64_t> invocations_;
};

// Encoder backed by a precomputed table of rows keyed by id.
class TableEncoder : public Encoder {
 public:
  TableEncoder(std::vector<std::string> ids, RowMatrix rows);

 protected:
  Vector DoEncode(std::string_view id) override;

 private:
  std::unordered_map<std::string, Eigen::Index> row_of_;
  RowMatrix rows_;
};

class Database {
 public:
  // Normalizes rows and computes mu_v. Throws kTooFewItems (N < 2),
  // kDimensionMismatch, kDuplicateId, kZeroVector, kLabelCoverage.
  static Database Build(RowMatrix embeddings, std::vector<std::string> ids,
                        LabelTable labels = {});

  // Encodes each id once (N encoder invocations) and builds the database.
  static Database FromEncoder(Encoder& encoder, std::vector<std::string> ids,
                              LabelTable labels = {});

  Eigen::Index size() const { return embeddings_.rows(); }
  Eigen::Index dim() const { return embeddings_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(Eigen::Index row) const { return ids_[row]; }
  const RowMatrix& embeddings() const { return embeddings_; }
  UnitVector Row(Eigen::Index row) const;
  const UnitVector& mu_v() const { return mu_v_; }
  const LabelTable& labels() const { return labels_; }
  bool HasAttribute(const std::string& attribute) const;
  // Throws kMissingLabel for an unknown attribute.
  const std::vector<std::string>& Labels(const std::string& attribute) const;
  std::optional<Eigen::Index> Find(std::string_view id) const;
  // Position of row's id in ascending id order; used for tie-breaking.
  Eigen::Index IdRank(Eigen::Index row) const { return id_rank_[row]; }

  // Rows in the given order, with their labels. mu_v is recomputed.
  Database Subset(std::span<const Eigen::Index> rows) const;

 private:
  Database(RowMatrix embeddings, UnitVector mu_v)
      : embeddings_(std::move(embeddings)), mu_v_(std::move(mu_v)) {}

  RowMatrix embeddings_;
  UnitVector mu_v_;
  std::vector<std::string> ids_;
  LabelTable labels_;
  std::unordered_map<std::string, Eigen::Index> row_of_;
  std::vector<Eigen::Index> id_rank_;
};

struct RankedHit {
  std::string id;
  SimilarityScore score;
  Eigen::Index row = 0;
};

// Orders row indices by descending score, ties by ascending id. Returns the
// first `k` (all when k >= size).
std::vector<Eigen::Index> OrderByScore(const Database& db,
                                       std::span<const double> scores,
                                       std::size_t k);

// Exhaustive scorer over a database.
class Ranker {
 public:
  virtual ~Ranker() = default;

  virtual const Database& database() const = 0;

  // Similarity of q to every database row, in row order.
  virtual std::vector<double> Score(const UnitVector& q) const = 0;

  // Top k_ret hits, descending score, ties by ascending id.
  // Throws kInvalidArgument unless 1 <= k_ret <= N.
  std::vector<RankedHit> TopK(const UnitVector& q, std::size_t k_ret) const;

  // Full ranking as row indices.
  std::vector<Eigen::Index> Rank(const UnitVector& q) const;
};

class RawCosineRanker : public Ranker {
 public:
  explicit RawCosineRanker(std::shared_ptr<const Database> db);

  const Database& database() const override { return *db_; }
  std::vector<double> Score(const UnitVector& q) const override;

 private:
  std::shared_ptr<const Database> db_;
};

// Vector operation counts of one prepare pass.
struct PrepareStats {
  std::size_t rows = 0;
  std::size_t rotations = 0;
  std::size_t log_maps = 0;
  std::size_t basis_multiplications = 0;
  std::uint64_t encoder_calls = 0;
  double prepare_ms = 0.0;
};

// A database modulated under one condition. Immutable once prepared.
class ConditionedView : public Ranker {
 public:
  // Rotation = HouseholderAlign(db.mu_v, s.mu_c) (identity per cfg); every
  // row is modulated eagerly. Throws kDimensionMismatch, kInvalidConfig,
  // kAntipodalMeans, kAntipodalPoint.
  static std::shared_ptr<const ConditionedView> Prepare(
      std::shared_ptr<const Database> db,
      std::shared_ptr<const ConditionSubspace> subspace,
      const ModulatorConfig& cfg = {});

  const Database& database() const override { return *db_; }
  std::shared_ptr<const Database> database_ptr() const { return db_; }
  const ConditionSubspace& subspace() const { return *subspace_; }
  const Rotation& rotation() const { return rotation_; }
  const ModulatorConfig& config() const { return cfg_; }
  // N x d modulated rows.
  const RowMatrix& cache() const { return cache_; }
  const Vector& cache_norms() const { return cache_norms_; }
  const PrepareStats& stats() const { return stats_; }

  Vector ModulateQuery(const UnitVector& q) const;

  // Symmetric conditional similarity against every cached row.
  std::vector<double> Score(const UnitVector& q) const override;

 private:
  ConditionedView(std::shared_ptr<const Database> db,
                  std::shared_ptr<const ConditionSubspace> subspace,
                  Rotation rotation, const ModulatorConfig& cfg)
      : db_(std::move(db)),
        subspace_(std::move(subspace)),
        rotation_(std::move(rotation)),
        cfg_(cfg) {}

  std::shared_ptr<const Database> db_;
  std::shared_ptr<const ConditionSubspace> subspace_;
  Rotation rotation_;
  ModulatorConfig cfg_;
  RowMatrix cache_;
  Vector cache_norms_;
  PrepareStats stats_;
};

inline std::shared_ptr<const ConditionedView> PrepareCondition(
    std::shared_ptr<const Database> db,
    std::shared_ptr<const ConditionSubspace> subspace,
    const ModulatorConfig& cfg = {}) {
  return ConditionedView::Prepare(std::move(db), std::move(subspace), cfg);
}

inline std::vector<RankedHit> QueryTopK(const ConditionedView& view,
                                        const UnitVector& q,
                                        std::size_t k_ret) {
  return view.TopK(q, k_ret);
}

// Asymmetric form: modulated query against raw database rows, using the
// view's rotation and subspace.
class AsymmetricRanker : public Ranker {
 public:
  explicit AsymmetricRanker(std::shared_ptr<const ConditionedView> view)
      : view_(std::move(view)) {}

  const Database& database() const override { return view_->database(); }
  std::vector<double> Score(const UnitVector& q) const override;

 private:
  std::shared_ptr<const ConditionedView> view_;
};

// "cond1+cond2|rot|man|k=50"
std::string ConditionKey(const ConditionSubspace& s,
                         const ModulatorConfig& cfg);

// Least-recently-used set of prepared views.
class ViewCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 8;

  explicit ViewCache(std::size_t capacity = kDefaultCapacity);

  std::shared_ptr<const ConditionedView> GetOrPrepare(
      const std::shared_ptr<const Database>& db,
      const std::shared_ptr<const ConditionSubspace>& subspace,
      const ModulatorConfig& cfg = {});

  bool Contains(const std::string& key) const;
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  using Entry = std::pair<std::string, std::shared_ptr<const ConditionedView>>;

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> lru_;
  std::unordered_map<std::string, std::list<Entry>::iterator> by_key_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

struct ConditionTiming {
  std::string condition_name;
  double prepare_ms = 0.0;
  double query_ms_mean = 0.0;
  double query_ms_p95 = 0.0;
  double query_ms_stddev = 0.0;
  std::uint64_t encoder_calls = 0;
};

struct TimingReport {
  std::vector<ConditionTiming> conditions;
  Eigen::Index database_size = 0;
  Eigen::Index dim = 0;
  std::size_t queries = 0;
  int runs = 0;
  // prepare + one pass over all queries, first condition.
  double first_condition_total_ms = 0.0;
  // The same for every later condition, averaged.
  double subsequent_condition_total_ms = 0.0;
};

nlohmann::json ToJson(const TimingReport& report);

struct BenchOptions {
  int runs = 10;
  ModulatorConfig cfg;
};

// Prepares each condition in turn and times `runs` passes over all queries.
// Throws kInvalidArgument for fewer than two subspaces or no queries.
TimingReport BenchConditionSwitch(
    const std::shared_ptr<const Database>& db,
    std::span<const std::shared_ptr<const ConditionSubspace>> subspaces,
    std::span<const UnitVector> queries, std::size_t k_ret,
    const BenchOptions& options = {});

}  // namespace condsim

#endif  // CONDSIM_INDEX_H_
