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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "condsim/error.h"

namespace condsim {
namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += '+';
    out += n;
  }
  return out.empty() ? "unnamed" : out;
}

// Query sets may hold a single row, but a ranked database needs two.
void RequireSearchable(const Database* db) {
  if (db == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "ranker over a null database");
  }
  if (db->size() < 2) {
    throw Error(ErrorCode::kTooFewItems,
                "a searchable database needs at least 2 rows");
  }
}

}  // namespace

std::atomic<std::uint64_t> Encoder::invocations_{0};

Vector Encoder::Encode(std::string_view id) {
  invocations_.fetch_add(1, std::memory_order_relaxed);
  return DoEncode(id);
}

std::uint64_t Encoder::TotalInvocations() {
  return invocations_.load(std::memory_order_relaxed);
}

TableEncoder::TableEncoder(std::vector<std::string> ids, RowMatrix rows)
    : rows_(std::move(rows)) {
  if (static_cast<Eigen::Index>(ids.size()) != rows_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "encoder table: one id per row required");
  }
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) row_of_[ids[i]] = i;
}

Vector TableEncoder::DoEncode(std::string_view id) {
  auto it = row_of_.find(std::string(id));
  if (it == row_of_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "encoder table has no id " + std::string(id));
  }
  return rows_.row(it->second).transpose();
}

Database Database::Build(RowMatrix embeddings, std::vector<std::string> ids,
                         LabelTable labels) {
  const Eigen::Index n = embeddings.rows();
  if (n < 1) {
    throw Error(ErrorCode::kTooFewItems, "a database needs at least 1 row");
  }
  if (static_cast<Eigen::Index>(ids.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "database: " + std::to_string(ids.size()) + " ids for " +
                    std::to_string(n) + " rows");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embeddings.row(i).norm();
    if (!(norm > kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector,
                  "embedding of id '" + ids[i] + "' is zero");
    }
    embeddings.row(i) /= norm;
  }
  for (const auto& [attr, values] : labels) {
    if (static_cast<Eigen::Index>(values.size()) != n) {
      throw Error(ErrorCode::kLabelCoverage,
                  "attribute '" + attr + "' labels " +
                      std::to_string(values.size()) + " of " +
                      std::to_string(n) + " items");
    }
  }
  UnitVector mu_v = SphericalMean(embeddings);
  Database db(std::move(embeddings), std::move(mu_v));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!db.row_of_.emplace(ids[i], i).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + ids[i] + "'");
    }
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return ids[a] < ids[b]; });
  db.id_rank_.resize(n);
  for (Eigen::Index pos = 0; pos < n; ++pos) db.id_rank_[order[pos]] = pos;
  db.ids_ = std::move(ids);
  db.labels_ = std::move(labels);
  return db;
}

Database Database::FromEncoder(Encoder& encoder, std::vector<std::string> ids,
                               LabelTable labels) {
  if (ids.empty()) {
    throw Error(ErrorCode::kTooFewItems, "no ids to encode");
  }
  RowMatrix rows;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Vector v = encoder.Encode(ids[i]);
    if (i == 0) rows.resize(static_cast<Eigen::Index>(ids.size()), v.size());
    if (v.size() != rows.cols()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "encoder returned inconsistent dimensions");
    }
    rows.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return Build(std::move(rows), std::move(ids), std::move(labels));
}

UnitVector Database::Row(Eigen::Index row) const {
  if (row < 0 || row >= size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "database row out of range");
  }
  return Normalize(embeddings_.row(row).transpose());
}

bool Database::HasAttribute(const std::string& attribute) const {
  return labels_.contains(attribute);
}

const std::vector<std::string>& Database::Labels(
    const std::string& attribute) const {
  auto it = labels_.find(attribute);
  if (it == labels_.end()) {
    throw Error(ErrorCode::kMissingLabel,
                "no labels for attribute '" + attribute + "'");
  }
  return it->second;
}

std::optional<Eigen::Index> Database::Find(std::string_view id) const {
  auto it = row_of_.find(std::string(id));
  if (it == row_of_.end()) return std::nullopt;
  return it->second;
}

Database Database::Subset(std::span<const Eigen::Index> rows) const {
  RowMatrix sub(static_cast<Eigen::Index>(rows.size()), dim());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  LabelTable labels;
  for (const auto& [attr, _] : labels_) labels[attr].reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index r = rows[i];
    if (r < 0 || r >= size()) {
      throw Error(ErrorCode::kIndexOutOfRange, "subset row out of range");
    }
    sub.row(static_cast<Eigen::Index>(i)) = embeddings_.row(r);
    ids.push_back(ids_[r]);
    for (const auto& [attr, values] : labels_) {
      labels[attr].push_back(values[r]);
    }
  }
  return Build(std::move(sub), std::move(ids), std::move(labels));
}

std::vector<Eigen::Index> OrderByScore(const Database& db,
                                       std::span<const double> scores,
                                       std::size_t k) {
  const auto n = static_cast<std::size_t>(db.size());
  if (scores.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "one score per row required");
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](Eigen::Index a, Eigen::Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return db.IdRank(a) < db.IdRank(b);
  };
  k = std::min(k, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(k),
                    order.end(), better);
  order.resize(k);
  return order;
}

std::vector<RankedHit> Ranker::TopK(const UnitVector& q,
                                    std::size_t k_ret) const {
  const Database& db = database();
  if (k_ret < 1 || k_ret > static_cast<std::size_t>(db.size())) {
    throw Error(ErrorCode::kInvalidArgument,
                "k_ret must lie in [1, " + std::to_string(db.size()) + "]");
  }
  const std::vector<double> scores = Score(q);
  std::vector<RankedHit> hits;
  hits.reserve(k_ret);
  for (Eigen::Index row : OrderByScore(db, scores, k_ret)) {
    hits.push_back({db.id(row), {scores[row]}, row});
  }
  return hits;
}

std::vector<Eigen::Index> Ranker::Rank(const UnitVector& q) const {
  const std::vector<double> scores = Score(q);
  return OrderByScore(database(), scores, scores.size());
}

RawCosineRanker::RawCosineRanker(std::shared_ptr<const Database> db)
    : db_(std::move(db)) {
  RequireSearchable(db_.get());
}

std::vector<double> RawCosineRanker::Score(const UnitVector& q) const {
  if (q.dim() != db_->dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "query dimension");
  }
  const Vector s = db_->embeddings() * q.coords();
  return {s.data(), s.data() + s.size()};
}

std::shared_ptr<const ConditionedView> ConditionedView::Prepare(
    std::shared_ptr<const Database> db,
    std::shared_ptr<const ConditionSubspace> subspace,
    const ModulatorConfig& cfg) {
  if (!subspace) {
    throw Error(ErrorCode::kInvalidArgument, "prepare: null subspace");
  }
  RequireSearchable(db.get());
  if (db->dim() != subspace->dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "database dimension " + std::to_string(db->dim()) +
                    " vs subspace dimension " +
                    std::to_string(subspace->dim()));
  }
  cfg.Validate();
  if ((subspace->kind() == SubspaceKind::kTangent) != cfg.use_manifold) {
    throw Error(ErrorCode::kInvalidConfig,
                "subspace kind does not match the manifold setting");
  }
  const auto start = Clock::now();
  const std::uint64_t encoder_before = Encoder::TotalInvocations();

  Rotation rotation = RotationFor(db->mu_v(), *subspace, cfg);
  std::shared_ptr<ConditionedView> view(
      new ConditionedView(db, subspace, std::move(rotation), cfg));

  const Eigen::Index n = db->size();
  PrepareStats& stats = view->stats_;
  stats.rows = static_cast<std::size_t>(n);

  RowMatrix work = db->embeddings();
  if (cfg.use_manifold) {
    if (cfg.use_rotation) {
      view->rotation_.ApplyToRows(work);
      stats.rotations = stats.rows;
    }
    LogMapRows(subspace->mu_c(), work);
    stats.log_maps = stats.rows;
  }
  const Eigen::MatrixXd& basis = subspace->basis();
  const RowMatrix coords = work * basis;
  view->cache_.noalias() = coords * basis.transpose();
  stats.basis_multiplications = 2 * stats.rows;
  view->cache_norms_ = view->cache_.rowwise().norm();

  stats.encoder_calls = Encoder::TotalInvocations() - encoder_before;
  stats.prepare_ms = MillisSince(start);
  return view;
}

Vector ConditionedView::ModulateQuery(const UnitVector& q) const {
  return Modulate(*subspace_, rotation_, q, cfg_);
}

std::vector<double> ConditionedView::Score(const UnitVector& q) const {
  const Vector mq = ModulateQuery(q);
  const double qn = mq.norm();
  const Vector dots = cache_ * mq;
  std::vector<double> out(static_cast<std::size_t>(dots.size()));
  const bool raise =
      cfg_.zero_projection_policy == ZeroProjectionPolicy::kError;
  for (Eigen::Index i = 0; i < dots.size(); ++i) {
    const double rn = cache_norms_[i];
    if (qn <= kZeroProjectionNorm || rn <= kZeroProjectionNorm) {
      if (raise) {
        throw Error(ErrorCode::kZeroProjection,
                    "modulated vector projects to zero");
      }
      out[i] = 0.0;
      continue;
    }
    out[i] = dots[i] / (qn * rn);
  }
  return out;
}

std::vector<double> AsymmetricRanker::Score(const UnitVector& q) const {
  const Vector mq = view_->ModulateQuery(q);
  const double qn = mq.norm();
  const Database& db = view_->database();
  if (qn <= kZeroProjectionNorm) {
    if (view_->config().zero_projection_policy ==
        ZeroProjectionPolicy::kError) {
      throw Error(ErrorCode::kZeroProjection,
                  "modulated query projects to zero");
    }
    return std::vector<double>(static_cast<std::size_t>(db.size()), 0.0);
  }
  const Vector s = db.embeddings() * (mq / qn);
  return {s.data(), s.data() + s.size()};
}

std::string ConditionKey(const ConditionSubspace& s,
                         const ModulatorConfig& cfg) {
  std::ostringstream key;
  key << JoinNames(s.condition_names()) << '|'
      << (cfg.use_rotation ? "rot" : "norot") << '|'
      << (cfg.use_manifold ? "manifold" : "euclidean") << "|k=" << s.k();
  return key.str();
}

namespace {

std::string CacheKey(const Database& db, const ConditionSubspace& s,
                     const ModulatorConfig& cfg) {
  std::ostringstream key;
  key << ConditionKey(s, cfg) << '@' << static_cast<const void*>(&db) << '/'
      << static_cast<const void*>(&s);
  return key.str();
}

}  // namespace

ViewCache::ViewCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::kInvalidArgument, "view cache capacity must be > 0");
  }
}

std::shared_ptr<const ConditionedView> ViewCache::GetOrPrepare(
    const std::shared_ptr<const Database>& db,
    const std::shared_ptr<const ConditionSubspace>& subspace,
    const ModulatorConfig& cfg) {
  const std::string key = CacheKey(*db, *subspace, cfg);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = by_key_.find(key);
    if (it != by_key_.end()) {
      ++hits_;
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    ++misses_;
  }
  auto view = ConditionedView::Prepare(db, subspace, cfg);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = by_key_.find(key);
  if (it != by_key_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }
  lru_.emplace_front(key, view);
  by_key_[key] = lru_.begin();
  while (lru_.size() > capacity_) {
    by_key_.erase(lru_.back().first);
    lru_.pop_back();
  }
  return view;
}

bool ViewCache::Contains(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [k, _] : lru_) {
    if (k.rfind(key + '@', 0) == 0) return true;
  }
  return false;
}

std::size_t ViewCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return lru_.size();
}

std::size_t ViewCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

std::size_t ViewCache::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}

nlohmann::json ToJson(const TimingReport& report) {
  nlohmann::json conditions = nlohmann::json::array();
  for (const auto& c : report.conditions) {
    conditions.push_back({{"condition_name", c.condition_name},
                          {"prepare_ms", c.prepare_ms},
                          {"query_ms_mean", c.query_ms_mean},
                          {"query_ms_p95", c.query_ms_p95},
                          {"query_ms_stddev", c.query_ms_stddev},
                          {"encoder_calls", c.encoder_calls}});
  }
  return {{"database_size", report.database_size},
          {"dim", report.dim},
          {"queries", report.queries},
          {"runs", report.runs},
          {"first_condition_total_ms", report.first_condition_total_ms},
          {"subsequent_condition_total_ms",
           report.subsequent_condition_total_ms},
          {"conditions", conditions}};
}

TimingReport BenchConditionSwitch(
    const std::shared_ptr<const Database>& db,
    std::span<const std::shared_ptr<const ConditionSubspace>> subspaces,
    std::span<const UnitVector> queries, std::size_t k_ret,
    const BenchOptions& options) {
  if (subspaces.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "condition-switch bench needs at least two conditions");
  }
  if (queries.empty() || options.runs < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "bench needs queries and runs >= 1");
  }
  TimingReport report;
  report.database_size = db->size();
  report.dim = db->dim();
  report.queries = queries.size();
  report.runs = options.runs;

  double subsequent_sum = 0.0;
  for (std::size_t c = 0; c < subspaces.size(); ++c) {
    const std::uint64_t encoder_before = Encoder::TotalInvocations();
    ConditionTiming timing;
    timing.condition_name = JoinNames(subspaces[c]->condition_names());

    const auto prepare_start = Clock::now();
    auto view = ConditionedView::Prepare(db, subspaces[c], options.cfg);
    timing.prepare_ms = MillisSince(prepare_start);

    std::vector<double> latencies;
    latencies.reserve(queries.size() * static_cast<std::size_t>(options.runs));
    for (int run = 0; run < options.runs; ++run) {
      for (const auto& q : queries) {
        const auto start = Clock::now();
        view->TopK(q, k_ret);
        latencies.push_back(MillisSince(start));
      }
    }
    const double n = static_cast<double>(latencies.size());
    const double mean =
        std::accumulate(latencies.begin(), latencies.end(), 0.0) / n;
    double var = 0.0;
    for (double l : latencies) var += (l - mean) * (l - mean);
    timing.query_ms_mean = mean;
    timing.query_ms_stddev = latencies.size() > 1 ? std::sqrt(var / (n - 1)) : 0;
    std::sort(latencies.begin(), latencies.end());
    const auto p95 = static_cast<std::size_t>(std::ceil(0.95 * n)) - 1;
    timing.query_ms_p95 = latencies[std::min(p95, latencies.size() - 1)];
    timing.encoder_calls = Encoder::TotalInvocations() - encoder_before;

    const double total =
        timing.prepare_ms + mean * static_cast<double>(queries.size());
    if (c == 0) {
      report.first_condition_total_ms = total;
    } else {
      subsequent_sum += total;
    }
    report.conditions.push_back(std::move(timing));
  }
  report.subsequent_condition_total_ms =
      subsequent_sum / static_cast<double>(subspaces.size() - 1);
  return report;
}

}  // namespace condsim
