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

#include "condsim/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "condsim/error.h"

namespace condsim {
namespace {

// Runs fn(i) for i in [0, n) over up to WorkerThreads() threads. Results are
// written by index, so output does not depend on scheduling.
template <typename Fn>
void ParallelFor(std::size_t n, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(
      std::max(1, std::min<int>(WorkerThreads(), static_cast<int>(n))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

int WorkerThreads() {
  if (const char* env = std::getenv("CLAY_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SplitSpec SplitQueryDatabase(std::span<const std::string> ids,
                             std::uint64_t seed, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "query fraction must lie in (0, 1)");
  }
  const std::size_t n = ids.size();
  const auto n_queries = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
  if (n < 2 || n_queries >= n) {
    throw Error(ErrorCode::kTooFewItems,
                "cannot split " + std::to_string(n) +
                    " items into non-empty query and database sets");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<bool> is_query(n, false);
  for (std::size_t i = 0; i < n_queries; ++i) is_query[perm[i]] = true;

  SplitSpec split;
  split.seed = seed;
  split.query_fraction = fraction;
  for (std::size_t i = 0; i < n; ++i) {
    (is_query[i] ? split.query_ids : split.db_ids).push_back(ids[i]);
  }
  return split;
}

DatabaseSplit ApplySplit(const Database& all, const SplitSpec& split) {
  auto rows_of = [&](const std::vector<std::string>& ids) {
    std::vector<Eigen::Index> rows;
    rows.reserve(ids.size());
    for (const auto& id : ids) {
      auto row = all.Find(id);
      if (!row) {
        throw Error(ErrorCode::kInvalidArgument,
                    "split id '" + id + "' not in database");
      }
      rows.push_back(*row);
    }
    return rows;
  };
  const auto q = rows_of(split.query_ids);
  const auto d = rows_of(split.db_ids);
  return {std::make_shared<const Database>(all.Subset(q)),
          std::make_shared<const Database>(all.Subset(d))};
}

double AveragePrecision(const std::vector<bool>& relevance) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (!relevance[i]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double RecallAtK(std::span<const std::string> ranked,
                 const std::set<std::string>& relevant, std::size_t k) {
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.contains(ranked[i])) return 1.0;
  }
  return 0.0;
}

nlohmann::json ToJson(const MetricsReport& report) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : report.recall_at) recall[std::to_string(k)] = v;
  nlohmann::json out = {{"condition", report.condition},
                        {"attribute", report.attribute},
                        {"map", report.map},
                        {"queries", report.per_query_ap.size()},
                        {"recall_at", recall},
                        {"no_relevant_queries", report.no_relevant_queries},
                        {"per_query_ap", report.per_query_ap}};
  if (report.grouping) {
    out["grouping"] = *report.grouping;
    out["group_map"] = report.group_map;
  } else {
    out["grouping"] = nullptr;
  }
  return out;
}

std::string PerQueryCsv(const MetricsReport& report) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "query_id,ap\n";
  for (const auto& [id, ap] : report.per_query_ap) csv << id << ',' << ap << '\n';
  return csv.str();
}

MetricsReport MeanAp(const Database& queries, const Ranker& ranker,
                     const std::string& attribute,
                     const EvalOptions& options) {
  const Database& db = ranker.database();
  const auto& query_labels = queries.Labels(attribute);
  const auto& db_labels = db.Labels(attribute);
  const auto nq = static_cast<std::size_t>(queries.size());

  std::vector<double> aps(nq, 0.0);
  std::vector<char> empty(nq, 0);
  std::vector<std::vector<double>> recalls(
      nq, std::vector<double>(options.recall_ks.size(), 0.0));
  ParallelFor(nq, [&](std::size_t qi) {
    const auto q_row = static_cast<Eigen::Index>(qi);
    const std::vector<Eigen::Index> order = ranker.Rank(queries.Row(q_row));
    std::vector<bool> relevance(order.size());
    std::size_t first_hit = order.size();
    for (std::size_t r = 0; r < order.size(); ++r) {
      relevance[r] = db_labels[order[r]] == query_labels[qi];
      if (relevance[r] && first_hit == order.size()) first_hit = r;
    }
    aps[qi] = AveragePrecision(relevance);
    empty[qi] = first_hit == order.size();
    for (std::size_t j = 0; j < options.recall_ks.size(); ++j) {
      recalls[qi][j] =
          first_hit < static_cast<std::size_t>(options.recall_ks[j]) ? 1.0
                                                                      : 0.0;
    }
  });

  MetricsReport report;
  report.condition = options.condition;
  report.attribute = attribute;
  for (std::size_t qi = 0; qi < nq; ++qi) {
    report.per_query_ap[queries.id(static_cast<Eigen::Index>(qi))] = aps[qi];
    report.no_relevant_queries += empty[qi] ? 1 : 0;
  }
  report.map = nq == 0 ? 0.0
                       : std::accumulate(aps.begin(), aps.end(), 0.0) /
                             static_cast<double>(nq);
  for (std::size_t j = 0; j < options.recall_ks.size(); ++j) {
    double sum = 0.0;
    for (std::size_t qi = 0; qi < nq; ++qi) sum += recalls[qi][j];
    report.recall_at[options.recall_ks[j]] =
        nq == 0 ? 0.0 : sum / static_cast<double>(nq);
  }
  return report;
}

MetricsReport GroupedMap(const Database& queries, const Database& database,
                         const std::string& group_attribute,
                         const std::string& condition_attribute,
                         const RankerFactory& make_ranker,
                         const EvalOptions& options) {
  const auto& q_groups = queries.Labels(group_attribute);
  const auto& d_groups = database.Labels(group_attribute);
  queries.Labels(condition_attribute);
  database.Labels(condition_attribute);

  std::map<std::string, std::vector<Eigen::Index>> q_rows;
  std::map<std::string, std::vector<Eigen::Index>> d_rows;
  for (Eigen::Index i = 0; i < queries.size(); ++i) {
    q_rows[q_groups[i]].push_back(i);
  }
  for (Eigen::Index i = 0; i < database.size(); ++i) {
    d_rows[d_groups[i]].push_back(i);
  }

  MetricsReport report;
  report.condition = options.condition;
  report.attribute = condition_attribute;
  report.grouping = group_attribute;
  std::map<int, double> recall_sum;
  std::size_t total_queries = 0;
  for (const auto& [group, rows] : q_rows) {
    auto it = d_rows.find(group);
    if (it == d_rows.end()) {
      throw Error(ErrorCode::kEmptyGroup,
                  "group '" + group + "' has queries but no database items");
    }
    auto part = std::make_shared<const Database>(database.Subset(it->second));
    const Database group_queries = queries.Subset(rows);
    const auto ranker = make_ranker(part);
    const MetricsReport sub =
        MeanAp(group_queries, *ranker, condition_attribute, options);
    report.group_map[group] = sub.map;
    report.per_query_ap.insert(sub.per_query_ap.begin(),
                               sub.per_query_ap.end());
    report.no_relevant_queries += sub.no_relevant_queries;
    for (const auto& [k, v] : sub.recall_at) {
      recall_sum[k] += v * static_cast<double>(rows.size());
    }
    total_queries += rows.size();
  }
  double sum = 0.0;
  for (const auto& [_, m] : report.group_map) sum += m;
  report.map = report.group_map.empty()
                   ? 0.0
                   : sum / static_cast<double>(report.group_map.size());
  for (const auto& [k, v] : recall_sum) {
    report.recall_at[k] = v / static_cast<double>(total_queries);
  }
  return report;
}

RankerFactory MakeRankerFactory(
    Method method, std::shared_ptr<const ConditionSubspace> subspace,
    const ModulatorConfig& cfg) {
  if (method != Method::kRaw && !subspace) {
    throw Error(ErrorCode::kInvalidArgument,
                "conditioned methods need a subspace");
  }
  return [method, subspace, cfg](std::shared_ptr<const Database> db)
             -> std::shared_ptr<const Ranker> {
    switch (method) {
      case Method::kRaw:
        return std::make_shared<const RawCosineRanker>(std::move(db));
      case Method::kConditional:
        return ConditionedView::Prepare(std::move(db), subspace, cfg);
      case Method::kAsymmetric:
        return std::make_shared<const AsymmetricRanker>(
            ConditionedView::Prepare(std::move(db), subspace, cfg));
    }
    return nullptr;
  };
}

}  // namespace condsim
