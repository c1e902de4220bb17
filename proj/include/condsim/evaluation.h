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

// Retrieval evaluation: seeded query/database split, Average Precision,
// mAP over a ranker, Recall@k and grouped (per-partition) mAP.

#ifndef CONDSIM_EVALUATION_H_
#define CONDSIM_EVALUATION_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "condsim/conditioning.h"
#include "condsim/index.h"
#include "condsim/subspace.h"
#include "json.hpp"

namespace condsim {

inline constexpr double kDefaultQueryFraction = 0.1;

struct SplitSpec {
  std::uint64_t seed = 0;
  double query_fraction = kDefaultQueryFraction;
  // Both in original input order.
  std::vector<std::string> query_ids;
  std::vector<std::string> db_ids;
};

// Uniform random permutation from `seed`; the first max(1, round(f N)) items
// become queries. Not stratified. Throws kInvalidArgument (f outside (0, 1))
// and kTooFewItems when the database side would be empty.
SplitSpec SplitQueryDatabase(std::span<const std::string> ids,
                             std::uint64_t seed,
                             double fraction = kDefaultQueryFraction);

struct DatabaseSplit {
  std::shared_ptr<const Database> queries;
  std::shared_ptr<const Database> database;
};

// Materializes a split; each side's mean is computed from its own rows only.
DatabaseSplit ApplySplit(const Database& all, const SplitSpec& split);

// Mean over relevant positions i of precision@i. Returns 0 when nothing is
// relevant.
double AveragePrecision(const std::vector<bool>& relevance);

// 1 when any relevant id is within the first k ranked ids, else 0.
double RecallAtK(std::span<const std::string> ranked,
                 const std::set<std::string>& relevant, std::size_t k);

struct MetricsReport {
  std::string condition;
  std::string attribute;
  std::optional<std::string> grouping;
  std::map<std::string, double> per_query_ap;
  double map = 0.0;
  std::map<int, double> recall_at;
  // Per-group mAP when grouped.
  std::map<std::string, double> group_map;
  // Queries with no relevant database item; their AP counts as 0.
  std::size_t no_relevant_queries = 0;
};

nlohmann::json ToJson(const MetricsReport& report);

// "query_id,ap" lines, header first.
std::string PerQueryCsv(const MetricsReport& report);

struct EvalOptions {
  std::string condition;
  std::vector<int> recall_ks = {1, 2, 3};
};

// Ranks the full database for every query; an item is relevant when it
// shares the query's label for `attribute`. Throws kMissingLabel.
MetricsReport MeanAp(const Database& queries, const Ranker& ranker,
                     const std::string& attribute,
                     const EvalOptions& options = {});

using RankerFactory =
    std::function<std::shared_ptr<const Ranker>(
        std::shared_ptr<const Database>)>;

// Partitions the database by `group_attribute`; each query is ranked only
// against its own group's partition, and the reported mAP is the unweighted
// mean of the per-group mAPs. Throws kEmptyGroup when a group has queries
// but no database items.
MetricsReport GroupedMap(const Database& queries, const Database& database,
                         const std::string& group_attribute,
                         const std::string& condition_attribute,
                         const RankerFactory& make_ranker,
                         const EvalOptions& options = {});

enum class Method {
  kRaw,          // unconditioned cosine
  kConditional,  // symmetric: both sides modulated
  kAsymmetric,   // only the query modulated
};

// Ranker factory for a method. The subspace is ignored for kRaw.
RankerFactory MakeRankerFactory(
    Method method, std::shared_ptr<const ConditionSubspace> subspace,
    const ModulatorConfig& cfg = {});

// Worker threads for per-query evaluation: CLAY_THREADS when set (>= 1),
// otherwise the hardware concurrency.
int WorkerThreads();

}  // namespace condsim

#endif  // CONDSIM_EVALUATION_H_
