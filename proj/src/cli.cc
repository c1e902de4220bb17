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

#include "condsim/cli.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "condsim/error.h"
#include "condsim/evaluation.h"
#include "condsim/index.h"
#include "condsim/storage_io.h"
#include "condsim/subspace.h"
#include "condsim/synthbench.h"
#include "json.hpp"

namespace condsim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Raised for flag combinations rejected before any file I/O.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string data;
  std::string output;
  std::string subspace;
  std::vector<std::string> conditions;
  std::string attribute;
  std::string group_by;
  std::string method = "clay";
  std::string query_id;
  std::string per_query_csv;
  int k = kDefaultSubspaceRank;
  std::uint64_t seed = 0;
  double split_fraction = kDefaultQueryFraction;
  bool no_rotation = false;
  bool euclidean = false;
  bool timing = false;
  int topk = 10;
  int runs = 10;
  int bench_queries = 0;
  WorldConfig world;
  double world_noise = -1.0;
};

ModulatorConfig ConfigOf(const Options& o) {
  ModulatorConfig cfg;
  cfg.use_rotation = !o.no_rotation;
  cfg.use_manifold = !o.euclidean;
  return cfg;
}

void ValidateCommon(const Options& o) {
  if (o.euclidean && !o.no_rotation) {
    throw UsageError("--euclidean requires --no-rotation (the rotation is "
                     "only defined together with the manifold mapping)");
  }
  if (o.k < 1) throw UsageError("--k must be >= 1");
  if (!(o.split_fraction > 0.0 && o.split_fraction < 1.0)) {
    throw UsageError("--split-fraction must lie in (0, 1)");
  }
  if (o.topk < 1) throw UsageError("--topk must be >= 1");
  if (!o.subspace.empty() && o.euclidean) {
    throw UsageError("--subspace files hold tangent subspaces; use "
                     "--conditions with --euclidean");
  }
}

void RequireConditionSource(const Options& o) {
  if (o.subspace.empty() && o.conditions.empty()) {
    throw UsageError("one of --subspace or --conditions is required");
  }
}

std::string JoinNames(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : "+") + n;
  return s;
}

std::shared_ptr<const ConditionSubspace> LoadSubspace(
    const Options& o, const std::vector<std::string>& conditions,
    std::ostream& err) {
  if (!o.subspace.empty()) {
    return std::make_shared<const ConditionSubspace>(ReadSubspace(o.subspace));
  }
  std::vector<PromptMatrix> parts;
  for (const auto& c : conditions) parts.push_back(LoadPrompts(o.data, c));
  const PromptMatrix merged = MergeConditions(parts);
  auto s = std::make_shared<const ConditionSubspace>(
      o.euclidean ? BuildEuclideanSubspace(merged, o.k)
                  : BuildSubspace(merged, o.k));
  if (s->clamped()) {
    err << "warning: requested k=" << o.k << " clamped to " << s->k()
        << " (numerical rank of the prompt matrix)\n";
  }
  return s;
}

void Emit(const Options& o, const json& j, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (o.output.empty()) {
    out << text;
  } else {
    WriteFileBytes(o.output, text);
  }
}

int RunGenWorld(const Options& o, std::ostream& out) {
  if (o.output.empty()) throw UsageError("gen-world needs --output DIR");
  WorldConfig cfg = o.world;
  cfg.seed = o.seed;
  if (o.world_noise >= 0.0) cfg.noise_scale = o.world_noise;
  cfg.Validate();
  const SyntheticWorld world = GenerateWorld(cfg);
  WriteWorld(world, o.output);
  json conditions = json::array();
  for (const auto& [name, p] : world.prompts) {
    conditions.push_back({{"name", name}, {"prompts", p.size()}});
  }
  out << json{{"output", o.output},
              {"seed", cfg.seed},
              {"d", cfg.d},
              {"n_items", cfg.n_items},
              {"noise_scale", cfg.noise_scale},
              {"modality_gap_angle", cfg.modality_gap_angle},
              {"conditions", conditions}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int RunBuildSubspace(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.euclidean) {
    throw UsageError("build-subspace writes tangent subspaces only");
  }
  if (o.conditions.empty()) throw UsageError("build-subspace needs --conditions");
  if (o.output.empty()) throw UsageError("build-subspace needs --output FILE");
  Options in = o;
  in.subspace.clear();
  const auto s = LoadSubspace(in, o.conditions, err);
  WriteSubspace(o.output, *s);
  std::vector<double> spectrum(s->singular_values().data(),
                               s->singular_values().data() +
                                   s->singular_values().size());
  out << json{{"output", o.output},
              {"condition_names", s->condition_names()},
              {"dim", s->dim()},
              {"requested_k", o.k},
              {"k", s->k()},
              {"clamped", s->clamped()},
              {"explained_energy_at_k", s->ExplainedEnergy(s->k())},
              {"singular_values", spectrum}}
             .dump(2)
      << "\n";
  return kExitOk;
}

int RunPrepare(const Options& o, std::ostream& out, std::ostream& err) {
  RequireConditionSource(o);
  auto db = std::make_shared<const Database>(LoadDatabase(o.data));
  auto s = LoadSubspace(o, o.conditions, err);
  auto view = ConditionedView::Prepare(db, s, ConfigOf(o));
  const PrepareStats& st = view->stats();
  json j = {{"condition", ConditionKey(*s, ConfigOf(o))},
            {"rows", st.rows},
            {"rotations", st.rotations},
            {"log_maps", st.log_maps},
            {"basis_multiplications", st.basis_multiplications},
            {"encoder_calls", st.encoder_calls},
            {"zero_projection_rows",
             (view->cache_norms().array() <= kZeroProjectionNorm).count()}};
  if (o.timing) j["prepare_ms"] = st.prepare_ms;
  Emit(o, j, out);
  return kExitOk;
}

int RunRetrieve(const Options& o, std::ostream& out, std::ostream& err) {
  RequireConditionSource(o);
  if (o.query_id.empty()) throw UsageError("retrieve needs --query-id");
  auto db = std::make_shared<const Database>(LoadDatabase(o.data));
  const auto row = db->Find(o.query_id);
  if (!row) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown query id '" + o.query_id + "'");
  }
  auto s = LoadSubspace(o, o.conditions, err);
  auto view = ConditionedView::Prepare(db, s, ConfigOf(o));
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(o.topk),
                                       static_cast<std::size_t>(db->size()));
  json hits = json::array();
  int rank = 1;
  for (const auto& h : view->TopK(db->Row(*row), k)) {
    hits.push_back({{"rank", rank++}, {"id", h.id}, {"score", h.score.value}});
  }
  Emit(o,
       {{"condition", ConditionKey(*s, ConfigOf(o))},
        {"query_id", o.query_id},
        {"hits", hits}},
       out);
  return kExitOk;
}

Method MethodOf(const std::string& name) {
  if (name == "clay") return Method::kConditional;
  if (name == "raw") return Method::kRaw;
  if (name == "asym") return Method::kAsymmetric;
  throw UsageError("--method must be clay, raw or asym");
}

std::string EvalAttribute(const Options& o) {
  if (!o.attribute.empty()) return o.attribute;
  if (o.conditions.size() == 1) return o.conditions.front();
  throw UsageError("--attribute is required unless exactly one condition is "
                   "given");
}

int RunEvaluate(const Options& o, std::ostream& out, std::ostream& err) {
  const Method method = MethodOf(o.method);
  if (method != Method::kRaw) RequireConditionSource(o);
  if (o.attribute.empty() && o.conditions.size() != 1) {
    throw UsageError("--attribute is required unless exactly one condition "
                     "is given");
  }
  const std::string attribute = EvalAttribute(o);
  const Database all = LoadDatabase(o.data);
  const DatabaseSplit split =
      ApplySplit(all, SplitQueryDatabase(all.ids(), o.seed, o.split_fraction));
  std::shared_ptr<const ConditionSubspace> s;
  if (method != Method::kRaw) s = LoadSubspace(o, o.conditions, err);
  const RankerFactory factory = MakeRankerFactory(method, s, ConfigOf(o));
  EvalOptions eval;
  eval.condition = s ? ConditionKey(*s, ConfigOf(o)) : "raw";
  MetricsReport report =
      o.group_by.empty()
          ? MeanAp(*split.queries, *factory(split.database), attribute, eval)
          : GroupedMap(*split.queries, *split.database, o.group_by, attribute,
                       factory, eval);
  if (!o.per_query_csv.empty()) {
    WriteFileBytes(o.per_query_csv, PerQueryCsv(report));
  }
  json j = ToJson(report);
  j["method"] = o.method;
  j["seed"] = o.seed;
  j["split_fraction"] = o.split_fraction;
  if (s) {
    j["k"] = s->k();
    j["requested_k"] = o.k;
  }
  Emit(o, j, out);
  err << "mAP(" << attribute << ") = " << std::fixed << std::setprecision(4)
      << report.map << " over " << report.per_query_ap.size() << " queries\n";
  return kExitOk;
}

int RunAblate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.conditions.empty()) throw UsageError("ablate needs --conditions");
  if (o.no_rotation || o.euclidean) {
    throw UsageError("ablate runs every configuration; drop --no-rotation "
                     "and --euclidean");
  }
  const std::string attribute = EvalAttribute(o);
  const Database all = LoadDatabase(o.data);
  const DatabaseSplit split =
      ApplySplit(all, SplitQueryDatabase(all.ids(), o.seed, o.split_fraction));
  std::vector<PromptMatrix> parts;
  for (const auto& c : o.conditions) parts.push_back(LoadPrompts(o.data, c));
  const PromptMatrix prompts = MergeConditions(parts);

  WorldEvalOptions eval;
  eval.k = o.k;
  json rows = json::array();
  err << "rotation  manifold  mAP\n";
  for (auto [rotation, manifold] :
       {std::pair{false, false}, std::pair{false, true},
        std::pair{true, true}}) {
    eval.cfg.use_rotation = rotation;
    eval.cfg.use_manifold = manifold;
    const double map = ConditionedMap(split, prompts, attribute, eval);
    rows.push_back({{"rotation", rotation}, {"manifold", manifold}, {"map", map}});
    err << (rotation ? "   yes    " : "   no     ")
        << (manifold ? "  yes     " : "  no      ") << std::fixed
        << std::setprecision(4) << map << "\n";
  }
  const double raw =
      ConditionedMap(split, prompts, attribute, eval, Method::kRaw);
  Emit(o,
       {{"condition", JoinNames(o.conditions)},
        {"attribute", attribute},
        {"seed", o.seed},
        {"k", o.k},
        {"raw_map", raw},
        {"rows", rows}},
       out);
  return kExitOk;
}

int RunBench(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.conditions.size() < 2) {
    throw UsageError("bench needs at least two --conditions");
  }
  if (o.runs < 1) throw UsageError("--runs must be >= 1");
  const Database all = LoadDatabase(o.data);
  const DatabaseSplit split =
      ApplySplit(all, SplitQueryDatabase(all.ids(), o.seed, o.split_fraction));
  std::vector<std::shared_ptr<const ConditionSubspace>> subspaces;
  for (const auto& c : o.conditions) {
    Options single = o;
    single.subspace.clear();
    subspaces.push_back(LoadSubspace(single, {c}, err));
  }
  std::vector<UnitVector> queries;
  const Eigen::Index nq =
      o.bench_queries > 0
          ? std::min<Eigen::Index>(o.bench_queries, split.queries->size())
          : split.queries->size();
  for (Eigen::Index i = 0; i < nq; ++i) queries.push_back(split.queries->Row(i));
  BenchOptions bench;
  bench.runs = o.runs;
  bench.cfg = ConfigOf(o);
  const auto k = std::min<std::size_t>(
      static_cast<std::size_t>(o.topk),
      static_cast<std::size_t>(split.database->size()));
  const TimingReport report =
      BenchConditionSwitch(split.database, subspaces, queries, k, bench);
  Emit(o, ToJson(report), out);
  return kExitOk;
}

int RunExportProjected(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.conditions.empty()) throw UsageError("export-projected needs --conditions");
  if (o.output.empty()) throw UsageError("export-projected needs --output DIR");
  auto db = std::make_shared<const Database>(LoadDatabase(o.data));
  json files = json::array();
  for (const auto& c : o.conditions) {
    Options single = o;
    single.subspace.clear();
    auto view = ConditionedView::Prepare(db, LoadSubspace(single, {c}, err),
                                         ConfigOf(o));
    const auto zero =
        (view->cache_norms().array() <= kZeroProjectionNorm).count();
    if (zero > 0) {
      throw Error(ErrorCode::kZeroProjection,
                  std::to_string(zero) + " rows project to zero under '" + c +
                      "'");
    }
    const fs::path path = fs::path(o.output) / (c + ".emb");
    WriteEmbeddings(path, view->cache());
    files.push_back({{"condition", c}, {"path", path.string()},
                     {"rows", db->size()}, {"dim", db->dim()}});
  }
  WriteManifest(fs::path(o.output) / "manifest.json",
                ManifestFor(*db, "export-projected"));
  out << json{{"output", o.output}, {"files", files}}.dump(2) << "\n";
  return kExitOk;
}

void ReportError(std::ostream& err, std::string_view code,
                 const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << "\n";
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Conditional similarity retrieval over fixed embeddings",
               "condsim"};
  app.require_subcommand(1);
  Options o;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", o.data, "Dataset directory")->required();
  };
  auto add_condition = [&](CLI::App* sub) {
    sub->add_option("--conditions,--condition", o.conditions,
                    "Condition name(s); several are merged")
        ->delimiter(',');
    sub->add_option("--subspace", o.subspace, "Serialized subspace file");
    sub->add_option("--k", o.k, "Subspace rank")->capture_default_str();
  };
  auto add_modulator = [&](CLI::App* sub) {
    sub->add_flag("--no-rotation", o.no_rotation, "Skip the mean alignment");
    sub->add_flag("--euclidean", o.euclidean,
                  "Euclidean subspace on raw features (needs --no-rotation)");
  };
  auto add_split = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Split seed")->capture_default_str();
    sub->add_option("--split-fraction", o.split_fraction, "Query fraction")
        ->capture_default_str();
  };
  auto add_output = [&](CLI::App* sub, const std::string& help) {
    sub->add_option("--output", o.output, help);
  };

  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic dataset");
  add_output(gen, "Output directory");
  gen->add_option("--seed", o.seed, "World seed")->capture_default_str();
  gen->add_option("--d", o.world.d, "Embedding dimension")->capture_default_str();
  gen->add_option("--n-items", o.world.n_items, "Number of images")
      ->capture_default_str();
  gen->add_option("--noise", o.world_noise, "Noise scale");
  gen->add_option("--gap", o.world.modality_gap_angle, "Modality gap (rad)")
      ->capture_default_str();
  gen->add_option("--kappa-img", o.world.image_cone_concentration,
                  "Image cone concentration")
      ->capture_default_str();
  gen->add_option("--kappa-txt", o.world.text_cone_concentration,
                  "Text cone concentration")
      ->capture_default_str();
  gen->add_option("--prompts-per-value", o.world.prompts_per_value,
                  "Prompts per attribute value")
      ->capture_default_str();

  auto* build = app.add_subcommand("build-subspace",
                                   "Build and serialize a condition subspace");
  add_data(build);
  add_condition(build);
  add_modulator(build);
  add_output(build, "Subspace file");

  auto* prepare = app.add_subcommand("prepare", "Modulate a database");
  add_data(prepare);
  add_condition(prepare);
  add_modulator(prepare);
  add_output(prepare, "JSON output file");
  prepare->add_flag("--timing", o.timing, "Include prepare time");

  auto* retrieve = app.add_subcommand("retrieve", "Top-k conditional search");
  add_data(retrieve);
  add_condition(retrieve);
  add_modulator(retrieve);
  add_output(retrieve, "JSON output file");
  retrieve->add_option("--query-id", o.query_id, "Query item id");
  retrieve->add_option("--topk", o.topk, "Hits to return")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "mAP on a query/db split");
  add_data(evaluate);
  add_condition(evaluate);
  add_modulator(evaluate);
  add_split(evaluate);
  add_output(evaluate, "JSON output file");
  evaluate->add_option("--attribute", o.attribute, "Relevance attribute");
  evaluate->add_option("--group-by", o.group_by, "Evaluate per group");
  evaluate->add_option("--method", o.method, "clay, raw or asym")
      ->capture_default_str();
  evaluate->add_option("--per-query-csv", o.per_query_csv, "Per-query AP CSV");

  auto* ablate = app.add_subcommand("ablate", "Rotation/manifold ablation");
  add_data(ablate);
  add_condition(ablate);
  add_modulator(ablate);
  add_split(ablate);
  add_output(ablate, "JSON output file");
  ablate->add_option("--attribute", o.attribute, "Relevance attribute");

  auto* bench = app.add_subcommand("bench", "Condition-switch timing");
  add_data(bench);
  add_condition(bench);
  add_modulator(bench);
  add_split(bench);
  add_output(bench, "JSON output file");
  bench->add_option("--topk", o.topk, "Hits per query")->capture_default_str();
  bench->add_option("--runs", o.runs, "Timed passes")->capture_default_str();
  bench->add_option("--queries", o.bench_queries, "Cap on query count");

  auto* export_projected = app.add_subcommand(
      "export-projected", "Write modulated features per condition");
  add_data(export_projected);
  add_condition(export_projected);
  add_modulator(export_projected);
  add_output(export_projected, "Output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    ValidateCommon(o);
    if (gen->parsed()) return RunGenWorld(o, out);
    if (build->parsed()) return RunBuildSubspace(o, out, err);
    if (prepare->parsed()) return RunPrepare(o, out, err);
    if (retrieve->parsed()) return RunRetrieve(o, out, err);
    if (evaluate->parsed()) return RunEvaluate(o, out, err);
    if (ablate->parsed()) return RunAblate(o, out, err);
    if (bench->parsed()) return RunBench(o, out, err);
    if (export_projected->parsed()) return RunExportProjected(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    ReportError(err, ErrorCodeName(e.code()), e.what());
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    ReportError(err, "Internal", e.what());
    return kExitRuntimeError;
  }
  return kExitUsage;
}

}  // namespace condsim
