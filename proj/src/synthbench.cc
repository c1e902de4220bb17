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

#include "condsim/synthbench.h"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "condsim/error.h"
#include "condsim/storage_io.h"

namespace condsim {
namespace {

std::string PaddedId(int i, int n) {
  const std::string digits = std::to_string(std::max(n - 1, 0));
  std::string s = std::to_string(i);
  return "item_" + std::string(digits.size() - std::min(digits.size(), s.size()), '0') + s;
}

}  // namespace

void WorldConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, "world config: " + what);
  };
  if (d < 2) fail("d must be >= 2");
  if (n_items < 1) fail("n_items must be >= 1");
  if (attributes.empty()) fail("at least one attribute required");
  if (prompts_per_value < 1) fail("prompts_per_value must be >= 1");
  if (!(modality_gap_angle > 0.0 && modality_gap_angle < std::numbers::pi)) {
    fail("modality_gap_angle must lie in (0, pi)");
  }
  if (!(image_cone_concentration > 0.0) || !(text_cone_concentration > 0.0)) {
    fail("cone concentrations must be > 0");
  }
  if (!(noise_scale >= 0.0)) fail("noise_scale must be >= 0");
  if (!attribute_signal.empty() &&
      attribute_signal.size() != attributes.size()) {
    fail("attribute_signal needs one entry per attribute");
  }
  for (double s : attribute_signal) {
    if (!(s >= 0.0)) fail("attribute signals must be >= 0");
  }
  int total_values = 0;
  for (const auto& a : attributes) {
    if (a.n_values < 1) fail("attribute '" + a.name + "' needs >= 1 value");
    if (a.name.empty()) fail("attribute names must be non-empty");
    total_values += a.n_values;
  }
  if (d < total_values + 2) {
    throw Error(ErrorCode::kInsufficientDimension,
                "d=" + std::to_string(d) + " cannot hold " +
                    std::to_string(total_values) +
                    " orthogonal value directions plus two means");
  }
}

double WorldConfig::SignalOf(std::size_t attribute) const {
  return attribute_signal.empty() ? 1.0 : attribute_signal.at(attribute);
}

std::string JointAttributeName(const std::string& a, const std::string& b) {
  return a + "&" + b;
}

std::string ValueName(const std::string& attribute, int j) {
  return attribute + "_" + std::to_string(j);
}

const PromptMatrix& SyntheticWorld::Prompts(const std::string& attribute) const {
  for (const auto& [name, p] : prompts) {
    if (name == attribute) return p;
  }
  throw Error(ErrorCode::kMissingLabel,
              "world has no condition '" + attribute + "'");
}

Database SyntheticWorld::ToDatabase(
    std::span<const std::pair<std::string, std::string>> joints) const {
  LabelTable table = labels;
  for (const auto& [a, b] : joints) {
    auto ia = labels.find(a);
    auto ib = labels.find(b);
    if (ia == labels.end() || ib == labels.end()) {
      throw Error(ErrorCode::kMissingLabel,
                  "joint attribute over unknown '" + a + "' / '" + b + "'");
    }
    auto& joint = table[JointAttributeName(a, b)];
    joint.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      joint.push_back(ia->second[i] + "|" + ib->second[i]);
    }
  }
  return Database::Build(images, ids, std::move(table));
}

SyntheticWorld GenerateWorld(const WorldConfig& cfg) {
  cfg.Validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](Eigen::Index n) {
    Vector v(n);
    for (auto& x : v) x = normal(rng);
    return v;
  };

  const int d = cfg.d;
  int total_values = 0;
  for (const auto& a : cfg.attributes) total_values += a.n_values;

  // Orthonormal frame: image mean, gap direction, then every value direction.
  Eigen::MatrixXd raw(d, total_values + 2);
  for (Eigen::Index j = 0; j < raw.cols(); ++j) raw.col(j) = gaussian(d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd frame =
      qr.householderQ() * Eigen::MatrixXd::Identity(d, raw.cols());

  SyntheticWorld w;
  w.config = cfg;
  w.image_mean = frame.col(0);
  const double gap = cfg.modality_gap_angle;
  w.text_mean = std::cos(gap) * frame.col(0) + std::sin(gap) * frame.col(1);
  Eigen::Index col = 2;
  for (const auto& a : cfg.attributes) {
    RowMatrix dirs(a.n_values, d);
    for (int v = 0; v < a.n_values; ++v) dirs.row(v) = frame.col(col++).transpose();
    w.value_directions.push_back(std::move(dirs));
  }

  // Balanced labels: value j % V for item j, shuffled per attribute.
  const int n = cfg.n_items;
  std::vector<std::vector<int>> value_of(cfg.attributes.size());
  for (std::size_t a = 0; a < cfg.attributes.size(); ++a) {
    auto& vals = value_of[a];
    vals.resize(n);
    for (int i = 0; i < n; ++i) vals[i] = i % cfg.attributes[a].n_values;
    std::shuffle(vals.begin(), vals.end(), rng);
    auto& column = w.labels[cfg.attributes[a].name];
    column.reserve(n);
    for (int v : vals) column.push_back(ValueName(cfg.attributes[a].name, v));
  }

  w.images.resize(n, d);
  for (int i = 0; i < n; ++i) {
    Vector x = cfg.image_cone_concentration * w.image_mean;
    for (std::size_t a = 0; a < cfg.attributes.size(); ++a) {
      x += cfg.SignalOf(a) *
           w.value_directions[a].row(value_of[a][i]).transpose();
    }
    x += cfg.noise_scale * gaussian(d);
    w.images.row(i) = (x / x.norm()).transpose();
    w.ids.push_back(PaddedId(i, n));
  }

  for (std::size_t a = 0; a < cfg.attributes.size(); ++a) {
    const auto& attr = cfg.attributes[a];
    const int count = attr.n_values * cfg.prompts_per_value;
    RowMatrix rows(count, d);
    std::vector<std::string> texts;
    texts.reserve(count);
    int r = 0;
    for (int v = 0; v < attr.n_values; ++v) {
      for (int p = 0; p < cfg.prompts_per_value; ++p, ++r) {
        Vector t = cfg.text_cone_concentration * w.text_mean +
                   cfg.SignalOf(a) * w.value_directions[a].row(v).transpose() +
                   cfg.noise_scale * gaussian(d);
        rows.row(r) = (t / t.norm()).transpose();
        texts.push_back("a photo of something with " + attr.name + " " +
                        ValueName(attr.name, v) + " #" + std::to_string(p));
      }
    }
    w.prompts.emplace_back(
        attr.name,
        PromptMatrix::Create(std::move(rows), {attr.name}, std::move(texts)));
  }
  return w;
}

double ConditionedMap(const DatabaseSplit& split, const PromptMatrix& prompts,
                      const std::string& attribute,
                      const WorldEvalOptions& options, Method method) {
  std::shared_ptr<const ConditionSubspace> subspace;
  if (method != Method::kRaw) {
    subspace = std::make_shared<const ConditionSubspace>(
        options.cfg.use_manifold ? BuildSubspace(prompts, options.k)
                                 : BuildEuclideanSubspace(prompts, options.k));
  }
  const auto ranker =
      MakeRankerFactory(method, subspace, options.cfg)(split.database);
  return MeanAp(*split.queries, *ranker, attribute).map;
}

Eigen::MatrixXd CrossConditionMatrix(const SyntheticWorld& world,
                                     const WorldEvalOptions& options) {
  const Database all = world.ToDatabase();
  const DatabaseSplit split =
      ApplySplit(all, SplitQueryDatabase(all.ids(), options.split_seed,
                                         options.query_fraction));
  const auto& attrs = world.config.attributes;
  const auto n = static_cast<Eigen::Index>(attrs.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& prompts = world.Prompts(attrs[i].name);
    auto subspace = std::make_shared<const ConditionSubspace>(
        options.cfg.use_manifold ? BuildSubspace(prompts, options.k)
                                 : BuildEuclideanSubspace(prompts, options.k));
    auto view =
        ConditionedView::Prepare(split.database, subspace, options.cfg);
    for (Eigen::Index j = 0; j < n; ++j) {
      m(i, j) = MeanAp(*split.queries, *view, attrs[j].name).map;
    }
  }
  return m;
}

void WriteWorld(const SyntheticWorld& world, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Database db = world.ToDatabase();
  WriteEmbeddings(dir / "images.emb", world.images);
  Manifest m = ManifestFor(db, "synthetic world seed=" +
                                   std::to_string(world.config.seed));
  // Declare values in canonical order rather than order of appearance.
  m.attributes.clear();
  for (const auto& a : world.config.attributes) {
    AttributeDecl decl{a.name, {}};
    for (int v = 0; v < a.n_values; ++v) decl.values.push_back(ValueName(a.name, v));
    m.attributes.push_back(std::move(decl));
  }
  WriteManifest(dir / "manifest.json", m);
  for (const auto& [name, prompts] : world.prompts) {
    WritePrompts(dir, name, prompts);
  }
}

}  // namespace condsim
