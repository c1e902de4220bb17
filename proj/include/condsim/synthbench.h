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

// Seeded synthetic embedding worlds with known attribute structure.
//
// Images sit in a cone around an image-mean direction, prompts in a cone
// around a text-mean direction separated from it by a fixed angle (the
// modality gap). Each attribute value owns a direction orthogonal to both
// means and to every other value direction:
//
//   image  = normalize(k_img m_img + sum_a s_a dir_a(value_a) + noise)
//   prompt = normalize(k_txt m_txt + s_a dir_a(v) + noise)
//
// Noise is isotropic Gaussian with per-coordinate scale `noise_scale`.

#ifndef CONDSIM_SYNTHBENCH_H_
#define CONDSIM_SYNTHBENCH_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "condsim/evaluation.h"
#include "condsim/index.h"
#include "condsim/subspace.h"

namespace condsim {

struct AttributeSpec {
  std::string name;
  int n_values = 0;
};

struct WorldConfig {
  int d = 128;
  int n_items = 2000;
  std::vector<AttributeSpec> attributes = {
      {"color", 5}, {"category", 5}, {"material", 5}};
  double image_cone_concentration = 3.0;
  double text_cone_concentration = 3.0;
  double modality_gap_angle = 0.6;
  // One entry per attribute; empty means 1.0 for every attribute.
  std::vector<double> attribute_signal;
  double noise_scale = 0.2;
  int prompts_per_value = 20;
  std::uint64_t seed = 0;

  // Throws kInvalidConfig, or kInsufficientDimension when d is smaller than
  // the number of attribute values + 2.
  void Validate() const;
  double SignalOf(std::size_t attribute) const;
};

struct SyntheticWorld {
  WorldConfig config;
  std::vector<std::string> ids;
  RowMatrix images;
  LabelTable labels;
  // Condition name (== attribute name) and its prompts, in attribute order.
  std::vector<std::pair<std::string, PromptMatrix>> prompts;

  // Ground truth, for diagnostics only.
  Vector image_mean;
  Vector text_mean;
  // attribute -> (n_values x d) value directions.
  std::vector<RowMatrix> value_directions;

  // Throws kMissingLabel for an unknown attribute.
  const PromptMatrix& Prompts(const std::string& attribute) const;

  // The images as a database. Each (a, b) pair adds a joint attribute named
  // JointAttributeName(a, b) whose label is "label_a|label_b".
  Database ToDatabase(
      std::span<const std::pair<std::string, std::string>> joints = {}) const;
};

std::string JointAttributeName(const std::string& a, const std::string& b);

// Label value names are "<attribute>_<j>".
std::string ValueName(const std::string& attribute, int j);

SyntheticWorld GenerateWorld(const WorldConfig& cfg);

struct WorldEvalOptions {
  std::uint64_t split_seed = 0;
  double query_fraction = kDefaultQueryFraction;
  int k = kDefaultSubspaceRank;
  ModulatorConfig cfg;
};

// mAP of `attribute` under `method`, with the subspace built from `prompts`
// (tangent or Euclidean according to cfg.use_manifold).
double ConditionedMap(const DatabaseSplit& split, const PromptMatrix& prompts,
                      const std::string& attribute,
                      const WorldEvalOptions& options,
                      Method method = Method::kConditional);

// Entry (i, j): mAP on attribute j with the subspace of condition i, both in
// the world's attribute order, over one shared split.
Eigen::MatrixXd CrossConditionMatrix(const SyntheticWorld& world,
                                     const WorldEvalOptions& options = {});

// Writes images.emb, manifest.json and prompts/<attribute>.emb (+ .txt).
void WriteWorld(const SyntheticWorld& world, const std::filesystem::path& dir);

}  // namespace condsim

#endif  // CONDSIM_SYNTHBENCH_H_
