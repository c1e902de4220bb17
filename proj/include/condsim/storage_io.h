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

// On-disk formats. All integers are little-endian, no padding.
//
// Embedding file:
//   "CLAYEMB1" | u32 version | u32 count | u32 dim | count*dim f32, row-major
//
// Subspace file:
//   "CLAYSUB1" | u32 version | u32 dim | u32 k
//   | u32 n_names | n_names * (u32 byte_length | UTF-8 bytes)
//   | dim f64 mu_c | dim*k f64 basis, column-major
//   | u32 n_sigma | n_sigma f64 singular values
//
// Manifest (JSON):
//   {"items": [{"id": ..., "labels": {attr: value}}],
//    "attributes": [{"name": ..., "values": [...]}], "source": ...}
//
// Dataset directory: images.emb, manifest.json, prompts/<condition>.emb and
// an optional prompts/<condition>.txt holding one prompt text per line.

#ifndef CONDSIM_STORAGE_IO_H_
#define CONDSIM_STORAGE_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "condsim/geometry.h"
#include "condsim/index.h"
#include "condsim/subspace.h"
#include "json.hpp"

namespace condsim {

inline constexpr std::string_view kEmbeddingMagic = "CLAYEMB1";
inline constexpr std::string_view kSubspaceMagic = "CLAYSUB1";
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kMaxDimension = 1u << 20;
// Stored embedding rows must be unit norm within this before re-normalizing.
inline constexpr double kStoredNormTolerance = 1e-3;

// Rows are normalized before encoding. Throws kZeroVector,
// kDimensionOverflow.
std::string EncodeEmbeddings(const RowMatrix& rows);
// Throws kBadMagic, kUnsupportedVersion, kDimensionOverflow, kTruncatedFile,
// kTrailingBytes, kNotUnitNorm.
RowMatrix DecodeEmbeddings(std::string_view bytes);

void WriteEmbeddings(const std::filesystem::path& path, const RowMatrix& rows);
RowMatrix ReadEmbeddings(const std::filesystem::path& path);

// Tangent subspaces only; throws kInvalidArgument for a Euclidean one.
std::string EncodeSubspace(const ConditionSubspace& s);
// Re-validates every invariant. Throws kBadMagic, kUnsupportedVersion,
// kDimensionOverflow, kTruncatedFile, kTrailingBytes, kNotUnitNorm,
// kOrthonormalityViolation.
ConditionSubspace DecodeSubspace(std::string_view bytes);

void WriteSubspace(const std::filesystem::path& path,
                   const ConditionSubspace& s);
ConditionSubspace ReadSubspace(const std::filesystem::path& path);

struct ManifestItem {
  std::string id;
  std::map<std::string, std::string> labels;
};

struct AttributeDecl {
  std::string name;
  std::vector<std::string> values;
};

struct Manifest {
  std::vector<ManifestItem> items;
  std::vector<AttributeDecl> attributes;
  std::string source;

  // Throws kDuplicateId, kLabelCoverage.
  void Validate() const;
  // attribute -> label per item, in item order.
  LabelTable Labels() const;
  std::vector<std::string> Ids() const;
};

nlohmann::json ToJson(const Manifest& m);
// Throws kBadManifest on schema errors, then validates.
Manifest ManifestFromJson(const nlohmann::json& j);

void WriteManifest(const std::filesystem::path& path, const Manifest& m);
Manifest ReadManifest(const std::filesystem::path& path);

// Manifest describing a database's ids and labels. Attribute values are
// listed in order of first appearance.
Manifest ManifestFor(const Database& db, std::string source);

// Reads images.emb + manifest.json; the manifest item order must match the
// embedding rows.
Database LoadDatabase(const std::filesystem::path& dir);

// prompts/<condition>.emb (+ optional .txt).
PromptMatrix LoadPrompts(const std::filesystem::path& dir,
                         const std::string& condition);
void WritePrompts(const std::filesystem::path& dir,
                  const std::string& condition, const PromptMatrix& prompts);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace condsim

#endif  // CONDSIM_STORAGE_IO_H_
