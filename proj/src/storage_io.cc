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

#include "condsim/storage_io.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "condsim/error.h"

namespace condsim {
namespace {

class ByteWriter {
 public:
  void Raw(std::string_view s) { out_.append(s); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view Raw(std::size_t n) {
    Need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }
  float F32() { return std::bit_cast<float>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void Need(std::size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncatedFile,
                  "file ends early: need " + std::to_string(n) +
                      " bytes at offset " + std::to_string(pos_) + ", have " +
                      std::to_string(remaining()));
    }
  }
  void ExpectEnd() const {
    if (remaining() != 0) {
      throw Error(ErrorCode::kTrailingBytes,
                  std::to_string(remaining()) + " unexpected trailing bytes");
    }
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void CheckHeader(ByteReader& in, std::string_view magic) {
  if (in.remaining() < magic.size() || in.Raw(magic.size()) != magic) {
    throw Error(ErrorCode::kBadMagic,
                "not a " + std::string(magic) + " file");
  }
  const std::uint32_t version = in.U32();
  if (version != kFormatVersion) {
    throw Error(ErrorCode::kUnsupportedVersion,
                "unsupported format version " + std::to_string(version));
  }
}

void CheckDimension(std::uint64_t dim) {
  if (dim == 0 || dim > kMaxDimension) {
    throw Error(ErrorCode::kDimensionOverflow,
                "dimension " + std::to_string(dim) + " outside [1, " +
                    std::to_string(kMaxDimension) + "]");
  }
}

std::uint32_t ToU32(Eigen::Index v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > 0xFFFFFFFFull) {
    throw Error(ErrorCode::kDimensionOverflow,
                std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::kIoError, "short write to " + path.string());
  }
}

std::string EncodeEmbeddings(const RowMatrix& rows) {
  const std::uint32_t count = ToU32(rows.rows(), "row count");
  const std::uint32_t dim = ToU32(rows.cols(), "dimension");
  CheckDimension(dim);
  ByteWriter out;
  out.Raw(kEmbeddingMagic);
  out.U32(kFormatVersion);
  out.U32(count);
  out.U32(dim);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(norm > kZeroNormThreshold)) {
      throw Error(ErrorCode::kZeroVector,
                  "row " + std::to_string(i) + " is zero");
    }
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      out.F32(static_cast<float>(rows(i, j) / norm));
    }
  }
  return out.Take();
}

RowMatrix DecodeEmbeddings(std::string_view bytes) {
  ByteReader in(bytes);
  CheckHeader(in, kEmbeddingMagic);
  const std::uint64_t count = in.U32();
  const std::uint64_t dim = in.U32();
  CheckDimension(dim);
  in.Need(count * dim * 4);
  RowMatrix rows(static_cast<Eigen::Index>(count),
                 static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = in.F32();
  }
  in.ExpectEnd();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = rows.row(i).norm();
    if (!(std::abs(norm - 1.0) <= kStoredNormTolerance)) {
      throw Error(ErrorCode::kNotUnitNorm,
                  "stored row " + std::to_string(i) + " has norm " +
                      std::to_string(norm));
    }
    rows.row(i) /= norm;
  }
  return rows;
}

void WriteEmbeddings(const std::filesystem::path& path, const RowMatrix& rows) {
  WriteFileBytes(path, EncodeEmbeddings(rows));
}

RowMatrix ReadEmbeddings(const std::filesystem::path& path) {
  return DecodeEmbeddings(ReadFileBytes(path));
}

std::string EncodeSubspace(const ConditionSubspace& s) {
  if (s.kind() != SubspaceKind::kTangent) {
    throw Error(ErrorCode::kInvalidArgument,
                "only tangent subspaces are serializable");
  }
  ByteWriter out;
  out.Raw(kSubspaceMagic);
  out.U32(kFormatVersion);
  out.U32(ToU32(s.dim(), "dimension"));
  out.U32(static_cast<std::uint32_t>(s.k()));
  out.U32(ToU32(static_cast<Eigen::Index>(s.condition_names().size()),
                "name count"));
  for (const auto& name : s.condition_names()) {
    out.U32(ToU32(static_cast<Eigen::Index>(name.size()), "name length"));
    out.Raw(name);
  }
  for (Eigen::Index i = 0; i < s.dim(); ++i) out.F64(s.mu_c().coords()[i]);
  for (Eigen::Index j = 0; j < s.k(); ++j) {
    for (Eigen::Index i = 0; i < s.dim(); ++i) out.F64(s.basis()(i, j));
  }
  out.U32(ToU32(s.singular_values().size(), "spectrum length"));
  for (Eigen::Index i = 0; i < s.singular_values().size(); ++i) {
    out.F64(s.singular_values()[i]);
  }
  return out.Take();
}

ConditionSubspace DecodeSubspace(std::string_view bytes) {
  ByteReader in(bytes);
  CheckHeader(in, kSubspaceMagic);
  const std::uint64_t dim = in.U32();
  const std::uint64_t k = in.U32();
  CheckDimension(dim);
  if (k == 0 || k > dim) {
    throw Error(ErrorCode::kDimensionOverflow,
                "subspace rank " + std::to_string(k) + " outside [1, dim]");
  }
  const std::uint32_t n_names = in.U32();
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < n_names; ++i) {
    const std::uint32_t len = in.U32();
    names.emplace_back(in.Raw(len));
  }
  in.Need(dim * 8 + dim * k * 8);
  Vector mu(static_cast<Eigen::Index>(dim));
  for (auto& v : mu) v = in.F64();
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(dim),
                        static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    for (Eigen::Index i = 0; i < basis.rows(); ++i) basis(i, j) = in.F64();
  }
  const std::uint64_t n_sigma = in.U32();
  in.Need(n_sigma * 8);
  Vector sigma(static_cast<Eigen::Index>(n_sigma));
  for (auto& v : sigma) v = in.F64();
  in.ExpectEnd();
  return ConditionSubspace::FromParts(
      SubspaceKind::kTangent, UnitVector::FromUnit(std::move(mu)),
      std::move(basis), std::move(sigma), std::move(names),
      static_cast<int>(k));
}

void WriteSubspace(const std::filesystem::path& path,
                   const ConditionSubspace& s) {
  WriteFileBytes(path, EncodeSubspace(s));
}

ConditionSubspace ReadSubspace(const std::filesystem::path& path) {
  return DecodeSubspace(ReadFileBytes(path));
}

void Manifest::Validate() const {
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + item.id + "'");
    }
  }
  for (const auto& attr : attributes) {
    const std::set<std::string> allowed(attr.values.begin(), attr.values.end());
    for (const auto& item : items) {
      auto it = item.labels.find(attr.name);
      if (it == item.labels.end()) {
        throw Error(ErrorCode::kLabelCoverage,
                    "item '" + item.id + "' has no label for '" + attr.name +
                        "'");
      }
      if (!allowed.contains(it->second)) {
        throw Error(ErrorCode::kLabelCoverage,
                    "item '" + item.id + "' uses undeclared value '" +
                        it->second + "' for '" + attr.name + "'");
      }
    }
  }
}

LabelTable Manifest::Labels() const {
  LabelTable labels;
  for (const auto& attr : attributes) {
    auto& column = labels[attr.name];
    column.reserve(items.size());
    for (const auto& item : items) column.push_back(item.labels.at(attr.name));
  }
  return labels;
}

std::vector<std::string> Manifest::Ids() const {
  std::vector<std::string> ids;
  ids.reserve(items.size());
  for (const auto& item : items) ids.push_back(item.id);
  return ids;
}

nlohmann::json ToJson(const Manifest& m) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : m.items) {
    items.push_back({{"id", item.id}, {"labels", item.labels}});
  }
  nlohmann::json attributes = nlohmann::json::array();
  for (const auto& a : m.attributes) {
    attributes.push_back({{"name", a.name}, {"values", a.values}});
  }
  return {{"items", items}, {"attributes", attributes}, {"source", m.source}};
}

Manifest ManifestFromJson(const nlohmann::json& j) {
  Manifest m;
  try {
    for (const auto& item : j.at("items")) {
      m.items.push_back(
          {item.at("id").get<std::string>(),
           item.value("labels", nlohmann::json::object())
               .get<std::map<std::string, std::string>>()});
    }
    for (const auto& a : j.at("attributes")) {
      m.attributes.push_back({a.at("name").get<std::string>(),
                              a.at("values").get<std::vector<std::string>>()});
    }
    m.source = j.value("source", "");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadManifest,
                std::string("malformed manifest: ") + e.what());
  }
  m.Validate();
  return m;
}

void WriteManifest(const std::filesystem::path& path, const Manifest& m) {
  m.Validate();
  WriteFileBytes(path, ToJson(m).dump(2) + "\n");
}

Manifest ReadManifest(const std::filesystem::path& path) {
  const std::string text = ReadFileBytes(path);
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kBadManifest,
                "manifest is not valid JSON: " + path.string());
  }
  return ManifestFromJson(j);
}

Manifest ManifestFor(const Database& db, std::string source) {
  Manifest m;
  m.source = std::move(source);
  for (const auto& [attr, values] : db.labels()) {
    AttributeDecl decl{attr, {}};
    std::set<std::string> seen;
    for (const auto& v : values) {
      if (seen.insert(v).second) decl.values.push_back(v);
    }
    m.attributes.push_back(std::move(decl));
  }
  for (Eigen::Index i = 0; i < db.size(); ++i) {
    ManifestItem item{db.id(i), {}};
    for (const auto& [attr, values] : db.labels()) item.labels[attr] = values[i];
    m.items.push_back(std::move(item));
  }
  return m;
}

Database LoadDatabase(const std::filesystem::path& dir) {
  RowMatrix rows = ReadEmbeddings(dir / "images.emb");
  const Manifest m = ReadManifest(dir / "manifest.json");
  if (static_cast<Eigen::Index>(m.items.size()) != rows.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "manifest lists " + std::to_string(m.items.size()) +
                    " items but images.emb has " + std::to_string(rows.rows()) +
                    " rows");
  }
  return Database::Build(std::move(rows), m.Ids(), m.Labels());
}

PromptMatrix LoadPrompts(const std::filesystem::path& dir,
                         const std::string& condition) {
  const auto base = dir / "prompts";
  RowMatrix rows = ReadEmbeddings(base / (condition + ".emb"));
  std::vector<std::string> texts;
  const auto text_path = base / (condition + ".txt");
  if (std::filesystem::exists(text_path)) {
    std::istringstream lines(ReadFileBytes(text_path));
    for (std::string line; std::getline(lines, line);) texts.push_back(line);
    if (static_cast<Eigen::Index>(texts.size()) != rows.rows()) texts.clear();
  }
  return PromptMatrix::Create(std::move(rows), {condition}, std::move(texts));
}

void WritePrompts(const std::filesystem::path& dir,
                  const std::string& condition, const PromptMatrix& prompts) {
  const auto base = dir / "prompts";
  WriteEmbeddings(base / (condition + ".emb"), prompts.rows());
  if (!prompts.prompt_texts().empty()) {
    std::string text;
    for (const auto& t : prompts.prompt_texts()) text += t + "\n";
    WriteFileBytes(base / (condition + ".txt"), text);
  }
}

}  // namespace condsim
