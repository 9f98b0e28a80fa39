// Copyright (c) 2026 The hotbias Authors
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

#ifndef HOTBIAS_RETRIEVER_H_
#define HOTBIAS_RETRIEVER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "hotbias/embedder.h"

namespace hotbias::retrieval {

struct Hotword {
  std::string id;
  std::string surface;
  std::string domain;

  bool operator==(const Hotword&) const = default;
};

// Ordered hotword list with unique ids and unique normalized surfaces.
class Vocabulary {
 public:
  Vocabulary() = default;

  // Normalizes the surface; throws on duplicates or empty fields.
  void add(Hotword hotword);

  const std::vector<Hotword>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Hotword* find(const std::string& id) const;
  bool has_surface(const std::string& normalized_surface) const {
    return surfaces_.count(normalized_surface) > 0;
  }

  // TSV (id<TAB>surface[<TAB>domain]) or JSONL by extension (.jsonl/.json).
  static Vocabulary load(const std::filesystem::path& path);
  void save_tsv(const std::filesystem::path& path) const;

 private:
  std::vector<Hotword> entries_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_set<std::string> surfaces_;
};

struct Candidate {
  Hotword hotword;
  float score = 0.0f;
};

struct RetrievalResult {
  std::vector<Candidate> candidates;

  std::vector<std::string> surfaces() const;
};

using RowMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Flat exact index: row i is the unit-norm embedding of entries()[i].
// Values are immutable; add/remove return a new index.
class HotwordIndex {
 public:
  HotwordIndex() = default;

  // An index with no rows, e.g. after filtering removed every entry.
  static HotwordIndex empty(int dimension, std::uint64_t fingerprint) {
    return HotwordIndex({}, RowMatrix(0, dimension), dimension, fingerprint);
  }

  // Throws on an empty vocabulary, or names the hotword whose embedding
  // failed.
  static HotwordIndex build(const Vocabulary& vocab,
                            const embed::TextEncoder& encoder);

  // Exact top-k by cosine; ties go to the smaller id. k > size() returns
  // every entry.
  RetrievalResult query_topk(const embed::Embedding& query,
                             std::size_t k) const;

  // Cosine of the query against every row, clamped to [-1, 1].
  Eigen::VectorXf scores(const embed::Embedding& query) const;

  HotwordIndex add_entries(std::span<const Hotword> added,
                           const embed::TextEncoder& encoder) const;
  HotwordIndex remove_entries(std::span<const std::string> ids) const;

  std::size_t size() const { return entries_.size(); }
  int dimension() const { return dimension_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  const std::vector<Hotword>& entries() const { return entries_; }
  const RowMatrix& vectors() const { return vectors_; }

  // Binary layout, all integers little-endian:
  //   "HBIX" u32 version u32 dim u64 count u64 fingerprint
  //   count x (u32 len + id, u32 len + surface, u32 len + domain)
  //   count x dim f32 rows
  std::string serialize() const;
  static HotwordIndex deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static HotwordIndex load(
      const std::filesystem::path& path,
      std::optional<std::uint64_t> expected_fingerprint = std::nullopt);

 private:
  HotwordIndex(std::vector<Hotword> entries, RowMatrix vectors, int dimension,
               std::uint64_t fingerprint)
      : entries_(std::move(entries)),
        vectors_(std::move(vectors)),
        dimension_(dimension),
        fingerprint_(fingerprint) {}

  std::vector<Hotword> entries_;
  RowMatrix vectors_;
  int dimension_ = 0;
  std::uint64_t fingerprint_ = 0;
};

}  // namespace hotbias::retrieval

#endif  // HOTBIAS_RETRIEVER_H_
