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

#include "hotbias/retriever.h"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hotbias/textmetrics.h"

namespace hotbias::retrieval {

namespace {

constexpr char kMagic[4] = {'H', 'B', 'I', 'X'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename UInt>
void put_le(std::string* out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_str(std::string* out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out->append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename UInt>
  UInt get() {
    need(sizeof(UInt));
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(UInt);
    return v;
  }

  std::string str() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto v = bytes_.substr(pos_, n);
    pos_ += n;
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("index file truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Ranked {
  float score;
  std::size_t row;
};

}  // namespace

void Vocabulary::add(Hotword hotword) {
  if (hotword.id.empty()) throw Error("hotword with empty id");
  hotword.surface = textmetrics::normalize(hotword.surface);
  if (hotword.surface.empty()) {
    throw Error("hotword " + hotword.id + ": empty surface");
  }
  if (by_id_.count(hotword.id)) {
    throw Error("duplicate hotword id: " + hotword.id);
  }
  if (surfaces_.count(hotword.surface)) {
    throw Error("duplicate hotword surface: " + hotword.surface);
  }
  by_id_.emplace(hotword.id, entries_.size());
  surfaces_.insert(hotword.surface);
  entries_.push_back(std::move(hotword));
}

const Hotword* Vocabulary::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &entries_[it->second];
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  const auto ext = path.extension().string();
  const bool jsonl = ext == ".jsonl" || ext == ".json";
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Hotword h;
    try {
      if (jsonl) {
        const auto j = nlohmann::json::parse(line);
        h.id = j.at("id").get<std::string>();
        h.surface = j.at("surface").get<std::string>();
        h.domain = j.value("domain", "");
      } else {
        std::istringstream fields(line);
        std::getline(fields, h.id, '\t');
        std::getline(fields, h.surface, '\t');
        std::getline(fields, h.domain, '\t');
      }
      vocab.add(std::move(h));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
  }
  return vocab;
}

void Vocabulary::save_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary " + path.string());
  for (const auto& h : entries_) {
    out << h.id << '\t' << h.surface << '\t' << h.domain << '\n';
  }
}

std::vector<std::string> RetrievalResult::surfaces() const {
  std::vector<std::string> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.hotword.surface);
  return out;
}

HotwordIndex HotwordIndex::build(const Vocabulary& vocab,
                                 const embed::TextEncoder& encoder) {
  if (vocab.empty()) throw Error("build_index: empty vocabulary");
  const int dim = encoder.dimension();
  RowMatrix vectors(static_cast<Eigen::Index>(vocab.size()), dim);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& h = vocab.entries()[i];
    try {
      vectors.row(static_cast<Eigen::Index>(i)) =
          encoder.embed(h.surface).transpose();
    } catch (const std::exception& e) {
      throw Error("build_index: hotword " + h.id + ": " + e.what());
    }
  }
  return HotwordIndex(vocab.entries(), std::move(vectors), dim,
                      encoder.fingerprint());
}

Eigen::VectorXf HotwordIndex::scores(const embed::Embedding& query) const {
  if (query.size() != dimension_) {
    throw Error("query dimension " + std::to_string(query.size()) +
                " != index dimension " + std::to_string(dimension_));
  }
  Eigen::VectorXf s = vectors_ * query;
  return s.cwiseMax(-1.0f).cwiseMin(1.0f);
}

RetrievalResult HotwordIndex::query_topk(const embed::Embedding& query,
                                         std::size_t k) const {
  if (k == 0) throw Error("query_topk: k must be >= 1");
  RetrievalResult result;
  if (entries_.empty()) return result;
  const Eigen::VectorXf s = scores(query);
  const std::size_t keep = std::min(k, entries_.size());

  auto better = [this](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return entries_[a.row].id < entries_[b.row].id;
  };
  // Heap whose front is the worst of the current top-k.
  std::vector<Ranked> heap;
  heap.reserve(keep + 1);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    Ranked r{s[static_cast<Eigen::Index>(i)], i};
    if (heap.size() < keep) {
      heap.push_back(r);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(r, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = r;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), better);
  result.candidates.reserve(heap.size());
  for (const auto& r : heap) {
    result.candidates.push_back({entries_[r.row], r.score});
  }
  return result;
}

HotwordIndex HotwordIndex::add_entries(std::span<const Hotword> added,
                                       const embed::TextEncoder& encoder) const {
  if (!entries_.empty() && encoder.fingerprint() != fingerprint_) {
    throw Error("add_entries: encoder fingerprint differs from index");
  }
  Vocabulary vocab;
  for (const auto& h : entries_) vocab.add(h);
  for (const auto& h : added) vocab.add(h);

  const int dim = encoder.dimension();
  RowMatrix vectors(static_cast<Eigen::Index>(vocab.size()), dim);
  if (!entries_.empty()) vectors.topRows(vectors_.rows()) = vectors_;
  for (std::size_t i = entries_.size(); i < vocab.size(); ++i) {
    const auto& h = vocab.entries()[i];
    try {
      vectors.row(static_cast<Eigen::Index>(i)) =
          encoder.embed(h.surface).transpose();
    } catch (const std::exception& e) {
      throw Error("add_entries: hotword " + h.id + ": " + e.what());
    }
  }
  return HotwordIndex(vocab.entries(), std::move(vectors), dim,
                      encoder.fingerprint());
}

HotwordIndex HotwordIndex::remove_entries(
    std::span<const std::string> ids) const {
  std::unordered_set<std::string> present;
  for (const auto& h : entries_) present.insert(h.id);
  std::unordered_set<std::string> drop;
  for (const auto& id : ids) {
    if (!present.count(id)) {
      throw Error("remove_entries: unknown hotword id " + id);
    }
    drop.insert(id);
  }
  std::vector<Hotword> entries;
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (drop.count(entries_[i].id)) continue;
    entries.push_back(entries_[i]);
    rows.push_back(static_cast<Eigen::Index>(i));
  }
  RowMatrix vectors(static_cast<Eigen::Index>(rows.size()), dimension_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    vectors.row(static_cast<Eigen::Index>(i)) = vectors_.row(rows[i]);
  }
  return HotwordIndex(std::move(entries), std::move(vectors), dimension_,
                      fingerprint_);
}

std::string HotwordIndex::serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(&out, kFormatVersion);
  put_le<std::uint32_t>(&out, static_cast<std::uint32_t>(dimension_));
  put_le<std::uint64_t>(&out, entries_.size());
  put_le<std::uint64_t>(&out, fingerprint_);
  for (const auto& h : entries_) {
    put_str(&out, h.id);
    put_str(&out, h.surface);
    put_str(&out, h.domain);
  }
  out.reserve(out.size() + entries_.size() * dimension_ * 4);
  for (Eigen::Index r = 0; r < vectors_.rows(); ++r) {
    for (Eigen::Index c = 0; c < vectors_.cols(); ++c) {
      put_le<std::uint32_t>(&out, std::bit_cast<std::uint32_t>(vectors_(r, c)));
    }
  }
  return out;
}

HotwordIndex HotwordIndex::deserialize(std::string_view bytes) {
  Reader in(bytes);
  if (in.raw(4) != std::string_view(kMagic, 4)) {
    throw Error("not a hotword index (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kFormatVersion) {
    throw Error("unsupported index version " + std::to_string(version));
  }
  const int dim = static_cast<int>(in.get<std::uint32_t>());
  const auto count = in.get<std::uint64_t>();
  const auto fingerprint = in.get<std::uint64_t>();
  if (dim < 1 || count > bytes.size() / (4 * static_cast<std::uint64_t>(dim) + 12)) {
    throw Error("index header is inconsistent with the file size");
  }
  std::vector<Hotword> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Hotword h;
    h.id = in.str();
    h.surface = in.str();
    h.domain = in.str();
    entries.push_back(std::move(h));
  }
  RowMatrix vectors(static_cast<Eigen::Index>(count), dim);
  for (Eigen::Index r = 0; r < vectors.rows(); ++r) {
    for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
      vectors(r, c) = std::bit_cast<float>(in.get<std::uint32_t>());
    }
  }
  if (!in.done()) throw Error("trailing bytes in index file");
  return HotwordIndex(std::move(entries), std::move(vectors), dim,
                      fingerprint);
}

void HotwordIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write index " + path.string());
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

HotwordIndex HotwordIndex::load(
    const std::filesystem::path& path,
    std::optional<std::uint64_t> expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  HotwordIndex index = deserialize(buf.str());
  if (expected_fingerprint && *expected_fingerprint != index.fingerprint()) {
    throw Error("index " + path.string() + " was built with encoder " +
                hex64(index.fingerprint()) + ", expected " +
                hex64(*expected_fingerprint));
  }
  return index;
}

}  // namespace hotbias::retrieval
