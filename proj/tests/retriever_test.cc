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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "hotbias/retriever.h"
#include "hotbias/textmetrics.h"
#include "test_util.h"

using namespace hotbias;
using namespace hotbias::retrieval;

namespace {

std::string pseudo(std::mt19937_64& rng) {
  static const char* kSyl[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo",
                               "zen", "pra", "qu", "wen", "dor", "fi", "ge"};
  std::string s;
  const int n = 2 + static_cast<int>(rng() % 3);
  for (int i = 0; i < n; ++i) s += kSyl[rng() % 15];
  return s;
}

Vocabulary random_vocab(std::mt19937_64& rng, std::size_t n,
                        const std::string& prefix = "id") {
  Vocabulary v;
  std::size_t i = 0;
  while (v.size() < n) {
    std::string s = pseudo(rng) + prefix + std::to_string(i);
    v.add({prefix + std::to_string(i), s, i % 2 ? "media" : "medical"});
    ++i;
  }
  return v;
}

embed::Embedding random_query(std::mt19937_64& rng, int dim) {
  embed::Embedding q(dim);
  std::normal_distribution<float> nd;
  for (int i = 0; i < dim; ++i) q[i] = nd(rng);
  return q / q.norm();
}

// Full sort of every row by (score desc, id asc).
std::vector<std::pair<std::string, float>> full_sort(const HotwordIndex& index,
                                                     const embed::Embedding& q,
                                                     std::size_t k) {
  const Eigen::VectorXf s = index.scores(q);
  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return index.entries()[a].id < index.entries()[b].id;
  });
  std::vector<std::pair<std::string, float>> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.emplace_back(index.entries()[order[i]].id, s[order[i]]);
  }
  return out;
}

std::vector<std::pair<std::string, float>> as_pairs(const RetrievalResult& r) {
  std::vector<std::pair<std::string, float>> out;
  for (const auto& c : r.candidates) out.emplace_back(c.hotword.id, c.score);
  return out;
}

// Maps each surface to one of three basis vectors, forcing many ties.
class CoarseEncoder final : public embed::TextEncoder {
 public:
  embed::Embedding embed(std::string_view text) const override {
    embed::Embedding v = embed::Embedding::Zero(4);
    v[static_cast<Eigen::Index>(hash64(text) % 3)] = 1.0f;
    return v;
  }
  int dimension() const override { return 4; }
  std::uint64_t fingerprint() const override { return 42; }
};

class FailingEncoder final : public embed::TextEncoder {
 public:
  embed::Embedding embed(std::string_view text) const override {
    if (text == "bad") throw Error("cannot embed");
    return embed::embed_text(text, 8);
  }
  int dimension() const override { return 8; }
  std::uint64_t fingerprint() const override { return 7; }
};

}  // namespace

TEST_CASE("vocabulary normalizes and enforces uniqueness") {
  Vocabulary v;
  v.add({"a", "  Qwen  ", "media"});
  CHECK(v.entries()[0].surface == "qwen");
  CHECK(v.has_surface("qwen"));
  CHECK_THROWS_AS(v.add({"a", "other", ""}), Error);
  CHECK_THROWS_AS(v.add({"b", "QWEN", ""}), Error);
  CHECK_THROWS_AS(v.add({"c", "  ", ""}), Error);
  CHECK_THROWS_AS(v.add({"", "x", ""}), Error);
  REQUIRE(v.find("a") != nullptr);
  CHECK(v.find("zzz") == nullptr);
}

TEST_CASE("vocabulary loads TSV and JSONL") {
  const auto dir = testing::temp_dir("vocab");
  testing::write_text(dir / "v.tsv", "h1\tQwen\tmedia\nh2\ttongyi\t\n\n");
  testing::write_text(dir / "v.jsonl",
                      "{\"id\":\"h1\",\"surface\":\"Qwen\",\"domain\":\"media\"}\n"
                      "{\"id\":\"h2\",\"surface\":\"tongyi\"}\n");
  const auto a = Vocabulary::load(dir / "v.tsv");
  const auto b = Vocabulary::load(dir / "v.jsonl");
  CHECK(a.entries() == b.entries());
  CHECK(a.size() == 2);
  a.save_tsv(dir / "w.tsv");
  CHECK(Vocabulary::load(dir / "w.tsv").entries() == a.entries());
  testing::write_text(dir / "dup.tsv", "h1\tx\t\nh1\ty\t\n");
  CHECK_THROWS_WITH_AS(Vocabulary::load(dir / "dup.tsv"),
                       doctest::Contains("dup.tsv:2"), Error);
}

TEST_CASE("build_index") {
  embed::NgramHashEncoder enc;
  Vocabulary one;
  one.add({"h1", "qwen", ""});
  const auto idx = HotwordIndex::build(one, enc);
  CHECK(idx.size() == 1);
  CHECK(idx.vectors().rows() == 1);
  CHECK(idx.vectors().cols() == embed::kDefaultDimension);
  CHECK(idx.vectors().row(0).norm() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(HotwordIndex::build(Vocabulary{}, enc), Error);

  Vocabulary bad;
  bad.add({"ok", "fine", ""});
  bad.add({"h-bad", "bad", ""});
  CHECK_THROWS_WITH_AS(HotwordIndex::build(bad, FailingEncoder{}),
                       doctest::Contains("h-bad"), Error);

  std::mt19937_64 rng(31);
  const auto vocab = random_vocab(rng, 300);
  CHECK(HotwordIndex::build(vocab, enc).serialize() ==
        HotwordIndex::build(vocab, enc).serialize());
}

TEST_CASE("build_index at the 98k scale") {
  std::mt19937_64 rng(32);
  const auto vocab = random_vocab(rng, 98000);
  const auto idx = HotwordIndex::build(vocab, embed::NgramHashEncoder{});
  CHECK(idx.size() == 98000);
  CHECK(idx.vectors().rows() == 98000);
  const Eigen::VectorXf norms = idx.vectors().rowwise().norm();
  CHECK((norms.array() - 1.0f).abs().maxCoeff() < 1e-5f);
}

TEST_CASE("query_topk basics") {
  embed::NgramHashEncoder enc;
  std::mt19937_64 rng(33);
  const auto vocab = random_vocab(rng, 5);
  const auto idx = HotwordIndex::build(vocab, enc);
  for (const auto& h : vocab.entries()) {
    const auto r = idx.query_topk(enc.embed(h.surface), 1);
    REQUIRE(r.candidates.size() == 1);
    CHECK(r.candidates[0].hotword.id == h.id);
    CHECK(r.candidates[0].score == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(idx.query_topk(random_query(rng, 256), 10).candidates.size() == 5);
  CHECK_THROWS_AS(idx.query_topk(random_query(rng, 255), 1), Error);
  CHECK_THROWS_AS(idx.query_topk(random_query(rng, 256), 0), Error);
}

TEST_CASE("query_topk equals the full-sort oracle and has the prefix property") {
  embed::NgramHashEncoder enc;
  std::mt19937_64 rng(34);
  const auto vocab = random_vocab(rng, 2000);
  const auto idx = HotwordIndex::build(vocab, enc);
  for (int q = 0; q < 200; ++q) {
    const auto query = q % 2 ? random_query(rng, 256) : enc.embed(pseudo(rng));
    const auto k10 = idx.query_topk(query, 10);
    CHECK(as_pairs(k10) == full_sort(idx, query, 10));
    const auto k1 = idx.query_topk(query, 1);
    const auto k2 = idx.query_topk(query, 2);
    CHECK(k2.candidates[0].hotword.id == k1.candidates[0].hotword.id);
    for (std::size_t i = 1; i < k10.candidates.size(); ++i) {
      CHECK(k10.candidates[i - 1].score >= k10.candidates[i].score);
    }
    // Scores agree with a double-precision dot product.
    const Eigen::VectorXf s = idx.scores(query);
    for (int r = 0; r < 20; ++r) {
      const double d = idx.vectors().row(r).cast<double>().dot(query.cast<double>());
      CHECK(std::abs(d - s[r]) < 1e-5);
    }
  }
}

TEST_CASE("ties break by id and ignore insertion order") {
  CoarseEncoder enc;
  std::mt19937_64 rng(35);
  std::vector<Hotword> words;
  for (int i = 0; i < 60; ++i) {
    words.push_back({"w" + std::to_string(1000 + i), pseudo(rng) + std::to_string(i), ""});
  }
  Vocabulary a;
  for (const auto& w : words) a.add(w);
  const auto ia = HotwordIndex::build(a, enc);
  for (int perm = 0; perm < 10; ++perm) {
    seeded_shuffle(words, rng);
    Vocabulary b;
    for (const auto& w : words) b.add(w);
    const auto ib = HotwordIndex::build(b, enc);
    for (int q = 0; q < 3; ++q) {
      embed::Embedding e = embed::Embedding::Zero(4);
      e[q] = 1.0f;
      const auto ra = ia.query_topk(e, 15), rb = ib.query_topk(e, 15);
      CHECK(as_pairs(ra) == as_pairs(rb));
      for (std::size_t i = 1; i < ra.candidates.size(); ++i) {
        if (ra.candidates[i - 1].score == ra.candidates[i].score) {
          CHECK(ra.candidates[i - 1].hotword.id < ra.candidates[i].hotword.id);
        }
      }
    }
  }
}

TEST_CASE("recall at k implies recall at k+1") {
  embed::NgramHashEncoder enc;
  std::mt19937_64 rng(36);
  const auto vocab = random_vocab(rng, 1000);
  const auto idx = HotwordIndex::build(vocab, enc);
  for (int q = 0; q < 100; ++q) {
    const auto& target = vocab.entries()[rng() % vocab.size()].surface;
    const std::string annotated = target.substr(0, 4);
    const auto query = enc.embed(target + " " + pseudo(rng));
    const auto surfaces = idx.query_topk(query, 20).surfaces();
    bool prev = false;
    for (std::size_t k = 1; k <= 20; ++k) {
      const bool now = textmetrics::is_recalled(
          annotated, std::span<const std::string>(surfaces.data(), k));
      CHECK((!prev || now));
      prev = now;
    }
  }
}

TEST_CASE("add_entries and remove_entries") {
  embed::NgramHashEncoder enc;
  std::mt19937_64 rng(37);
  const auto vocab = random_vocab(rng, 200);
  const auto idx = HotwordIndex::build(vocab, enc);

  std::vector<std::string> all_ids;
  for (const auto& h : vocab.entries()) all_ids.push_back(h.id);
  const auto empty = idx.remove_entries(all_ids);
  CHECK(empty.size() == 0);
  CHECK(empty.query_topk(random_query(rng, 256), 5).candidates.empty());

  const Hotword extra{"new-1", "zzyzxqua", "tech"};
  const auto added = idx.add_entries(std::span<const Hotword>(&extra, 1), enc);
  const std::vector<std::string> drop{"new-1"};
  const auto round = added.remove_entries(drop);
  for (int q = 0; q < 50; ++q) {
    const auto query = random_query(rng, 256);
    CHECK(as_pairs(round.query_topk(query, 7)) == as_pairs(idx.query_topk(query, 7)));
  }

  const auto more = random_vocab(rng, 10, "add");
  const auto incremental = idx.add_entries(more.entries(), enc);
  Vocabulary full = vocab;
  for (const auto& h : more.entries()) full.add(h);
  const auto rebuilt = HotwordIndex::build(full, enc);
  for (int q = 0; q < 100; ++q) {
    const auto query = q % 2 ? random_query(rng, 256)
                             : enc.embed(more.entries()[q % 10].surface);
    CHECK(as_pairs(incremental.query_topk(query, 10)) ==
          as_pairs(rebuilt.query_topk(query, 10)));
  }

  CHECK_THROWS_AS(idx.add_entries(std::span<const Hotword>(&vocab.entries()[0], 1), enc),
                  Error);
  const std::vector<std::string> unknown{"nope"};
  CHECK_THROWS_AS(idx.remove_entries(unknown), Error);
  CHECK_THROWS_AS(idx.add_entries(std::span<const Hotword>(&extra, 1),
                                  embed::NgramHashEncoder(128)),
                  Error);
}

TEST_CASE("index persistence") {
  embed::NgramHashEncoder enc;
  std::mt19937_64 rng(38);
  const auto idx = HotwordIndex::build(random_vocab(rng, 50), enc);
  const std::string bytes = idx.serialize();
  CHECK(bytes.substr(0, 4) == "HBIX");
  CHECK(bytes.size() > 50u * 256u * 4u);
  const auto back = HotwordIndex::deserialize(bytes);
  CHECK(back.entries() == idx.entries());
  CHECK(back.vectors() == idx.vectors());
  CHECK(back.fingerprint() == enc.fingerprint());
  CHECK(back.serialize() == bytes);

  CHECK_THROWS_AS(HotwordIndex::deserialize("XXXX" + bytes.substr(4)), Error);
  CHECK_THROWS_AS(HotwordIndex::deserialize(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(HotwordIndex::deserialize(bytes + "x"), Error);

  const auto dir = testing::temp_dir("index");
  idx.save(dir / "h.index");
  CHECK(HotwordIndex::load(dir / "h.index", enc.fingerprint()).serialize() == bytes);
  CHECK_THROWS_AS(HotwordIndex::load(dir / "h.index",
                                     embed::NgramHashEncoder(64).fingerprint()),
                  Error);
}

TEST_CASE("parallel batch queries match serial") {
  embed::NgramHashEncoder enc;
  std::mt19937_64 rng(39);
  const auto idx = HotwordIndex::build(random_vocab(rng, 3000), enc);
  std::vector<embed::Embedding> queries;
  for (int i = 0; i < 64; ++i) queries.push_back(random_query(rng, 256));
  std::vector<RetrievalResult> serial(queries.size()), parallel(queries.size());
  parallel_for(queries.size(), 1, [&](std::size_t i) { serial[i] = idx.query_topk(queries[i], 10); });
  parallel_for(queries.size(), 4, [&](std::size_t i) { parallel[i] = idx.query_topk(queries[i], 10); });
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CHECK(as_pairs(serial[i]) == as_pairs(parallel[i]));
  }
}
