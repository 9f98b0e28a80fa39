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

#include <random>

#include "hotbias/textmetrics.h"
#include "test_util.h"

using namespace hotbias;
using namespace hotbias::textmetrics;

namespace {

std::string random_word(std::mt19937_64& rng, std::size_t max_len,
                        std::string_view alphabet) {
  std::string s(rng() % (max_len + 1), ' ');
  for (auto& c : s) c = alphabet[rng() % alphabet.size()];
  return s;
}

}  // namespace

TEST_CASE("normalize folds case, composes and collapses whitespace") {
  CHECK(normalize("  Hello   WORLD \t") == "hello world");
  // e + combining acute composes to U+00E9.
  CHECK(normalize("Cafe\xCC\x81") == "caf\xC3\xA9");
  CHECK(normalize("\xE4\xBD\xA0 \xE5\xA5\xBD qwen") == "\xE4\xBD\xA0\xE5\xA5\xBD qwen");
  CHECK(normalize("") == "");
}

TEST_CASE("tokenize splits words and unsegmented characters") {
  CHECK(tokenize("We use Qwen") == TokenSeq{"we", "use", "qwen"});
  CHECK(tokenize("\xE9\x80\x9A\xE4\xB9\x89qwen3") ==
        TokenSeq{"\xE9\x80\x9A", "\xE4\xB9\x89", "qwen3"});
  CHECK(tokenize("   ").empty());
  for (const char* s : {"A  b", "\xE9\x80\x9A \xE4\xB9\x89 x", "Stra\xC3\x9F" "e"}) {
    const auto once = tokenize(s);
    CHECK(tokenize(join(once)) == once);
    for (const auto& t : once) CHECK_FALSE(t.empty());
  }
}

TEST_CASE("edit_distance examples") {
  CHECK(edit_distance(tokenize("a b c"), tokenize("a b c")) == 0);
  CHECK(edit_distance(tokenize("a b c"), TokenSeq{}) == 3);
  const std::string k = "kitten", s = "sitting";
  CHECK(edit_distance<char>(k, s) == testing::dp_edit_distance(k, s));
  CHECK(edit_distance<char>(k, s) == 3);
}

TEST_CASE("edit_distance matches the table oracle on both code paths") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t max_len = trial % 3 == 0 ? 150 : 70;
    const std::string a = random_word(rng, max_len, "abcd");
    const std::string b = random_word(rng, max_len, "abcd");
    const auto d = edit_distance<char>(a, b);
    REQUIRE(d == testing::dp_edit_distance(a, b));
    CHECK(d == edit_distance<char>(b, a));
    CHECK((d == 0) == (a == b));
  }
}

TEST_CASE("edit_distance triangle inequality") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string a = random_word(rng, 9, "xyz");
    const std::string b = random_word(rng, 9, "xyz");
    const std::string c = random_word(rng, 9, "xyz");
    CHECK(edit_distance<char>(a, c) <=
          edit_distance<char>(a, b) + edit_distance<char>(b, c));
  }
}

TEST_CASE("wer examples and errors") {
  CHECK(wer(tokenize("a b c"), tokenize("a b c")) == 0.0);
  CHECK(wer(tokenize("a b c"), tokenize("a x c")) == doctest::Approx(1.0 / 3.0));
  CHECK(wer(tokenize("a b"), tokenize("a b c d")) == 1.0);
  CHECK(wer(tokenize("a"), tokenize("x y z")) == 3.0);  // not clamped
  CHECK_THROWS_AS(wer(TokenSeq{}, tokenize("a")), Error);
  CHECK(wer(tokenize("Hello  World"), tokenize("hello world")) == 0.0);
  CHECK(wer(tokenize("hello world"), tokenize("hello word")) > 0.0);
}

TEST_CASE("keyword_error_count") {
  CHECK(keyword_error_count({"u", {"qwen"}}, "we use qwen daily") == 0);
  CHECK(keyword_error_count({"u", {"qwen", "tongyi"}}, "we use qwen daily") == 1);
  CHECK(keyword_error_count({"u", {}}, "anything") == 0);
  CHECK(keyword_error_count({"u", {"Qwen"}}, "QWEN") == 0);
  CHECK_THROWS_AS(KeywordAnnotation({"u", {"a", "A"}}).validate(), Error);
}

TEST_CASE("keyword_error_count is monotone as the hypothesis grows") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    KeywordAnnotation ann{"u", {}};
    for (int i = 0; i < 3; ++i) {
      std::string kw = random_word(rng, 3, "ab");
      if (!kw.empty() &&
          std::find(ann.keywords.begin(), ann.keywords.end(), kw) == ann.keywords.end()) {
        ann.keywords.push_back(kw);
      }
    }
    std::string hyp;
    std::size_t prev = keyword_error_count(ann, hyp);
    for (int step = 0; step < 12; ++step) {
      hyp.push_back("ab "[rng() % 3]);
      const std::size_t now = keyword_error_count(ann, hyp);
      CHECK(now <= prev);
      prev = now;
    }
  }
}

TEST_CASE("sacc") {
  const std::vector<TokenSeq> refs{tokenize("a b"), tokenize("c"), tokenize("d e"),
                                   tokenize("f")};
  CHECK(sacc(refs, refs) == 100.0);
  auto hyps = refs;
  hyps[2] = tokenize("d x");
  CHECK(sacc(refs, hyps) == 75.0);
  const std::vector<TokenSeq> wrong{tokenize("z"), tokenize("z"), tokenize("z"),
                                    tokenize("z")};
  CHECK(sacc(refs, wrong) == 0.0);
  CHECK_THROWS_AS(sacc(refs, std::span<const TokenSeq>(hyps.data(), 3)), Error);
  CHECK_THROWS_AS(sacc(std::span<const TokenSeq>(), std::span<const TokenSeq>()), Error);
}

TEST_CASE("is_recalled direction and union") {
  const std::vector<std::string> a{"qwen2.5", "tongyi"};
  CHECK(is_recalled("qwen", a));
  CHECK(is_recalled("qwen", std::vector<std::string>{"qwen"}));
  CHECK_FALSE(is_recalled("qwen3", std::vector<std::string>{"qwen"}));
  CHECK_THROWS_AS(is_recalled("", a), Error);

  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 500; ++trial) {
    std::string ann = random_word(rng, 3, "ab");
    if (ann.empty()) ann = "a";
    std::vector<std::string> l1, l2;
    for (int i = 0; i < 3; ++i) l1.push_back(random_word(rng, 5, "ab"));
    for (int i = 0; i < 3; ++i) l2.push_back(random_word(rng, 5, "ab"));
    auto both = l1;
    both.insert(both.end(), l2.begin(), l2.end());
    CHECK(is_recalled(ann, both) == (is_recalled(ann, l1) || is_recalled(ann, l2)));
  }
}

TEST_CASE("EvalReport identities and JSON") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    EvalCounts c;
    c.utterances = 1 + rng() % 300;
    c.keywords = rng() % 400;
    c.keyword_errors = c.keywords ? rng() % (c.keywords + 1) : 0;
    c.correct_sentences = rng() % (c.utterances + 1);
    const auto r = EvalReport::from_counts(c, 7, 50);
    REQUIRE(r.sacc_percent.has_value());
    CHECK(*r.sacc_percent == 100.0 * static_cast<double>(c.correct_sentences) /
                                 static_cast<double>(c.utterances));
    if (c.keywords) {
      REQUIRE(r.ker_percent.has_value());
      CHECK(*r.ker_percent == 100.0 * static_cast<double>(c.keyword_errors) /
                                  static_cast<double>(c.keywords));
    } else {
      CHECK_FALSE(r.ker_percent.has_value());
    }
  }
  EvalCounts c{4, 0, 0, 3};
  const auto j = to_json(EvalReport::from_counts(c, 1, 10, {{1, 50.0}, {2, 75.0}}));
  CHECK_FALSE(j.contains("ker_percent"));
  CHECK(j.at("sacc_percent") == 75.0);
  CHECK(j.at("wer") == 0.1);
  CHECK(j.at("per_k_recall").at("2") == 75.0);
  CHECK(j.at("counts").at("correct_sentences") == 3);
}
