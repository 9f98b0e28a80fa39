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

#ifndef HOTBIAS_TEXTMETRICS_H_
#define HOTBIAS_TEXTMETRICS_H_

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hotbias/common.h"

namespace hotbias::textmetrics {

// Canonical text form used by every comparison in the toolkit. NFC and
// lowercase with single interior spaces; spaces between two characters of
// an unsegmented script (Han, kana) are dropped.
std::string normalize(std::string_view text);

// Splits UTF-8 into code points (invalid sequences become U+FFFD).
std::vector<std::string> codepoints(std::string_view text);

// True for scripts written without word separators.
bool is_unsegmented(char32_t cp);

using TokenSeq = std::vector<std::string>;

// Word tokens for space-delimited text, one token per character for
// unsegmented scripts. Mixed text yields both kinds in order.
TokenSeq tokenize(std::string_view text);

std::string join(const TokenSeq& tokens);

// Levenshtein distance with unit costs. Sequences of up to 64 tokens on
// either side use the bit-parallel recurrence of Hyyro (2001); longer ones
// fall back to a single-row DP.
template <typename Token>
std::size_t edit_distance(std::span<const Token> ref,
                          std::span<const Token> hyp) {
  if (ref.size() > hyp.size()) std::swap(ref, hyp);  // symmetric
  const std::size_t m = ref.size(), n = hyp.size();
  if (m == 0) return n;
  if (m <= 64) {
    const std::uint64_t top = std::uint64_t{1} << (m - 1);
    std::uint64_t vp = m == 64 ? ~std::uint64_t{0} : (top << 1) - 1;
    std::uint64_t vn = 0;
    std::size_t score = m;
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t eq = 0;
      for (std::size_t i = 0; i < m; ++i) {
        eq |= static_cast<std::uint64_t>(ref[i] == hyp[j]) << i;
      }
      const std::uint64_t xv = eq | vn;
      const std::uint64_t xh = (((eq & vp) + vp) ^ vp) | eq;
      std::uint64_t hp = vn | ~(xh | vp);
      std::uint64_t hn = vp & xh;
      if (hp & top) {
        ++score;
      } else if (hn & top) {
        --score;
      }
      hp = (hp << 1) | 1;
      hn <<= 1;
      vp = hn | ~(xv | hp);
      vn = hp & xv;
    }
    return score;
  }
  std::vector<std::size_t> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      row[j] = std::min({sub, up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[n];
}

inline std::size_t edit_distance(const TokenSeq& ref, const TokenSeq& hyp) {
  return edit_distance<std::string>(ref, hyp);
}

// edit_distance / |ref|. Not clamped; throws on an empty reference.
double wer(const TokenSeq& ref, const TokenSeq& hyp);

// Substring containment after normalizing both sides.
bool contains(std::string_view haystack, std::string_view needle);

struct KeywordAnnotation {
  std::string utterance_id;
  std::vector<std::string> keywords;

  // Throws on empty or duplicate (after normalization) keywords.
  void validate() const;
};

// Number of annotated keywords missing from hyp_text. Each keyword counts
// at most once per utterance.
std::size_t keyword_error_count(const KeywordAnnotation& annotation,
                                std::string_view hyp_text);

// Percentage of exact sentence matches.
double sacc(std::span<const TokenSeq> refs, std::span<const TokenSeq> hyps);

// A hotword counts as recalled when it is a substring of any retrieved
// entry, so "qwen" is recalled by "qwen2.5" but "qwen3" is not by "qwen".
bool is_recalled(std::string_view annotated,
                 std::span<const std::string> retrieved);

struct EvalCounts {
  std::size_t utterances = 0;
  std::size_t keywords = 0;
  std::size_t keyword_errors = 0;
  std::size_t correct_sentences = 0;
};

struct EvalReport {
  double wer = 0.0;
  std::optional<double> ker_percent;
  std::optional<double> sacc_percent;
  std::map<int, double> per_k_recall;
  EvalCounts counts;

  // Derives the percentages from raw counts; KER and SACC are left empty
  // when their denominators are zero.
  static EvalReport from_counts(const EvalCounts& counts, std::size_t edits,
                                std::size_t ref_tokens,
                                std::map<int, double> per_k_recall = {});
};

nlohmann::json to_json(const EvalReport& report);

}  // namespace hotbias::textmetrics

#endif  // HOTBIAS_TEXTMETRICS_H_
