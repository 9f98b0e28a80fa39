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

#include "hotbias/textmetrics.h"

#include <cstdio>
#include <set>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

namespace hotbias {

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace hotbias

namespace hotbias::textmetrics {

namespace {

void append_utf8(std::string* out, UChar32 cp) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, U8_MAX_LENGTH, cp, error);
  if (!error) out->append(buf, len);
}

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) {
    throw Error("ICU NFC normalizer unavailable");
  }
  return *n;
}

}  // namespace

bool is_unsegmented(char32_t cp) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode script = uscript_getScript(static_cast<UChar32>(cp), &status);
  if (U_FAILURE(status)) return false;
  return script == USCRIPT_HAN || script == USCRIPT_HIRAGANA ||
         script == USCRIPT_KATAKANA;
}

std::string normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString n = nfc().normalize(u, status);
  n.toLower(icu::Locale::getRoot());
  // Lowercasing can decompose a few characters.
  n = nfc().normalize(n, status);
  if (U_FAILURE(status)) throw Error("normalization failed");

  std::string out;
  out.reserve(text.size());
  UChar32 last = -1;
  bool pending_space = false;
  for (int32_t i = 0; i < n.length();) {
    const UChar32 c = n.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = last != -1;
      continue;
    }
    if (pending_space) {
      if (!(is_unsegmented(last) && is_unsegmented(c))) out.push_back(' ');
      pending_space = false;
    }
    append_utf8(&out, c);
    last = c;
  }
  return out;
}

std::vector<std::string> codepoints(std::string_view text) {
  std::vector<std::string> out;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  for (int32_t i = 0; i < length;) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) c = 0xFFFD;
    std::string cp;
    append_utf8(&cp, c);
    out.push_back(std::move(cp));
  }
  return out;
}

TokenSeq tokenize(std::string_view text) {
  const std::string norm = normalize(text);
  TokenSeq tokens;
  std::string word;
  const auto* s = reinterpret_cast<const uint8_t*>(norm.data());
  const int32_t length = static_cast<int32_t>(norm.size());
  auto flush = [&]() {
    if (!word.empty()) tokens.push_back(std::move(word));
    word.clear();
  };
  for (int32_t i = 0; i < length;) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c == ' ') {
      flush();
    } else if (is_unsegmented(c)) {
      flush();
      tokens.emplace_back(norm.substr(start, i - start));
    } else {
      word.append(norm, start, i - start);
    }
  }
  flush();
  return tokens;
}

std::string join(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

double wer(const TokenSeq& ref, const TokenSeq& hyp) {
  if (ref.empty()) throw Error("wer: empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

bool contains(std::string_view haystack, std::string_view needle) {
  return normalize(haystack).find(normalize(needle)) != std::string::npos;
}

void KeywordAnnotation::validate() const {
  std::set<std::string> seen;
  for (const auto& k : keywords) {
    std::string norm = normalize(k);
    if (norm.empty()) {
      throw Error("utterance " + utterance_id + ": empty keyword");
    }
    if (!seen.insert(std::move(norm)).second) {
      throw Error("utterance " + utterance_id + ": duplicate keyword '" + k +
                  "'");
    }
  }
}

std::size_t keyword_error_count(const KeywordAnnotation& annotation,
                                std::string_view hyp_text) {
  const std::string hyp = normalize(hyp_text);
  std::set<std::string> seen;
  std::size_t errors = 0;
  for (const auto& k : annotation.keywords) {
    std::string norm = normalize(k);
    if (!seen.insert(norm).second) continue;
    if (hyp.find(norm) == std::string::npos) ++errors;
  }
  return errors;
}

double sacc(std::span<const TokenSeq> refs, std::span<const TokenSeq> hyps) {
  if (refs.size() != hyps.size()) throw Error("sacc: length mismatch");
  if (refs.empty()) throw Error("sacc: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (refs[i] == hyps[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(refs.size());
}

bool is_recalled(std::string_view annotated,
                 std::span<const std::string> retrieved) {
  const std::string needle = normalize(annotated);
  if (needle.empty()) throw Error("is_recalled: empty annotated hotword");
  for (const auto& r : retrieved) {
    if (normalize(r).find(needle) != std::string::npos) return true;
  }
  return false;
}

EvalReport EvalReport::from_counts(const EvalCounts& counts, std::size_t edits,
                                   std::size_t ref_tokens,
                                   std::map<int, double> per_k_recall) {
  EvalReport r;
  r.counts = counts;
  r.per_k_recall = std::move(per_k_recall);
  r.wer = ref_tokens ? static_cast<double>(edits) /
                           static_cast<double>(ref_tokens)
                     : 0.0;
  if (counts.keywords > 0) {
    r.ker_percent = 100.0 * static_cast<double>(counts.keyword_errors) /
                    static_cast<double>(counts.keywords);
  }
  if (counts.utterances > 0) {
    r.sacc_percent = 100.0 * static_cast<double>(counts.correct_sentences) /
                     static_cast<double>(counts.utterances);
  }
  return r;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["wer"] = report.wer;
  if (report.ker_percent) j["ker_percent"] = *report.ker_percent;
  if (report.sacc_percent) j["sacc_percent"] = *report.sacc_percent;
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : report.per_k_recall) recall[std::to_string(k)] = v;
  j["per_k_recall"] = std::move(recall);
  j["counts"] = {{"utterances", report.counts.utterances},
                 {"keywords", report.counts.keywords},
                 {"keyword_errors", report.counts.keyword_errors},
                 {"correct_sentences", report.counts.correct_sentences}};
  return j;
}

}  // namespace hotbias::textmetrics
