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

#include "hotbias/rada.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "hotbias/textmetrics.h"

namespace hotbias::rada {

namespace {

constexpr std::array<std::string_view, 64> kJunk = {
    "abc", "xyz", "pro",  "max",  "plus", "one",  "two",  "lite",
    "go",  "hd",  "tv",   "app",  "new",  "old",  "mini", "neo",
    "ok",  "yo",  "la",   "mo",   "ka",   "zen",  "qi",   "xo",
    "io",  "ai",  "v2",   "x1",   "s3",   "k9",   "z0",   "m4",
    "dx",  "rx",  "tx",   "ex",   "ux",   "vr",   "ar",   "fm",
    "am",  "pm",  "uk",   "us",   "eu",   "cn",   "jp",   "kr",
    "ion", "blu", "red",  "sky",  "sun",  "moon", "star", "nova",
    "hub", "lab", "net",  "web",  "box",  "kit",  "zip",  "dot"};

std::string join_codepoints(const std::vector<std::string>& cps,
                            std::size_t count) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) out += cps[i];
  return out;
}

// Flips the case of the first cased code point; returns "" when the word
// has no cased letters.
std::string toggle_case(std::string_view word) {
  const auto cps = textmetrics::codepoints(word);
  std::string out;
  bool done = false;
  for (const auto& cp : cps) {
    if (!done) {
      const auto* s = reinterpret_cast<const uint8_t*>(cp.data());
      int32_t i = 0;
      UChar32 c;
      U8_NEXT(s, i, static_cast<int32_t>(cp.size()), c);
      UChar32 flipped = c;
      if (u_islower(c)) flipped = u_toupper(c);
      else if (u_isupper(c)) flipped = u_tolower(c);
      if (flipped != c && c >= 0) {
        char buf[U8_MAX_LENGTH];
        int32_t len = 0;
        UBool err = false;
        U8_APPEND(buf, len, U8_MAX_LENGTH, flipped, err);
        if (err) break;
        out.append(buf, len);
        done = true;
        continue;
      }
    }
    out += cp;
  }
  return done ? out : std::string();
}

}  // namespace

SpecMap load_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open specs " + path.string());
  SpecMap specs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SynthSpec s;
      s.hotword_id = j.at("hotword_id").get<std::string>();
      s.carriers = j.at("carriers").get<std::vector<std::string>>();
      s.seed = j.value("seed", std::uint64_t{0});
      const std::string id = s.hotword_id;
      if (!specs.emplace(id, std::move(s)).second) {
        throw Error("duplicate spec for hotword " + id);
      }
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
  }
  return specs;
}

void save_specs(const std::filesystem::path& path, const SpecMap& specs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write specs " + path.string());
  for (const auto& [id, s] : specs) {
    out << nlohmann::json{{"hotword_id", s.hotword_id},
                          {"carriers", s.carriers},
                          {"seed", s.seed}}
               .dump()
        << '\n';
  }
}

CharDropoutOracle::CharDropoutOracle(double rate, std::uint64_t seed)
    : rate_(rate), seed_(seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error("dropout rate must be in [0, 1]");
  }
}

std::string CharDropoutOracle::transcribe(std::string_view sentence,
                                          std::uint64_t seed) const {
  std::mt19937_64 rng(hash_combine(hash_combine(seed_, seed), hash64(sentence)));
  std::string out;
  for (const auto& cp : textmetrics::codepoints(sentence)) {
    if (unit_uniform(rng) >= rate_) out += cp;
  }
  return out;
}

LookupOracle LookupOracle::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lookup table " + path.string());
  std::map<std::string, std::string> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    table[j.at("input").get<std::string>()] = j.at("output").get<std::string>();
  }
  return LookupOracle(std::move(table));
}

std::string LookupOracle::transcribe(std::string_view sentence,
                                     std::uint64_t) const {
  auto it = table_.find(std::string(sentence));
  return it == table_.end() ? std::string() : it->second;
}

nlohmann::json to_json(const FilterStats& stats) {
  return {{"total", stats.total},
          {"kept", stats.kept},
          {"removed", stats.removed},
          {"removal_rate", stats.removal_rate}};
}

FilterResult filter_vocabulary(const retrieval::Vocabulary& vocab,
                               const AsrOracle& oracle, const SpecMap& specs,
                               double min_correct_fraction, int threads) {
  if (!(min_correct_fraction > 0.0 && min_correct_fraction <= 1.0)) {
    throw Error("min_correct_fraction must be in (0, 1]");
  }
  const auto& entries = vocab.entries();
  for (const auto& h : entries) {
    auto it = specs.find(h.id);
    if (it == specs.end() || it->second.carriers.empty()) {
      throw Error("no carrier sentences for hotword " + h.id);
    }
    for (const auto& c : it->second.carriers) {
      if (!textmetrics::contains(c, h.surface)) {
        throw Error("carrier for hotword " + h.id +
                    " does not contain its surface: " + c);
      }
    }
  }

  std::vector<char> recognized(entries.size(), 0);
  parallel_for(entries.size(), threads, [&](std::size_t i) {
    const auto& h = entries[i];
    const auto& spec = specs.at(h.id);
    std::size_t correct = 0;
    for (const auto& c : spec.carriers) {
      if (textmetrics::contains(oracle.transcribe(c, spec.seed), h.surface)) {
        ++correct;
      }
    }
    const double needed =
        min_correct_fraction * static_cast<double>(spec.carriers.size());
    recognized[i] = static_cast<double>(correct) + 1e-9 >= needed;
  });

  FilterResult result;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    (recognized[i] ? result.removed : result.kept).add(entries[i]);
  }
  result.stats.total = entries.size();
  result.stats.kept = result.kept.size();
  result.stats.removed = result.removed.size();
  result.stats.removal_rate =
      entries.empty() ? 0.0
                      : static_cast<double>(result.stats.removed) /
                            static_cast<double>(entries.size());
  return result;
}

std::span<const std::string_view> junk_tokens() { return kJunk; }

std::vector<std::string> generate_fuzzy_variants(std::string_view word,
                                                 int count,
                                                 std::uint64_t seed) {
  if (word.empty()) throw Error("generate_fuzzy_variants: empty word");
  if (count < 1) throw Error("generate_fuzzy_variants: count must be >= 1");
  std::mt19937_64 rng(hash_combine(seed, hash64(word)));
  const std::string w(word);
  const auto cps = textmetrics::codepoints(word);
  auto junk = [&]() { return std::string(kJunk[uniform_index(rng, kJunk.size())]); };

  enum Kind { kSuffix, kPrefix, kPartial, kCase };
  std::vector<std::string> out;
  out.reserve(count);
  out.push_back(w + " " + junk());
  while (static_cast<int>(out.size()) < count) {
    switch (static_cast<Kind>(uniform_index(rng, 4))) {
      case kSuffix:
        out.push_back(w + " " + junk());
        break;
      case kPrefix:
        out.push_back(junk() + " " + w);
        break;
      case kPartial:
        if (cps.size() >= 4) {
          out.push_back(join_codepoints(cps, cps.size() - 1));
        } else {
          out.push_back(w + " " + junk());
        }
        break;
      case kCase: {
        std::string toggled = toggle_case(w);
        out.push_back(toggled.empty() ? junk() + " " + w : std::move(toggled));
        break;
      }
    }
  }
  return out;
}

bool satisfies_variant_contract(std::string_view word, std::string_view variant) {
  const std::string w = textmetrics::normalize(word);
  const std::string v = textmetrics::normalize(variant);
  if (v.find(w) != std::string::npos) return true;
  const auto wc = textmetrics::codepoints(w);
  const auto vc = textmetrics::codepoints(v);
  const std::size_t min_len = (wc.size() + 1) / 2;
  return vc.size() >= min_len && vc.size() <= wc.size() &&
         std::equal(vc.begin(), vc.end(), wc.begin());
}

FuzzyAugmentedEncoder::FuzzyAugmentedEncoder(const embed::TextEncoder& base,
                                             int variants, std::uint64_t seed)
    : base_(base), variants_(variants), seed_(seed) {
  if (variants < 1) throw Error("fuzzy encoder needs at least one variant");
}

embed::Embedding FuzzyAugmentedEncoder::embed(std::string_view text) const {
  const std::string norm = textmetrics::normalize(text);
  embed::Vector<double> acc = base_.embed(norm).cast<double>();
  for (const auto& v : generate_fuzzy_variants(norm, variants_, seed_)) {
    acc += base_.embed(v).cast<double>();
  }
  return embed::l2_normalized(acc).cast<float>();
}

std::uint64_t FuzzyAugmentedEncoder::fingerprint() const {
  return hash_combine(hash_combine(base_.fingerprint(), hash64("fuzzy-v1")),
                      hash_combine(static_cast<std::uint64_t>(variants_), seed_));
}

nlohmann::json to_json(const MixtureSample& sample) {
  return {{"utterance_id", sample.utterance_id},
          {"is_biased", sample.is_biased},
          {"prompt_hotwords", sample.prompt_hotwords},
          {"contains_target", sample.contains_target}};
}

MixtureSampler::MixtureSampler(std::vector<MixtureSource> biased_pool,
                               std::vector<MixtureSource> general_pool,
                               std::uint64_t seed)
    : biased_pool_(std::move(biased_pool)),
      general_pool_(std::move(general_pool)),
      rng_(seed) {
  if (biased_pool_.empty()) throw Error("build_mixture: empty biased pool");
  if (general_pool_.empty()) throw Error("build_mixture: empty general pool");
  std::set<std::string> pool;
  for (const auto& u : biased_pool_) {
    if (u.keywords.empty()) {
      throw Error("build_mixture: biased utterance " + u.utterance_id +
                  " has no keywords");
    }
    pool.insert(u.keywords.begin(), u.keywords.end());
  }
  hotword_pool_.assign(pool.begin(), pool.end());
}

std::vector<std::string> MixtureSampler::distractors(
    std::size_t n, const std::vector<std::string>& avoid) {
  std::vector<std::string> candidates;
  for (const auto& h : hotword_pool_) {
    if (std::find(avoid.begin(), avoid.end(), h) == avoid.end()) {
      candidates.push_back(h);
    }
  }
  // Partial Fisher-Yates: the first n slots are a uniform sample.
  n = std::min(n, candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(candidates[i],
              candidates[i + uniform_index(rng_, candidates.size() - i)]);
  }
  candidates.resize(n);
  return candidates;
}

MixtureSample MixtureSampler::make_biased(bool positive) {
  MixtureSample s;
  s.is_biased = true;
  s.contains_target = positive;
  const std::size_t size = 1 + uniform_index(rng_, kMaxPromptHotwords);
  if (positive) {
    const auto& u = biased_pool_[uniform_index(rng_, biased_pool_.size())];
    s.utterance_id = u.utterance_id;
    const auto& target = u.keywords[uniform_index(rng_, u.keywords.size())];
    s.prompt_hotwords = distractors(size - 1, u.keywords);
    s.prompt_hotwords.push_back(target);
    seeded_shuffle(s.prompt_hotwords, rng_);
  } else {
    const auto& u = general_pool_[uniform_index(rng_, general_pool_.size())];
    s.utterance_id = u.utterance_id;
    s.prompt_hotwords = distractors(size, u.keywords);
    if (s.prompt_hotwords.empty()) {
      throw Error("build_mixture: no distractor hotwords available");
    }
  }
  return s;
}

MixtureSample MixtureSampler::next() {
  const int block = kNonBiasedPerBiased + 1;
  if (block_pos_ == 0) {
    biased_slot_ = static_cast<int>(uniform_index(rng_, block));
  }
  MixtureSample s;
  if (block_pos_ == biased_slot_) {
    if (pair_first_) pair_positive_first_ = (rng_() >> 63) != 0;
    const bool positive = pair_first_ ? pair_positive_first_ : !pair_positive_first_;
    pair_first_ = !pair_first_;
    s = make_biased(positive);
  } else {
    const auto& u = general_pool_[uniform_index(rng_, general_pool_.size())];
    s.utterance_id = u.utterance_id;
  }
  block_pos_ = (block_pos_ + 1) % block;
  return s;
}

std::vector<MixtureSample> MixtureSampler::take(std::size_t n) {
  std::vector<MixtureSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

}  // namespace hotbias::rada
