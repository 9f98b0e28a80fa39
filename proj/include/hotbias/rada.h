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

#ifndef HOTBIAS_RADA_H_
#define HOTBIAS_RADA_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hotbias/embedder.h"
#include "hotbias/retriever.h"

namespace hotbias::rada {

// Pre-written carrier sentences standing in for TTS output of a hotword.
struct SynthSpec {
  std::string hotword_id;
  std::vector<std::string> carriers;
  std::uint64_t seed = 0;
};

using SpecMap = std::map<std::string, SynthSpec>;

// JSONL rows {"hotword_id":..., "carriers":[...], "seed":...}.
SpecMap load_specs(const std::filesystem::path& path);
void save_specs(const std::filesystem::path& path, const SpecMap& specs);

// Recognizer probed with a carrier sentence; must be deterministic in
// (sentence, seed).
class AsrOracle {
 public:
  virtual ~AsrOracle() = default;
  virtual std::string transcribe(std::string_view sentence,
                                 std::uint64_t seed) const = 0;
};

// Perfect recognizer.
class EchoOracle final : public AsrOracle {
 public:
  std::string transcribe(std::string_view sentence,
                         std::uint64_t) const override {
    return std::string(sentence);
  }
};

// Recognizes nothing.
class NullOracle final : public AsrOracle {
 public:
  std::string transcribe(std::string_view, std::uint64_t) const override {
    return {};
  }
};

// Drops each code point independently with probability `rate`; the draw
// is seeded by (oracle seed, spec seed, sentence).
class CharDropoutOracle final : public AsrOracle {
 public:
  CharDropoutOracle(double rate, std::uint64_t seed);
  std::string transcribe(std::string_view sentence,
                         std::uint64_t seed) const override;

 private:
  double rate_;
  std::uint64_t seed_;
};

// Exact-sentence lookup; unknown sentences transcribe to "".
class LookupOracle final : public AsrOracle {
 public:
  explicit LookupOracle(std::map<std::string, std::string> table)
      : table_(std::move(table)) {}
  // JSONL rows {"input":..., "output":...}.
  static LookupOracle load(const std::filesystem::path& path);
  std::string transcribe(std::string_view sentence,
                         std::uint64_t) const override;

 private:
  std::map<std::string, std::string> table_;
};

struct FilterStats {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  double removal_rate = 0.0;
};

nlohmann::json to_json(const FilterStats& stats);

struct FilterResult {
  retrieval::Vocabulary kept;
  retrieval::Vocabulary removed;
  FilterStats stats;
};

// A hotword is reliably recognized, and removed, when the oracle output
// contains its surface for at least min_correct_fraction of its carriers
// (default: all of them). Output order follows the input vocabulary.
FilterResult filter_vocabulary(const retrieval::Vocabulary& vocab,
                               const AsrOracle& oracle, const SpecMap& specs,
                               double min_correct_fraction = 1.0,
                               int threads = 1);

// Built-in junk tokens used by fuzzy variants (64 entries).
std::span<const std::string_view> junk_tokens();

// Seeded perturbations of `word`: the first is always `word + " " + junk`;
// the rest mix suffix/prefix junk, a trailing-character drop (|word| >= 4)
// and a case toggle for cased scripts.
std::vector<std::string> generate_fuzzy_variants(std::string_view word,
                                                 int count,
                                                 std::uint64_t seed);

// True when `variant` contains `word` or is a prefix of it of at least
// ceil(|word|/2) code points (both normalized).
bool satisfies_variant_contract(std::string_view word, std::string_view variant);

// Text encoder whose embedding of a word is the normalized mean of the
// word and `variants` of its fuzzy variants. Used to index hotwords the
// way a retriever trained with perturbed mentions would see them.
class FuzzyAugmentedEncoder final : public embed::TextEncoder {
 public:
  FuzzyAugmentedEncoder(const embed::TextEncoder& base, int variants,
                        std::uint64_t seed);
  embed::Embedding embed(std::string_view text) const override;
  int dimension() const override { return base_.dimension(); }
  std::uint64_t fingerprint() const override;

 private:
  const embed::TextEncoder& base_;
  int variants_;
  std::uint64_t seed_;
};

// Utterance as seen by the mixture sampler.
struct MixtureSource {
  std::string utterance_id;
  std::vector<std::string> keywords;
};

struct MixtureSample {
  std::string utterance_id;
  bool is_biased = false;
  std::vector<std::string> prompt_hotwords;
  bool contains_target = false;
};

nlohmann::json to_json(const MixtureSample& sample);

inline constexpr int kNonBiasedPerBiased = 8;
inline constexpr int kMaxPromptHotwords = 10;

// Seeded training-mixture stream. Every block of 9 samples holds exactly
// one biased sample at a random slot; biased samples alternate in seeded
// pairs between positive (biased-pool utterance, prompt holds one of its
// keywords plus distractors) and negative (general-pool utterance,
// distractors only). Prompt sizes are uniform in [1, 10].
class MixtureSampler {
 public:
  MixtureSampler(std::vector<MixtureSource> biased_pool,
                 std::vector<MixtureSource> general_pool, std::uint64_t seed);

  MixtureSample next();
  std::vector<MixtureSample> take(std::size_t n);

 private:
  MixtureSample make_biased(bool positive);
  std::vector<std::string> distractors(std::size_t n,
                                       const std::vector<std::string>& avoid);

  std::vector<MixtureSource> biased_pool_;
  std::vector<MixtureSource> general_pool_;
  std::vector<std::string> hotword_pool_;
  std::mt19937_64 rng_;
  int block_pos_ = 0;
  int biased_slot_ = 0;
  bool pair_first_ = true;
  bool pair_positive_first_ = true;
};

}  // namespace hotbias::rada

#endif  // HOTBIAS_RADA_H_
