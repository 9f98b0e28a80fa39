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

#ifndef HOTBIAS_SCORERS_H_
#define HOTBIAS_SCORERS_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hotbias/decoder.h"

namespace hotbias::decode {

// Explicit conditional distributions keyed on (audio key, exact prefix),
// optionally conditioned on a hotword being present in the prompt. For a
// query, entries conditioned on prompt hotwords are tried in prompt order,
// then the unconditioned entry; with no entry the sequence ends.
class TableScorer final : public TokenScorer {
 public:
  explicit TableScorer(std::vector<Token> vocab);

  // dist is given as probabilities and stored as log-probabilities.
  void set(std::string_view audio_key, std::span<const Token> prefix,
           const std::map<Token, double>& probs,
           std::string_view condition_hotword = {});

  Distribution next_log_probs(std::string_view prompt,
                              std::string_view audio_key,
                              std::span<const Token> prefix) const override;
  std::vector<Token> vocab() const override { return vocab_; }

 private:
  static std::string key(std::string_view audio_key,
                         std::string_view condition,
                         std::span<const Token> prefix);

  std::vector<Token> vocab_;
  std::unordered_map<std::string, Distribution> table_;
};

// Emits the tokens of the audio key (the transcript itself) with
// probability one, then ends.
class EchoScorer final : public TokenScorer {
 public:
  explicit EchoScorer(std::span<const std::string> corpus);

  Distribution next_log_probs(std::string_view prompt,
                              std::string_view audio_key,
                              std::span<const Token> prefix) const override;
  std::vector<Token> vocab() const override;

 private:
  std::set<Token> vocab_;
};

// Add-k smoothed bigram model over a text corpus. Ignores the audio; words
// of the prompt hotwords get `hotword_boost` added to their log-score
// before renormalization.
class NgramScorer final : public TokenScorer {
 public:
  NgramScorer(std::span<const std::string> corpus, double add_k = 0.1,
              double hotword_boost = 2.0);

  Distribution next_log_probs(std::string_view prompt,
                              std::string_view audio_key,
                              std::span<const Token> prefix) const override;
  std::vector<Token> vocab() const override { return vocab_; }

 private:
  std::vector<Token> vocab_;  // includes kEos; excludes the start symbol
  std::map<std::pair<Token, Token>, double> bigram_counts_;
  std::map<Token, double> context_counts_;
  double add_k_;
  double hotword_boost_;
};

// Probability profile of the simulated acoustic model.
struct AcousticProfile {
  double clean_correct = 0.96;
  // Hard keyword without a matching prompt hotword.
  double hard_correct = 0.35;
  double hard_confusion = 0.60;
  // Hard keyword whose token appears in a prompt hotword.
  double boosted_correct = 0.90;
  double boosted_confusion = 0.08;
  // Acoustically noisy position, independent of the prompt.
  double noisy_correct = 0.35;
  double noisy_confusion = 0.60;
  // Chance that a prompt hotword absent from the audio pulls a clean
  // position towards itself, and the probability it then receives.
  double hallucination_rate = 0.03;
  double hallucination_prob = 0.55;
  double hallucination_correct = 0.40;
  double early_end = 0.005;
  double end_prob = 0.97;
};

enum class SlotKind { kClean, kHardKeyword, kNoisy };

struct Slot {
  Token reference;
  Token confusion;  // used by kHardKeyword and kNoisy
  SlotKind kind = SlotKind::kClean;
};

inline constexpr std::string_view kUnk = "<unk>";

// Table-driven stand-in for a bias-aware LLM-ASR model. The audio key
// names an utterance; the distribution at position i depends only on
// slot i of that utterance and on which prompt hotwords intersect the
// utterance content.
class SimulatedAsrScorer final : public TokenScorer {
 public:
  explicit SimulatedAsrScorer(AcousticProfile profile = {},
                              std::uint64_t seed = 0);

  void add_utterance(std::string audio_key, std::vector<Slot> slots);
  // Hotword surfaces that may appear in prompts (hallucination targets).
  void add_hotwords(std::span<const std::string> surfaces);

  Distribution next_log_probs(std::string_view prompt,
                              std::string_view audio_key,
                              std::span<const Token> prefix) const override;
  std::vector<Token> vocab() const override;
  bool knows(std::string_view token) const {
    return vocab_.count(std::string(token)) > 0;
  }
  const AcousticProfile& profile() const { return profile_; }

 private:
  std::vector<Token> tokens_of(const std::string& hotword) const;

  AcousticProfile profile_;
  std::uint64_t seed_;
  std::unordered_map<std::string, std::vector<Slot>> utterances_;
  std::unordered_map<std::string, std::vector<Token>> hotword_tokens_;
  std::set<Token> vocab_;
};

}  // namespace hotbias::decode

#endif  // HOTBIAS_SCORERS_H_
