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

#ifndef HOTBIAS_DECODER_H_
#define HOTBIAS_DECODER_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hotbias/common.h"

namespace hotbias::decode {

using Token = std::string;

inline constexpr std::string_view kEos = "</s>";

struct TokenLogProb {
  Token token;
  double log_prob;
};

// Sparse next-token distribution; tokens not listed have probability 0.
using Distribution = std::vector<TokenLogProb>;

// Stand-in for the LLM decoder. Implementations must be deterministic
// and safe to call concurrently.
class TokenScorer {
 public:
  virtual ~TokenScorer() = default;
  virtual Distribution next_log_probs(std::string_view prompt,
                                      std::string_view audio_key,
                                      std::span<const Token> prefix) const = 0;
  // Every token the scorer may emit, including kEos.
  virtual std::vector<Token> vocab() const = 0;
};

// Throws unless exp(log_prob) sums to 1 within 1e-6 and no token repeats.
void check_normalized(const Distribution& dist);

enum class Source { kContextFree, kBiased };

std::string_view to_string(Source source);

struct Hypothesis {
  std::vector<Token> tokens;  // without the end-of-sequence token
  double log_score = 0.0;     // includes the end-of-sequence step
  Source source = Source::kContextFree;
  bool finished = false;

  // Scored steps: tokens plus the end-of-sequence step when finished.
  std::size_t steps() const { return tokens.size() + (finished ? 1 : 0); }
  // log_score / steps^alpha.
  double normalized_score(double alpha) const;
  std::string text() const;
};

struct BeamConfig {
  int beam_width = 4;
  int max_len = 32;
  double length_penalty = 0.6;
  int threads = 1;

  void validate() const;
};

// Breadth-first beam search. Each step expands every live hypothesis,
// keeps the global top beam_width by log_score (ties: lexicographic token
// order) and moves finished ones to a separate pool. Hypotheses still
// live at max_len are returned unfinished. Result: at most beam_width
// hypotheses ranked by normalized score.
std::vector<Hypothesis> beam_search(const TokenScorer& scorer,
                                    std::string_view prompt,
                                    std::string_view audio_key,
                                    const BeamConfig& cfg,
                                    Source source = Source::kContextFree);

// Teacher-forced log-probability of a hypothesis under a prompt
// (-infinity if any step has zero probability).
double sequence_log_prob(const TokenScorer& scorer, std::string_view prompt,
                         std::string_view audio_key, const Hypothesis& hyp);

struct ScoredHypothesis {
  Hypothesis hypothesis;
  double free_score;    // normalized, under the context-free prompt
  double biased_score;  // normalized, under the biased prompt
  double joint_score;
};

struct JointResult {
  Hypothesis best;
  double best_score = 0.0;
  std::vector<ScoredHypothesis> pool;  // ranked
};

// Combines the two beams into a single decision.
class MergeStrategy {
 public:
  virtual ~MergeStrategy() = default;
  virtual JointResult merge(const TokenScorer& scorer,
                            std::string_view free_prompt,
                            std::string_view biased_prompt,
                            std::string_view audio_key, const BeamConfig& cfg,
                            std::vector<Hypothesis> free_hyps,
                            std::vector<Hypothesis> biased_hyps) const = 0;
};

// Pools both beams, rescores every hypothesis under both prompts and
// ranks by the larger normalized score. Ties prefer the context-free
// source, then lexicographic token order.
class MaxRescoreMerge final : public MergeStrategy {
 public:
  JointResult merge(const TokenScorer& scorer, std::string_view free_prompt,
                    std::string_view biased_prompt, std::string_view audio_key,
                    const BeamConfig& cfg, std::vector<Hypothesis> free_hyps,
                    std::vector<Hypothesis> biased_hyps) const override;
};

// Runs beam_search under both prompts (concurrently when cfg.threads > 1)
// and merges. The default strategy is MaxRescoreMerge.
JointResult joint_beam_search(const TokenScorer& scorer,
                              std::string_view free_prompt,
                              std::string_view biased_prompt,
                              std::string_view audio_key, const BeamConfig& cfg,
                              const MergeStrategy* strategy = nullptr);

}  // namespace hotbias::decode

#endif  // HOTBIAS_DECODER_H_
