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

#include "hotbias/decoder.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <unordered_set>

namespace hotbias::decode {

namespace {

constexpr double kNormTolerance = 1e-6;

// Token order used for deterministic tie-breaking; finished hypotheses
// compare as if the end-of-sequence token were appended.
bool lexicographic_less(const Hypothesis& a, const Hypothesis& b) {
  const std::size_t n = std::min(a.tokens.size(), b.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.tokens[i] != b.tokens[i]) return a.tokens[i] < b.tokens[i];
  }
  auto next = [](const Hypothesis& h, std::size_t i) -> std::string_view {
    if (i < h.tokens.size()) return h.tokens[i];
    return h.finished ? kEos : std::string_view();
  };
  if (a.tokens.size() != b.tokens.size() || a.finished != b.finished) {
    return next(a, n) < next(b, n);
  }
  return false;
}

bool better_raw(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return lexicographic_less(a, b);
}

std::vector<Hypothesis> expand(const TokenScorer& scorer,
                               std::string_view prompt,
                               std::string_view audio_key,
                               const Hypothesis& hyp) {
  Distribution dist = scorer.next_log_probs(prompt, audio_key, hyp.tokens);
  check_normalized(dist);
  std::vector<Hypothesis> out;
  out.reserve(dist.size());
  for (auto& [token, lp] : dist) {
    if (lp == -std::numeric_limits<double>::infinity()) continue;
    Hypothesis next;
    next.source = hyp.source;
    next.log_score = hyp.log_score + lp;
    next.tokens = hyp.tokens;
    if (token == kEos) {
      next.finished = true;
    } else {
      next.tokens.push_back(std::move(token));
    }
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace

void check_normalized(const Distribution& dist) {
  double sum = 0.0;
  std::unordered_set<std::string_view> seen;
  for (const auto& [token, lp] : dist) {
    if (std::isnan(lp) || lp > 0.0) {
      throw Error("scorer returned invalid log-probability for '" + token + "'");
    }
    if (!seen.insert(token).second) {
      throw Error("scorer returned token '" + token + "' twice");
    }
    sum += std::exp(lp);
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    throw Error("scorer distribution not normalized (sum " +
                std::to_string(sum) + ")");
  }
}

std::string_view to_string(Source source) {
  return source == Source::kContextFree ? "context_free" : "biased";
}

double Hypothesis::normalized_score(double alpha) const {
  const double len = static_cast<double>(std::max<std::size_t>(steps(), 1));
  return log_score / std::pow(len, alpha);
}

std::string Hypothesis::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

void BeamConfig::validate() const {
  if (beam_width < 1) throw Error("beam width must be >= 1");
  if (max_len < 1) throw Error("max_len must be >= 1");
  if (!(length_penalty >= 0.0)) throw Error("length penalty must be >= 0");
}

std::vector<Hypothesis> beam_search(const TokenScorer& scorer,
                                    std::string_view prompt,
                                    std::string_view audio_key,
                                    const BeamConfig& cfg, Source source) {
  cfg.validate();
  const std::size_t width = static_cast<std::size_t>(cfg.beam_width);
  std::vector<Hypothesis> live(1);
  live[0].source = source;
  std::vector<Hypothesis> done;

  for (int step = 0; step < cfg.max_len && !live.empty(); ++step) {
    std::vector<std::vector<Hypothesis>> expanded(live.size());
    parallel_for(live.size(), cfg.threads, [&](std::size_t i) {
      expanded[i] = expand(scorer, prompt, audio_key, live[i]);
    });
    std::vector<Hypothesis> candidates;
    for (auto& e : expanded) {
      std::move(e.begin(), e.end(), std::back_inserter(candidates));
    }
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep,
                      candidates.end(), better_raw);
    candidates.resize(keep);

    live.clear();
    for (auto& c : candidates) {
      (c.finished ? done : live).push_back(std::move(c));
    }
  }
  std::move(live.begin(), live.end(), std::back_inserter(done));

  const double alpha = cfg.length_penalty;
  std::sort(done.begin(), done.end(),
            [alpha](const Hypothesis& a, const Hypothesis& b) {
              const double sa = a.normalized_score(alpha);
              const double sb = b.normalized_score(alpha);
              if (sa != sb) return sa > sb;
              return lexicographic_less(a, b);
            });
  if (done.size() > width) done.resize(width);
  return done;
}

double sequence_log_prob(const TokenScorer& scorer, std::string_view prompt,
                         std::string_view audio_key, const Hypothesis& hyp) {
  double total = 0.0;
  std::vector<Token> prefix;
  prefix.reserve(hyp.tokens.size());
  auto step = [&](std::string_view token) {
    const Distribution dist = scorer.next_log_probs(prompt, audio_key, prefix);
    check_normalized(dist);
    for (const auto& [t, lp] : dist) {
      if (t == token) return lp;
    }
    return -std::numeric_limits<double>::infinity();
  };
  for (const auto& t : hyp.tokens) {
    total += step(t);
    if (total == -std::numeric_limits<double>::infinity()) return total;
    prefix.push_back(t);
  }
  if (hyp.finished) total += step(kEos);
  return total;
}

JointResult MaxRescoreMerge::merge(const TokenScorer& scorer,
                                   std::string_view free_prompt,
                                   std::string_view biased_prompt,
                                   std::string_view audio_key,
                                   const BeamConfig& cfg,
                                   std::vector<Hypothesis> free_hyps,
                                   std::vector<Hypothesis> biased_hyps) const {
  JointResult result;
  const double alpha = cfg.length_penalty;
  auto add = [&](Hypothesis h) {
    Hypothesis probe = h;
    probe.log_score = sequence_log_prob(scorer, free_prompt, audio_key, h);
    const double free_score = probe.normalized_score(alpha);
    probe.log_score = sequence_log_prob(scorer, biased_prompt, audio_key, h);
    const double biased_score = probe.normalized_score(alpha);
    const double joint = std::max(free_score, biased_score);
    result.pool.push_back({std::move(h), free_score, biased_score, joint});
  };
  for (auto& h : free_hyps) add(std::move(h));
  for (auto& h : biased_hyps) add(std::move(h));
  if (result.pool.empty()) throw Error("joint_beam_search: no hypotheses");

  std::stable_sort(result.pool.begin(), result.pool.end(),
                   [](const ScoredHypothesis& a, const ScoredHypothesis& b) {
                     if (a.joint_score != b.joint_score) {
                       return a.joint_score > b.joint_score;
                     }
                     if (a.hypothesis.source != b.hypothesis.source) {
                       return a.hypothesis.source == Source::kContextFree;
                     }
                     return lexicographic_less(a.hypothesis, b.hypothesis);
                   });
  result.best = result.pool.front().hypothesis;
  result.best_score = result.pool.front().joint_score;
  return result;
}

JointResult joint_beam_search(const TokenScorer& scorer,
                              std::string_view free_prompt,
                              std::string_view biased_prompt,
                              std::string_view audio_key, const BeamConfig& cfg,
                              const MergeStrategy* strategy) {
  cfg.validate();
  std::vector<Hypothesis> free_hyps, biased_hyps;
  if (cfg.threads > 1) {
    auto biased = std::async(std::launch::async, [&]() {
      return beam_search(scorer, biased_prompt, audio_key, cfg, Source::kBiased);
    });
    free_hyps = beam_search(scorer, free_prompt, audio_key, cfg,
                            Source::kContextFree);
    biased_hyps = biased.get();
  } else {
    free_hyps = beam_search(scorer, free_prompt, audio_key, cfg,
                            Source::kContextFree);
    biased_hyps =
        beam_search(scorer, biased_prompt, audio_key, cfg, Source::kBiased);
  }
  static const MaxRescoreMerge kDefaultMerge;
  const MergeStrategy& merge = strategy ? *strategy : kDefaultMerge;
  return merge.merge(scorer, free_prompt, biased_prompt, audio_key, cfg,
                     std::move(free_hyps), std::move(biased_hyps));
}

}  // namespace hotbias::decode
