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

#include "hotbias/grpo.h"

#include <algorithm>
#include <numeric>
#include <random>

namespace hotbias::grpo {

RewardRecord match_reward(std::string_view output, std::string_view reference,
                          std::span<const std::string> candidates) {
  RewardRecord r;
  const std::string out = textmetrics::normalize(output);
  const std::string ref = textmetrics::normalize(reference);
  double sum = 0.0;
  for (const auto& c : candidates) {
    const std::string needle = textmetrics::normalize(c);
    const bool in_out = out.find(needle) != std::string::npos;
    const bool in_ref = ref.find(needle) != std::string::npos;
    const int agree = in_out == in_ref ? 1 : 0;
    r.per_candidate.emplace_back(c, agree);
    sum += agree;
  }
  r.match_reward =
      candidates.empty() ? 1.0 : sum / static_cast<double>(candidates.size());
  return r;
}

double wer_reward(const textmetrics::TokenSeq& reference,
                  const textmetrics::TokenSeq& output) {
  return std::max(0.0, 1.0 - textmetrics::wer(reference, output));
}

RewardRecord score_response(std::string_view output,
                            std::string_view reference,
                            std::span<const std::string> candidates,
                            const RewardWeights& weights) {
  RewardRecord r = match_reward(output, reference, candidates);
  r.wer_reward = wer_reward(textmetrics::tokenize(reference),
                            textmetrics::tokenize(output));
  r.total = weights.match * r.match_reward + weights.wer * r.wer_reward;
  return r;
}

nlohmann::json to_json(const RewardRecord& record) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [c, v] : record.per_candidate) per[c] = v;
  return {{"match_reward", record.match_reward},
          {"wer_reward", record.wer_reward},
          {"total", record.total},
          {"per_candidate", std::move(per)}};
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw Error("group_advantages: group size must be >= 2");
  for (double r : rewards) {
    if (!std::isfinite(r)) throw Error("group_advantages: non-finite reward");
  }
  const double mean =
      std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);

  std::vector<double> adv(g, 0.0);
  if (var <= kMinRewardVariance) return adv;
  const double denom = std::sqrt(var) + kAdvantageEps;
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

GradCheckReport check_gradients(int steps, int tokens, std::uint64_t seed,
                                double step_size, double tolerance) {
  if (steps < 1 || tokens < 1) throw Error("check_gradients: empty suite");
  GradCheckReport report;
  report.steps = steps;
  report.tokens = tokens;
  report.step_size = step_size;
  report.tolerance = tolerance;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logp(-4.0, -0.05);
  std::uniform_real_distribution<double> drift(-0.4, 0.4);
  std::uniform_real_distribution<double> adv(-2.0, 2.0);
  for (int s = 0; s < steps; ++s) {
    PolicyStep<double> step;
    step.old_logp.resize(tokens);
    step.policy_logp.resize(tokens);
    step.ref_logp.resize(tokens);
    for (int t = 0; t < tokens; ++t) {
      step.old_logp[t] = logp(rng);
      // Policy drifts from the sampler so some tokens land in the clipped
      // region and some do not.
      // Central differences straddling a clip boundary measure the kink,
      // not the derivative, so such draws are resampled.
      double d = drift(rng);
      while (std::abs(d - std::log1p(kDefaultClipEps)) < 1e-3 ||
             std::abs(d - std::log1p(-kDefaultClipEps)) < 1e-3) {
        d = drift(rng);
      }
      step.policy_logp[t] = step.old_logp[t] + d;
      step.ref_logp[t] = step.old_logp[t] + drift(rng);
    }
    step.advantage = adv(rng);

    const Array<double> analytic = grpo_loss_grad(step);
    for (int t = 0; t < tokens; ++t) {
      PolicyStep<double> plus = step, minus = step;
      plus.policy_logp[t] += step_size;
      minus.policy_logp[t] -= step_size;
      const double numeric =
          (grpo_loss(plus) - grpo_loss(minus)) / (2.0 * step_size);
      const double scale =
          std::max({std::abs(analytic[t]), std::abs(numeric), 1e-12});
      const double rel = std::abs(analytic[t] - numeric) / scale;
      report.max_relative_error = std::max(report.max_relative_error, rel);
      if (rel > tolerance) ++report.failures;
    }
  }
  return report;
}

nlohmann::json to_json(const GradCheckReport& report) {
  return {{"steps", report.steps},
          {"tokens", report.tokens},
          {"step_size", report.step_size},
          {"tolerance", report.tolerance},
          {"max_relative_error", report.max_relative_error},
          {"failures", report.failures},
          {"passed", report.passed()}};
}

}  // namespace hotbias::grpo
