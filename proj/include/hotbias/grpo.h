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

#ifndef HOTBIAS_GRPO_H_
#define HOTBIAS_GRPO_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "hotbias/textmetrics.h"

namespace hotbias::grpo {

inline constexpr int kDefaultGroupSize = 6;
inline constexpr double kDefaultKlWeight = 0.04;
inline constexpr double kDefaultClipEps = 0.2;
inline constexpr double kAdvantageEps = 1e-8;
// Groups whose population variance is at or below this get zero advantages.
inline constexpr double kMinRewardVariance = 1e-12;

struct RewardWeights {
  double match = 1.0;
  double wer = 1.0;
};

struct RewardRecord {
  double match_reward = 1.0;
  double wer_reward = 0.0;
  double total = 0.0;
  // Candidate order is preserved; values are 0 or 1.
  std::vector<std::pair<std::string, int>> per_candidate;
};

// Per candidate: 1 when output and reference agree on whether it occurs
// (both contain it, or neither does), else 0. Averaged; 1.0 when empty.
// Fills match_reward and per_candidate only.
RewardRecord match_reward(std::string_view output, std::string_view reference,
                          std::span<const std::string> candidates);

// max(0, 1 - WER). Throws on an empty reference.
double wer_reward(const textmetrics::TokenSeq& reference,
                  const textmetrics::TokenSeq& output);

RewardRecord score_response(std::string_view output,
                            std::string_view reference,
                            std::span<const std::string> candidates,
                            const RewardWeights& weights = {});

nlohmann::json to_json(const RewardRecord& record);

// (r_i - mean) / (std + 1e-8) with population std. Requires G >= 2.
std::vector<double> group_advantages(std::span<const double> rewards);

template <typename Scalar>
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// Token log-probabilities of one sampled response under the current
// policy, the sampling (old) policy and the frozen reference model.
template <typename Scalar>
struct PolicyStep {
  Array<Scalar> policy_logp;
  Array<Scalar> old_logp;
  Array<Scalar> ref_logp;
  Scalar advantage = 0;
  Scalar kl_weight = Scalar(kDefaultKlWeight);
  Scalar clip_eps = Scalar(kDefaultClipEps);

  void validate() const {
    const auto n = policy_logp.size();
    if (n < 1 || old_logp.size() != n || ref_logp.size() != n) {
      throw Error("PolicyStep: log-prob arrays must be non-empty and aligned");
    }
    const bool finite = policy_logp.allFinite() && old_logp.allFinite() &&
                        ref_logp.allFinite() && std::isfinite(advantage) &&
                        std::isfinite(kl_weight) && std::isfinite(clip_eps);
    if (!finite) throw Error("PolicyStep: non-finite input");
  }
};

// k3 estimator of KL(policy || ref) per token: exp(d) - d - 1, d = ref - policy.
template <typename Scalar>
Array<Scalar> kl_k3(const PolicyStep<Scalar>& step) {
  const Array<Scalar> d = step.ref_logp - step.policy_logp;
  return d.exp() - d - Scalar(1);
}

// Token-mean of -min(rho A, clip(rho, 1-eps, 1+eps) A) + beta k3, with
// rho = exp(policy - old) and the sequence advantage A on every token.
template <typename Scalar>
Scalar grpo_loss(const PolicyStep<Scalar>& step) {
  step.validate();
  const Array<Scalar> ratio = (step.policy_logp - step.old_logp).exp();
  const Array<Scalar> clipped =
      ratio.cwiseMax(Scalar(1) - step.clip_eps).cwiseMin(Scalar(1) + step.clip_eps);
  const Array<Scalar> surrogate =
      (ratio * step.advantage).cwiseMin(clipped * step.advantage);
  const Array<Scalar> per_token = -surrogate + step.kl_weight * kl_k3(step);
  return per_token.mean();
}

// d grpo_loss / d policy_logp. The clipped branch has zero surrogate
// gradient; at a tie the unclipped branch is taken.
template <typename Scalar>
Array<Scalar> grpo_loss_grad(const PolicyStep<Scalar>& step) {
  step.validate();
  const auto n = step.policy_logp.size();
  Array<Scalar> grad(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Scalar ratio = std::exp(step.policy_logp[t] - step.old_logp[t]);
    const Scalar clipped = std::clamp(ratio, Scalar(1) - step.clip_eps,
                                      Scalar(1) + step.clip_eps);
    const Scalar unclipped_term = ratio * step.advantage;
    const Scalar surrogate_grad =
        unclipped_term <= clipped * step.advantage ? -unclipped_term : Scalar(0);
    const Scalar kl_grad =
        step.kl_weight *
        (Scalar(1) - std::exp(step.ref_logp[t] - step.policy_logp[t]));
    grad[t] = (surrogate_grad + kl_grad) / static_cast<Scalar>(n);
  }
  return grad;
}

struct GradCheckReport {
  int steps = 0;
  int tokens = 0;
  double step_size = 0.0;
  double tolerance = 0.0;
  double max_relative_error = 0.0;
  int failures = 0;

  bool passed() const { return failures == 0; }
};

// Compares grpo_loss_grad with central differences on random steps.
GradCheckReport check_gradients(int steps, int tokens, std::uint64_t seed,
                                double step_size = 1e-5,
                                double tolerance = 1e-4);

nlohmann::json to_json(const GradCheckReport& report);

}  // namespace hotbias::grpo

#endif  // HOTBIAS_GRPO_H_
