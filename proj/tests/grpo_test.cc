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

#include "hotbias/grpo.h"
#include "test_util.h"

using namespace hotbias;
using namespace hotbias::grpo;

namespace {

std::string random_text(std::mt19937_64& rng, int words) {
  static const char* kWords[] = {"qwen", "tongyi", "a", "b", "model", "cat", "qwenx"};
  std::string s;
  for (int i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += kWords[rng() % 7];
  }
  return s;
}

// Per-token loss written out term by term in long double.
long double reference_loss(const PolicyStep<double>& s) {
  long double total = 0;
  for (Eigen::Index t = 0; t < s.policy_logp.size(); ++t) {
    const long double rho = std::exp(static_cast<long double>(s.policy_logp[t]) - s.old_logp[t]);
    long double clipped = rho;
    if (clipped < 1 - s.clip_eps) clipped = 1 - s.clip_eps;
    if (clipped > 1 + s.clip_eps) clipped = 1 + s.clip_eps;
    const long double a = s.advantage;
    const long double surrogate = std::min(rho * a, clipped * a);
    const long double d = static_cast<long double>(s.ref_logp[t]) - s.policy_logp[t];
    total += -surrogate + s.kl_weight * (std::exp(d) - d - 1);
  }
  return total / s.policy_logp.size();
}

PolicyStep<double> random_step(std::mt19937_64& rng, int tokens) {
  std::uniform_real_distribution<double> lp(-5.0, -0.01), drift(-0.5, 0.5), adv(-3, 3);
  PolicyStep<double> s;
  s.old_logp.resize(tokens);
  s.policy_logp.resize(tokens);
  s.ref_logp.resize(tokens);
  for (int t = 0; t < tokens; ++t) {
    s.old_logp[t] = lp(rng);
    s.policy_logp[t] = s.old_logp[t] + drift(rng);
    s.ref_logp[t] = s.old_logp[t] + drift(rng);
  }
  s.advantage = adv(rng);
  return s;
}

}  // namespace

TEST_CASE("match reward truth table") {
  const std::vector<std::string> qwen{"qwen"};
  CHECK(match_reward("we use qwen", "qwen is good", qwen).match_reward == 1.0);
  CHECK(match_reward("hello", "world", qwen).match_reward == 1.0);
  CHECK(match_reward("we use qwen", "world", qwen).match_reward == 0.0);
  CHECK(match_reward("hello", "qwen", qwen).match_reward == 0.0);
  const std::vector<std::string> ab{"a", "b"};
  const auto r = match_reward("x a", "x b", ab);
  CHECK(r.match_reward == 0.0);
  CHECK(r.per_candidate == std::vector<std::pair<std::string, int>>{{"a", 0}, {"b", 0}});
  CHECK(match_reward("x", "y", std::vector<std::string>{}).match_reward == 1.0);
  CHECK(match_reward("QWEN", "qwen", qwen).match_reward == 1.0);
}

TEST_CASE("match reward equals the indicator mean") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string out = random_text(rng, 1 + rng() % 6);
    const std::string ref = random_text(rng, 1 + rng() % 6);
    std::vector<std::string> cands;
    for (int i = 0, n = 1 + rng() % 4; i < n; ++i) cands.push_back(random_text(rng, 1));
    double sum = 0;
    for (const auto& c : cands) {
      sum += (out.find(c) != std::string::npos) == (ref.find(c) != std::string::npos);
    }
    CHECK(match_reward(out, ref, cands).match_reward == doctest::Approx(sum / cands.size()));
  }
}

TEST_CASE("wer reward") {
  using textmetrics::tokenize;
  CHECK(wer_reward(tokenize("a b c"), tokenize("a b c")) == 1.0);
  CHECK(wer_reward(tokenize("a b c"), tokenize("a x c")) == doctest::Approx(2.0 / 3.0));
  CHECK(wer_reward(tokenize("a b"), tokenize("x y z w")) == 0.0);
  CHECK_THROWS_AS(wer_reward({}, tokenize("a")), Error);

  std::mt19937_64 rng(62);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto ref = tokenize(random_text(rng, 1 + rng() % 8));
    const auto out = tokenize(random_text(rng, rng() % 9));
    const double w = static_cast<double>(testing::dp_edit_distance(ref, out)) /
                     static_cast<double>(ref.size());
    const double got = wer_reward(ref, out);
    if (w <= 1.0) {
      CHECK(std::abs(got - (1.0 - w)) <= 1e-12);
      ++checked;
    } else {
      CHECK(got == 0.0);
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("score_response composition") {
  const std::vector<std::string> cands{"qwen", "zz"};
  const auto r = score_response("we use qwen", "we use qwen", cands, {0.3, 2.0});
  CHECK(r.total == 2.3);
  const auto s = score_response("we qwen", "we use qwen", cands);
  CHECK(s.total == s.match_reward + s.wer_reward);
  const auto j = to_json(s);
  CHECK(j.at("per_candidate").at("qwen") == 1);
}

TEST_CASE("group advantages") {
  CHECK(group_advantages(std::vector<double>(6, 1.0)) == std::vector<double>(6, 0.0));
  const auto two = group_advantages(std::vector<double>{0.0, 2.0});
  CHECK(two[0] == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(two[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), Error);

  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(6);
    for (auto& x : r) x = u(rng);
    const auto a = group_advantages(r);
    double mean = 0, var = 0;
    for (double x : a) mean += x;
    mean /= 6;
    for (double x : a) var += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var / 6) - 1.0) < 1e-6);

    auto shifted = r;
    for (auto& x : shifted) x += 5.0;
    const auto b = group_advantages(shifted);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
    auto scaled = r;
    for (auto& x : scaled) x *= 3.5;
    const auto c = group_advantages(scaled);
    CHECK(std::max_element(a.begin(), a.end()) - a.begin() ==
          std::max_element(c.begin(), c.end()) - c.begin());
  }
}

TEST_CASE("loss examples and the long double oracle") {
  PolicyStep<double> s;
  s.policy_logp = s.old_logp = s.ref_logp = Array<double>::Constant(5, -1.2);
  s.advantage = 0.0;
  CHECK(grpo_loss(s) == 0.0);
  s.advantage = 1.0;
  CHECK(grpo_loss(s) == -1.0);

  std::mt19937_64 rng(64);
  for (int trial = 0; trial < 300; ++trial) {
    const auto step = random_step(rng, 1 + rng() % 10);
    CHECK(std::abs(grpo_loss(step) - static_cast<double>(reference_loss(step))) < 1e-12);
    CHECK((kl_k3(step) >= 0.0).all());
  }
  auto bad = random_step(rng, 4);
  bad.ref_logp.resize(3);
  CHECK_THROWS_AS(grpo_loss(bad), Error);
  bad = random_step(rng, 4);
  bad.policy_logp[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(grpo_loss(bad), Error);
}

TEST_CASE("clipping is inactive inside the trust region") {
  std::mt19937_64 rng(65);
  std::uniform_real_distribution<double> inside(-0.15, 0.15);
  for (int trial = 0; trial < 200; ++trial) {
    auto step = random_step(rng, 8);
    for (int t = 0; t < 8; ++t) step.policy_logp[t] = step.old_logp[t] + inside(rng);
    auto wide = step;
    wide.clip_eps = 1e6;
    CHECK(grpo_loss(step) == grpo_loss(wide));
  }
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(66);
  const double h = 1e-5;
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto step = random_step(rng, 8);
    const auto grad = grpo_loss_grad(step);
    for (int t = 0; t < 8; ++t) {
      const double lr = step.policy_logp[t] - step.old_logp[t];
      // Skip the measure-zero neighbourhood of the clip kinks.
      if (std::abs(lr - std::log(1.2)) < 10 * h || std::abs(lr - std::log(0.8)) < 10 * h) continue;
      auto plus = step, minus = step;
      plus.policy_logp[t] += h;
      minus.policy_logp[t] -= h;
      const double fd = static_cast<double>((reference_loss(plus) - reference_loss(minus)) / (2 * h));
      const double scale = std::max(std::abs(fd), std::abs(grad[t]));
      CHECK(std::abs(fd - grad[t]) <= 1e-4 * scale);
      ++compared;
    }
  }
  CHECK(compared >= 790);

  const auto report = check_gradients(100, 8, 5);
  CHECK(report.passed());
  CHECK(report.max_relative_error < 1e-4);
}
