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

#ifndef HOTBIAS_TESTS_TEST_UTIL_H_
#define HOTBIAS_TESTS_TEST_UTIL_H_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hotbias/decoder.h"
#include "hotbias/scorers.h"

namespace hotbias::testing {

// Textbook (m+1) x (n+1) Levenshtein table.
template <typename Seq>
std::size_t dp_edit_distance(const Seq& a, const Seq& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return d[a.size()][b.size()];
}

// Probability tables for a random TableScorer over `tokens` + EOS, defined
// for every prefix of length < max_len. Keys are prefixes.
struct RandomTable {
  std::vector<decode::Token> vocab;  // includes kEos
  std::map<std::vector<decode::Token>, std::map<decode::Token, double>> probs;
  int max_len = 0;

  double log_prob(const std::vector<decode::Token>& prefix,
                  const decode::Token& next) const {
    auto it = probs.find(prefix);
    if (it == probs.end()) {
      return next == decode::kEos ? 0.0
                                  : -std::numeric_limits<double>::infinity();
    }
    auto p = it->second.find(next);
    if (p == it->second.end()) return -std::numeric_limits<double>::infinity();
    return std::log(p->second);
  }
};

inline RandomTable random_table(std::mt19937_64& rng, int n_tokens, int max_len,
                                double zero_rate = 0.0) {
  RandomTable t;
  t.max_len = max_len;
  for (int i = 0; i < n_tokens; ++i) t.vocab.push_back(std::string(1, char('a' + i)));
  t.vocab.emplace_back(decode::kEos);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::function<void(std::vector<decode::Token>&)> fill =
      [&](std::vector<decode::Token>& prefix) {
        if (static_cast<int>(prefix.size()) >= max_len) return;
        std::map<decode::Token, double> dist;
        double total = 0.0;
        for (const auto& tok : t.vocab) {
          double w = u(rng) < zero_rate ? 0.0 : u(rng) + 1e-3;
          dist[tok] = w;
          total += w;
        }
        if (total == 0.0) {
          dist[decode::Token(decode::kEos)] = 1.0;
          total = 1.0;
        }
        for (auto& [tok, w] : dist) w /= total;
        for (auto it = dist.begin(); it != dist.end();) {
          it = it->second == 0.0 ? dist.erase(it) : std::next(it);
        }
        t.probs[prefix] = dist;
        for (const auto& tok : t.vocab) {
          if (tok == decode::kEos) continue;
          prefix.push_back(tok);
          fill(prefix);
          prefix.pop_back();
        }
      };
  std::vector<decode::Token> root;
  fill(root);
  return t;
}

inline decode::TableScorer make_scorer(const RandomTable& t,
                                       std::string_view audio_key = "utt") {
  decode::TableScorer scorer(t.vocab);
  for (const auto& [prefix, dist] : t.probs) scorer.set(audio_key, prefix, dist);
  return scorer;
}

struct Enumerated {
  std::vector<decode::Token> tokens;
  bool finished = false;
  double log_score = 0.0;
  double normalized = 0.0;
};

// Every sequence the decoder can return: EOS-terminated sequences of up to
// max_len steps and unfinished sequences of exactly max_len tokens.
inline std::vector<Enumerated> enumerate_sequences(const RandomTable& t,
                                                   double alpha) {
  std::vector<Enumerated> out;
  std::function<void(std::vector<decode::Token>&, double)> walk =
      [&](std::vector<decode::Token>& prefix, double score) {
        if (static_cast<int>(prefix.size()) == t.max_len) {
          out.push_back({prefix, false, score,
                         score / std::pow(static_cast<double>(t.max_len), alpha)});
          return;
        }
        for (const auto& tok : t.vocab) {
          const double lp = t.log_prob(prefix, tok);
          if (lp == -std::numeric_limits<double>::infinity()) continue;
          if (tok == decode::kEos) {
            const double steps = static_cast<double>(prefix.size() + 1);
            out.push_back({prefix, true, score + lp,
                           (score + lp) / std::pow(steps, alpha)});
          } else {
            prefix.push_back(tok);
            walk(prefix, score + lp);
            prefix.pop_back();
          }
        }
      };
  std::vector<decode::Token> root;
  walk(root, 0.0);
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hotbias_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace hotbias::testing

#endif  // HOTBIAS_TESTS_TEST_UTIL_H_
