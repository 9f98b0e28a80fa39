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

#include "hotbias/scorers.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hotbias/prompt.h"
#include "hotbias/textmetrics.h"

namespace hotbias::decode {

namespace {

Distribution to_log(const std::map<Token, double>& probs) {
  Distribution dist;
  dist.reserve(probs.size());
  for (const auto& [t, p] : probs) {
    if (p < 0.0) throw Error("negative probability for token '" + t + "'");
    if (p > 0.0) dist.push_back({t, std::log(p)});
  }
  return dist;
}

}  // namespace

TableScorer::TableScorer(std::vector<Token> vocab) : vocab_(std::move(vocab)) {
  if (std::find(vocab_.begin(), vocab_.end(), kEos) == vocab_.end()) {
    vocab_.emplace_back(kEos);
  }
}

std::string TableScorer::key(std::string_view audio_key,
                             std::string_view condition,
                             std::span<const Token> prefix) {
  std::string k(audio_key);
  k += '\x1f';
  k += condition;
  k += '\x1f';
  for (const auto& t : prefix) {
    k += t;
    k += '\x1e';
  }
  return k;
}

void TableScorer::set(std::string_view audio_key, std::span<const Token> prefix,
                      const std::map<Token, double>& probs,
                      std::string_view condition_hotword) {
  for (const auto& [t, p] : probs) {
    if (std::find(vocab_.begin(), vocab_.end(), t) == vocab_.end()) {
      throw Error("TableScorer: token '" + t + "' not in vocabulary");
    }
  }
  Distribution dist = to_log(probs);
  check_normalized(dist);
  table_[key(audio_key, condition_hotword, prefix)] = std::move(dist);
}

Distribution TableScorer::next_log_probs(std::string_view prompt,
                                         std::string_view audio_key,
                                         std::span<const Token> prefix) const {
  for (const auto& h : prompt::parse_hotwords(prompt)) {
    auto it = table_.find(key(audio_key, h, prefix));
    if (it != table_.end()) return it->second;
  }
  auto it = table_.find(key(audio_key, {}, prefix));
  if (it != table_.end()) return it->second;
  return {{Token(kEos), 0.0}};
}

EchoScorer::EchoScorer(std::span<const std::string> corpus) {
  for (const auto& text : corpus) {
    for (auto& t : textmetrics::tokenize(text)) vocab_.insert(std::move(t));
  }
  vocab_.emplace(kEos);
}

Distribution EchoScorer::next_log_probs(std::string_view,
                                        std::string_view audio_key,
                                        std::span<const Token> prefix) const {
  const auto tokens = textmetrics::tokenize(audio_key);
  if (prefix.size() < tokens.size()) return {{tokens[prefix.size()], 0.0}};
  return {{Token(kEos), 0.0}};
}

std::vector<Token> EchoScorer::vocab() const {
  return {vocab_.begin(), vocab_.end()};
}

NgramScorer::NgramScorer(std::span<const std::string> corpus, double add_k,
                         double hotword_boost)
    : add_k_(add_k), hotword_boost_(hotword_boost) {
  if (!(add_k > 0.0)) throw Error("NgramScorer: add_k must be positive");
  std::set<Token> vocab{Token(kEos)};
  for (const auto& text : corpus) {
    const auto tokens = textmetrics::tokenize(text);
    Token prev = "<s>";
    for (const auto& t : tokens) {
      vocab.insert(t);
      bigram_counts_[{prev, t}] += 1.0;
      context_counts_[prev] += 1.0;
      prev = t;
    }
    bigram_counts_[{prev, Token(kEos)}] += 1.0;
    context_counts_[prev] += 1.0;
  }
  vocab_.assign(vocab.begin(), vocab.end());
}

Distribution NgramScorer::next_log_probs(std::string_view prompt,
                                         std::string_view,
                                         std::span<const Token> prefix) const {
  const Token context = prefix.empty() ? Token("<s>") : prefix.back();
  std::set<Token> boosted;
  for (const auto& h : prompt::parse_hotwords(prompt)) {
    for (auto& t : textmetrics::tokenize(h)) boosted.insert(std::move(t));
  }
  auto ctx = context_counts_.find(context);
  const double denom = (ctx == context_counts_.end() ? 0.0 : ctx->second) +
                       add_k_ * static_cast<double>(vocab_.size());
  std::vector<double> logits(vocab_.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    auto it = bigram_counts_.find({context, vocab_[i]});
    const double count = it == bigram_counts_.end() ? 0.0 : it->second;
    logits[i] = std::log((count + add_k_) / denom);
    if (boosted.count(vocab_[i])) logits[i] += hotword_boost_;
    max_logit = std::max(max_logit, logits[i]);
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l - max_logit);
  const double log_z = max_logit + std::log(z);
  Distribution dist;
  dist.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    dist.push_back({vocab_[i], logits[i] - log_z});
  }
  return dist;
}

SimulatedAsrScorer::SimulatedAsrScorer(AcousticProfile profile,
                                       std::uint64_t seed)
    : profile_(profile), seed_(seed) {
  vocab_.emplace(kEos);
  vocab_.emplace(kUnk);
}

void SimulatedAsrScorer::add_utterance(std::string audio_key,
                                       std::vector<Slot> slots) {
  for (const auto& s : slots) {
    if (s.reference.empty()) throw Error("slot with empty reference token");
    vocab_.insert(s.reference);
    if (s.kind != SlotKind::kClean) {
      if (s.confusion.empty() || s.confusion == s.reference) {
        throw Error("slot '" + s.reference + "' needs a distinct confusion");
      }
      vocab_.insert(s.confusion);
    }
  }
  utterances_[std::move(audio_key)] = std::move(slots);
}

void SimulatedAsrScorer::add_hotwords(std::span<const std::string> surfaces) {
  for (const auto& s : surfaces) {
    vocab_.insert(s);
    hotword_tokens_[s] = textmetrics::tokenize(s);
  }
}

std::vector<Token> SimulatedAsrScorer::tokens_of(const std::string& hotword) const {
  auto it = hotword_tokens_.find(hotword);
  if (it != hotword_tokens_.end()) return it->second;
  return textmetrics::tokenize(hotword);
}

std::vector<Token> SimulatedAsrScorer::vocab() const {
  return {vocab_.begin(), vocab_.end()};
}

Distribution SimulatedAsrScorer::next_log_probs(
    std::string_view prompt, std::string_view audio_key,
    std::span<const Token> prefix) const {
  auto it = utterances_.find(std::string(audio_key));
  if (it == utterances_.end()) {
    throw Error("SimulatedAsrScorer: unknown audio key " + std::string(audio_key));
  }
  const auto& slots = it->second;
  const std::size_t pos = prefix.size();
  const AcousticProfile& p = profile_;

  std::map<Token, double> mass;
  if (pos >= slots.size()) {
    mass[Token(kEos)] += p.end_prob;
  } else {
    const Slot& slot = slots[pos];
    const auto hotwords = prompt::parse_hotwords(prompt);
    switch (slot.kind) {
      case SlotKind::kClean: {
        const std::string* pulled = nullptr;
        for (const auto& h : hotwords) {
          const auto tokens = tokens_of(h);
          const bool in_audio =
              std::any_of(tokens.begin(), tokens.end(), [&](const Token& t) {
                return std::any_of(slots.begin(), slots.end(),
                                   [&](const Slot& s) { return s.reference == t; });
              });
          if (in_audio) continue;
          const std::uint64_t draw =
              hash_combine(hash_combine(seed_, hash64(audio_key)),
                           hash_combine(hash64(h), pos));
          if (static_cast<double>(draw >> 11) * 0x1.0p-53 < p.hallucination_rate) {
            pulled = &h;
            break;
          }
        }
        if (pulled) {
          mass[slot.reference] += p.hallucination_correct;
          mass[*pulled] += p.hallucination_prob;
        } else {
          mass[slot.reference] += p.clean_correct;
        }
        break;
      }
      case SlotKind::kHardKeyword: {
        const bool boosted =
            std::any_of(hotwords.begin(), hotwords.end(), [&](const std::string& h) {
              const auto tokens = tokens_of(h);
              return std::find(tokens.begin(), tokens.end(), slot.reference) !=
                     tokens.end();
            });
        mass[slot.reference] += boosted ? p.boosted_correct : p.hard_correct;
        mass[slot.confusion] += boosted ? p.boosted_confusion : p.hard_confusion;
        break;
      }
      case SlotKind::kNoisy:
        mass[slot.reference] += p.noisy_correct;
        mass[slot.confusion] += p.noisy_confusion;
        break;
    }
    mass[Token(kEos)] += p.early_end;
  }
  double used = 0.0;
  for (const auto& [t, m] : mass) used += m;
  if (used > 1.0 + 1e-12) throw Error("AcousticProfile probabilities exceed 1");
  if (used < 1.0) mass[Token(kUnk)] += 1.0 - used;
  return to_log(mass);
}

}  // namespace hotbias::decode
