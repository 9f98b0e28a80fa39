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

#include "hotbias/toy_data.h"

#include <array>
#include <cstdio>
#include <random>
#include <set>
#include <string_view>

#include "hotbias/textmetrics.h"

namespace hotbias::toy {

namespace {

constexpr std::array<std::string_view, 20> kOnsets{
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
    "s", "t", "v", "z", "ch", "sh", "tr", "pl", "br", "kr"};
constexpr std::array<std::string_view, 7> kVowels{"a", "e", "i", "o",
                                                  "u", "ai", "ou"};
constexpr std::array<std::string_view, 7> kCodas{"", "", "n", "r",
                                                 "s", "l", "x"};

struct Domain {
  std::string_view name;
  double share;
  std::vector<std::string_view> suffixes;
};

const std::vector<Domain>& domains() {
  static const std::vector<Domain> kDomains{
      {"media", 0.28, {"flix", "cast", "wave", "tube", "beat", "verse", "hub"}},
      {"medical", 0.28, {"mab", "zole", "cillin", "pril", "statin", "vir", "tide"}},
      {"finance", 0.16, {"coin", "pay", "fund", "bank"}},
      {"travel", 0.14, {"air", "port", "trail", "bay"}},
      {"tech", 0.14, {"soft", "net", "chip", "byte"}},
  };
  return kDomains;
}

constexpr std::array<std::string_view, 8> kMediaOne{
    "last night we watched {0} on the evening channel",
    "the new season of {0} starts next week",
    "can you play the latest episode of {0}",
    "everyone at work keeps talking about {0}",
    "i want to stream {0} on the big screen tonight",
    "the review of {0} was better than expected",
    "add {0} to my watch list please",
    "how many episodes of {0} are left",
};
constexpr std::array<std::string_view, 4> kMediaTwo{
    "my sister prefers {0} but i like {1} more",
    "is {0} made by the same studio as {1}",
    "we switched from {0} to {1} last month",
    "play {0} first and then {1} after dinner",
};
constexpr std::array<std::string_view, 8> kMedicalOne{
    "the doctor prescribed {0} twice a day",
    "please refill my prescription for {0}",
    "the patient had a mild reaction to {0}",
    "take {0} with food in the morning",
    "the pharmacy is out of {0} until friday",
    "she started a new course of {0} this week",
    "what is the usual dose of {0} for adults",
    "the nurse asked whether i still take {0}",
};
constexpr std::array<std::string_view, 4> kMedicalTwo{
    "is it safe to take {0} together with {1}",
    "the doctor replaced {0} with {1} last month",
    "compare the side effects of {0} and {1}",
    "he takes {0} in the morning and {1} at night",
};
constexpr std::array<std::string_view, 10> kGeneral{
    "please {0} the {1} {2}",
    "can you {0} the {1} for me {2}",
    "i need to {0} the {1} {2}",
    "remind me to {0} the {1} {2}",
    "we should {0} the {1} {2}",
    "do not forget to {0} the {1} {2}",
    "could you help me {0} the {1} {2}",
    "let us {0} the {1} {2}",
    "it is time to {0} the {1} {2}",
    "they want to {0} the {1} {2}",
};
constexpr std::array<std::string_view, 16> kVerbs{
    "clean",  "open", "close", "check", "move",  "paint", "fix",  "wash",
    "order",  "call", "carry", "count", "lock",  "water", "fold", "sort"};
constexpr std::array<std::string_view, 16> kNouns{
    "kitchen", "window",  "garden", "door",   "table", "letters",
    "car",     "plants",  "boxes",  "shelf",  "bills", "garage",
    "blanket", "bicycle", "fridge", "laundry"};
constexpr std::array<std::string_view, 12> kTimes{
    "today",          "tomorrow",      "this evening", "before lunch",
    "after work",     "on monday",     "right now",    "next weekend",
    "in the morning", "later tonight", "at noon",      "this afternoon"};
constexpr std::array<std::string_view, 6> kCarriers{
    "i heard about {0} yesterday",
    "do you know what {0} means",
    "please search for {0} online",
    "{0} was mentioned in the meeting",
    "write down {0} in the notes",
    "my friend recommended {0} to me",
};

std::string fill(std::string_view tmpl, const std::vector<std::string>& args) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 2 < tmpl.size() && tmpl[i + 2] == '}') {
      out += args.at(static_cast<std::size_t>(tmpl[i + 1] - '0'));
      i += 2;
    } else {
      out.push_back(tmpl[i]);
    }
  }
  return out;
}

template <typename Array>
std::string_view pick(const Array& a, std::mt19937_64& rng) {
  return a[uniform_index(rng, a.size())];
}

std::string pseudo_word(std::mt19937_64& rng, const Domain& domain) {
  const std::size_t syllables = 2 + uniform_index(rng, 2);
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += pick(kOnsets, rng);
    w += pick(kVowels, rng);
    if (s + 1 == syllables || unit_uniform(rng) < 0.3) w += pick(kCodas, rng);
  }
  if (unit_uniform(rng) < 0.6) w += pick(domain.suffixes, rng);
  return w;
}

// Words that appear in sentences; no hotword may be a substring of one.
std::vector<std::string> sentence_words() {
  std::set<std::string> words;
  auto add_all = [&](auto&& templates) {
    for (std::string_view t : templates) {
      for (auto& tok : textmetrics::tokenize(t)) words.insert(tok);
    }
  };
  add_all(kMediaOne);
  add_all(kMediaTwo);
  add_all(kMedicalOne);
  add_all(kMedicalTwo);
  add_all(kGeneral);
  add_all(kVerbs);
  add_all(kNouns);
  add_all(kTimes);
  add_all(kCarriers);
  return {words.begin(), words.end()};
}

}  // namespace

ToyDataset generate(const ToyOptions& options) {
  if (options.utterances_per_set < 1 || options.vocab_size < 10 ||
      options.carriers < 1 ||
      options.carriers > static_cast<int>(kCarriers.size())) {
    throw Error("toy: invalid options");
  }
  std::mt19937_64 rng(options.seed);
  ToyDataset data;
  const auto fillers = sentence_words();

  std::vector<std::string> accepted;
  std::map<std::string, std::vector<std::string>> by_domain;
  auto acceptable = [&](const std::string& w) {
    for (const auto& f : fillers) {
      if (f.find(w) != std::string::npos) return false;
    }
    for (const auto& a : accepted) {
      if (a.find(w) != std::string::npos || w.find(a) != std::string::npos) {
        return false;
      }
    }
    return true;
  };
  int id = 0;
  for (const auto& domain : domains()) {
    const int quota = static_cast<int>(domain.share * options.vocab_size + 0.5);
    auto& bucket = by_domain[std::string(domain.name)];
    for (int n = 0; n < quota;) {
      std::string w = pseudo_word(rng, domain);
      if (!acceptable(w)) continue;
      accepted.push_back(w);
      bucket.push_back(w);
      char buf[16];
      std::snprintf(buf, sizeof(buf), "hw%05d", ++id);
      data.vocab.add({buf, w, std::string(domain.name)});
      ++n;
    }
  }

  for (const auto& h : data.vocab.entries()) {
    std::vector<std::size_t> order(kCarriers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, rng);
    rada::SynthSpec spec;
    spec.hotword_id = h.id;
    spec.seed = rng();
    for (int c = 0; c < options.carriers; ++c) {
      spec.carriers.push_back(fill(kCarriers[order[static_cast<std::size_t>(c)]],
                                   {h.surface}));
    }
    data.specs[h.id] = std::move(spec);
  }

  auto make_keyword_set = [&](const std::string& name, const auto& one,
                              const auto& two) {
    const auto& pool = by_domain.at(name);
    auto& out = data.manifests[name];
    for (int i = 0; i < options.utterances_per_set; ++i) {
      pipeline::Utterance u;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s-%03d", name.c_str(), i + 1);
      u.id = buf;
      const bool pair = unit_uniform(rng) < 0.25;
      std::string a = pool[uniform_index(rng, pool.size())];
      if (pair) {
        std::string b;
        do {
          b = pool[uniform_index(rng, pool.size())];
        } while (b == a);
        u.text = fill(pick(two, rng), {a, b});
        u.keywords = {a, b};
      } else {
        u.text = fill(pick(one, rng), {a});
        u.keywords = {a};
      }
      u.audio_seed = rng();
      u.noise_level = 0.05 + 0.25 * unit_uniform(rng);
      u.validate();
      out.push_back(std::move(u));
    }
  };
  make_keyword_set("media", kMediaOne, kMediaTwo);
  make_keyword_set("medical", kMedicalOne, kMedicalTwo);

  auto& general = data.manifests["general"];
  for (int i = 0; i < options.utterances_per_set; ++i) {
    pipeline::Utterance u;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "general-%03d", i + 1);
    u.id = buf;
    u.text = fill(pick(kGeneral, rng),
                  {std::string(pick(kVerbs, rng)), std::string(pick(kNouns, rng)),
                   std::string(pick(kTimes, rng))});
    u.audio_seed = rng();
    u.noise_level = 0.05 + 0.25 * unit_uniform(rng);
    general.push_back(std::move(u));
  }
  return data;
}

void write(const ToyDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  data.vocab.save_tsv(dir / "vocab.tsv");
  rada::save_specs(dir / "specs.jsonl", data.specs);
  for (const auto& [name, utts] : data.manifests) {
    pipeline::save_manifest(dir / (name + ".jsonl"), utts);
  }
}

}  // namespace hotbias::toy
