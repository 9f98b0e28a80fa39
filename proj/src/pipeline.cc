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

#include "hotbias/pipeline.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace hotbias::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCharsPerFrame = 4;

template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

double unit_hash(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void Utterance::validate() const {
  if (id.empty()) throw Error("utterance with empty id");
  if (textmetrics::normalize(text).empty()) {
    throw Error("utterance " + id + ": empty text");
  }
  if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
    throw Error("utterance " + id + ": noise_level must be finite and >= 0");
  }
  textmetrics::KeywordAnnotation{id, keywords}.validate();
  for (const auto& kw : keywords) {
    if (!textmetrics::contains(text, kw)) {
      throw Error("utterance " + id + ": keyword '" + kw + "' not in text");
    }
  }
}

json to_json(const Utterance& utt) {
  return {{"id", utt.id},
          {"text", utt.text},
          {"keywords", utt.keywords},
          {"audio_seed", utt.audio_seed},
          {"noise_level", utt.noise_level}};
}

Utterance utterance_from_json(const json& j) {
  Utterance u;
  u.id = j.at("id").get<std::string>();
  u.text = j.at("text").get<std::string>();
  u.keywords = j.value("keywords", std::vector<std::string>{});
  u.audio_seed = j.value("audio_seed", std::uint64_t{0});
  u.noise_level = j.value("noise_level", 0.0);
  u.validate();
  return u;
}

std::vector<Utterance> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  std::vector<Utterance> out;
  std::unordered_set<std::string> ids;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(utterance_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " +
                  e.what());
    }
    if (!ids.insert(out.back().id).second) {
      throw Error(path.string() + ": duplicate utterance id " + out.back().id);
    }
  }
  if (out.empty()) throw Error("manifest " + path.string() + " is empty");
  return out;
}

void save_manifest(const fs::path& path, std::span<const Utterance> utterances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  for (const auto& u : utterances) out << to_json(u).dump() << '\n';
}

embed::FrameMatrix synth_audio_proxy(const Utterance& utt,
                                     const embed::TextEncoder& encoder) {
  const embed::Embedding clean = encoder.embed(utt.text);
  const auto chars = textmetrics::codepoints(textmetrics::normalize(utt.text));
  const auto count = std::max<std::size_t>(
      1, (chars.size() + kCharsPerFrame - 1) / kCharsPerFrame);
  embed::FrameMatrix fm;
  fm.frame_rate_hz = embed::kDefaultFrameRate;
  fm.frames = clean.replicate(1, static_cast<Eigen::Index>(count));
  if (utt.noise_level > 0.0) {
    std::mt19937_64 rng(utt.audio_seed);
    const double sigma =
        utt.noise_level / std::sqrt(static_cast<double>(clean.size()));
    for (Eigen::Index c = 0; c < fm.frames.cols(); ++c) {
      for (Eigen::Index r = 0; r < fm.frames.rows(); ++r) {
        fm.frames(r, c) += static_cast<float>(sigma * standard_normal(rng));
      }
    }
  }
  return fm;
}

embed::Embedding audio_query(const Utterance& utt,
                             const embed::TextEncoder& encoder,
                             int frame_subsample) {
  return embed::embed_audio(
      embed::subsample_frames(synth_audio_proxy(utt, encoder), frame_subsample));
}

std::map<int, double> eval_retrieval(std::span<const Utterance> manifest,
                                     const retrieval::HotwordIndex& index,
                                     const embed::TextEncoder& encoder,
                                     std::span<const int> k_values,
                                     int frame_subsample, int threads) {
  if (manifest.empty()) throw Error("eval_retrieval: empty manifest");
  if (k_values.empty()) throw Error("eval_retrieval: no k values");
  if (encoder.dimension() != index.dimension()) {
    throw Error("eval_retrieval: encoder dimension " +
                std::to_string(encoder.dimension()) + " != index dimension " +
                std::to_string(index.dimension()));
  }
  for (const auto& u : manifest) {
    if (u.keywords.empty()) {
      throw Error("eval_retrieval: utterance " + u.id + " has no keywords");
    }
  }
  const int k_max = *std::max_element(k_values.begin(), k_values.end());
  // hits[u][i]: keywords of utterance u recalled at k_values[i].
  std::vector<std::vector<std::size_t>> hits(manifest.size());
  parallel_for(manifest.size(), threads, [&](std::size_t u) {
    const Utterance& utt = manifest[u];
    const auto result = index.query_topk(
        audio_query(utt, encoder, frame_subsample), static_cast<std::size_t>(k_max));
    const auto surfaces = result.surfaces();
    hits[u].assign(k_values.size(), 0);
    for (std::size_t i = 0; i < k_values.size(); ++i) {
      const std::size_t k =
          std::min<std::size_t>(static_cast<std::size_t>(k_values[i]),
                                surfaces.size());
      const std::span<const std::string> top(surfaces.data(), k);
      for (const auto& kw : utt.keywords) {
        if (textmetrics::is_recalled(kw, top)) ++hits[u][i];
      }
    }
  });
  std::size_t total = 0;
  for (const auto& u : manifest) total += u.keywords.size();
  std::map<int, double> recall;
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    std::size_t sum = 0;
    for (const auto& h : hits) sum += h[i];
    recall[k_values[i]] =
        100.0 * static_cast<double>(sum) / static_cast<double>(total);
  }
  return recall;
}

json to_json(const DecodeRecord& record) {
  return {{"utterance_id", record.utterance_id},
          {"hypothesis", record.hypothesis.text()},
          {"source", std::string(decode::to_string(record.hypothesis.source))},
          {"score", record.score},
          {"prompt_hotwords", record.prompt_hotwords}};
}

DecodeRecord decode_utterance(const Utterance& utt,
                              const retrieval::HotwordIndex& index,
                              const embed::TextEncoder& encoder,
                              const decode::TokenScorer& scorer, int k,
                              const AsrEvalConfig& cfg) {
  if (k < 0) throw Error("decode: k must be >= 0");
  DecodeRecord rec;
  rec.utterance_id = utt.id;
  const double alpha = cfg.beam.length_penalty;
  const std::string free_prompt = prompt::build_prompt(
      std::span<const std::string>(), cfg.prompt_template).rendered;
  if (k == 0) {
    auto hyps = decode::beam_search(scorer, free_prompt, utt.id, cfg.beam,
                                    decode::Source::kContextFree);
    rec.hypothesis = std::move(hyps.front());
    rec.score = rec.hypothesis.normalized_score(alpha);
    return rec;
  }
  const auto result = index.query_topk(
      audio_query(utt, encoder, cfg.frame_subsample), static_cast<std::size_t>(k));
  const auto bias = prompt::build_prompt(result, cfg.prompt_template);
  rec.prompt_hotwords = bias.hotwords;
  if (cfg.joint) {
    auto joint = decode::joint_beam_search(scorer, free_prompt, bias.rendered,
                                           utt.id, cfg.beam);
    rec.hypothesis = std::move(joint.best);
    rec.score = joint.best_score;
  } else {
    auto hyps = decode::beam_search(scorer, bias.rendered, utt.id, cfg.beam,
                                    decode::Source::kBiased);
    rec.hypothesis = std::move(hyps.front());
    rec.score = rec.hypothesis.normalized_score(alpha);
  }
  return rec;
}

const AsrArm& AsrEvalResult::arm(int k) const {
  for (const auto& a : arms) {
    if (a.k == k) return a;
  }
  throw Error("no ASR arm with k = " + std::to_string(k));
}

json to_json(const AsrEvalResult& result) {
  json arms = json::array();
  for (const auto& a : result.arms) {
    arms.push_back({{"name", a.name},
                    {"k", a.k},
                    {"report", textmetrics::to_json(a.report)},
                    {"mean_reward", a.mean_reward}});
  }
  return {{"set", result.set}, {"arms", std::move(arms)}};
}

AsrEvalResult eval_asr(std::string set, std::span<const Utterance> manifest,
                       const retrieval::HotwordIndex& index,
                       const embed::TextEncoder& encoder,
                       const decode::TokenScorer& scorer,
                       const AsrEvalConfig& cfg) {
  if (manifest.empty()) throw Error("eval_asr: empty manifest");
  if (encoder.dimension() != index.dimension()) {
    throw Error("eval_asr: encoder dimension " +
                std::to_string(encoder.dimension()) + " != index dimension " +
                std::to_string(index.dimension()));
  }
  cfg.beam.validate();
  {
    const auto v = scorer.vocab();
    const std::unordered_set<std::string> emit(v.begin(), v.end());
    for (const auto& h : index.entries()) {
      if (emit.count(h.surface)) continue;
      const auto tokens = textmetrics::tokenize(h.surface);
      const bool covered = std::all_of(
          tokens.begin(), tokens.end(),
          [&](const std::string& t) { return emit.count(t) > 0; });
      if (!covered) {
        throw Error("eval_asr: scorer cannot emit hotword " + h.id + " ('" +
                    h.surface + "')");
      }
    }
  }

  std::vector<int> ks{0};
  for (int k : cfg.k_values) {
    if (k <= 0) throw Error("eval_asr: k values must be positive");
    ks.push_back(k);
  }
  AsrEvalConfig inner = cfg;
  inner.beam.threads = 1;

  AsrEvalResult out;
  out.set = std::move(set);
  for (int k : ks) {
    std::vector<DecodeRecord> records(manifest.size());
    parallel_for(manifest.size(), cfg.threads, [&](std::size_t i) {
      records[i] = decode_utterance(manifest[i], index, encoder, scorer, k, inner);
    });
    textmetrics::EvalCounts counts;
    std::size_t edits = 0, ref_tokens = 0;
    double reward_sum = 0.0;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      const Utterance& utt = manifest[i];
      const std::string hyp = records[i].hypothesis.text();
      const auto ref_seq = textmetrics::tokenize(utt.text);
      const auto hyp_seq = textmetrics::tokenize(hyp);
      edits += textmetrics::edit_distance(ref_seq, hyp_seq);
      ref_tokens += ref_seq.size();
      ++counts.utterances;
      counts.keywords += utt.keywords.size();
      counts.keyword_errors +=
          textmetrics::keyword_error_count(utt.annotation(), hyp);
      if (ref_seq == hyp_seq) ++counts.correct_sentences;
      reward_sum += grpo::score_response(hyp, utt.text,
                                         records[i].prompt_hotwords,
                                         cfg.reward_weights)
                        .total;
    }
    AsrArm arm;
    arm.k = k;
    arm.name = k == 0 ? "base" : "top" + std::to_string(k);
    arm.report = textmetrics::EvalReport::from_counts(counts, edits, ref_tokens);
    arm.mean_reward = reward_sum / static_cast<double>(manifest.size());
    out.arms.push_back(std::move(arm));
  }
  return out;
}

std::string confusion_of(std::string_view token, std::uint64_t seed) {
  auto cps = textmetrics::codepoints(token);
  if (cps.empty()) throw Error("confusion_of: empty token");
  const std::uint64_t h = hash_combine(seed, hash64(token));
  const std::size_t pos = h % cps.size();
  std::string& c = cps[pos];
  if (c.size() == 1 && c[0] >= 'a' && c[0] <= 'z') {
    const int shift = 1 + static_cast<int>((h >> 32) % 25);
    c[0] = static_cast<char>('a' + (c[0] - 'a' + shift) % 26);
  } else {
    c += "'";
  }
  std::string out;
  for (const auto& cp : cps) out += cp;
  return out;
}

std::unique_ptr<decode::SimulatedAsrScorer> make_simulated_scorer(
    std::span<const std::vector<Utterance>> manifests,
    const retrieval::Vocabulary& vocab, const ScorerSpec& spec,
    std::uint64_t seed) {
  auto scorer = std::make_unique<decode::SimulatedAsrScorer>(spec.profile, seed);
  std::unordered_set<std::string> seen;
  for (const auto& manifest : manifests) {
    for (const auto& utt : manifest) {
      if (!seen.insert(utt.id).second) {
        throw Error("make_simulated_scorer: duplicate utterance id " + utt.id);
      }
      std::set<std::string> keyword_tokens;
      for (const auto& kw : utt.keywords) {
        for (auto& t : textmetrics::tokenize(kw)) keyword_tokens.insert(t);
      }
      const auto tokens = textmetrics::tokenize(utt.text);
      std::vector<decode::Slot> slots;
      slots.reserve(tokens.size());
      const std::uint64_t base = hash_combine(seed, hash64(utt.id));
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        decode::Slot slot;
        slot.reference = tokens[i];
        const double draw = unit_hash(hash_combine(base, i));
        const bool is_keyword = keyword_tokens.count(tokens[i]) > 0;
        if (is_keyword && draw < spec.hard_keyword_rate) {
          slot.kind = decode::SlotKind::kHardKeyword;
        } else if (!is_keyword && draw < spec.noisy_rate) {
          slot.kind = decode::SlotKind::kNoisy;
        }
        if (slot.kind != decode::SlotKind::kClean) {
          slot.confusion = confusion_of(tokens[i], seed);
        }
        slots.push_back(std::move(slot));
      }
      scorer->add_utterance(utt.id, std::move(slots));
    }
  }
  std::vector<std::string> surfaces;
  surfaces.reserve(vocab.size());
  for (const auto& h : vocab.entries()) surfaces.push_back(h.surface);
  scorer->add_hotwords(surfaces);
  return scorer;
}

// ---------------------------------------------------------------------------
// Configuration

fs::path RunConfig::resolve(const fs::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return (base_dir / p).lexically_normal();
}

void RunConfig::validate() const {
  if (vocab.empty()) throw Error("config: 'vocab' is required");
  if (manifests.empty()) throw Error("config: 'manifests' is empty");
  if (k_values.empty()) throw Error("config: 'k_values' is empty");
  for (std::size_t i = 0; i < k_values.size(); ++i) {
    if (k_values[i] <= 0 || (i && k_values[i] <= k_values[i - 1])) {
      throw Error("config: k_values must be positive and strictly increasing");
    }
  }
  if (operating_k < 0) throw Error("config: operating_k must be >= 0");
  if (dimension < 1) throw Error("config: encoder.dim must be >= 1");
  if (frame_subsample < 1) throw Error("config: frame_subsample must be >= 1");
  for (const auto& s : retrieval_sets) {
    if (!manifests.count(s)) {
      throw Error("config: retrieval set '" + s + "' is not a manifest");
    }
  }
  if (rada_enabled) {
    static const std::set<std::string> kOracles{"echo", "null", "dropout",
                                                "lookup"};
    if (!kOracles.count(rada_oracle)) {
      throw Error("config: unknown rada.oracle '" + rada_oracle + "'");
    }
    if (specs.empty()) throw Error("config: rada needs 'specs'");
    if (rada_oracle == "lookup" && rada_lookup.empty()) {
      throw Error("config: rada.oracle 'lookup' needs rada.lookup");
    }
    if (!(rada_min_correct_fraction > 0.0 && rada_min_correct_fraction <= 1.0)) {
      throw Error("config: rada.min_correct_fraction must be in (0, 1]");
    }
  }
  if (fuzzy_enabled && fuzzy_variants < 1) {
    throw Error("config: fuzzy.variants must be >= 1");
  }
  beam.validate();
  if (threads < 1) throw Error("config: threads must be >= 1");
}

namespace {

const std::set<std::string> kTopKeys{
    "seed",   "vocab",  "specs",   "manifests",   "retrieval_sets",
    "k_values", "operating_k", "encoder", "rada", "fuzzy", "beam",
    "joint",  "scorer", "reward_weights", "prompt", "threads", "report_dir"};

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw Error("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw Error("config: unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  check_keys(j, kTopKeys, "top level");
  RunConfig c;
  c.base_dir = base_dir;
  c.seed = j.value("seed", std::uint64_t{0});
  c.vocab = j.value("vocab", std::string());
  c.specs = j.value("specs", std::string());
  if (j.contains("manifests")) {
    for (const auto& [name, path] : j.at("manifests").items()) {
      c.manifests[name] = path.get<std::string>();
    }
  }
  c.retrieval_sets = j.value("retrieval_sets", std::vector<std::string>{});
  c.k_values = j.value("k_values", c.k_values);
  c.operating_k = j.value("operating_k", c.operating_k);
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    check_keys(e, {"dim", "frame_subsample"}, "encoder");
    c.dimension = e.value("dim", c.dimension);
    c.frame_subsample = e.value("frame_subsample", c.frame_subsample);
  }
  if (j.contains("rada")) {
    const auto& r = j.at("rada");
    check_keys(r,
               {"enabled", "oracle", "dropout_rate", "lookup",
                "min_correct_fraction", "keep_annotated"},
               "rada");
    c.rada_enabled = r.value("enabled", c.rada_enabled);
    c.rada_oracle = r.value("oracle", c.rada_oracle);
    c.rada_dropout_rate = r.value("dropout_rate", c.rada_dropout_rate);
    c.rada_lookup = r.value("lookup", std::string());
    c.rada_min_correct_fraction =
        r.value("min_correct_fraction", c.rada_min_correct_fraction);
    c.rada_keep_annotated = r.value("keep_annotated", c.rada_keep_annotated);
  }
  if (j.contains("fuzzy")) {
    const auto& f = j.at("fuzzy");
    check_keys(f, {"enabled", "variants"}, "fuzzy");
    c.fuzzy_enabled = f.value("enabled", c.fuzzy_enabled);
    c.fuzzy_variants = f.value("variants", c.fuzzy_variants);
  }
  if (j.contains("beam")) {
    const auto& b = j.at("beam");
    check_keys(b, {"width", "max_len", "length_penalty"}, "beam");
    c.beam.beam_width = b.value("width", c.beam.beam_width);
    c.beam.max_len = b.value("max_len", c.beam.max_len);
    c.beam.length_penalty = b.value("length_penalty", c.beam.length_penalty);
  }
  c.joint = j.value("joint", c.joint);
  if (j.contains("scorer")) {
    const auto& s = j.at("scorer");
    check_keys(s,
               {"hard_keyword_rate", "noisy_rate", "clean_correct",
                "hard_correct", "hard_confusion", "boosted_correct",
                "boosted_confusion", "noisy_correct", "noisy_confusion",
                "hallucination_rate", "hallucination_prob",
                "hallucination_correct", "early_end", "end_prob"},
               "scorer");
    auto& p = c.scorer.profile;
    c.scorer.hard_keyword_rate =
        s.value("hard_keyword_rate", c.scorer.hard_keyword_rate);
    c.scorer.noisy_rate = s.value("noisy_rate", c.scorer.noisy_rate);
    p.clean_correct = s.value("clean_correct", p.clean_correct);
    p.hard_correct = s.value("hard_correct", p.hard_correct);
    p.hard_confusion = s.value("hard_confusion", p.hard_confusion);
    p.boosted_correct = s.value("boosted_correct", p.boosted_correct);
    p.boosted_confusion = s.value("boosted_confusion", p.boosted_confusion);
    p.noisy_correct = s.value("noisy_correct", p.noisy_correct);
    p.noisy_confusion = s.value("noisy_confusion", p.noisy_confusion);
    p.hallucination_rate = s.value("hallucination_rate", p.hallucination_rate);
    p.hallucination_prob = s.value("hallucination_prob", p.hallucination_prob);
    p.hallucination_correct =
        s.value("hallucination_correct", p.hallucination_correct);
    p.early_end = s.value("early_end", p.early_end);
    p.end_prob = s.value("end_prob", p.end_prob);
  }
  if (j.contains("reward_weights")) {
    const auto& w = j.at("reward_weights");
    check_keys(w, {"match", "wer"}, "reward_weights");
    c.reward_weights.match = w.value("match", c.reward_weights.match);
    c.reward_weights.wer = w.value("wer", c.reward_weights.wer);
  }
  if (j.contains("prompt")) {
    const auto& p = j.at("prompt");
    check_keys(p, {"instruction", "bias_lead"}, "prompt");
    c.prompt_template.instruction =
        p.value("instruction", c.prompt_template.instruction);
    c.prompt_template.bias_lead = p.value("bias_lead", c.prompt_template.bias_lead);
  }
  c.threads = j.value("threads", c.threads);
  c.report_dir = j.value("report_dir", c.report_dir.string());
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json RunConfig::echo() const {
  json manifests_j = json::object();
  for (const auto& [name, path] : manifests) manifests_j[name] = path.generic_string();
  const auto& p = scorer.profile;
  return {
      {"seed", seed},
      {"vocab", vocab.generic_string()},
      {"specs", specs.generic_string()},
      {"manifests", manifests_j},
      {"retrieval_sets", retrieval_sets},
      {"k_values", k_values},
      {"operating_k", operating_k},
      {"encoder", {{"dim", dimension}, {"frame_subsample", frame_subsample}}},
      {"rada",
       {{"enabled", rada_enabled},
        {"oracle", rada_oracle},
        {"dropout_rate", rada_dropout_rate},
        {"lookup", rada_lookup.generic_string()},
        {"min_correct_fraction", rada_min_correct_fraction},
        {"keep_annotated", rada_keep_annotated}}},
      {"fuzzy", {{"enabled", fuzzy_enabled}, {"variants", fuzzy_variants}}},
      {"beam",
       {{"width", beam.beam_width},
        {"max_len", beam.max_len},
        {"length_penalty", beam.length_penalty}}},
      {"joint", joint},
      {"scorer",
       {{"hard_keyword_rate", scorer.hard_keyword_rate},
        {"noisy_rate", scorer.noisy_rate},
        {"clean_correct", p.clean_correct},
        {"hard_correct", p.hard_correct},
        {"hard_confusion", p.hard_confusion},
        {"boosted_correct", p.boosted_correct},
        {"boosted_confusion", p.boosted_confusion},
        {"noisy_correct", p.noisy_correct},
        {"noisy_confusion", p.noisy_confusion},
        {"hallucination_rate", p.hallucination_rate},
        {"hallucination_prob", p.hallucination_prob},
        {"hallucination_correct", p.hallucination_correct},
        {"early_end", p.early_end},
        {"end_prob", p.end_prob}}},
      {"reward_weights",
       {{"match", reward_weights.match}, {"wer", reward_weights.wer}}},
      {"prompt",
       {{"instruction", prompt_template.instruction},
        {"bias_lead", prompt_template.bias_lead}}},
      {"threads", threads},
  };
}

std::unique_ptr<rada::AsrOracle> make_oracle(const RunConfig& cfg) {
  if (cfg.rada_oracle == "echo") return std::make_unique<rada::EchoOracle>();
  if (cfg.rada_oracle == "null") return std::make_unique<rada::NullOracle>();
  if (cfg.rada_oracle == "dropout") {
    return std::make_unique<rada::CharDropoutOracle>(cfg.rada_dropout_rate,
                                                     cfg.seed);
  }
  if (cfg.rada_oracle == "lookup") {
    return std::make_unique<rada::LookupOracle>(
        rada::LookupOracle::load(cfg.resolve(cfg.rada_lookup)));
  }
  throw Error("unknown oracle '" + cfg.rada_oracle + "'");
}

// ---------------------------------------------------------------------------
// Runner

const embed::TextEncoder& Workspace::index_encoder() const {
  if (fuzzy_encoder) return *fuzzy_encoder;
  return *encoder;
}

namespace {

retrieval::HotwordIndex build_or_empty(const retrieval::Vocabulary& vocab,
                                       const embed::TextEncoder& encoder) {
  if (vocab.empty()) {
    return retrieval::HotwordIndex::empty(encoder.dimension(),
                                          encoder.fingerprint());
  }
  return retrieval::HotwordIndex::build(vocab, encoder);
}

std::vector<std::string> retrieval_sets(const RunConfig& cfg,
                                        const Workspace& ws) {
  if (!cfg.retrieval_sets.empty()) return cfg.retrieval_sets;
  std::vector<std::string> out;
  for (const auto& [name, utts] : ws.manifests) {
    const bool all_keyworded =
        std::all_of(utts.begin(), utts.end(),
                    [](const Utterance& u) { return !u.keywords.empty(); });
    if (all_keyworded) out.push_back(name);
  }
  return out;
}

}  // namespace

Workspace prepare(const RunConfig& cfg) {
  Workspace ws;
  in_stage("load", [&] {
    ws.vocab = retrieval::Vocabulary::load(cfg.resolve(cfg.vocab));
    for (const auto& [name, path] : cfg.manifests) {
      ws.manifests[name] = load_manifest(cfg.resolve(path));
    }
  });
  ws.final_vocab = ws.vocab;
  if (cfg.rada_enabled) {
    in_stage("rada", [&] {
      const auto specs = rada::load_specs(cfg.resolve(cfg.specs));
      const auto oracle = make_oracle(cfg);
      ws.filtered = rada::filter_vocabulary(ws.vocab, *oracle, specs,
                                            cfg.rada_min_correct_fraction,
                                            cfg.threads);
      ws.final_vocab = ws.filtered->kept;
      if (cfg.rada_keep_annotated) {
        std::unordered_set<std::string> annotated;
        for (const auto& [name, utts] : ws.manifests) {
          for (const auto& u : utts) {
            for (const auto& kw : u.keywords) {
              annotated.insert(textmetrics::normalize(kw));
            }
          }
        }
        for (const auto& h : ws.filtered->removed.entries()) {
          if (annotated.count(h.surface)) ws.final_vocab.add(h);
        }
      }
    });
  }
  in_stage("index", [&] {
    ws.encoder = std::make_unique<embed::NgramHashEncoder>(cfg.dimension);
    if (cfg.fuzzy_enabled) {
      ws.fuzzy_encoder = std::make_unique<rada::FuzzyAugmentedEncoder>(
          *ws.encoder, cfg.fuzzy_variants, cfg.seed);
    }
    ws.index = build_or_empty(ws.final_vocab, ws.index_encoder());
  });
  in_stage("asr", [&] {
    std::vector<std::vector<Utterance>> all;
    for (const auto& [name, utts] : ws.manifests) all.push_back(utts);
    ws.scorer = make_simulated_scorer(all, ws.vocab, cfg.scorer, cfg.seed);
  });
  return ws;
}

json retrieval_report(const RunConfig& cfg, const Workspace& ws) {
  return in_stage("retrieval", [&] {
    struct Row {
      std::string name;
      const retrieval::HotwordIndex* index;
    };
    std::vector<retrieval::HotwordIndex> owned;
    owned.reserve(2);
    std::vector<Row> rows;
    const bool plain_final = !cfg.fuzzy_enabled;
    if (cfg.rada_enabled || cfg.fuzzy_enabled) {
      owned.push_back(build_or_empty(ws.vocab, *ws.encoder));
      rows.push_back({"base", &owned.back()});
    } else {
      rows.push_back({"base", &ws.index});
    }
    if (cfg.rada_enabled) {
      if (plain_final) {
        rows.push_back({"+rada", &ws.index});
      } else {
        owned.push_back(build_or_empty(ws.final_vocab, *ws.encoder));
        rows.push_back({"+rada", &owned.back()});
      }
    }
    if (cfg.fuzzy_enabled) rows.push_back({"+fuzzy", &ws.index});

    json sets = json::object();
    for (const auto& set : retrieval_sets(cfg, ws)) {
      json table = json::array();
      for (const auto& row : rows) {
        const auto recall =
            eval_retrieval(ws.manifests.at(set), *row.index, *ws.encoder,
                           cfg.k_values, cfg.frame_subsample, cfg.threads);
        json r = json::object();
        for (const auto& [k, v] : recall) r[std::to_string(k)] = v;
        table.push_back({{"row", row.name},
                         {"vocab_size", row.index->size()},
                         {"recall_percent", std::move(r)}});
      }
      sets[set] = std::move(table);
    }
    json out = {{"k_values", cfg.k_values}, {"sets", std::move(sets)}};
    if (ws.filtered) out["rada"] = rada::to_json(ws.filtered->stats);
    out["final_vocab_size"] = ws.final_vocab.size();
    return out;
  });
}

std::string file_hash(const fs::path& path) {
  return hex64(hash64(read_file(path)));
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

RunOutputs run_full(const RunConfig& cfg) {
  in_stage("config", [&] { cfg.validate(); });
  Workspace ws = prepare(cfg);
  RunOutputs outputs;
  const fs::path dir = cfg.resolve(cfg.report_dir);
  in_stage("report", [&] {
    fs::create_directories(dir);
    outputs.index_file = dir / "hotwords.index";
    ws.index.save(outputs.index_file);
  });

  const json retrieval = retrieval_report(cfg, ws);
  in_stage("report", [&] {
    outputs.reports.push_back(dir / "retrieval_report.json");
    write_json(outputs.reports.back(), retrieval);
  });

  AsrEvalConfig acfg;
  acfg.k_values = cfg.k_values;
  acfg.operating_k = cfg.operating_k;
  acfg.beam = cfg.beam;
  acfg.joint = cfg.joint;
  acfg.reward_weights = cfg.reward_weights;
  acfg.prompt_template = cfg.prompt_template;
  acfg.frame_subsample = cfg.frame_subsample;
  acfg.threads = cfg.threads;
  for (const auto& [name, utts] : ws.manifests) {
    const auto result = in_stage("asr", [&] {
      return eval_asr(name, utts, ws.index, *ws.encoder, *ws.scorer, acfg);
    });
    json j = to_json(result);
    j["operating_k"] = cfg.operating_k;
    j["config"] = cfg.echo();
    in_stage("report", [&] {
      outputs.reports.push_back(dir / ("asr_report_" + name + ".json"));
      write_json(outputs.reports.back(), j);
    });
  }

  in_stage("report", [&] {
    json inputs = json::object();
    inputs["vocab"] = {{"path", cfg.vocab.generic_string()},
                       {"hash", file_hash(cfg.resolve(cfg.vocab))}};
    if (cfg.rada_enabled) {
      inputs["specs"] = {{"path", cfg.specs.generic_string()},
                         {"hash", file_hash(cfg.resolve(cfg.specs))}};
      if (cfg.rada_oracle == "lookup") {
        inputs["lookup"] = {{"path", cfg.rada_lookup.generic_string()},
                            {"hash", file_hash(cfg.resolve(cfg.rada_lookup))}};
      }
    }
    for (const auto& [name, path] : cfg.manifests) {
      inputs["manifest:" + name] = {{"path", path.generic_string()},
                                    {"hash", file_hash(cfg.resolve(path))}};
    }
    json produced = json::object();
    produced[outputs.index_file.filename().string()] =
        file_hash(outputs.index_file);
    for (const auto& r : outputs.reports) {
      produced[r.filename().string()] = file_hash(r);
    }
    json stages = json::array({"load"});
    if (cfg.rada_enabled) stages.push_back("rada");
    for (const char* s : {"index", "retrieval", "asr", "report"}) {
      stages.push_back(s);
    }
    const json provenance = {{"tool", "hotbias"},
                             {"version", std::string(kVersion)},
                             {"seed", cfg.seed},
                             {"stages", std::move(stages)},
                             {"config", cfg.echo()},
                             {"inputs", std::move(inputs)},
                             {"outputs", std::move(produced)}};
    outputs.reports.push_back(dir / "provenance.json");
    write_json(outputs.reports.back(), provenance);
  });
  return outputs;
}

RunOutputs run_full(const fs::path& config_file) {
  const RunConfig cfg = in_stage("config", [&] { return load_config(config_file); });
  return run_full(cfg);
}

}  // namespace hotbias::pipeline
