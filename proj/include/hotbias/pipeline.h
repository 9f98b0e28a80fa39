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

#ifndef HOTBIAS_PIPELINE_H_
#define HOTBIAS_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hotbias/decoder.h"
#include "hotbias/embedder.h"
#include "hotbias/grpo.h"
#include "hotbias/prompt.h"
#include "hotbias/rada.h"
#include "hotbias/retriever.h"
#include "hotbias/scorers.h"
#include "hotbias/textmetrics.h"

namespace hotbias::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

// Failure inside run_full or a CLI verb; what() reads "[stage] cause".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("[" + stage + "] " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct Utterance {
  std::string id;
  std::string text;
  std::vector<std::string> keywords;
  std::uint64_t audio_seed = 0;
  double noise_level = 0.0;

  // Keywords must be unique and occur in the text.
  void validate() const;
  textmetrics::KeywordAnnotation annotation() const { return {id, keywords}; }
};

nlohmann::json to_json(const Utterance& utt);
Utterance utterance_from_json(const nlohmann::json& j);

// JSONL; ids must be unique.
std::vector<Utterance> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   std::span<const Utterance> utterances);

// Stand-in audio: the text embedding replicated over ceil(chars/4) frames
// at 25 Hz plus seeded Gaussian noise with per-frame norm ~ noise_level.
embed::FrameMatrix synth_audio_proxy(const Utterance& utt,
                                     const embed::TextEncoder& encoder);

// Proxy -> subsample -> mean pool.
embed::Embedding audio_query(const Utterance& utt,
                             const embed::TextEncoder& encoder,
                             int frame_subsample);

// Percentage of annotated keywords recalled in the top-k surfaces, for
// each k. Every utterance must carry at least one keyword.
std::map<int, double> eval_retrieval(std::span<const Utterance> manifest,
                                     const retrieval::HotwordIndex& index,
                                     const embed::TextEncoder& encoder,
                                     std::span<const int> k_values,
                                     int frame_subsample = 1, int threads = 1);

struct AsrEvalConfig {
  std::vector<int> k_values{1, 2, 5, 10};
  int operating_k = 2;
  decode::BeamConfig beam;
  bool joint = true;
  grpo::RewardWeights reward_weights;
  prompt::PromptTemplate prompt_template;
  int frame_subsample = 1;
  int threads = 1;
};

struct DecodeRecord {
  std::string utterance_id;
  std::vector<std::string> prompt_hotwords;
  decode::Hypothesis hypothesis;
  double score = 0.0;  // normalized (joint score for joint decoding)
};

nlohmann::json to_json(const DecodeRecord& record);

// Decodes one utterance. k = 0 decodes with the context-free prompt only.
DecodeRecord decode_utterance(const Utterance& utt,
                              const retrieval::HotwordIndex& index,
                              const embed::TextEncoder& encoder,
                              const decode::TokenScorer& scorer, int k,
                              const AsrEvalConfig& cfg);

struct AsrArm {
  std::string name;  // "base" or "top<k>"
  int k = 0;
  textmetrics::EvalReport report;
  double mean_reward = 0.0;
};

struct AsrEvalResult {
  std::string set;
  std::vector<AsrArm> arms;

  const AsrArm& arm(int k) const;
};

nlohmann::json to_json(const AsrEvalResult& result);

// Scores one arm per k in {0} + k_values. Throws when the encoder and index
// dimensions differ or the scorer cannot emit an indexed hotword.
AsrEvalResult eval_asr(std::string set, std::span<const Utterance> manifest,
                       const retrieval::HotwordIndex& index,
                       const embed::TextEncoder& encoder,
                       const decode::TokenScorer& scorer,
                       const AsrEvalConfig& cfg);

struct ScorerSpec {
  double hard_keyword_rate = 0.7;
  double noisy_rate = 0.02;
  decode::AcousticProfile profile;
};

// Builds a simulated acoustic model for every utterance in the manifests.
// Keyword tokens become hard slots with probability hard_keyword_rate,
// other tokens noisy with probability noisy_rate, chosen from the seed.
std::unique_ptr<decode::SimulatedAsrScorer> make_simulated_scorer(
    std::span<const std::vector<Utterance>> manifests,
    const retrieval::Vocabulary& vocab, const ScorerSpec& spec,
    std::uint64_t seed);

// A deterministic near-miss of `token` (never equal to it).
std::string confusion_of(std::string_view token, std::uint64_t seed);

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::uint64_t seed = 0;
  std::filesystem::path vocab;
  std::filesystem::path specs;
  std::map<std::string, std::filesystem::path> manifests;
  std::vector<std::string> retrieval_sets;  // default: sets with keywords
  std::vector<int> k_values{1, 2, 5, 10};
  int operating_k = 2;
  int dimension = embed::kDefaultDimension;
  int frame_subsample = 1;

  bool rada_enabled = false;
  std::string rada_oracle = "dropout";  // echo | null | dropout | lookup
  double rada_dropout_rate = 0.05;
  std::filesystem::path rada_lookup;
  double rada_min_correct_fraction = 1.0;
  bool rada_keep_annotated = false;

  bool fuzzy_enabled = false;
  int fuzzy_variants = 4;

  decode::BeamConfig beam;
  bool joint = true;
  ScorerSpec scorer;
  grpo::RewardWeights reward_weights;
  prompt::PromptTemplate prompt_template;
  int threads = 1;
  std::filesystem::path report_dir = "reports";

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  void validate() const;
  nlohmann::json echo() const;
};

RunConfig parse_config(const nlohmann::json& j,
                       const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

std::unique_ptr<rada::AsrOracle> make_oracle(const RunConfig& cfg);

// Loaded inputs plus the artifacts every later stage needs.
struct Workspace {
  retrieval::Vocabulary vocab;
  std::map<std::string, std::vector<Utterance>> manifests;
  std::optional<rada::FilterResult> filtered;
  retrieval::Vocabulary final_vocab;
  std::unique_ptr<embed::NgramHashEncoder> encoder;
  std::unique_ptr<rada::FuzzyAugmentedEncoder> fuzzy_encoder;
  retrieval::HotwordIndex index;  // built from final_vocab
  std::unique_ptr<decode::SimulatedAsrScorer> scorer;

  const embed::TextEncoder& index_encoder() const;
};

// Loads inputs, runs RADA when enabled and builds the final index.
Workspace prepare(const RunConfig& cfg);

// Retrieval table with a base row and +rada / +fuzzy rows when enabled.
nlohmann::json retrieval_report(const RunConfig& cfg, const Workspace& ws);

struct RunOutputs {
  std::vector<std::filesystem::path> reports;
  std::filesystem::path index_file;
};

// index build -> optional RADA -> retrieval eval -> ASR eval -> reports.
RunOutputs run_full(const RunConfig& cfg);
RunOutputs run_full(const std::filesystem::path& config_file);

// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

// Writes `j` with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace hotbias::pipeline

#endif  // HOTBIAS_PIPELINE_H_
