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

// hotbias command line: index, rada, eval, decode, grpo, run and toy verbs.

#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "hotbias/pipeline.h"
#include "hotbias/toy_data.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hotbias;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::vector<int> k;
  std::string report_dir;
  int threads = 0;
};

pipeline::RunConfig load_with_overrides(const std::string& path,
                                        const Common& common) {
  pipeline::RunConfig cfg = pipeline::load_config(path);
  if (common.seed) cfg.seed = *common.seed;
  if (!common.report_dir.empty()) cfg.report_dir = fs::absolute(common.report_dir);
  if (common.threads > 0) cfg.threads = common.threads;
  cfg.validate();
  return cfg;
}

pipeline::AsrEvalConfig asr_config(const pipeline::RunConfig& cfg) {
  pipeline::AsrEvalConfig a;
  a.k_values = cfg.k_values;
  a.operating_k = cfg.operating_k;
  a.beam = cfg.beam;
  a.joint = cfg.joint;
  a.reward_weights = cfg.reward_weights;
  a.prompt_template = cfg.prompt_template;
  a.frame_subsample = cfg.frame_subsample;
  a.threads = cfg.threads;
  return a;
}

std::ostream& output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path);
  return file;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<json> rows;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

template <typename Fn>
void stage(const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const pipeline::StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw pipeline::StageError(name, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hotbias: contextual biasing toolkit for LLM-ASR"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pipeline::kVersion));
  Common common;
  auto add_common = [&](CLI::App* sub, bool with_k, bool with_dir) {
    sub->add_option("--seed", common.seed, "Override the seed");
    if (with_k) sub->add_option("--k", common.k, "Retrieval depth(s)");
    if (with_dir) sub->add_option("--report-dir", common.report_dir, "Report directory");
  };

  // toy
  auto* toy = app.add_subcommand("toy", "Generate the bundled synthetic dataset");
  std::string toy_out = "data/toy";
  toy->add_option("--out", toy_out, "Output directory");
  add_common(toy, false, false);

  // index
  auto* index = app.add_subcommand("index", "Build or query a hotword index");
  index->require_subcommand(1);
  std::string vocab_path, index_path, query_text;
  int dim = embed::kDefaultDimension, fuzzy_variants = 0;
  auto* index_build = index->add_subcommand("build", "Embed a vocabulary");
  index_build->add_option("--vocab", vocab_path, "TSV or JSONL vocabulary")->required();
  index_build->add_option("--out", index_path, "Index file")->required();
  index_build->add_option("--dim", dim, "Embedding dimension");
  index_build->add_option("--fuzzy-variants", fuzzy_variants,
                          "Average each entry with N fuzzy variants");
  add_common(index_build, false, false);
  auto* index_query = index->add_subcommand("query", "Top-k lookup for a text");
  index_query->add_option("--index", index_path, "Index file")->required();
  index_query->add_option("--text", query_text, "Spoken content")->required();
  index_query->add_option("--dim", dim, "Embedding dimension");
  index_query->add_option("--fuzzy-variants", fuzzy_variants,
                          "Fuzzy variants the index was built with");
  add_common(index_query, true, false);

  // rada
  auto* rada = app.add_subcommand("rada", "Vocabulary filtering and augmentation");
  rada->require_subcommand(1);
  std::string specs_path, oracle = "dropout", lookup_path, kept_path, removed_path;
  double rate = 0.05, min_fraction = 1.0;
  int threads = 1;
  auto* rada_filter = rada->add_subcommand("filter", "Drop hotwords the recognizer already handles");
  rada_filter->add_option("--vocab", vocab_path, "Vocabulary")->required();
  rada_filter->add_option("--specs", specs_path, "Carrier sentences (JSONL)")->required();
  rada_filter->add_option("--oracle", oracle, "echo | null | dropout | lookup")
      ->check(CLI::IsMember({"echo", "null", "dropout", "lookup"}));
  rada_filter->add_option("--rate", rate, "Character dropout rate");
  rada_filter->add_option("--lookup", lookup_path, "Lookup oracle table (JSONL)");
  rada_filter->add_option("--min-correct-fraction", min_fraction,
                          "Fraction of carriers that must be recognized");
  rada_filter->add_option("--threads", threads, "Worker threads");
  rada_filter->add_option("--kept", kept_path, "Write kept vocabulary (TSV)");
  rada_filter->add_option("--removed", removed_path, "Write removed vocabulary (TSV)");
  add_common(rada_filter, false, false);
  std::string word;
  int count = 4;
  auto* rada_variants = rada->add_subcommand("variants", "Fuzzy variants of a word");
  rada_variants->add_option("--word", word, "Word")->required();
  rada_variants->add_option("--count", count, "Number of variants");
  add_common(rada_variants, false, false);
  std::string biased_path, general_path, out_path;
  std::size_t samples = 9000;
  auto* rada_mixture = rada->add_subcommand("mixture", "Sample a training mixture");
  rada_mixture->add_option("--biased", biased_path, "Keyword manifest")->required();
  rada_mixture->add_option("--general", general_path, "General manifest")->required();
  rada_mixture->add_option("--n", samples, "Number of samples");
  rada_mixture->add_option("--out", out_path, "JSONL output (default stdout)");
  add_common(rada_mixture, false, false);

  // eval
  auto* eval = app.add_subcommand("eval", "Retrieval and ASR evaluation");
  eval->require_subcommand(1);
  std::string config_path, set_name;
  auto* eval_retrieval = eval->add_subcommand("retrieval", "Recall at each k");
  eval_retrieval->add_option("--config", config_path, "Run config")->required();
  eval_retrieval->add_option("--threads", common.threads, "Worker threads");
  add_common(eval_retrieval, true, true);
  auto* eval_asr = eval->add_subcommand("asr", "KER / SACC / WER per arm");
  eval_asr->add_option("--config", config_path, "Run config")->required();
  eval_asr->add_option("--set", set_name, "Manifest name (default: all)");
  eval_asr->add_option("--threads", common.threads, "Worker threads");
  add_common(eval_asr, true, true);

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Decode a manifest");
  int beam = 0;
  bool joint = false;
  decode_cmd->add_option("--config", config_path, "Run config")->required();
  decode_cmd->add_option("--set", set_name, "Manifest name")->required();
  decode_cmd->add_option("--beam", beam, "Beam width");
  decode_cmd->add_flag("--joint", joint, "Joint context-free / biased decoding");
  decode_cmd->add_option("--out", out_path, "JSONL output (default stdout)");
  decode_cmd->add_option("--threads", common.threads, "Worker threads");
  add_common(decode_cmd, true, false);

  // grpo
  auto* grpo_cmd = app.add_subcommand("grpo", "Rewards and loss checks");
  grpo_cmd->require_subcommand(1);
  std::string input_path;
  double w_match = 1.0, w_wer = 1.0;
  auto* grpo_score = grpo_cmd->add_subcommand("score", "Score {reference, output, candidates} rows");
  grpo_score->add_option("--input", input_path, "JSONL input")->required();
  grpo_score->add_option("--w-match", w_match, "Match reward weight");
  grpo_score->add_option("--w-wer", w_wer, "WER reward weight");
  grpo_score->add_option("--out", out_path, "JSONL output (default stdout)");
  int steps = 100, tokens = 8;
  auto* grpo_check = grpo_cmd->add_subcommand("check-grad", "Finite-difference gradient check");
  grpo_check->add_option("--steps", steps, "Random policy steps");
  grpo_check->add_option("--tokens", tokens, "Tokens per step");
  add_common(grpo_check, false, false);

  // run
  auto* run = app.add_subcommand("run", "Full pipeline from a config file");
  run->add_option("--config", config_path, "Run config")->required();
  run->add_option("--threads", common.threads, "Worker threads");
  add_common(run, true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (toy->parsed()) {
      stage("toy", [&] {
        toy::ToyOptions opts;
        if (common.seed) opts.seed = *common.seed;
        toy::write(toy::generate(opts), toy_out);
      });
    } else if (index_build->parsed()) {
      stage("index", [&] {
        const auto vocab = retrieval::Vocabulary::load(vocab_path);
        embed::NgramHashEncoder base(dim);
        std::optional<rada::FuzzyAugmentedEncoder> fuzzy;
        if (fuzzy_variants > 0) fuzzy.emplace(base, fuzzy_variants, common.seed.value_or(0));
        const embed::TextEncoder& enc = fuzzy ? static_cast<const embed::TextEncoder&>(*fuzzy) : base;
        const auto idx = retrieval::HotwordIndex::build(vocab, enc);
        idx.save(index_path);
        std::cout << json{{"entries", idx.size()},
                          {"dim", idx.dimension()},
                          {"fingerprint", hex64(idx.fingerprint())}}
                         .dump()
                  << '\n';
      });
    } else if (index_query->parsed()) {
      stage("index", [&] {
        embed::NgramHashEncoder base(dim);
        std::optional<rada::FuzzyAugmentedEncoder> fuzzy;
        if (fuzzy_variants > 0) fuzzy.emplace(base, fuzzy_variants, common.seed.value_or(0));
        const std::uint64_t fp = fuzzy ? fuzzy->fingerprint() : base.fingerprint();
        const auto idx = retrieval::HotwordIndex::load(index_path, fp);
        const std::size_t k = common.k.empty() ? 10 : static_cast<std::size_t>(common.k.front());
        const auto result = idx.query_topk(base.embed(query_text), k);
        int rank = 0;
        for (const auto& c : result.candidates) {
          std::cout << json{{"rank", ++rank},
                            {"id", c.hotword.id},
                            {"surface", c.hotword.surface},
                            {"domain", c.hotword.domain},
                            {"score", c.score}}
                           .dump()
                    << '\n';
        }
      });
    } else if (rada_filter->parsed()) {
      stage("rada", [&] {
        const auto vocab = retrieval::Vocabulary::load(vocab_path);
        const auto specs = rada::load_specs(specs_path);
        pipeline::RunConfig cfg;
        cfg.rada_oracle = oracle;
        cfg.rada_dropout_rate = rate;
        cfg.rada_lookup = lookup_path;
        cfg.seed = common.seed.value_or(0);
        const auto orc = pipeline::make_oracle(cfg);
        const auto result =
            rada::filter_vocabulary(vocab, *orc, specs, min_fraction, threads);
        if (!kept_path.empty()) result.kept.save_tsv(kept_path);
        if (!removed_path.empty()) result.removed.save_tsv(removed_path);
        std::cout << rada::to_json(result.stats).dump() << '\n';
      });
    } else if (rada_variants->parsed()) {
      stage("rada", [&] {
        std::cout << json(rada::generate_fuzzy_variants(word, count,
                                                        common.seed.value_or(0)))
                         .dump()
                  << '\n';
      });
    } else if (rada_mixture->parsed()) {
      stage("rada", [&] {
        auto to_sources = [](const std::vector<pipeline::Utterance>& utts) {
          std::vector<rada::MixtureSource> out;
          for (const auto& u : utts) out.push_back({u.id, u.keywords});
          return out;
        };
        rada::MixtureSampler sampler(
            to_sources(pipeline::load_manifest(biased_path)),
            to_sources(pipeline::load_manifest(general_path)),
            common.seed.value_or(0));
        std::ofstream file;
        std::ostream& out = output(out_path, file);
        for (const auto& s : sampler.take(samples)) out << rada::to_json(s).dump() << '\n';
      });
    } else if (eval_retrieval->parsed()) {
      auto cfg = load_with_overrides(config_path, common);
      if (!common.k.empty()) cfg.k_values = common.k;
      cfg.validate();
      const auto ws = pipeline::prepare(cfg);
      const json report = pipeline::retrieval_report(cfg, ws);
      if (!common.report_dir.empty()) {
        stage("report", [&] {
          fs::create_directories(cfg.report_dir);
          pipeline::write_json(cfg.report_dir / "retrieval_report.json", report);
        });
      } else {
        std::cout << report.dump(2) << '\n';
      }
    } else if (eval_asr->parsed()) {
      auto cfg = load_with_overrides(config_path, common);
      if (!common.k.empty()) cfg.k_values = common.k;
      cfg.validate();
      const auto ws = pipeline::prepare(cfg);
      for (const auto& [name, utts] : ws.manifests) {
        if (!set_name.empty() && name != set_name) continue;
        json j;
        stage("asr", [&] {
          j = pipeline::to_json(pipeline::eval_asr(name, utts, ws.index, *ws.encoder,
                                                   *ws.scorer, asr_config(cfg)));
          j["config"] = cfg.echo();
        });
        if (!common.report_dir.empty()) {
          stage("report", [&] {
            fs::create_directories(cfg.report_dir);
            pipeline::write_json(cfg.report_dir / ("asr_report_" + name + ".json"), j);
          });
        } else {
          std::cout << j.dump(2) << '\n';
        }
      }
    } else if (decode_cmd->parsed()) {
      auto cfg = load_with_overrides(config_path, common);
      if (beam > 0) cfg.beam.beam_width = beam;
      cfg.joint = joint;
      const int k = common.k.empty() ? cfg.operating_k : common.k.front();
      cfg.validate();
      const auto ws = pipeline::prepare(cfg);
      stage("decode", [&] {
        auto it = ws.manifests.find(set_name);
        if (it == ws.manifests.end()) throw Error("unknown set '" + set_name + "'");
        auto acfg = asr_config(cfg);
        acfg.beam.threads = 1;
        std::vector<pipeline::DecodeRecord> records(it->second.size());
        parallel_for(records.size(), cfg.threads, [&](std::size_t i) {
          records[i] = pipeline::decode_utterance(it->second[i], ws.index, *ws.encoder,
                                                  *ws.scorer, k, acfg);
        });
        std::ofstream file;
        std::ostream& out = output(out_path, file);
        for (const auto& r : records) out << pipeline::to_json(r).dump() << '\n';
      });
    } else if (grpo_score->parsed()) {
      stage("grpo", [&] {
        const grpo::RewardWeights weights{w_match, w_wer};
        std::ofstream file;
        std::ostream& out = output(out_path, file);
        for (const auto& row : read_jsonl(input_path)) {
          const auto candidates =
              row.value("candidates", std::vector<std::string>{});
          const auto rec = grpo::score_response(row.at("output").get<std::string>(),
                                                row.at("reference").get<std::string>(),
                                                candidates, weights);
          out << grpo::to_json(rec).dump() << '\n';
        }
      });
    } else if (grpo_check->parsed()) {
      bool ok = false;
      stage("grpo", [&] {
        const auto report = grpo::check_gradients(steps, tokens, common.seed.value_or(0));
        std::cout << grpo::to_json(report).dump() << '\n';
        ok = report.passed();
      });
      return ok ? 0 : 2;
    } else if (run->parsed()) {
      auto cfg = load_with_overrides(config_path, common);
      if (!common.k.empty()) cfg.operating_k = common.k.front();
      const auto outputs = pipeline::run_full(cfg);
      for (const auto& r : outputs.reports) std::cout << r.string() << '\n';
    }
  } catch (const pipeline::StageError& e) {
    std::cerr << "hotbias: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "hotbias: [config] " << e.what() << '\n';
    return 1;
  }
  return 0;
}
