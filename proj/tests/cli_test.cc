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

#include <sys/wait.h>

#include <cstdio>

#include "json.hpp"
#include "test_util.h"

namespace fs = std::filesystem;
using hotbias::testing::slurp;
using hotbias::testing::temp_dir;
using hotbias::testing::write_text;

namespace {

const fs::path kSource = HOTBIAS_SOURCE_DIR;

struct Result {
  int status = -1;
  std::string out;  // stdout and stderr
};

Result cli(const std::string& args) {
  const std::string cmd = "\"" + std::string(HOTBIAS_CLI) + "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::vector<nlohmann::json> lines(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string line = text.substr(pos, end - pos);
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("version and usage errors") {
  const auto v = cli("--version");
  CHECK(v.status == 0);
  CHECK(v.out.find("0.1.0") != std::string::npos);
  CHECK(cli("").status != 0);
  CHECK(cli("index frobnicate").status != 0);
}

TEST_CASE("index build and query") {
  const auto dir = temp_dir("cli_index");
  write_text(dir / "v.tsv", "h1\tqwen\tmedia\nh2\ttongyi\tmedia\nh3\tpenicillin\tmedical\n");
  const auto built = cli("index build --vocab " + q(dir / "v.tsv") + " --out " + q(dir / "h.index"));
  REQUIRE(built.status == 0);
  CHECK(nlohmann::json::parse(built.out).at("entries") == 3);

  const auto hits = cli("index query --index " + q(dir / "h.index") + " --text \"qwen2.5\" --k 2");
  REQUIRE(hits.status == 0);
  const auto rows = lines(hits.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("surface") == "qwen");
  CHECK(rows[0].at("rank") == 1);

  const auto mismatch = cli("index query --index " + q(dir / "h.index") + " --text qwen --dim 64");
  CHECK(mismatch.status == 1);
  CHECK(mismatch.out.find("hotbias: [index]") != std::string::npos);
}

TEST_CASE("rada verbs") {
  const fs::path toy = kSource / "data" / "toy";
  const auto dir = temp_dir("cli_rada");
  const auto echo = cli("rada filter --vocab " + q(toy / "vocab.tsv") + " --specs " +
                        q(toy / "specs.jsonl") + " --oracle echo --kept " + q(dir / "kept.tsv"));
  REQUIRE(echo.status == 0);
  const auto stats = nlohmann::json::parse(echo.out);
  CHECK(stats.at("kept") == 0);
  CHECK(stats.at("removed") == stats.at("total"));
  CHECK(stats.at("removal_rate") == 1.0);

  const auto variants = cli("rada variants --word Tongyi --count 3 --seed 4");
  REQUIRE(variants.status == 0);
  const auto list = nlohmann::json::parse(variants.out);
  REQUIRE(list.size() == 3);
  CHECK(list[0].get<std::string>().rfind("Tongyi ", 0) == 0);
  CHECK(cli("rada variants --word Tongyi --count 3 --seed 4").out == variants.out);

  const auto mix = cli("rada mixture --biased " + q(toy / "media.jsonl") + " --general " +
                       q(toy / "general.jsonl") + " --n 90 --seed 2");
  REQUIRE(mix.status == 0);
  const auto samples = lines(mix.out);
  REQUIRE(samples.size() == 90);
  int biased = 0;
  for (const auto& s : samples) biased += s.at("is_biased").get<bool>();
  CHECK(biased == 10);

  const auto bad = cli("rada filter --vocab " + q(toy / "vocab.tsv") + " --specs " +
                       q(dir / "missing.jsonl"));
  CHECK(bad.status == 1);
  CHECK(bad.out.find("hotbias: [rada]") != std::string::npos);
}

TEST_CASE("grpo verbs") {
  const auto dir = temp_dir("cli_grpo");
  write_text(dir / "in.jsonl",
             "{\"reference\":\"we use qwen\",\"output\":\"we use qwen\",\"candidates\":[\"qwen\"]}\n"
             "{\"reference\":\"we use qwen\",\"output\":\"we use quen\",\"candidates\":[\"qwen\"]}\n");
  const auto scored = cli("grpo score --input " + q(dir / "in.jsonl"));
  REQUIRE(scored.status == 0);
  const auto rows = lines(scored.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("total") == 2.0);
  CHECK(rows[1].at("match_reward") == 0.0);

  const auto grad = cli("grpo check-grad --steps 20 --tokens 8 --seed 1");
  CHECK(grad.status == 0);
  CHECK(nlohmann::json::parse(grad.out).at("passed") == true);
}

TEST_CASE("eval, decode and run on the minimal config") {
  const fs::path config = kSource / "configs" / "minimal.json";
  const auto dir = temp_dir("cli_run");
  const auto retrieval = cli("eval retrieval --config " + q(config) + " --k 1 --k 3");
  REQUIRE(retrieval.status == 0);
  const auto report = nlohmann::json::parse(retrieval.out);
  CHECK(report.at("k_values") == nlohmann::json::array({1, 3}));

  const auto decoded = cli("decode --config " + q(config) + " --set media --k 2 --joint --out " +
                           q(dir / "media.jsonl"));
  REQUIRE(decoded.status == 0);
  const auto records = lines(slurp(dir / "media.jsonl"));
  CHECK(records.size() == 240);
  CHECK(records[0].at("prompt_hotwords").size() == 2);

  const auto run = cli("run --config " + q(config) + " --report-dir " + q(dir / "reports"));
  REQUIRE(run.status == 0);
  for (const char* name : {"retrieval_report.json", "asr_report_media.json", "provenance.json"}) {
    CHECK(fs::exists(dir / "reports" / name));
  }

  const auto missing = cli("run --config " + q(dir / "nope.json"));
  CHECK(missing.status == 1);
  CHECK(missing.out.find("hotbias: [config]") != std::string::npos);
  const auto unknown_set = cli("decode --config " + q(config) + " --set nowhere");
  CHECK(unknown_set.status == 1);
  CHECK(unknown_set.out.find("hotbias: [decode]") != std::string::npos);
}
