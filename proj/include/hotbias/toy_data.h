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

#ifndef HOTBIAS_TOY_DATA_H_
#define HOTBIAS_TOY_DATA_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hotbias/pipeline.h"
#include "hotbias/rada.h"
#include "hotbias/retriever.h"

namespace hotbias::toy {

struct ToyOptions {
  std::uint64_t seed = 20250607;
  int utterances_per_set = 240;
  int vocab_size = 5000;
  int carriers = 3;
};

// Pseudo-word hotwords across five domains, carrier sentences for every
// hotword, keyword-bearing "media" and "medical" manifests and a
// keywordless "general" manifest.
struct ToyDataset {
  retrieval::Vocabulary vocab;
  rada::SpecMap specs;
  std::map<std::string, std::vector<pipeline::Utterance>> manifests;
};

ToyDataset generate(const ToyOptions& options = {});

// Writes vocab.tsv, specs.jsonl and <set>.jsonl into dir.
void write(const ToyDataset& data, const std::filesystem::path& dir);

}  // namespace hotbias::toy

#endif  // HOTBIAS_TOY_DATA_H_
