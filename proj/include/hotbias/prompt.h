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

#ifndef HOTBIAS_PROMPT_H_
#define HOTBIAS_PROMPT_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hotbias/retriever.h"

namespace hotbias::prompt {

// U+27E8 / U+27E9 MATHEMATICAL LEFT/RIGHT ANGLE BRACKET.
inline constexpr std::string_view kOpen = "⟨";
inline constexpr std::string_view kClose = "⟩";

struct PromptTemplate {
  std::string instruction = "Transcribe the audio into text.";
  std::string bias_lead = "These biasing words you may use:";
};

struct BiasPrompt {
  std::vector<std::string> hotwords;
  std::string rendered;
};

// Renders "<instruction>" for an empty list, otherwise
// "<instruction> <bias_lead> ⟨g1⟩ ⟨g2⟩ ... ⟨gk⟩". Hotwords keep their order.
// Throws when a hotword is empty or contains a bracket character.
BiasPrompt build_prompt(std::span<const std::string> hotwords,
                        const PromptTemplate& tmpl = {});
BiasPrompt build_prompt(const retrieval::RetrievalResult& result,
                        const PromptTemplate& tmpl = {});

// Extracts the bracketed hotwords of a rendered prompt, in order.
std::vector<std::string> parse_hotwords(std::string_view rendered);

}  // namespace hotbias::prompt

#endif  // HOTBIAS_PROMPT_H_
