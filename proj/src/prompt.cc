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

#include "hotbias/prompt.h"

namespace hotbias::prompt {

BiasPrompt build_prompt(std::span<const std::string> hotwords,
                        const PromptTemplate& tmpl) {
  BiasPrompt p;
  p.hotwords.assign(hotwords.begin(), hotwords.end());
  p.rendered = tmpl.instruction;
  if (hotwords.empty()) return p;
  p.rendered += ' ';
  p.rendered += tmpl.bias_lead;
  for (const auto& h : hotwords) {
    if (h.empty()) throw Error("build_prompt: empty hotword");
    if (h.find(kOpen) != std::string::npos ||
        h.find(kClose) != std::string::npos) {
      throw Error("build_prompt: hotword contains a prompt delimiter: " + h);
    }
    p.rendered += ' ';
    p.rendered += kOpen;
    p.rendered += h;
    p.rendered += kClose;
  }
  return p;
}

BiasPrompt build_prompt(const retrieval::RetrievalResult& result,
                        const PromptTemplate& tmpl) {
  const auto surfaces = result.surfaces();
  return build_prompt(surfaces, tmpl);
}

std::vector<std::string> parse_hotwords(std::string_view rendered) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = rendered.find(kOpen, pos)) != std::string_view::npos) {
    const std::size_t start = pos + kOpen.size();
    const std::size_t end = rendered.find(kClose, start);
    if (end == std::string_view::npos) {
      throw Error("parse_hotwords: unterminated hotword");
    }
    out.emplace_back(rendered.substr(start, end - start));
    pos = end + kClose.size();
  }
  return out;
}

}  // namespace hotbias::prompt
