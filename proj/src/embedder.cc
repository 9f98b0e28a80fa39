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

#include "hotbias/embedder.h"

#include <string>
#include <vector>

#include "hotbias/textmetrics.h"

namespace hotbias::embed {

namespace {

constexpr double kUnigramWeight = 0.5;

}  // namespace

NgramHashEncoder::NgramHashEncoder(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw Error("encoder dimension must be positive");
}

std::uint64_t NgramHashEncoder::fingerprint() const {
  return hash_combine(hash64("ngram-hash-v1"),
                      static_cast<std::uint64_t>(dimension_));
}

Embedding NgramHashEncoder::embed(std::string_view text) const {
  const std::string norm = textmetrics::normalize(text);
  if (norm.empty()) throw Error("embed_text: empty text");

  // (hash, n) keys; sorted so accumulation order is fixed.
  std::vector<std::pair<std::uint64_t, int>> grams;
  const auto cps = textmetrics::codepoints(norm);
  std::size_t begin = 0;
  while (begin < cps.size()) {
    std::size_t end = begin;
    while (end < cps.size() && cps[end] != " ") ++end;
    for (int n = 1; n <= 3; ++n) {
      for (std::size_t i = begin; i + n <= end; ++i) {
        std::string gram;
        for (int j = 0; j < n; ++j) gram += cps[i + j];
        grams.emplace_back(hash64(gram, kHashSeed + n), n);
      }
    }
    begin = end + 1;
  }
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());

  Vector<double> acc = Vector<double>::Zero(dimension_);
  for (const auto& [h, n] : grams) {
    const double weight = n == 1 ? kUnigramWeight : 1.0;
    const double sign = (h >> 63) ? -1.0 : 1.0;
    acc[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_))] +=
        sign * weight;
  }
  try {
    return l2_normalized(acc).cast<float>();
  } catch (const Error&) {
    throw Error("embed_text: n-gram features cancel out for '" +
                std::string(text) + "'");
  }
}

Embedding MeanPoolAudioEncoder::embed(const FrameMatrix& frames) const {
  if (frames.count() == 0) throw Error("embed_audio: empty frame list");
  if (frames.dimension() != dimension_) {
    throw Error("embed_audio: frame dimension " +
                std::to_string(frames.dimension()) + " != encoder dimension " +
                std::to_string(dimension_));
  }
  const Vector<double> mean =
      frames.frames.cast<double>().rowwise().mean();
  return l2_normalized(mean).cast<float>();
}

Embedding embed_text(std::string_view text, int dimension) {
  return NgramHashEncoder(dimension).embed(text);
}

Embedding embed_audio(const FrameMatrix& frames) {
  return MeanPoolAudioEncoder(frames.dimension()).embed(frames);
}

FrameMatrix subsample_frames(const FrameMatrix& frames, int factor) {
  if (factor < 1) throw Error("subsample_frames: factor must be >= 1");
  if (frames.count() == 0) throw Error("subsample_frames: empty frame list");
  if (factor == 1) return frames;
  const Eigen::Index kept = (frames.frames.cols() + factor - 1) / factor;
  FrameMatrix out;
  out.frames.resize(frames.frames.rows(), kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    out.frames.col(i) = frames.frames.col(i * factor);
  }
  out.frame_rate_hz = frames.frame_rate_hz / factor;
  return out;
}

}  // namespace hotbias::embed
