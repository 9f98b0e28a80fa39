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

#ifndef HOTBIAS_EMBEDDER_H_
#define HOTBIAS_EMBEDDER_H_

#include <algorithm>
#include <cstdint>
#include <string_view>

#include <Eigen/Core>

#include "hotbias/common.h"

namespace hotbias::embed {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Embedding = Vector<float>;

inline constexpr int kDefaultDimension = 256;
inline constexpr double kDefaultFrameRate = 25.0;

// Columns are frames, rows are feature dimensions.
struct FrameMatrix {
  Eigen::MatrixXf frames;
  double frame_rate_hz = kDefaultFrameRate;

  int dimension() const { return static_cast<int>(frames.rows()); }
  int count() const { return static_cast<int>(frames.cols()); }
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual Embedding embed(std::string_view text) const = 0;
  virtual int dimension() const = 0;
  // Identifies the encoder configuration; stored in indexes.
  virtual std::uint64_t fingerprint() const = 0;
};

class AudioEncoder {
 public:
  virtual ~AudioEncoder() = default;
  virtual Embedding embed(const FrameMatrix& frames) const = 0;
  virtual int dimension() const = 0;
};

// Character n-gram (n = 1..3) feature hashing over normalized text.
// N-grams never cross a space. Each distinct n-gram contributes once,
// with a hash-derived sign; unigrams are down-weighted to 0.5 so that
// shared letters matter less than shared bigrams and trigrams.
class NgramHashEncoder final : public TextEncoder {
 public:
  explicit NgramHashEncoder(int dimension = kDefaultDimension);

  Embedding embed(std::string_view text) const override;
  int dimension() const override { return dimension_; }
  std::uint64_t fingerprint() const override;

 private:
  int dimension_;
};

// Mean-pools frames and L2-normalizes.
class MeanPoolAudioEncoder final : public AudioEncoder {
 public:
  explicit MeanPoolAudioEncoder(int dimension = kDefaultDimension)
      : dimension_(dimension) {}

  Embedding embed(const FrameMatrix& frames) const override;
  int dimension() const override { return dimension_; }

 private:
  int dimension_;
};

Embedding embed_text(std::string_view text, int dimension = kDefaultDimension);
Embedding embed_audio(const FrameMatrix& frames);

// Keeps frames 0, factor, 2*factor, ... and divides the frame rate.
FrameMatrix subsample_frames(const FrameMatrix& frames, int factor);

// Throws on a zero vector instead of producing NaNs.
template <typename Derived>
Vector<typename Derived::Scalar> l2_normalized(
    const Eigen::MatrixBase<Derived>& v) {
  const double norm = v.template cast<double>().norm();
  if (!(norm > 0.0)) throw Error("cannot normalize an all-zero embedding");
  return (v.template cast<double>() / norm)
      .template cast<typename Derived::Scalar>();
}

// Dot product of unit vectors, clamped to [-1, 1].
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a,
              const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw Error("cosine: dimension mismatch " + std::to_string(a.size()) +
                " vs " + std::to_string(b.size()));
  }
  const double d = a.template cast<double>().dot(b.template cast<double>());
  return std::clamp(d, -1.0, 1.0);
}

}  // namespace hotbias::embed

#endif  // HOTBIAS_EMBEDDER_H_
