// kws/nn.h

// Copyright 2026  The kws-confusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Keyword classifier: three [3x3 conv (same padding) -> ReLU -> 2x2 max pool]
// blocks, fc1 -> ReLU (the embedding), fc2 -> softmax over
// {non-keyword, keyword}. Everything is float64 with hand-written backprop.

#ifndef KWS_NN_H_
#define KWS_NN_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "kws/common.h"

namespace kws {

/// Row-major tensor of rank 1..4. For activations the layout is
/// (batch, channels, time, mel).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Channel counts and input geometry; stored in checkpoints.
struct Architecture {
  std::uint32_t c1 = 32;
  std::uint32_t c2 = 32;
  std::uint32_t c3 = 64;
  std::uint32_t d_emb = 128;
  std::uint32_t frames = 121;
  std::uint32_t mels = 80;

  std::size_t pooled_frames() const { return frames / 2 / 2 / 2; }
  std::size_t pooled_mels() const { return mels / 2 / 2 / 2; }
  std::size_t flatten_dim() const { return c3 * pooled_frames() * pooled_mels(); }
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::size_t kKeywordClass = 1;

/// All trainable tensors. Also used as the gradient container.
struct ModelParams {
  Architecture arch;
  std::array<Tensor, 3> conv_w;  // (Co, Ci, 3, 3)
  std::array<Tensor, 3> conv_b;  // (Co)
  Tensor fc1_w;                  // (d_emb, flatten_dim)
  Tensor fc1_b;                  // (d_emb)
  Tensor fc2_w;                  // (2, d_emb)
  Tensor fc2_b;                  // (2)

  static ModelParams zeros(const Architecture& arch);
  /// He-normal conv/fc1 weights, Glorot-normal fc2, zero biases.
  static ModelParams random(const Architecture& arch, std::uint64_t seed);

  /// Visits tensors in checkpoint order.
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (std::size_t i = 0; i < 3; ++i) {
      fn(conv_w[i]);
      fn(conv_b[i]);
    }
    fn(fc1_w);
    fn(fc1_b);
    fn(fc2_w);
    fn(fc2_b);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](Tensor& t) { fn(static_cast<const Tensor&>(t)); });
  }

  std::size_t num_values() const;
  bool all_finite() const;
  /// this += alpha * other (shapes must match).
  void axpy(double alpha, const ModelParams& other);
  void scale(double alpha);
  /// Euclidean norm over every value.
  double l2_norm() const;

  bool operator==(const ModelParams&) const = default;
};

using ParamGradients = ModelParams;

// Layer primitives. Exposed for testing.

/// 3x3 cross-correlation, stride 1, zero padding 1, plus per-channel bias.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

/// Accumulates into grad_w / grad_b; writes grad_input when non-null.
void conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output,
                     Tensor* grad_input, Tensor& grad_w, Tensor& grad_b);

struct PoolResult {
  Tensor output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// floor(H/2) x floor(W/2) max pooling; ties go to the first maximum in
/// row-major window order.
PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const Tensor& grad_output, const std::vector<std::uint32_t>& argmax,
                           const std::vector<std::size_t>& input_shape);

/// Row-wise softmax of a batch x 2 matrix.
Matrix softmax(const Matrix& logits);

/// Cached activations for one forward pass.
struct ForwardTrace {
  Architecture arch;
  std::size_t batch = 0;
  Tensor input;
  std::array<Tensor, 3> conv_out;  // post-ReLU
  std::array<PoolResult, 3> pooled;
  Matrix embedding;                // post-ReLU fc1 output, batch x d_emb
  Matrix logits;
};

struct ForwardResult {
  Matrix probs;  // batch x 2
  ForwardTrace trace;
};

/// batch must be (N, 1, arch.frames, arch.mels).
ForwardResult forward(const ModelParams& params, const Tensor& batch);

/// Keyword posteriors only (no trace kept).
std::vector<double> keyword_posteriors(const ModelParams& params, const Tensor& batch);

/// Gradients for dL/dlogits (batch x 2) plus an optional dL/dembedding
/// (batch x d_emb) added at the embedding before fc1's ReLU mask.
ParamGradients backward(const ForwardTrace& trace, const ModelParams& params,
                        const Matrix& grad_logits,
                        const Matrix* grad_embedding = nullptr);

struct CrossEntropy {
  double loss = 0.0;   // mean over the batch
  Matrix grad_logits;  // d(mean loss)/d(logits)
};

/// labels[i] is 1 for keyword, 0 otherwise.
CrossEntropy softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "KWSM", u32 version, six u32 architecture fields (c1, c2, c3, d_emb,
/// frames, mels), then per tensor: u32 rank, u32 dims, float64 values.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace kws

#endif  // KWS_NN_H_
