// nn.cc

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

#include "kws/nn.h"

#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kws/binary_io.h"

namespace kws {

namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void relu_inplace(Tensor& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

// g *= (activation > 0)
void relu_mask(Tensor& g, const Tensor& activation) {
  double* gp = g.data();
  const double* a = activation.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(a[i] > 0.0)) gp[i] = 0.0;
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  const std::size_t n =
      std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
  data_.assign(n, fill);
}

void Architecture::validate() const {
  require(c1 > 0 && c2 > 0 && c3 > 0 && d_emb > 0, "architecture: channel counts must be positive");
  require(frames >= 8 && mels >= 8, "architecture: input must be at least 8x8 for three poolings");
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  arch.validate();
  ModelParams p;
  p.arch = arch;
  const std::array<std::size_t, 4> ch = {1, arch.c1, arch.c2, arch.c3};
  for (std::size_t i = 0; i < 3; ++i) {
    p.conv_w[i] = Tensor({ch[i + 1], ch[i], 3, 3});
    p.conv_b[i] = Tensor({ch[i + 1]});
  }
  p.fc1_w = Tensor({arch.d_emb, arch.flatten_dim()});
  p.fc1_b = Tensor({arch.d_emb});
  p.fc2_w = Tensor({kNumClasses, arch.d_emb});
  p.fc2_b = Tensor({kNumClasses});
  return p;
}

ModelParams ModelParams::random(const Architecture& arch, std::uint64_t seed) {
  ModelParams p = zeros(arch);
  Rng rng(seed);
  auto fill = [&rng](Tensor& t, double sd) {
    for (double& v : t.values()) v = sd * gaussian(rng);
  };
  for (std::size_t i = 0; i < 3; ++i) {
    fill(p.conv_w[i], std::sqrt(2.0 / (p.conv_w[i].dim(1) * 9.0)));
  }
  fill(p.fc1_w, std::sqrt(2.0 / static_cast<double>(arch.flatten_dim())));
  fill(p.fc2_w, std::sqrt(2.0 / (arch.d_emb + kNumClasses)));
  return p;
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for_each([&](const Tensor& t) { n += t.size(); });
  return n;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each([&](const Tensor& t) {
    for (double v : t.values()) ok = ok && std::isfinite(v);
  });
  return ok;
}

void ModelParams::axpy(double alpha, const ModelParams& other) {
  require(arch == other.arch, "axpy: architecture mismatch");
  std::vector<const Tensor*> src;
  other.for_each([&](const Tensor& t) { src.push_back(&t); });
  std::size_t k = 0;
  for_each([&](Tensor& t) {
    const Tensor& o = *src[k++];
    double* d = t.data();
    const double* s = o.data();
    for (std::size_t i = 0; i < t.size(); ++i) d[i] += alpha * s[i];
  });
}

double ModelParams::l2_norm() const {
  double sum = 0.0;
  for_each([&](const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i) sum += t.data()[i] * t.data()[i];
  });
  return std::sqrt(sum);
}

void ModelParams::scale(double alpha) {
  for_each([&](Tensor& t) {
    for (double& v : t.values()) v *= alpha;
  });
}

// ---------------------------------------------------------------------------

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require(input.rank() == 4, "conv2d: input must be rank 4, got " + shape_str(input.shape()));
  require(weights.rank() == 4 && weights.dim(2) == 3 && weights.dim(3) == 3 &&
              weights.dim(1) == input.dim(1),
          "conv2d: weights " + shape_str(weights.shape()) + " do not match input " +
              shape_str(input.shape()));
  require(bias.rank() == 1 && bias.dim(0) == weights.dim(0), "conv2d: bias size mismatch");
  const std::size_t N = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Co = weights.dim(0);
  Tensor out({N, Co, H, W});
  const std::size_t plane = H * W;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t co = 0; co < Co; ++co) {
      double* o = out.data() + (n * Co + co) * plane;
      std::fill(o, o + plane, bias.data()[co]);
      for (std::size_t ci = 0; ci < Ci; ++ci) {
        const double* x = input.data() + (n * Ci + ci) * plane;
        const double* k = weights.data() + (co * Ci + ci) * 9;
        for (std::size_t h = 0; h < H; ++h) {
          double* orow = o + h * W;
          for (int kh = 0; kh < 3; ++kh) {
            const long hh = static_cast<long>(h) + kh - 1;
            if (hh < 0 || hh >= static_cast<long>(H)) continue;
            const double* xrow = x + hh * W;
            // Left tap (x-1), center, right tap (x+1) with zero padding.
            const double k0 = k[kh * 3], k1 = k[kh * 3 + 1], k2 = k[kh * 3 + 2];
            for (std::size_t w = 1; w < W; ++w) orow[w] += k0 * xrow[w - 1];
            for (std::size_t w = 0; w < W; ++w) orow[w] += k1 * xrow[w];
            for (std::size_t w = 0; w + 1 < W; ++w) orow[w] += k2 * xrow[w + 1];
          }
        }
      }
    }
  }
  return out;
}

void conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output,
                     Tensor* grad_input, Tensor& grad_w, Tensor& grad_b) {
  const std::size_t N = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Co = weights.dim(0);
  require(grad_output.rank() == 4 && grad_output.dim(0) == N && grad_output.dim(1) == Co &&
              grad_output.dim(2) == H && grad_output.dim(3) == W,
          "conv2d_backward: grad_output shape mismatch");
  require(grad_w.shape() == weights.shape() && grad_b.dim(0) == Co,
          "conv2d_backward: gradient buffer shape mismatch");
  if (grad_input) {
    require(grad_input->shape() == input.shape(), "conv2d_backward: grad_input shape mismatch");
  }
  const std::size_t plane = H * W;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t co = 0; co < Co; ++co) {
      const double* g = grad_output.data() + (n * Co + co) * plane;
      double gb = 0.0;
      for (std::size_t i = 0; i < plane; ++i) gb += g[i];
      grad_b.data()[co] += gb;
      for (std::size_t ci = 0; ci < Ci; ++ci) {
        const double* x = input.data() + (n * Ci + ci) * plane;
        const double* k = weights.data() + (co * Ci + ci) * 9;
        double* gk = grad_w.data() + (co * Ci + ci) * 9;
        double* gx = grad_input ? grad_input->data() + (n * Ci + ci) * plane : nullptr;
        for (int kh = 0; kh < 3; ++kh) {
          double s0 = 0.0, s1 = 0.0, s2 = 0.0;
          const double k0 = k[kh * 3], k1 = k[kh * 3 + 1], k2 = k[kh * 3 + 2];
          for (std::size_t h = 0; h < H; ++h) {
            const long hh = static_cast<long>(h) + kh - 1;
            if (hh < 0 || hh >= static_cast<long>(H)) continue;
            const double* grow = g + h * W;
            const double* xrow = x + hh * W;
            for (std::size_t w = 1; w < W; ++w) s0 += grow[w] * xrow[w - 1];
            for (std::size_t w = 0; w < W; ++w) s1 += grow[w] * xrow[w];
            for (std::size_t w = 0; w + 1 < W; ++w) s2 += grow[w] * xrow[w + 1];
            if (gx) {
              double* gxrow = gx + hh * W;
              for (std::size_t w = 1; w < W; ++w) gxrow[w - 1] += k0 * grow[w];
              for (std::size_t w = 0; w < W; ++w) gxrow[w] += k1 * grow[w];
              for (std::size_t w = 0; w + 1 < W; ++w) gxrow[w + 1] += k2 * grow[w];
            }
          }
          gk[kh * 3] += s0;
          gk[kh * 3 + 1] += s1;
          gk[kh * 3 + 2] += s2;
        }
      }
    }
  }
}

PoolResult maxpool2x2_forward(const Tensor& input) {
  require(input.rank() == 4, "maxpool: input must be rank 4");
  const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Ho = H / 2, Wo = W / 2;
  PoolResult r{Tensor({N, C, Ho, Wo}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const std::size_t base = nc * H * W;
    for (std::size_t h = 0; h < Ho; ++h) {
      for (std::size_t w = 0; w < Wo; ++w, ++o) {
        const std::size_t cand[4] = {base + 2 * h * W + 2 * w, base + 2 * h * W + 2 * w + 1,
                                     base + (2 * h + 1) * W + 2 * w,
                                     base + (2 * h + 1) * W + 2 * w + 1};
        std::size_t best = cand[0];
        for (int i = 1; i < 4; ++i) {
          if (input.data()[cand[i]] > input.data()[best]) best = cand[i];
        }
        r.output.data()[o] = input.data()[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const Tensor& grad_output, const std::vector<std::uint32_t>& argmax,
                           const std::vector<std::size_t>& input_shape) {
  require(argmax.size() == grad_output.size(), "maxpool_backward: argmax/grad size mismatch");
  Tensor g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g.data()[argmax[i]] += grad_output.data()[i];
  return g;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    const auto z = logits.row(n);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) s += (p(n, k) = std::exp(z[k] - m));
    for (std::size_t k = 0; k < z.size(); ++k) p(n, k) /= s;
  }
  return p;
}

ForwardResult forward(const ModelParams& params, const Tensor& batch) {
  const Architecture& a = params.arch;
  require(batch.rank() == 4 && batch.dim(1) == 1 && batch.dim(2) == a.frames &&
              batch.dim(3) == a.mels,
          "forward: batch " + shape_str(batch.shape()) + " does not match N x 1 x " +
              std::to_string(a.frames) + " x " + std::to_string(a.mels));
  ForwardResult r;
  ForwardTrace& t = r.trace;
  t.arch = a;
  t.batch = batch.dim(0);
  t.input = batch;
  const Tensor* x = &t.input;
  for (std::size_t i = 0; i < 3; ++i) {
    t.conv_out[i] = conv2d_forward(*x, params.conv_w[i], params.conv_b[i]);
    relu_inplace(t.conv_out[i]);
    t.pooled[i] = maxpool2x2_forward(t.conv_out[i]);
    x = &t.pooled[i].output;
  }

  const std::size_t N = t.batch, F = a.flatten_dim(), D = a.d_emb;
  t.embedding = Matrix(N, D);
  for (std::size_t n = 0; n < N; ++n) {
    const double* f = x->data() + n * F;
    for (std::size_t j = 0; j < D; ++j) {
      const double* wr = params.fc1_w.data() + j * F;
      double s = params.fc1_b.data()[j];
      for (std::size_t i = 0; i < F; ++i) s += wr[i] * f[i];
      t.embedding(n, j) = s > 0.0 ? s : 0.0;
    }
  }
  t.logits = Matrix(N, kNumClasses);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      double s = params.fc2_b.data()[k];
      for (std::size_t j = 0; j < D; ++j) s += params.fc2_w.data()[k * D + j] * t.embedding(n, j);
      t.logits(n, k) = s;
    }
  }
#ifndef NDEBUG
  for (double v : t.logits.data()) assert(std::isfinite(v));
#endif
  r.probs = softmax(t.logits);
  return r;
}

std::vector<double> keyword_posteriors(const ModelParams& params, const Tensor& batch) {
  const ForwardResult r = forward(params, batch);
  std::vector<double> out(r.probs.rows());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = r.probs(n, kKeywordClass);
  return out;
}

ParamGradients backward(const ForwardTrace& trace, const ModelParams& params,
                        const Matrix& grad_logits, const Matrix* grad_embedding) {
  require(trace.arch == params.arch, "backward: trace was produced by a different architecture");
  require(trace.embedding.rows() == trace.batch && grad_logits.rows() == trace.batch &&
              grad_logits.cols() == kNumClasses,
          "backward: gradient rows do not match the traced batch");
  const Architecture& a = params.arch;
  const std::size_t N = trace.batch, F = a.flatten_dim(), D = a.d_emb;
  if (grad_embedding) {
    require(grad_embedding->rows() == N && grad_embedding->cols() == D,
            "backward: embedding gradient must be batch x d_emb");
  }
  ParamGradients g = ParamGradients::zeros(a);

  Matrix gh(N, D);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const double gl = grad_logits(n, k);
      g.fc2_b.data()[k] += gl;
      for (std::size_t j = 0; j < D; ++j) {
        g.fc2_w.data()[k * D + j] += gl * trace.embedding(n, j);
        gh(n, j) += gl * params.fc2_w.data()[k * D + j];
      }
    }
    for (std::size_t j = 0; j < D; ++j) {
      if (grad_embedding) gh(n, j) += (*grad_embedding)(n, j);
      if (!(trace.embedding(n, j) > 0.0)) gh(n, j) = 0.0;
    }
  }

  const Tensor& flat = trace.pooled[2].output;
  Tensor gpool(flat.shape());
  for (std::size_t n = 0; n < N; ++n) {
    const double* f = flat.data() + n * F;
    double* gf = gpool.data() + n * F;
    for (std::size_t j = 0; j < D; ++j) {
      const double gj = gh(n, j);
      if (gj == 0.0) continue;
      g.fc1_b.data()[j] += gj;
      double* gw = g.fc1_w.data() + j * F;
      const double* w = params.fc1_w.data() + j * F;
      for (std::size_t i = 0; i < F; ++i) {
        gw[i] += gj * f[i];
        gf[i] += gj * w[i];
      }
    }
  }

  for (std::size_t li = 3; li-- > 0;) {
    Tensor gconv = maxpool2x2_backward(gpool, trace.pooled[li].argmax, trace.conv_out[li].shape());
    relu_mask(gconv, trace.conv_out[li]);
    const Tensor& in = li == 0 ? trace.input : trace.pooled[li - 1].output;
    if (li == 0) {
      conv2d_backward(in, params.conv_w[li], gconv, nullptr, g.conv_w[li], g.conv_b[li]);
    } else {
      Tensor gin(in.shape());
      conv2d_backward(in, params.conv_w[li], gconv, &gin, g.conv_w[li], g.conv_b[li]);
      gpool = std::move(gin);
    }
  }
  return g;
}

CrossEntropy softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  require(labels.size() == logits.rows() && logits.cols() == kNumClasses,
          "cross entropy: labels/logits size mismatch");
  CrossEntropy ce;
  ce.grad_logits = Matrix(logits.rows(), kNumClasses);
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t n = 0; n < logits.rows(); ++n) {
    const double z0 = logits(n, 0), z1 = logits(n, 1);
    const double m = std::max(z0, z1);
    const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
    const int y = labels[n];
    require(y == 0 || y == 1, "cross entropy: labels must be 0 or 1");
    ce.loss += (lse - (y ? z1 : z0)) * inv_n;
    const double p1 = std::exp(z1 - lse), p0 = std::exp(z0 - lse);
    ce.grad_logits(n, 0) = (p0 - (y == 0 ? 1.0 : 0.0)) * inv_n;
    ce.grad_logits(n, 1) = (p1 - (y == 1 ? 1.0 : 0.0)) * inv_n;
  }
  return ce;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  BinaryWriter w;
  w.bytes("KWSM", 4);
  w.u32(kCheckpointVersion);
  const Architecture& a = params.arch;
  for (std::uint32_t v : {a.c1, a.c2, a.c3, a.d_emb, a.frames, a.mels}) w.u32(v);
  params.for_each([&](const Tensor& t) {
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f64(v);
  });
  w.save(path);
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  BinaryReader r(path);
  if (!r.magic("KWSM")) throw IoError("not a model checkpoint (bad magic): " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + "): " + path.string());
  }
  Architecture a;
  a.c1 = r.u32();
  a.c2 = r.u32();
  a.c3 = r.u32();
  a.d_emb = r.u32();
  a.frames = r.u32();
  a.mels = r.u32();
  ModelParams p;
  try {
    p = ModelParams::zeros(a);
  } catch (const ValidationError& e) {
    throw IoError(std::string("corrupt checkpoint descriptor: ") + e.what());
  }
  p.for_each([&](Tensor& t) {
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u32();
    if (shape != t.shape()) {
      throw IoError("checkpoint tensor shape " + shape_str(shape) + " does not match descriptor " +
                    shape_str(t.shape()) + ": " + path.string());
    }
    for (double& v : t.values()) v = r.f64();
  });
  r.expect_end();
  return p;
}

}  // namespace kws
