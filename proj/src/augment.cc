// augment.cc

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

#include "kws/augment.h"

#include <cmath>
#include <string>

namespace kws {

void MaskSpec::validate() const {
  if (!(ratio_min > 0.0 && ratio_min <= ratio_max && ratio_max < 1.0)) {
    throw ValidationError("mask spec: need 0 < ratio_min <= ratio_max < 1");
  }
  if (n_variants < 1) throw ValidationError("mask spec: n_variants must be >= 1");
  if (!(noise_rms >= 0.0) || !std::isfinite(noise_rms)) {
    throw ValidationError("mask spec: noise_rms must be a nonnegative number");
  }
}

std::size_t masked_length(double ratio, std::size_t total, const MaskSpec& spec) {
  const double n = static_cast<double>(total);
  const auto lo = static_cast<std::size_t>(std::ceil(spec.ratio_min * n - 1e-9));
  const auto hi = static_cast<std::size_t>(std::floor(spec.ratio_max * n + 1e-9));
  if (lo > hi || hi == 0) {
    throw ValidationError("mask: " + std::to_string(total) +
                          " units cannot hold a span within the ratio band");
  }
  const auto len = static_cast<std::size_t>(std::llround(ratio * n));
  return std::clamp(len, lo, hi);
}

MaskedWaveform mask_waveform(const WaveformBuffer& buf, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  if (buf.size() < 10) throw ValidationError("mask_waveform: buffer needs at least 10 samples");
  MaskedWaveform out{buf, {}};
  out.span.drawn_ratio = uniform(rng, spec.ratio_min, spec.ratio_max);
  out.span.length = masked_length(out.span.drawn_ratio, buf.size(), spec);
  out.span.start = uniform_index(rng, 0, buf.size() - out.span.length);
  for (std::size_t i = 0; i < out.span.length; ++i) {
    const double v = spec.noise_rms * gaussian(rng);
    out.audio.samples[out.span.start + i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return out;
}

MaskedWaveform mask_variant(const WaveformBuffer& buf, const MaskSpec& spec,
                            std::string_view utterance_id, int variant) {
  Rng rng(derive_seed(derive_seed(spec.seed, utterance_id), static_cast<std::uint64_t>(variant)));
  return mask_waveform(buf, spec, rng);
}

std::vector<WaveformBuffer> mask_batch(const WaveformBuffer& buf, const MaskSpec& spec,
                                       std::string_view utterance_id) {
  spec.validate();
  std::vector<WaveformBuffer> out;
  out.reserve(static_cast<std::size_t>(spec.n_variants));
  for (int k = 0; k < spec.n_variants; ++k) {
    out.push_back(mask_variant(buf, spec, utterance_id, k).audio);
  }
  return out;
}

MaskedSegment mask_feature(const FeatureSegment& seg, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  const Matrix& v = seg.values;
  double mean = 0.0;
  for (double x : v.data()) mean += x;
  mean /= static_cast<double>(v.data().size());
  double var = 0.0;
  for (double x : v.data()) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.data().size()));

  MaskedSegment out{seg, {}};
  out.span.drawn_ratio = uniform(rng, spec.ratio_min, spec.ratio_max);
  out.span.length = masked_length(out.span.drawn_ratio, v.rows(), spec);
  out.span.start = uniform_index(rng, 0, v.rows() - out.span.length);
  for (std::size_t t = out.span.start; t < out.span.start + out.span.length; ++t) {
    for (double& x : out.segment.values.row(t)) x = mean + sd * gaussian(rng);
  }
  return out;
}

}  // namespace kws
