// kws/augment.h

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

// Masked-keyword augmentation: a contiguous 40-60% span of a positive
// utterance is overwritten with Gaussian white noise, turning it into an
// incomplete keyword that the detector must reject.

#ifndef KWS_AUGMENT_H_
#define KWS_AUGMENT_H_

#include <cstdint>
#include <string_view>
#include <vector>

#include "kws/common.h"
#include "kws/corpus.h"
#include "kws/frontend.h"

namespace kws {

enum class MaskMode { kWaveform, kFeature };

struct MaskSpec {
  double ratio_min = 0.40;
  double ratio_max = 0.60;
  double noise_rms = 0.05;
  int n_variants = 5;
  MaskMode mode = MaskMode::kWaveform;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Where the noise went.
struct MaskSpan {
  std::size_t start = 0;
  std::size_t length = 0;
  double drawn_ratio = 0.0;
};

/// Span length for a drawn ratio: round(r * total), clamped into
/// [ceil(ratio_min * total), floor(ratio_max * total)] so the realised
/// fraction never leaves the configured band.
std::size_t masked_length(double ratio, std::size_t total, const MaskSpec& spec);

struct MaskedWaveform {
  WaveformBuffer audio;
  MaskSpan span;
};

MaskedWaveform mask_waveform(const WaveformBuffer& buf, const MaskSpec& spec, Rng& rng);

/// Masked copy number `variant` of an utterance; mask_batch()[k] equals
/// mask_variant(buf, spec, id, k).
MaskedWaveform mask_variant(const WaveformBuffer& buf, const MaskSpec& spec,
                            std::string_view utterance_id, int variant);

/// n_variants independent copies, seeded from (spec.seed, utterance_id, k).
std::vector<WaveformBuffer> mask_batch(const WaveformBuffer& buf, const MaskSpec& spec,
                                       std::string_view utterance_id);

struct MaskedSegment {
  FeatureSegment segment;
  MaskSpan span;  // in frames
};

/// Feature-domain variant: a block of frames is replaced with i.i.d. Gaussian
/// values matching the segment's own mean and standard deviation.
MaskedSegment mask_feature(const FeatureSegment& seg, const MaskSpec& spec, Rng& rng);

}  // namespace kws

#endif  // KWS_AUGMENT_H_
