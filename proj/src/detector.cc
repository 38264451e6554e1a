// detector.cc

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

#include "kws/detector.h"

#include <cmath>
#include <cstdio>

namespace kws {

void DetectorConfig::validate() const {
  if (stride < 1) throw ValidationError("detector: stride must be >= 1");
  if (windows_per_forward < 1) throw ValidationError("detector: windows_per_forward must be >= 1");
  if (!std::isfinite(threshold)) throw ValidationError("detector: threshold must be finite");
}

std::vector<double> window_posteriors(const ModelParams& params, const FeatureMatrix& feat,
                                      const DetectorConfig& config) {
  config.validate();
  const std::size_t win = params.arch.frames, mels = params.arch.mels;
  if (feat.frames() == 0) throw ValidationError("detector: empty feature matrix");
  if (feat.values.cols() != mels) {
    throw ValidationError("detector: features have " + std::to_string(feat.values.cols()) +
                          " columns, model expects " + std::to_string(mels));
  }
  const FeatureMatrix padded = pad_frames(feat, win);
  const std::size_t n_windows = (padded.frames() - win) / config.stride + 1;
  std::vector<double> post;
  post.reserve(n_windows);
  const std::size_t per = win * mels;
  for (std::size_t b = 0; b < n_windows; b += config.windows_per_forward) {
    const std::size_t e = std::min(n_windows, b + config.windows_per_forward);
    Tensor batch({e - b, 1, win, mels});
    for (std::size_t i = b; i < e; ++i) {
      const double* src = padded.values.data().data() + i * config.stride * mels;
      std::copy(src, src + per, batch.data() + (i - b) * per);
    }
    for (double p : keyword_posteriors(params, batch)) post.push_back(p);
  }
  return post;
}

DetectionResult score_utterance(const ModelParams& params, const FeatureMatrix& feat,
                                const DetectorConfig& config, std::string utterance_id) {
  const std::vector<double> post = window_posteriors(params, feat, config);
  std::size_t best = 0;
  for (std::size_t i = 1; i < post.size(); ++i) {
    if (post[i] > post[best]) best = i;
  }
  DetectionResult r;
  r.utterance_id = std::move(utterance_id);
  r.confidence = post[best];
  r.best_window_start = best * config.stride;
  r.threshold_used = config.threshold;
  r.triggered = r.confidence >= config.threshold;
  return r;
}

void StreamConfig::validate(int sample_rate) const {
  if (!(chunk_s > 0.0 && hop_s > 0.0 && refractory_s >= 0.0)) {
    throw ValidationError("stream: chunk and hop must be positive, refractory nonnegative");
  }
  const auto shift = static_cast<double>(frame_shift_samples(sample_rate));
  const double hop_samples = hop_s * sample_rate;
  if (std::fabs(hop_samples / shift - std::round(hop_samples / shift)) > 1e-9) {
    throw ValidationError("stream: hop must be a multiple of the 25 ms frame shift");
  }
}

std::vector<DetectionResult> detect_stream(const ModelParams& params, const WaveformBuffer& buf,
                                           const DetectorConfig& config,
                                           const StreamConfig& stream, const std::string& id) {
  stream.validate(buf.sample_rate);
  const FeatureMatrix feat = featurize(buf);
  const auto chunk = static_cast<std::size_t>(std::llround(stream.chunk_s * buf.sample_rate));
  const auto hop = static_cast<std::size_t>(std::llround(stream.hop_s * buf.sample_rate));
  const std::size_t shift = frame_shift_samples(buf.sample_rate);
  const std::size_t L = buf.size();
  const std::size_t n_chunks = L <= chunk ? 1 : (L - chunk) / hop + 1;

  std::vector<DetectionResult> out;
  for (std::size_t k = 0; k < n_chunks; ++k) {
    const std::size_t begin = k * hop;
    const std::size_t end = std::min(L, begin + chunk);
    const std::size_t first = begin / shift;
    const std::size_t frames = num_frames(end - begin, buf.sample_rate);
    if (frames == 0) break;
    FeatureMatrix part{Matrix(frames, feat.values.cols())};
    std::copy(feat.values.data().begin() + static_cast<std::ptrdiff_t>(first * feat.values.cols()),
              feat.values.data().begin() +
                  static_cast<std::ptrdiff_t>((first + frames) * feat.values.cols()),
              part.values.data().begin());
    out.push_back(score_utterance(params, part, config, id + "#" + std::to_string(k)));
  }
  return out;
}

std::vector<std::size_t> stream_triggers(const std::vector<DetectionResult>& chunks,
                                         const StreamConfig& stream) {
  std::vector<std::size_t> kept;
  double last = -1e300;
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    if (!chunks[k].triggered) continue;
    const double t = k * stream.hop_s + chunks[k].best_window_start * kFrameShiftS;
    if (t - last < stream.refractory_s) continue;
    kept.push_back(k);
    last = t;
  }
  return kept;
}

std::string format_detection_csv(const std::vector<DetectionResult>& results) {
  std::string out = "id,confidence,best_start_frame,triggered\n";
  char buf[96];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, ",%.17g,%zu,%d\n", r.confidence, r.best_window_start,
                  r.triggered ? 1 : 0);
    out += r.utterance_id + buf;
  }
  return out;
}

}  // namespace kws
