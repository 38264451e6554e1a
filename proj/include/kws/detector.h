// kws/detector.h

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

// Sliding-window keyword detection. The confidence of an utterance is the
// maximum keyword posterior over all windows of `arch.frames` frames starting
// at 0, stride, 2*stride, ... <= N - T; it triggers when confidence >= threshold.

#ifndef KWS_DETECTOR_H_
#define KWS_DETECTOR_H_

#include <string>
#include <vector>

#include "kws/corpus.h"
#include "kws/frontend.h"
#include "kws/nn.h"

namespace kws {

struct DetectorConfig {
  std::size_t stride = 1;
  double threshold = 0.5;
  std::size_t windows_per_forward = 32;

  void validate() const;
};

struct DetectionResult {
  std::string utterance_id;
  double confidence = 0.0;
  std::size_t best_window_start = 0;
  bool triggered = false;
  double threshold_used = 0.0;
};

/// Keyword posterior of every scored window, in start order. Inputs shorter
/// than one window are padded with the silence value and scored once.
std::vector<double> window_posteriors(const ModelParams& params, const FeatureMatrix& feat,
                                      const DetectorConfig& config);

/// Ties in the maximum resolve to the earliest window.
DetectionResult score_utterance(const ModelParams& params, const FeatureMatrix& feat,
                                const DetectorConfig& config, std::string utterance_id = {});

struct StreamConfig {
  double chunk_s = 3.0;
  double hop_s = 1.0;
  double refractory_s = 1.0;

  void validate(int sample_rate) const;
};

/// Featurizes once and scores chunks [k*hop, k*hop + chunk) for
/// k = 0 .. floor((L - chunk) / hop); one chunk when L <= chunk. Result ids
/// are "<id>#<k>".
std::vector<DetectionResult> detect_stream(const ModelParams& params, const WaveformBuffer& buf,
                                           const DetectorConfig& config,
                                           const StreamConfig& stream = {},
                                           const std::string& id = "stream");

/// Indices of triggered chunks that survive a refractory period: a trigger is
/// dropped if it falls within refractory_s of the last kept one. Detection
/// time is chunk start + best window start.
std::vector<std::size_t> stream_triggers(const std::vector<DetectionResult>& chunks,
                                         const StreamConfig& stream);

std::string format_detection_csv(const std::vector<DetectionResult>& results);

}  // namespace kws

#endif  // KWS_DETECTOR_H_
