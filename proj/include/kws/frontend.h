// kws/frontend.h

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

#ifndef KWS_FRONTEND_H_
#define KWS_FRONTEND_H_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <vector>

#include "kws/common.h"
#include "kws/corpus.h"

namespace kws {

inline constexpr double kFrameLenS = 0.050;
inline constexpr double kFrameShiftS = 0.025;
inline constexpr std::size_t kNumMels = 80;
inline constexpr std::size_t kSegmentFrames = 121;
inline constexpr double kLogFloor = 1e-10;

/// Log-mel features, frames x 80.
struct FeatureMatrix {
  Matrix values;

  std::size_t frames() const { return values.rows(); }
};

/// A fixed 121 x 80 model input.
struct FeatureSegment {
  Matrix values{kSegmentFrames, kNumMels};
};

/// Triangular filters stored densely (n_mels x (n_fft/2 + 1)) together with
/// each row's nonzero support [first_bin, last_bin].
struct MelFilterbank {
  Matrix weights;
  std::vector<std::size_t> first_bin;
  std::vector<std::size_t> last_bin;
  std::vector<std::size_t> center_bin;
  double f_min = 0.0;
  double f_max = 0.0;
  int sample_rate = 0;
  std::size_t n_fft = 0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centers are spaced uniformly on the 2595*log10(1 + f/700) scale and
/// snapped to FFT bins; each filter is 1 at its center bin.
MelFilterbank build_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels,
                               double f_min, double f_max);

/// Frame count for `length` samples: floor((L - W) / S) + 1, or 0 if L < W.
std::size_t num_frames(std::size_t length, int sample_rate);
std::size_t frame_length_samples(int sample_rate);
std::size_t frame_shift_samples(int sample_rate);

/// Reusable extractor for one sample rate. Per frame: mean removal, Hann
/// window, |DFT|^2 over n_fft points, mel projection, ln(energy + 1e-10).
/// featurize() is const and safe to call concurrently.
class Featurizer {
 public:
  explicit Featurizer(int sample_rate = 16000);
  ~Featurizer();
  Featurizer(const Featurizer&) = delete;
  Featurizer& operator=(const Featurizer&) = delete;

  FeatureMatrix featurize(const WaveformBuffer& buf) const;
  const MelFilterbank& filterbank() const { return bank_; }
  int sample_rate() const { return sample_rate_; }

 private:
  struct Plan;
  int sample_rate_;
  std::size_t win_;
  std::size_t shift_;
  std::size_t n_fft_;
  std::vector<double> window_;
  MelFilterbank bank_;
  std::unique_ptr<Plan> plan_;
};

/// Convenience wrapper using a shared Featurizer per sample rate.
FeatureMatrix featurize(const WaveformBuffer& buf);

/// Rows [onset, onset + 121). Throws ValidationError when out of range.
FeatureSegment cut_segment(const FeatureMatrix& feat, std::size_t onset_frame);

/// Copy of `feat` extended to at least `min_frames` rows with the silence
/// value ln(1e-10).
FeatureMatrix pad_frames(const FeatureMatrix& feat, std::size_t min_frames);

/// Flat dump: "KWSF", u32 rows, u32 cols, u32 reserved (0), then row-major
/// little-endian float64 values.
void write_features(const Matrix& values, const std::filesystem::path& path);
Matrix read_features(const std::filesystem::path& path);

}  // namespace kws

#endif  // KWS_FRONTEND_H_
