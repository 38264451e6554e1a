// frontend.cc

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

#include "kws/frontend.h"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>

#include "kws/binary_io.h"

namespace kws {

namespace {

// FFTW's planner is not thread-safe; execution on new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels,
                               double f_min, double f_max) {
  if (sample_rate <= 0) throw ValidationError("filterbank: sample rate must be positive");
  if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) {
    throw ValidationError("filterbank: n_fft must be a power of two");
  }
  if (n_mels == 0) throw ValidationError("filterbank: n_mels must be positive");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= sample_rate / 2.0)) {
    throw ValidationError("filterbank: need 0 <= f_min < f_max <= sample_rate/2");
  }
  const std::size_t n_bins = n_fft / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);

  std::vector<std::size_t> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1);
    const auto bin = static_cast<std::size_t>(std::llround(mel_to_hz(mel) / bin_hz));
    edges[i] = std::min(bin, n_bins - 1);
  }

  MelFilterbank bank;
  bank.weights = Matrix(n_mels, n_bins);
  bank.first_bin.resize(n_mels);
  bank.last_bin.resize(n_mels);
  bank.center_bin.resize(n_mels);
  bank.f_min = f_min;
  bank.f_max = f_max;
  bank.sample_rate = sample_rate;
  bank.n_fft = n_fft;
  for (std::size_t m = 0; m < n_mels; ++m) {
    const std::size_t left = edges[m], center = edges[m + 1], right = edges[m + 2];
    bank.weights(m, center) = 1.0;
    for (std::size_t k = left + 1; k < center; ++k) {
      bank.weights(m, k) = static_cast<double>(k - left) / static_cast<double>(center - left);
    }
    for (std::size_t k = center + 1; k < right; ++k) {
      bank.weights(m, k) = static_cast<double>(right - k) / static_cast<double>(right - center);
    }
    bank.center_bin[m] = center;
    bank.first_bin[m] = center;
    bank.last_bin[m] = center;
    while (bank.first_bin[m] > 0 && bank.weights(m, bank.first_bin[m] - 1) > 0.0) {
      --bank.first_bin[m];
    }
    while (bank.last_bin[m] + 1 < n_bins && bank.weights(m, bank.last_bin[m] + 1) > 0.0) {
      ++bank.last_bin[m];
    }
  }
  return bank;
}

std::size_t frame_length_samples(int sample_rate) {
  return static_cast<std::size_t>(std::llround(kFrameLenS * sample_rate));
}

std::size_t frame_shift_samples(int sample_rate) {
  return static_cast<std::size_t>(std::llround(kFrameShiftS * sample_rate));
}

std::size_t num_frames(std::size_t length, int sample_rate) {
  const std::size_t w = frame_length_samples(sample_rate);
  const std::size_t s = frame_shift_samples(sample_rate);
  if (length < w) return 0;
  return (length - w) / s + 1;
}

struct Featurizer::Plan {
  fftw_plan plan = nullptr;
};

Featurizer::Featurizer(int sample_rate)
    : sample_rate_(sample_rate),
      win_(frame_length_samples(sample_rate)),
      shift_(frame_shift_samples(sample_rate)),
      n_fft_(next_pow2(frame_length_samples(sample_rate))),
      plan_(std::make_unique<Plan>()) {
  if (sample_rate <= 0 || win_ < 2 || shift_ < 1) {
    throw ValidationError("featurizer: unsupported sample rate " + std::to_string(sample_rate));
  }
  window_.resize(win_);
  for (std::size_t n = 0; n < win_; ++n) {
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (win_ - 1));
  }
  bank_ = build_filterbank(sample_rate, n_fft_, kNumMels, 20.0, sample_rate / 2.0);

  std::lock_guard<std::mutex> lock(planner_mutex());
  double* in = fftw_alloc_real(n_fft_);
  fftw_complex* out = fftw_alloc_complex(n_fft_ / 2 + 1);
  plan_->plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft_), in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  if (!plan_->plan) throw std::runtime_error("featurizer: FFT planning failed");
}

Featurizer::~Featurizer() {
  if (plan_ && plan_->plan) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_->plan);
  }
}

FeatureMatrix Featurizer::featurize(const WaveformBuffer& buf) const {
  if (buf.sample_rate != sample_rate_) {
    throw ValidationError("featurize: buffer sample rate " + std::to_string(buf.sample_rate) +
                          " does not match featurizer rate " + std::to_string(sample_rate_));
  }
  if (buf.size() < win_) {
    throw ValidationError("featurize: buffer of " + std::to_string(buf.size()) +
                          " samples is shorter than one " + std::to_string(win_) +
                          "-sample window");
  }
  const std::size_t frames = num_frames(buf.size(), sample_rate_);
  const std::size_t n_bins = n_fft_ / 2 + 1;
  FeatureMatrix feat{Matrix(frames, kNumMels)};

  double* in = fftw_alloc_real(n_fft_);
  fftw_complex* out = fftw_alloc_complex(n_bins);
  std::vector<double> power(n_bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const float* src = buf.samples.data() + t * shift_;
    double mean = 0.0;
    for (std::size_t n = 0; n < win_; ++n) mean += src[n];
    mean /= static_cast<double>(win_);
    for (std::size_t n = 0; n < win_; ++n) in[n] = (src[n] - mean) * window_[n];
    std::fill(in + win_, in + n_fft_, 0.0);
    fftw_execute_dft_r2c(plan_->plan, in, out);
    for (std::size_t k = 0; k < n_bins; ++k) {
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    auto row = feat.values.row(t);
    for (std::size_t m = 0; m < kNumMels; ++m) {
      double e = 0.0;
      for (std::size_t k = bank_.first_bin[m]; k <= bank_.last_bin[m]; ++k) {
        e += bank_.weights(m, k) * power[k];
      }
      row[m] = std::log(e + kLogFloor);
    }
  }
  fftw_free(in);
  fftw_free(out);
  return feat;
}

FeatureMatrix featurize(const WaveformBuffer& buf) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Featurizer>> cache;
  const Featurizer* f = nullptr;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[buf.sample_rate];
    if (!slot) slot = std::make_unique<Featurizer>(buf.sample_rate);
    f = slot.get();
  }
  return f->featurize(buf);
}

FeatureSegment cut_segment(const FeatureMatrix& feat, std::size_t onset_frame) {
  if (feat.values.cols() != kNumMels) {
    throw ValidationError("cut_segment: feature matrix must have 80 columns");
  }
  if (onset_frame + kSegmentFrames > feat.frames()) {
    throw ValidationError("cut_segment: onset " + std::to_string(onset_frame) + " + 121 exceeds " +
                          std::to_string(feat.frames()) + " frames");
  }
  FeatureSegment seg;
  const auto& src = feat.values.data();
  std::copy(src.begin() + static_cast<std::ptrdiff_t>(onset_frame * kNumMels),
            src.begin() + static_cast<std::ptrdiff_t>((onset_frame + kSegmentFrames) * kNumMels),
            seg.values.data().begin());
  return seg;
}

FeatureMatrix pad_frames(const FeatureMatrix& feat, std::size_t min_frames) {
  if (feat.frames() >= min_frames) return feat;
  FeatureMatrix out{Matrix(min_frames, feat.values.cols(), std::log(kLogFloor))};
  std::copy(feat.values.data().begin(), feat.values.data().end(), out.values.data().begin());
  return out;
}

void write_features(const Matrix& values, const std::filesystem::path& path) {
  BinaryWriter w;
  w.bytes("KWSF", 4);
  w.u32(static_cast<std::uint32_t>(values.rows()));
  w.u32(static_cast<std::uint32_t>(values.cols()));
  w.u32(0);
  for (double v : values.data()) w.f64(v);
  w.save(path);
}

Matrix read_features(const std::filesystem::path& path) {
  BinaryReader r(path);
  if (!r.magic("KWSF")) throw IoError("not a feature dump (bad magic): " + path.string());
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  r.u32();
  Matrix m(rows, cols);
  for (double& v : m.data()) v = r.f64();
  r.expect_end();
  return m;
}

}  // namespace kws
