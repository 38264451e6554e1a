// acceptance.cc

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

// Acceptance run: prints one PASS/FAIL line per criterion 1-8 and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.
//
//   1  analytic vs central-difference gradients over >= 100 random trials
//   2  covariance / CORAL closed-form oracles
//   3  sliding-window detector vs brute force on 50 random utterances
//   4  DET sweep monotonicity, recount, interpolation example
//   5  masking contract over 1000 draws, 5 variants per positive
//   6  desk-scale experiment: baseline collapses on confusion words,
//      full-coral recovers (majority of 3 seeds)
//   7  CLI outputs byte-identical across repeats and --jobs 1 / --jobs 8
//   8  8-sample toy set reaches CE < 0.01 within 200 steps

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fixtures.h"
#include "gradcheck.h"
#include "kws/augment.h"
#include "kws/coral.h"
#include "kws/detector.h"
#include "kws/eval.h"
#include "kws/trainer.h"
#include "test_util.h"

#ifndef KWS_CLI_PATH
#error "KWS_CLI_PATH must name the kws binary"
#endif

namespace kws {
namespace {

namespace fs = std::filesystem;
using testing::ScratchDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 ---------------------------------------------------------------------

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(1, "acceptance-gradcheck"));
  testing::GradReport total;
  int trials = 0;
  auto run = [&](int n, const std::function<testing::GradReport()>& check) {
    for (int i = 0; i < n; ++i, ++trials) total.merge(check());
  };
  run(25, [&] { return testing::check_conv(rng); });
  run(25, [&] { return testing::check_pool(rng); });
  run(20, [&] { return testing::check_cross_entropy(rng); });
  run(20, [&] { return testing::check_joint_loss(rng); });
  run(10, [&] { return testing::check_network(rng, false); });
  run(10, [&] { return testing::check_network(rng, true); });
  const double secs = seconds_since(t0);
  return {trials >= 100 && total.max_rel < 1e-4 && secs < 60.0,
          std::to_string(trials) + " trials, " + std::to_string(total.checked) +
              " partials, " + fmt("max rel err %.3g, %.1f s", total.max_rel, secs)};
}

// --- 2 ---------------------------------------------------------------------

Outcome coral_oracles() {
  Matrix d(2, 2);
  d(0, 0) = 1;
  d(0, 1) = 2;
  d(1, 0) = 3;
  d(1, 1) = 4;
  const Matrix cov = covariance(d);
  Matrix twos(2, 2, 2.0);
  const bool exact = cov == twos;
  const double unit = coral_loss(twos, Matrix(2, 2, 0.0));
  Rng rng(derive_seed(2, "acceptance-coral"));
  const Matrix a = covariance(testing::random_matrix(9, 5, rng));
  const bool self_zero = coral_loss(a, a) == 0.0;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Matrix s = testing::random_matrix(uniform_index(rng, 3, 12), 4, rng);
    const Matrix t = testing::random_matrix(uniform_index(rng, 3, 12), 4, rng);
    const double c = uniform(rng, 0.1, 10.0);
    Matrix sc = s, tc = t;
    for (double& v : sc.data()) v *= c;
    for (double& v : tc.data()) v *= c;
    const double base = coral_loss(covariance(s), covariance(t));
    const double scaled = coral_loss(covariance(sc), covariance(tc));
    worst = std::max(worst, std::fabs(scaled - std::pow(c, 4) * base) / (std::pow(c, 4) * base));
  }
  const bool pass = exact && std::fabs(unit - 1.0) <= 1e-12 && self_zero && worst <= 1e-10;
  return {pass, std::string("cov exact: ") + (exact ? "yes" : "no") +
                    fmt(", coral(C,0) = %.15g, coral(A,A) = %g, c^4 worst rel %.3g", unit,
                        coral_loss(a, a), worst)};
}

// --- 3 ---------------------------------------------------------------------

Outcome detection_oracle() {
  Rng rng(derive_seed(3, "acceptance-detector"));
  const ModelParams params = ModelParams::random(testing::small_arch(), 33);
  int mismatches = 0;
  std::size_t windows = 0;
  for (int u = 0; u < 50; ++u) {
    const std::size_t frames = uniform_index(rng, 40, 200);
    const FeatureMatrix feat = testing::random_features(frames, rng);
    const DetectionResult got = score_utterance(params, feat, DetectorConfig{});

    const FeatureMatrix padded = pad_frames(feat, kSegmentFrames);
    double best = -1.0;
    std::size_t best_start = 0;
    for (std::size_t s = 0; s + kSegmentFrames <= padded.frames(); ++s, ++windows) {
      Tensor one({1, 1, kSegmentFrames, kNumMels});
      std::copy(padded.values.data().begin() + static_cast<std::ptrdiff_t>(s * kNumMels),
                padded.values.data().begin() +
                    static_cast<std::ptrdiff_t>((s + kSegmentFrames) * kNumMels),
                one.data());
      const double p = forward(params, one).probs(0, 1);
      if (p > best) {
        best = p;
        best_start = s;
      }
    }
    mismatches += !(got.confidence == best && got.best_window_start == best_start);
  }
  return {mismatches == 0, "50 utterances, " + std::to_string(windows) + " windows, " +
                               std::to_string(mismatches) + " mismatches"};
}

// --- 4 ---------------------------------------------------------------------

Outcome metric_properties() {
  Rng rng(derive_seed(4, "acceptance-metric"));
  int violations = 0, recounts = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(uniform_index(rng, 1, 80)), neg(uniform_index(rng, 1, 120));
    for (double& v : pos) v = std::round(uniform(rng, 0.0, 1.0) * 40.0) / 40.0;
    for (double& v : neg) v = uniform(rng, 0.0, 1.0);
    const double hours = uniform(rng, 0.05, 5.0);
    const auto curve = sweep(pos, neg, hours);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      violations += !(curve[i].threshold > curve[i - 1].threshold &&
                      curve[i].fr_rate >= curve[i - 1].fr_rate &&
                      curve[i].fa_per_hour <= curve[i - 1].fa_per_hour);
    }
    for (const auto& p : curve) {
      const auto fr = std::count_if(pos.begin(), pos.end(), [&](double c) { return c < p.threshold; });
      const auto fa = std::count_if(neg.begin(), neg.end(), [&](double c) { return c >= p.threshold; });
      violations += !(p.fr_rate == static_cast<double>(fr) / pos.size() &&
                      p.fa_per_hour == static_cast<double>(fa) / hours);
      ++recounts;
    }
  }
  const std::vector<DetCurvePoint> example = {
      {0.1, 0.0, 6.0}, {0.3, 0.1, 2.0}, {0.6, 0.3, 0.5}, {0.9, 0.8, 0.0}};
  const double fr = fr_at_fa(example, 1.0).fr_rate;
  const bool interp = std::fabs(fr - 0.2333333333) <= 1e-9;
  return {violations == 0 && interp, std::to_string(recounts) + " points recounted, " +
                                          std::to_string(violations) + " violations" +
                                          fmt(", interpolation example FR = %.10f", fr)};
}

// --- 5 ---------------------------------------------------------------------

Outcome masking_contract() {
  MaskSpec spec;
  Rng rng(derive_seed(5, "acceptance-mask"));
  int out_of_band = 0, touched = 0;
  double lo = 1.0, hi = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    WaveformBuffer buf;
    buf.samples.resize(uniform_index(rng, 4000, 64000));
    for (float& s : buf.samples) s = static_cast<float>(0.3 * gaussian(rng));
    const MaskedWaveform m = mask_waveform(buf, spec, rng);
    const double frac = static_cast<double>(m.span.length) / buf.size();
    lo = std::min(lo, frac);
    hi = std::max(hi, frac);
    out_of_band += !(frac >= 0.40 && frac <= 0.60);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      const bool inside = i >= m.span.start && i < m.span.start + m.span.length;
      if (!inside && m.audio.samples[i] != buf.samples[i]) {
        ++touched;
        break;
      }
    }
  }
  // Five variants per positive, both from the augmenter and in a mask epoch.
  WaveformBuffer one;
  one.samples.assign(16000, 0.1f);
  const bool batch5 = mask_batch(one, spec, "spk000-kw-000").size() == 5;
  const auto entries = testing::synthetic_entries(9, 40, 0, 0);
  TrainConfig c;
  c.setup = Setup::kMask;
  std::map<std::size_t, std::set<int>> variants;
  for (const auto& b : make_batches(entries, c, 0)) {
    for (const auto& s : b) {
      if (s.variant >= 0) variants[s.entry].insert(s.variant);
    }
  }
  bool five = variants.size() == 9;
  for (const auto& [e, v] : variants) five &= v.size() == 5;
  return {out_of_band == 0 && touched == 0 && batch5 && five,
          fmt("1000 draws, fraction in [%.4f, %.4f], ", lo, hi) + std::to_string(touched) +
              " draws altered outside the span, 5 variants: " + (batch5 && five ? "yes" : "no")};
}

// --- 6 ---------------------------------------------------------------------

struct SeedOutcome {
  double base_real = 0, base_cw = 0, coral_real = 0, coral_cw = 0;
  bool a = false, b = false;
};

std::pair<double, double> fr_both(const ModelParams& params, const Manifest& test) {
  double fr[2];
  const TestSet sets[2] = {TestSet::kReal, TestSet::kRealPlusConfusion};
  for (int k = 0; k < 2; ++k) {
    const auto scores = score_entries(params, test, test_entries(test.entries, sets[k]),
                                      DetectorConfig{}, static_cast<int>(default_jobs()));
    fr[k] = evaluate_scores(scores, sets[k], 1.0).at_target.fr_rate;
  }
  return {fr[0], fr[1]};
}

SeedOutcome desk_experiment(std::uint64_t seed, const fs::path& dir) {
  CorpusSpec train_spec;
  train_spec.n_speakers = 32;
  train_spec.n_pos = 20;
  train_spec.n_neg = 40;
  train_spec.n_confusion = 20;
  train_spec.n_synt_neg = 20;
  train_spec.seed = seed;
  CorpusSpec test_spec = train_spec;
  test_spec.n_speakers = 8;
  test_spec.first_speaker = 100;
  test_spec.n_synt_neg = 0;
  const Manifest train_m = generate_corpus(train_spec, dir / "train");
  const Manifest test_m = generate_corpus(test_spec, dir / "test");

  TrainConfig c;
  c.epochs = 15;
  c.arch.c1 = 8;
  c.arch.c2 = 8;
  c.arch.c3 = 16;
  c.arch.d_emb = 32;
  c.seed = seed;
  c.jobs = default_jobs();
  c.mask.seed = derive_seed(seed, "mask");

  SeedOutcome o;
  c.setup = Setup::kBaseline;
  std::tie(o.base_real, o.base_cw) = fr_both(train(c, train_m).params, test_m);
  c.setup = Setup::kFullCoral;
  std::tie(o.coral_real, o.coral_cw) = fr_both(train(c, train_m).params, test_m);
  o.a = o.base_cw >= 5.0 * o.base_real && o.base_cw > o.base_real;
  o.b = o.coral_cw <= 0.5 * o.base_cw;
  return o;
}

Outcome desk_scale() {
  const auto t0 = std::chrono::steady_clock::now();
  int passed = 0, run = 0;
  std::string detail;
  for (std::uint64_t seed : {11, 12, 13}) {
    ScratchDir dir("acceptance-desk-" + std::to_string(seed));
    const SeedOutcome o = desk_experiment(seed, dir.path());
    ++run;
    passed += o.a && o.b;
    std::printf("  seed %llu: baseline FR real %.2f%% / +cw %.2f%%; full-coral FR real %.2f%% / +cw %.2f%%; "
                "(a) %s (b) %s\n",
                static_cast<unsigned long long>(seed), 100 * o.base_real, 100 * o.base_cw,
                100 * o.coral_real, 100 * o.coral_cw, o.a ? "ok" : "no", o.b ? "ok" : "no");
    std::fflush(stdout);
    if (passed >= 2 || run - passed >= 2) break;  // majority decided
  }
  return {passed >= 2, std::to_string(passed) + "/" + std::to_string(run) + " seeds pass" +
                           fmt(", %.0f s", seconds_since(t0))};
}

// --- 7 ---------------------------------------------------------------------

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
  }
  return out;
}

bool pipeline(const fs::path& dir, const std::string& jobs) {
  const std::string bin = KWS_CLI_PATH;
  const std::string d = dir.string();
  const std::string common = " --seed 5 --jobs " + jobs + " 2>/dev/null >/dev/null";
  const std::vector<std::string> steps = {
      "gen-corpus --out " + d + "/corpus --speakers 2 --pos 4 --neg 4 --confusion 4 --synt-neg 4",
      "train --setup full-coral --manifest " + d + "/corpus/manifest.txt --out " + d +
          "/model --epochs 3 --channels 4,4,4 --emb 8 --checkpoint-every 1",
      "train --setup mask --manifest " + d + "/corpus/manifest.txt --out " + d +
          "/model-mask --epochs 2 --channels 4,4,4 --emb 8",
      "eval --model " + d + "/model/final --manifest " + d + "/corpus/manifest.txt --out " + d +
          "/eval --stride 4",
      "detect --model " + d + "/model/final --manifest " + d + "/corpus/manifest.txt --out " + d +
          "/detect.csv --stride 4",
      "det-curve --scores " + d + "/eval/scores_real+synt-cw.csv --out " + d + "/det.csv",
      "featurize --manifest " + d + "/corpus/manifest.txt --out " + d + "/feat",
      "augment --manifest " + d + "/corpus/manifest.txt --out " + d + "/aug",
  };
  for (const auto& s : steps) {
    if (std::system((bin + " " + s + common).c_str()) != 0) {
      std::printf("  command failed: kws %s\n", s.c_str());
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  ScratchDir dir("acceptance-determinism");
  const char* runs[3][2] = {{"a", "1"}, {"b", "8"}, {"c", "1"}};
  for (const auto& r : runs) {
    if (!pipeline(dir / r[0], r[1])) return {false, "a CLI command failed"};
  }
  const auto a = tree_bytes(dir / "a"), b = tree_bytes(dir / "b"), c = tree_bytes(dir / "c");
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    differing += !(b.count(name) && b.at(name) == bytes && c.count(name) && c.at(name) == bytes);
  }
  const bool same_sets = a.size() == b.size() && a.size() == c.size();
  return {same_sets && differing == 0 && a.size() > 0,
          std::to_string(a.size()) + " files compared over 3 runs, " + std::to_string(differing) +
              " differ"};
}

// --- 8 ---------------------------------------------------------------------

Outcome overfit() {
  ScratchDir dir("acceptance-overfit");
  const Manifest m = testing::toy_manifest(dir.path());
  const TrainResult r = train(testing::toy_config(200), m);
  std::size_t reached = 0;
  for (const auto& e : r.log) {
    if (e.ce < 0.01) {
      reached = e.step;
      break;
    }
  }
  return {reached > 0 && reached <= 200,
          reached ? "CE < 0.01 after " + std::to_string(reached) + " steps"
                  : fmt("final CE %.4g after 200 steps", r.log.back().ce)};
}

}  // namespace
}  // namespace kws

int main(int argc, char** argv) {
  using Check = kws::Outcome (*)();
  const std::pair<int, Check> all[] = {
      {1, kws::gradients},         {2, kws::coral_oracles},    {3, kws::detection_oracle},
      {4, kws::metric_properties}, {5, kws::masking_contract}, {6, kws::desk_scale},
      {7, kws::determinism},       {8, kws::overfit}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [n, check] : all) {
    if (!wanted.empty() && !wanted.count(n)) continue;
    kws::Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
