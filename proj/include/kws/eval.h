// kws/eval.h

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

// Detection-error-tradeoff evaluation. False rejection rate is the fraction of
// positive utterances whose confidence is below the threshold; false alarms
// per hour is the number of negative utterances at or above the threshold,
// divided by the total duration of the negative-side test audio in hours.

#ifndef KWS_EVAL_H_
#define KWS_EVAL_H_

#include <string>
#include <string_view>
#include <vector>

#include "kws/corpus.h"
#include "kws/detector.h"
#include "kws/nn.h"

namespace kws {

struct DetCurvePoint {
  double threshold = 0.0;
  double fr_rate = 0.0;
  double fa_per_hour = 0.0;
};

/// One point per distinct confidence, plus one sentinel just below the
/// smallest (FR = 0) and one just above the largest (FA = 0). Points are in
/// ascending threshold order.
std::vector<DetCurvePoint> sweep(const std::vector<double>& positive_conf,
                                 const std::vector<double>& negative_conf,
                                 double negative_hours);

struct OperatingPoint {
  double fr_rate = 0.0;
  double threshold = 0.0;
  bool interpolated = false;
  bool below_target = false;  // every point has FA < target
  bool above_target = false;  // every point has FA > target
};

/// FR at a false-alarm target. An exact FA match returns its FR (lowest
/// threshold among ties); otherwise FR is linearly interpolated in FA between
/// the two adjacent points that bracket the target, and the lower of their
/// thresholds is reported.
OperatingPoint fr_at_fa(const std::vector<DetCurvePoint>& curve, double target_fa_per_hour = 1.0);

enum class TestSet { kReal, kRealPlusConfusion };
std::string_view to_string(TestSet set);
TestSet parse_test_set(std::string_view s);

/// Entries that belong to a test set: real positives and real negatives, plus
/// confusion utterances (as negatives) for the extended set. Synthetic
/// negatives never enter a test set.
std::vector<std::size_t> test_entries(const std::vector<ManifestEntry>& entries, TestSet set);

struct ScoredUtterance {
  std::string utterance_id;
  bool positive = false;
  double duration_s = 0.0;
  double confidence = 0.0;
};

/// Scores every listed entry from its audio file.
std::vector<ScoredUtterance> score_entries(const ModelParams& params, const Manifest& manifest,
                                           const std::vector<std::size_t>& which,
                                           const DetectorConfig& detector, int jobs);

struct EvalResult {
  TestSet test_set = TestSet::kReal;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  double negative_hours = 0.0;
  std::vector<DetCurvePoint> curve;
  OperatingPoint at_target;
  double target_fa_per_hour = 1.0;
};

/// Builds the curve from scored utterances. Throws ValidationError if either
/// side is empty.
EvalResult evaluate_scores(const std::vector<ScoredUtterance>& scores, TestSet set,
                           double target_fa_per_hour = 1.0);

std::string format_det_csv(const std::vector<DetCurvePoint>& curve);

/// Score files round-trip through "id,label,duration_s,confidence".
std::string format_scores_csv(const std::vector<ScoredUtterance>& scores);
std::vector<ScoredUtterance> parse_scores_csv(std::string_view text);

struct ReportRow {
  std::string setup;
  std::string test_set;
  double fr_percent = 0.0;
  double threshold = 0.0;
  bool below_target = false;
  bool above_target = false;
};

ReportRow make_report_row(const std::string& setup, const EvalResult& result);

/// Table with one line per training setup and one column per test set.
std::string format_report_table(const std::vector<ReportRow>& rows, double target_fa_per_hour);
std::string format_report_csv(const std::vector<ReportRow>& rows, double target_fa_per_hour);

}  // namespace kws

#endif  // KWS_EVAL_H_
