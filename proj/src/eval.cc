// eval.cc

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

#include "kws/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "kws/frontend.h"

namespace kws {

std::vector<DetCurvePoint> sweep(const std::vector<double>& positive_conf,
                                 const std::vector<double>& negative_conf,
                                 double negative_hours) {
  if (positive_conf.empty() || negative_conf.empty()) {
    throw ValidationError("sweep: need at least one positive and one negative score");
  }
  if (!(negative_hours > 0.0) || !std::isfinite(negative_hours)) {
    throw ValidationError("sweep: negative audio duration must be positive");
  }
  std::vector<double> pos(positive_conf), neg(negative_conf);
  for (double x : pos) {
    if (!std::isfinite(x)) throw NumericError("sweep: non-finite positive confidence");
  }
  for (double x : neg) {
    if (!std::isfinite(x)) throw NumericError("sweep: non-finite negative confidence");
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> thresholds(pos);
  thresholds.insert(thresholds.end(), neg.begin(), neg.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const double inf = std::numeric_limits<double>::infinity();
  thresholds.insert(thresholds.begin(), std::nextafter(thresholds.front(), -inf));
  thresholds.push_back(std::nextafter(thresholds.back(), inf));

  std::vector<DetCurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    // FR counts conf < t; FA counts conf >= t.
    const auto n_rej = std::lower_bound(pos.begin(), pos.end(), t) - pos.begin();
    const auto n_fa = neg.end() - std::lower_bound(neg.begin(), neg.end(), t);
    curve.push_back({t, static_cast<double>(n_rej) / static_cast<double>(pos.size()),
                     static_cast<double>(n_fa) / negative_hours});
  }
  return curve;
}

OperatingPoint fr_at_fa(const std::vector<DetCurvePoint>& curve, double target) {
  if (curve.empty()) throw ValidationError("fr_at_fa: empty curve");
  if (!(target >= 0.0)) throw ValidationError("fr_at_fa: target must be nonnegative");
  std::vector<DetCurvePoint> pts(curve);
  std::sort(pts.begin(), pts.end(),
            [](const DetCurvePoint& a, const DetCurvePoint& b) { return a.threshold < b.threshold; });

  OperatingPoint op;
  for (const auto& p : pts) {
    if (p.fa_per_hour == target) {
      op.fr_rate = p.fr_rate;
      op.threshold = p.threshold;
      return op;
    }
  }
  const bool all_below = std::all_of(pts.begin(), pts.end(),
                                     [&](const DetCurvePoint& p) { return p.fa_per_hour < target; });
  if (all_below) {
    op.fr_rate = pts.front().fr_rate;
    op.threshold = pts.front().threshold;
    op.below_target = true;
    return op;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const DetCurvePoint& a = pts[i];
    const DetCurvePoint& b = pts[i + 1];
    if (a.fa_per_hour > target && b.fa_per_hour < target) {
      const double w = (target - b.fa_per_hour) / (a.fa_per_hour - b.fa_per_hour);
      op.fr_rate = b.fr_rate + (a.fr_rate - b.fr_rate) * w;
      op.threshold = a.threshold;
      op.interpolated = true;
      return op;
    }
  }
  op.fr_rate = pts.back().fr_rate;
  op.threshold = pts.back().threshold;
  op.above_target = true;
  return op;
}

std::string_view to_string(TestSet set) {
  return set == TestSet::kReal ? "real" : "real+synt-cw";
}

TestSet parse_test_set(std::string_view s) {
  if (s == "real") return TestSet::kReal;
  if (s == "real+synt-cw") return TestSet::kRealPlusConfusion;
  throw ValidationError("unknown test set '" + std::string(s) +
                        "' (expected real | real+synt-cw | all)");
}

std::vector<std::size_t> test_entries(const std::vector<ManifestEntry>& entries, TestSet set) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    if (e.cluster == Cluster::kRealPos || e.cluster == Cluster::kRealNeg) {
      out.push_back(i);
    } else if (set == TestSet::kRealPlusConfusion && e.source() == Source::kConfusion) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<ScoredUtterance> score_entries(const ModelParams& params, const Manifest& manifest,
                                           const std::vector<std::size_t>& which,
                                           const DetectorConfig& detector, int jobs) {
  std::vector<ScoredUtterance> out(which.size());
  parallel_for(which.size(), static_cast<unsigned>(std::max(1, jobs)), [&](std::size_t k) {
    const ManifestEntry& e = manifest.entries.at(which[k]);
    const WaveformBuffer buf = read_wav(manifest.resolve(e));
    const DetectionResult r = score_utterance(params, featurize(buf), detector, e.utterance_id);
    out[k] = {e.utterance_id, e.label == Label::kPositive, buf.duration_s(), r.confidence};
  });
  return out;
}

EvalResult evaluate_scores(const std::vector<ScoredUtterance>& scores, TestSet set,
                           double target) {
  EvalResult r;
  r.test_set = set;
  r.target_fa_per_hour = target;
  std::vector<double> pos, neg;
  double neg_seconds = 0.0;
  for (const auto& s : scores) {
    if (s.positive) {
      pos.push_back(s.confidence);
    } else {
      neg.push_back(s.confidence);
      neg_seconds += s.duration_s;
    }
  }
  r.n_positive = pos.size();
  r.n_negative = neg.size();
  r.negative_hours = neg_seconds / 3600.0;
  r.curve = sweep(pos, neg, r.negative_hours);
  r.at_target = fr_at_fa(r.curve, target);
  return r;
}

std::string format_det_csv(const std::vector<DetCurvePoint>& curve) {
  std::string out = "threshold,fr_rate,fa_per_hour\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fr_rate, p.fa_per_hour);
    out += buf;
  }
  return out;
}

std::string format_scores_csv(const std::vector<ScoredUtterance>& scores) {
  std::string out = "id,label,duration_s,confidence\n";
  char buf[96];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, ",%s,%.17g,%.17g\n", s.positive ? "positive" : "negative",
                  s.duration_s, s.confidence);
    out += s.utterance_id + buf;
  }
  return out;
}

std::vector<ScoredUtterance> parse_scores_csv(std::string_view text) {
  std::vector<ScoredUtterance> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.rfind("id,", 0) == 0) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string tok; std::getline(ls, tok, ',');) f.push_back(tok);
    const std::string where = "scores line " + std::to_string(line_no) + ": ";
    if (f.size() != 4) throw ValidationError(where + "expected 4 comma-separated fields");
    ScoredUtterance s;
    s.utterance_id = f[0];
    s.positive = parse_label(f[1]) == Label::kPositive;
    try {
      std::size_t used = 0;
      s.duration_s = std::stod(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("trailing");
      s.confidence = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw ValidationError(where + "malformed number");
    }
    out.push_back(std::move(s));
  }
  return out;
}

ReportRow make_report_row(const std::string& setup, const EvalResult& result) {
  return {setup,
          std::string(to_string(result.test_set)),
          100.0 * result.at_target.fr_rate,
          result.at_target.threshold,
          result.at_target.below_target,
          result.at_target.above_target};
}

namespace {

std::string cell(const ReportRow& r) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f%s", r.fr_percent,
                r.below_target ? "*" : (r.above_target ? "+" : ""));
  return buf;
}

}  // namespace

std::string format_report_table(const std::vector<ReportRow>& rows, double target) {
  std::vector<std::string> setups;
  std::map<std::pair<std::string, std::string>, const ReportRow*> at;
  for (const auto& r : rows) {
    if (std::find(setups.begin(), setups.end(), r.setup) == setups.end()) setups.push_back(r.setup);
    at[{r.setup, r.test_set}] = &r;
  }
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "# FR (%%) at %g FA/hour\n", target);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-30s %14s %14s\n", "training setup", "real", "real+synt-cw");
  out += buf;
  for (const auto& s : setups) {
    std::string cols[2];
    const char* names[2] = {"real", "real+synt-cw"};
    for (int c = 0; c < 2; ++c) {
      auto it = at.find({s, names[c]});
      cols[c] = it == at.end() ? "-" : cell(*it->second);
    }
    std::snprintf(buf, sizeof buf, "%-30s %14s %14s\n", s.c_str(), cols[0].c_str(),
                  cols[1].c_str());
    out += buf;
  }
  out += "# '*' = every operating point is below the target (FR at the lowest threshold)\n";
  out += "# '+' = every operating point is above the target\n";
  return out;
}

std::string format_report_csv(const std::vector<ReportRow>& rows, double target) {
  std::string out = "setup,test_set,fr_percent,threshold,target_fa_per_hour,below_target\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%s,%.17g,%.17g,%.17g,%d\n", r.test_set.c_str(), r.fr_percent,
                  r.threshold, target, r.below_target ? 1 : 0);
    out += r.setup + buf;
  }
  return out;
}

}  // namespace kws
