// kws/trainer.h

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

#ifndef KWS_TRAINER_H_
#define KWS_TRAINER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kws/augment.h"
#include "kws/common.h"
#include "kws/corpus.h"
#include "kws/frontend.h"
#include "kws/nn.h"

namespace kws {

/// The six training recipes.
///   baseline       real positives + real negatives
///   mask           + 5 masked copies of every positive, labeled negative
///   synt-cw        + synthetic confusion words
///   synt-cw-neg    + synthetic confusion words + synthetic negatives
///   synt-cw-coral  synt-cw with the three-cluster CORAL term
///   full-coral     synt-cw-neg with the three-cluster CORAL term
enum class Setup { kBaseline, kMask, kSyntCw, kSyntCwNeg, kSyntCwCoral, kFullCoral };

std::string_view to_string(Setup setup);
/// Accepts the short names above and the long forms "real+mask",
/// "real+synt-cw", "real+synt-cw+synt-neg", "real+synt-cw+coral",
/// "real+synt-cw+synt-neg+coral". Throws ValidationError otherwise.
Setup parse_setup(std::string_view name);
const std::vector<std::string>& setup_names();

struct SetupTraits {
  bool masked = false;
  bool synt_cw = false;
  bool synt_neg = false;
  bool coral = false;
};
SetupTraits traits(Setup setup);

struct TrainConfig {
  Setup setup = Setup::kBaseline;
  int epochs = 100;
  double lr0 = 0.01;
  double momentum = 0.9;
  int plateau_patience = 3;
  double lr_decay = 0.5;
  double lr_min = 1e-5;
  std::size_t batch_size = 32;
  /// Per-batch samples of (real-pos, real-neg, synt-neg) for CORAL setups.
  /// All zero: proportional to cluster sizes, at least 2 each.
  std::array<std::size_t, 3> cluster_quota{0, 0, 0};
  /// Non-CORAL setups resample positives with replacement up to this share.
  double min_pos_fraction = 0.25;
  std::uint64_t seed = 1;
  Architecture arch;
  MaskSpec mask;
  unsigned jobs = 1;
  /// Samples per gradient chunk; fixes the floating-point summation order
  /// so results do not depend on `jobs`.
  std::size_t grad_chunk = 8;
  /// Gradients whose global L2 norm exceeds this are rescaled to it before
  /// the update; 0 disables clipping.
  double clip_norm = 5.0;
  int checkpoint_every = 0;
  std::filesystem::path out_dir;  // empty: no files written
  bool log_wall_time = false;     // wall_ms column is 0 unless set

  void validate() const;
};

/// One element of an epoch: a manifest entry, or masked copy `variant` of a
/// positive entry.
struct SampleRef {
  std::size_t entry = 0;
  int variant = -1;  // -1: the utterance itself
  int label = 0;     // 1 keyword, 0 otherwise
  Cluster cluster = Cluster::kRealNeg;

  bool operator==(const SampleRef&) const = default;
};

using BatchPlan = std::vector<SampleRef>;

/// Indices of manifest entries the setup trains on. Throws ValidationError
/// when the manifest lacks a cluster the setup needs.
std::vector<std::size_t> eligible_entries(const std::vector<ManifestEntry>& entries, Setup setup);

/// Sample order for one epoch. Pure function of (entries, config, epoch).
std::vector<BatchPlan> make_batches(const std::vector<ManifestEntry>& entries,
                                    const TrainConfig& config, std::size_t epoch);

/// Resolved per-cluster quota for a CORAL setup.
std::array<std::size_t, 3> resolve_quota(const std::array<std::size_t, 3>& cluster_sizes,
                                         const TrainConfig& config);

struct ClusterBatch {
  Tensor segments;  // N x 1 x 121 x 80
  std::vector<int> labels;
  std::vector<Cluster> clusters;
};

/// v <- momentum * v - lr * grad; params <- params + v. `grad` must have been
/// evaluated at the look-ahead point params + momentum * v.
void nesterov_step(ModelParams& params, const ParamGradients& grad, ModelParams& velocity,
                   double lr, double momentum);

/// params + momentum * velocity.
ModelParams lookahead(const ModelParams& params, const ModelParams& velocity, double momentum);

/// Plateau decay: when the mean epoch loss has not improved on the best so
/// far for `patience` consecutive epochs, lr <- max(lr * decay, lr_min).
class PlateauSchedule {
 public:
  explicit PlateauSchedule(const TrainConfig& config);
  double lr() const { return lr_; }
  /// Feeds one epoch's mean loss; returns the rate for the next epoch.
  double observe(double mean_loss);

 private:
  double lr_;
  double decay_;
  double lr_min_;
  int patience_;
  double best_;
  int bad_epochs_ = 0;
};

struct StepResult {
  double loss = 0.0;  // ce + ratio (ratio = 0 without CORAL)
  double ce = 0.0;
  double ratio = 0.0;
  ParamGradients grad;
};

/// Loss and gradients for one batch, chunked for deterministic parallelism.
StepResult compute_step(const ModelParams& params, const ClusterBatch& batch, bool coral,
                        std::size_t grad_chunk, unsigned jobs);

struct EpochLog {
  int epoch = 0;
  std::size_t step = 0;  // cumulative optimizer steps at the end of the epoch
  double ce = 0.0;       // mean over the epoch's steps
  double coral_ratio = 0.0;
  double lr = 0.0;       // rate used during the epoch
  double wall_ms = 0.0;
};

std::string format_log_csv(const std::vector<EpochLog>& log);

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

/// Utterances decoded and featurized once per run.
class TrainingData {
 public:
  TrainingData(const Manifest& manifest, const TrainConfig& config);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  /// Segment for a sample in a given epoch (negatives without an onset get
  /// an epoch-dependent random offset; masked variants get fresh noise).
  FeatureSegment segment(const SampleRef& ref, std::size_t epoch) const;
  ClusterBatch materialize(const BatchPlan& plan, std::size_t epoch) const;

 private:
  TrainConfig config_;
  std::vector<ManifestEntry> entries_;
  std::vector<FeatureMatrix> features_;
  std::vector<WaveformBuffer> audio_;  // positives, masked setups only
};

TrainResult train(const TrainConfig& config, const Manifest& manifest);

}  // namespace kws

#endif  // KWS_TRAINER_H_
