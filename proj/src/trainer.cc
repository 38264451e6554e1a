// trainer.cc

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

#include "kws/trainer.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "kws/coral.h"

namespace kws {

namespace {

struct SetupName {
  Setup setup;
  const char* short_name;
  const char* long_name;
};

constexpr SetupName kSetupNames[] = {
    {Setup::kBaseline, "baseline", "real"},
    {Setup::kMask, "mask", "real+mask"},
    {Setup::kSyntCw, "synt-cw", "real+synt-cw"},
    {Setup::kSyntCwNeg, "synt-cw-neg", "real+synt-cw+synt-neg"},
    {Setup::kSyntCwCoral, "synt-cw-coral", "real+synt-cw+coral"},
    {Setup::kFullCoral, "full-coral", "real+synt-cw+synt-neg+coral"},
};

std::size_t cluster_index(Cluster c) { return static_cast<std::size_t>(c); }

bool is_confusion(const ManifestEntry& e) {
  return e.cluster == Cluster::kSyntNeg && e.source() == Source::kConfusion;
}

}  // namespace

std::string_view to_string(Setup setup) {
  for (const auto& n : kSetupNames) {
    if (n.setup == setup) return n.short_name;
  }
  return "?";
}

const std::vector<std::string>& setup_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& n : kSetupNames) v.emplace_back(n.short_name);
    return v;
  }();
  return names;
}

Setup parse_setup(std::string_view name) {
  for (const auto& n : kSetupNames) {
    if (name == n.short_name || name == n.long_name) return n.setup;
  }
  std::string valid;
  for (const auto& n : kSetupNames) valid += std::string(valid.empty() ? "" : ", ") + n.short_name;
  throw ValidationError("unknown setup '" + std::string(name) + "'; valid setups: " + valid);
}

SetupTraits traits(Setup setup) {
  switch (setup) {
    case Setup::kBaseline: return {};
    case Setup::kMask: return {.masked = true};
    case Setup::kSyntCw: return {.synt_cw = true};
    case Setup::kSyntCwNeg: return {.synt_cw = true, .synt_neg = true};
    case Setup::kSyntCwCoral: return {.synt_cw = true, .coral = true};
    case Setup::kFullCoral: return {.synt_cw = true, .synt_neg = true, .coral = true};
  }
  return {};
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
  if (!(lr0 > 0.0)) throw ValidationError("train: lr0 must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("train: need 0 <= momentum < 1");
  if (plateau_patience < 1) throw ValidationError("train: plateau_patience must be >= 1");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ValidationError("train: need 0 < lr_decay <= 1");
  if (!(lr_min >= 0.0)) throw ValidationError("train: lr_min must be >= 0");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (grad_chunk < 1) throw ValidationError("train: grad_chunk must be >= 1");
  if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm)) {
    throw ValidationError("train: clip_norm must be a nonnegative number");
  }
  if (!(min_pos_fraction >= 0.0 && min_pos_fraction < 1.0)) {
    throw ValidationError("train: need 0 <= min_pos_fraction < 1");
  }
  if (traits(setup).coral) {
    if (batch_size < 6) throw ValidationError("train: CORAL setups need batch_size >= 6");
    const bool any = cluster_quota[0] || cluster_quota[1] || cluster_quota[2];
    if (any) {
      for (std::size_t q : cluster_quota) {
        if (q < 2) throw ValidationError("train: every CORAL cluster quota must be >= 2");
      }
    }
  }
  arch.validate();
  mask.validate();
}

std::vector<std::size_t> eligible_entries(const std::vector<ManifestEntry>& entries, Setup setup) {
  const SetupTraits t = traits(setup);
  std::vector<std::size_t> out;
  std::size_t pos = 0, neg = 0, cw = 0, sneg = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    bool take = false;
    switch (e.cluster) {
      case Cluster::kRealPos: take = true; ++pos; break;
      case Cluster::kRealNeg: take = true; ++neg; break;
      case Cluster::kSyntNeg:
        if (is_confusion(e)) {
          take = t.synt_cw;
          ++cw;
        } else {
          take = t.synt_neg;
          ++sneg;
        }
        break;
    }
    if (take) out.push_back(i);
  }
  const std::string who = "setup " + std::string(to_string(setup)) + " needs ";
  if (pos == 0) throw ValidationError(who + "real-pos entries; manifest has none");
  if (neg == 0) throw ValidationError(who + "real-neg entries; manifest has none");
  if (t.synt_cw && cw == 0) throw ValidationError(who + "synthetic confusion-word entries; manifest has none");
  if (t.synt_neg && sneg == 0) throw ValidationError(who + "synthetic negative entries; manifest has none");
  return out;
}

std::array<std::size_t, 3> resolve_quota(const std::array<std::size_t, 3>& sizes,
                                         const TrainConfig& config) {
  for (std::size_t c = 0; c < 3; ++c) {
    if (sizes[c] < 2) {
      throw ValidationError("CORAL batching needs at least 2 samples of cluster " +
                            std::string(to_string(static_cast<Cluster>(c))));
    }
  }
  if (config.cluster_quota[0] || config.cluster_quota[1] || config.cluster_quota[2]) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (config.cluster_quota[c] < 2) {
        throw ValidationError("CORAL quota needs at least 2 samples of every cluster per batch");
      }
    }
    return config.cluster_quota;
  }
  const double total = static_cast<double>(sizes[0] + sizes[1] + sizes[2]);
  std::array<std::size_t, 3> q{};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto share = static_cast<std::size_t>(
        std::llround(static_cast<double>(config.batch_size) * sizes[c] / total));
    q[c] = std::min(std::max<std::size_t>(share, 2), sizes[c]);
  }
  return q;
}

std::vector<BatchPlan> make_batches(const std::vector<ManifestEntry>& entries,
                                    const TrainConfig& config, std::size_t epoch) {
  const SetupTraits t = traits(config.setup);
  const std::vector<std::size_t> eligible = eligible_entries(entries, config.setup);
  Rng rng(derive_seed(config.seed, "epoch", epoch));

  std::vector<SampleRef> pool;
  for (std::size_t i : eligible) {
    const ManifestEntry& e = entries[i];
    pool.push_back({i, -1, e.label == Label::kPositive ? 1 : 0, e.cluster});
  }
  if (t.masked) {
    for (std::size_t i : eligible) {
      if (entries[i].label != Label::kPositive) continue;
      for (int k = 0; k < config.mask.n_variants; ++k) pool.push_back({i, k, 0, Cluster::kRealNeg});
    }
  }

  std::vector<BatchPlan> batches;
  if (!t.coral) {
    std::vector<SampleRef> positives;
    for (const auto& s : pool) {
      if (s.label == 1) positives.push_back(s);
    }
    const std::size_t n_pos = positives.size();
    const std::size_t n_neg = pool.size() - n_pos;
    const double f = config.min_pos_fraction;
    if (n_pos > 0 && static_cast<double>(n_pos) < f * static_cast<double>(pool.size())) {
      const auto wanted = static_cast<std::size_t>(std::ceil(f * n_neg / (1.0 - f)));
      for (std::size_t k = n_pos; k < wanted; ++k) {
        pool.push_back(positives[uniform_index(rng, 0, n_pos - 1)]);
      }
    }
    shuffle(pool, rng);
    for (std::size_t b = 0; b < pool.size(); b += config.batch_size) {
      const std::size_t e = std::min(pool.size(), b + config.batch_size);
      batches.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(b),
                           pool.begin() + static_cast<std::ptrdiff_t>(e));
    }
    return batches;
  }

  std::array<std::vector<SampleRef>, 3> groups;
  for (const auto& s : pool) groups[cluster_index(s.cluster)].push_back(s);
  const std::array<std::size_t, 3> sizes = {groups[0].size(), groups[1].size(), groups[2].size()};
  const std::array<std::size_t, 3> quota = resolve_quota(sizes, config);
  const bool explicit_quota = config.cluster_quota != std::array<std::size_t, 3>{0, 0, 0};
  if (explicit_quota) {
    // Exact quotas: as many batches as the slowest-draining cluster needs;
    // other clusters continue through fresh reshuffles of themselves, so
    // every sample is visited at least once and every batch holds exactly
    // quota[c] samples of cluster c.
    std::size_t n_batches = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      n_batches = std::max(n_batches, (sizes[c] + quota[c] - 1) / quota[c]);
    }
    batches.assign(n_batches, {});
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<SampleRef> stream;
      while (stream.size() < n_batches * quota[c]) {
        shuffle(groups[c], rng);
        stream.insert(stream.end(), groups[c].begin(), groups[c].end());
      }
      for (std::size_t j = 0; j < n_batches * quota[c]; ++j) batches[j / quota[c]].push_back(stream[j]);
    }
  } else {
    std::size_t n_batches = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < 3; ++c) n_batches = std::min(n_batches, sizes[c] / quota[c]);
    batches.assign(n_batches, {});
    for (std::size_t c = 0; c < 3; ++c) {
      shuffle(groups[c], rng);
      for (std::size_t j = 0; j < groups[c].size(); ++j) {
        // The first n_batches * quota samples fill the quotas; the rest are
        // spread round-robin so every sample is still visited exactly once.
        const std::size_t b =
            j < n_batches * quota[c] ? j / quota[c] : (j - n_batches * quota[c]) % n_batches;
        batches[b].push_back(groups[c][j]);
      }
    }
  }
  for (auto& b : batches) shuffle(b, rng);
  return batches;
}

// ---------------------------------------------------------------------------

void nesterov_step(ModelParams& params, const ParamGradients& grad, ModelParams& velocity,
                   double lr, double momentum) {
  if (!grad.all_finite()) throw NumericError("nesterov_step: non-finite gradient");
  velocity.scale(momentum);
  velocity.axpy(-lr, grad);
  params.axpy(1.0, velocity);
}

ModelParams lookahead(const ModelParams& params, const ModelParams& velocity, double momentum) {
  ModelParams out = params;
  if (momentum != 0.0) out.axpy(momentum, velocity);
  return out;
}

namespace {

Tensor slice_batch(const Tensor& t, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> shape = t.shape();
  const std::size_t per = t.size() / shape[0];
  shape[0] = end - begin;
  Tensor out(shape);
  std::copy(t.data() + begin * per, t.data() + end * per, out.data());
  return out;
}

}  // namespace

PlateauSchedule::PlateauSchedule(const TrainConfig& config)
    : lr_(config.lr0),
      decay_(config.lr_decay),
      lr_min_(config.lr_min),
      patience_(config.plateau_patience),
      best_(std::numeric_limits<double>::infinity()) {}

double PlateauSchedule::observe(double mean_loss) {
  if (mean_loss < best_) {
    best_ = mean_loss;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ >= patience_) {
    lr_ = std::max(lr_ * decay_, lr_min_);
    bad_epochs_ = 0;
  }
  return lr_;
}

StepResult compute_step(const ModelParams& params, const ClusterBatch& batch, bool coral,
                        std::size_t grad_chunk, unsigned jobs) {
  const std::size_t n = batch.labels.size();
  if (n == 0 || batch.segments.dim(0) != n) throw ValidationError("compute_step: empty or inconsistent batch");
  const std::size_t chunks = (n + grad_chunk - 1) / grad_chunk;
  std::vector<ForwardResult> fw(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t b = c * grad_chunk, e = std::min(n, b + grad_chunk);
    fw[c] = forward(params, slice_batch(batch.segments, b, e));
  });

  const std::size_t d = params.arch.d_emb;
  Matrix logits(n, kNumClasses), emb(n, d);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t b = c * grad_chunk;
    for (std::size_t r = 0; r < fw[c].trace.batch; ++r) {
      for (std::size_t k = 0; k < kNumClasses; ++k) logits(b + r, k) = fw[c].trace.logits(r, k);
      for (std::size_t j = 0; j < d; ++j) emb(b + r, j) = fw[c].trace.embedding(r, j);
    }
  }

  StepResult out;
  CrossEntropy ce = softmax_cross_entropy(logits, batch.labels);
  out.ce = ce.loss;
  out.loss = ce.loss;

  Matrix grad_emb;
  if (coral) {
    std::array<std::vector<std::size_t>, 3> rows;
    for (std::size_t i = 0; i < n; ++i) rows[cluster_index(batch.clusters[i])].push_back(i);
    std::array<Matrix, 3> feats;
    for (std::size_t c = 0; c < 3; ++c) {
      feats[c] = Matrix(rows[c].size(), d);
      for (std::size_t r = 0; r < rows[c].size(); ++r) {
        std::copy(emb.row(rows[c][r]).begin(), emb.row(rows[c][r]).end(), feats[c].row(r).begin());
      }
    }
    const JointLoss jl = joint_loss(ce.loss, feats[0], feats[1], feats[2]);
    out.ratio = jl.ratio;
    out.loss = jl.loss;
    grad_emb = Matrix(n, d);
    const Matrix* grads[3] = {&jl.grad_real_pos, &jl.grad_real_neg, &jl.grad_synt_neg};
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t r = 0; r < rows[c].size(); ++r) {
        std::copy(grads[c]->row(r).begin(), grads[c]->row(r).end(), grad_emb.row(rows[c][r]).begin());
      }
    }
  }

  std::vector<ParamGradients> partial(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    const std::size_t b = c * grad_chunk, rows_here = fw[c].trace.batch;
    Matrix gl(rows_here, kNumClasses);
    Matrix ge;
    for (std::size_t r = 0; r < rows_here; ++r) {
      for (std::size_t k = 0; k < kNumClasses; ++k) gl(r, k) = ce.grad_logits(b + r, k);
    }
    if (coral) {
      ge = Matrix(rows_here, d);
      for (std::size_t r = 0; r < rows_here; ++r) {
        std::copy(grad_emb.row(b + r).begin(), grad_emb.row(b + r).end(), ge.row(r).begin());
      }
    }
    partial[c] = backward(fw[c].trace, params, gl, coral ? &ge : nullptr);
  });
  out.grad = std::move(partial[0]);
  for (std::size_t c = 1; c < chunks; ++c) out.grad.axpy(1.0, partial[c]);
  return out;
}

std::string format_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,step,ce,coral_ratio,lr,wall_ms\n";
  char line[256];
  for (const auto& e : log) {
    std::snprintf(line, sizeof line, "%d,%zu,%.17g,%.17g,%.17g,%.0f\n", e.epoch, e.step, e.ce,
                  e.coral_ratio, e.lr, e.wall_ms);
    out += line;
  }
  return out;
}

// ---------------------------------------------------------------------------

TrainingData::TrainingData(const Manifest& manifest, const TrainConfig& config)
    : config_(config), entries_(manifest.entries) {
  const std::vector<std::size_t> eligible = eligible_entries(entries_, config.setup);
  const bool keep_audio = traits(config.setup).masked;
  features_.resize(entries_.size());
  audio_.resize(entries_.size());
  parallel_for(eligible.size(), config.jobs, [&](std::size_t k) {
    const std::size_t i = eligible[k];
    WaveformBuffer wav = read_wav(manifest.resolve(entries_[i]));
    features_[i] = featurize(wav);
    if (keep_audio && entries_[i].label == Label::kPositive) audio_[i] = std::move(wav);
  });
}

FeatureSegment TrainingData::segment(const SampleRef& ref, std::size_t epoch) const {
  const ManifestEntry& e = entries_.at(ref.entry);
  if (ref.variant >= 0) {
    MaskSpec spec = config_.mask;
    spec.seed = derive_seed(config_.seed, "mask", epoch);
    const std::size_t onset = *e.onset_frame;
    if (spec.mode == MaskMode::kFeature) {
      Rng rng(derive_seed(derive_seed(spec.seed, e.utterance_id),
                          static_cast<std::uint64_t>(ref.variant)));
      const FeatureSegment clean =
          cut_segment(pad_frames(features_[ref.entry], onset + kSegmentFrames), onset);
      return mask_feature(clean, spec, rng).segment;
    }
    const MaskedWaveform masked = mask_variant(audio_[ref.entry], spec, e.utterance_id, ref.variant);
    return cut_segment(pad_frames(featurize(masked.audio), onset + kSegmentFrames), onset);
  }
  const FeatureMatrix& feat = features_[ref.entry];
  if (e.onset_frame) {
    return cut_segment(pad_frames(feat, *e.onset_frame + kSegmentFrames), *e.onset_frame);
  }
  if (feat.frames() <= kSegmentFrames) return cut_segment(pad_frames(feat, kSegmentFrames), 0);
  Rng rng(derive_seed(config_.seed, "offset", epoch, hash_string(e.utterance_id)));
  return cut_segment(feat, uniform_index(rng, 0, feat.frames() - kSegmentFrames));
}

ClusterBatch TrainingData::materialize(const BatchPlan& plan, std::size_t epoch) const {
  ClusterBatch batch;
  const std::size_t per = kSegmentFrames * kNumMels;
  batch.segments = Tensor({plan.size(), 1, kSegmentFrames, kNumMels});
  batch.labels.resize(plan.size());
  batch.clusters.resize(plan.size());
  parallel_for(plan.size(), config_.jobs, [&](std::size_t i) {
    const FeatureSegment seg = segment(plan[i], epoch);
    std::copy(seg.values.data().begin(), seg.values.data().end(), batch.segments.data() + i * per);
    batch.labels[i] = plan[i].label;
    batch.clusters[i] = plan[i].cluster;
  });
  return batch;
}

TrainResult train(const TrainConfig& config, const Manifest& manifest) {
  config.validate();
  if (config.arch.frames != kSegmentFrames || config.arch.mels != kNumMels) {
    throw ValidationError("train: architecture input must be 121 x 80");
  }
  const bool coral = traits(config.setup).coral;
  TrainingData data(manifest, config);
  if (!config.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());
  }

  TrainResult result;
  result.params = ModelParams::random(config.arch, derive_seed(config.seed, "init"));
  ModelParams velocity = ModelParams::zeros(config.arch);
  PlateauSchedule schedule(config);
  std::size_t step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = schedule.lr();
    const std::vector<BatchPlan> plans = make_batches(data.entries(), config, epoch);
    double sum_loss = 0.0, sum_ce = 0.0, sum_ratio = 0.0;
    for (std::size_t b = 0; b < plans.size(); ++b) {
      const ClusterBatch batch = data.materialize(plans[b], epoch);
      const ModelParams ahead = lookahead(result.params, velocity, config.momentum);
      StepResult sr = compute_step(ahead, batch, coral, config.grad_chunk, config.jobs);
      if (!std::isfinite(sr.loss) || !sr.grad.all_finite()) {
        throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(b));
      }
      if (config.clip_norm > 0.0) {
        const double norm = sr.grad.l2_norm();
        if (norm > config.clip_norm) sr.grad.scale(config.clip_norm / norm);
      }
      nesterov_step(result.params, sr.grad, velocity, lr, config.momentum);
      sum_loss += sr.loss;
      sum_ce += sr.ce;
      sum_ratio += sr.ratio;
      ++step;
    }
    const double n = static_cast<double>(std::max<std::size_t>(plans.size(), 1));
    EpochLog row;
    row.epoch = epoch + 1;
    row.step = step;
    row.ce = sum_ce / n;
    row.coral_ratio = sum_ratio / n;
    row.lr = lr;
    if (config.log_wall_time) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    result.log.push_back(row);

    schedule.observe(sum_loss / n);

    if (!config.out_dir.empty()) {
      std::ofstream(config.out_dir / "train_log.csv", std::ios::binary | std::ios::trunc)
          << format_log_csv(result.log);
      if (config.checkpoint_every > 0 && (epoch + 1) % config.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch-%03d", epoch + 1);
        save_checkpoint(result.params, config.out_dir / name);
      }
    }
  }
  if (!config.out_dir.empty()) save_checkpoint(result.params, config.out_dir / "final");
  return result;
}

}  // namespace kws
