// cli.cc

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

#include "kws/cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "kws/augment.h"
#include "kws/common.h"
#include "kws/corpus.h"
#include "kws/detector.h"
#include "kws/eval.h"
#include "kws/frontend.h"
#include "kws/nn.h"
#include "kws/trainer.h"

namespace fs = std::filesystem;

namespace kws {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// "a,b,c" -> three unsigned integers.
std::array<std::size_t, 3> parse_triple(const std::string& s, const char* what) {
  std::array<std::size_t, 3> v{};
  std::istringstream in(s);
  std::string tok;
  std::size_t i = 0;
  while (std::getline(in, tok, ',')) {
    if (i == 3) break;
    try {
      std::size_t used = 0;
      const long long x = std::stoll(trim(tok), &used);
      if (used != trim(tok).size() || x < 0) throw std::invalid_argument(tok);
      v[i++] = static_cast<std::size_t>(x);
    } catch (const std::logic_error&) {
      i = 4;
      break;
    }
  }
  if (i != 3) {
    throw ValidationError(std::string(what) + " must be three comma-separated nonnegative integers, got '" +
                          s + "'");
  }
  return v;
}

std::string setup_help() {
  return "training setup:\n"
         "  baseline       real positives + real negatives\n"
         "  mask           baseline + masked positives (real+mask)\n"
         "  synt-cw        baseline + synthetic confusion words (real+synt-cw)\n"
         "  synt-cw-neg    synt-cw + synthetic negatives (real+synt-cw+synt-neg)\n"
         "  synt-cw-coral  synt-cw + CORAL cluster alignment (real+synt-cw+coral)\n"
         "  full-coral     synt-cw-neg + CORAL cluster alignment (real+synt-cw+synt-neg+coral)\n"
         "The synthetic keyword-like negatives are also called synt-wake.";
}

/// Per-subcommand state shared by the option bindings and the action.
struct Command {
  CLI::App* app = nullptr;
  std::string section;
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::function<void()> action;
};

void apply_config(Command& cmd, std::ostream& err) {
  if (cmd.config_path.empty()) return;
  const ConfigFile cfg = load_config(cmd.config_path);
  static const char* kKnown[] = {"", "corpus", "train", "eval", "detect", "featurize", "augment"};
  for (const auto& [section, kv] : cfg) {
    if (std::find(std::begin(kKnown), std::end(kKnown), section) == std::end(kKnown)) {
      throw ValidationError("config: unknown section [" + section + "]");
    }
  }
  const auto it = cfg.find(cmd.section);
  if (it == cfg.end()) return;
  for (const auto& [key, value] : it->second) {
    CLI::Option* opt = cmd.app->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config" || key == "help") {
      throw ValidationError("config: unknown key '" + key + "' in section [" + cmd.section +
                            "] for " + cmd.app->get_name());
    }
    if (opt->count() > 0) continue;  // the flag wins
    opt->add_result(value);
    opt->run_callback();
  }
  (void)err;
}

void print_resolved(const Command& cmd, std::ostream& err) {
  err << "# kws " << cmd.app->get_name() << " (config: "
      << (cmd.config_path.empty() ? "none" : cmd.config_path) << ")\n";
  for (const CLI::Option* opt : cmd.app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    err << "#   " << name << " = " << value << "\n";
  }
  err << "#   resolved seed = " << cmd.seed << "\n";
}

Command& add_command(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root,
                     const std::string& name, const std::string& section,
                     const std::string& description) {
  auto cmd = std::make_unique<Command>();
  cmd->app = root.add_subcommand(name, description);
  cmd->section = section;
  cmd->jobs = default_jobs();
  cmd->app->add_option("--config", cmd->config_path,
                       "key = value file; reads section [" + section + "]");
  cmd->app->add_option("--seed", cmd->seed, "seed for every random draw");
  cmd->app->add_option("--jobs", cmd->jobs, "worker threads (outputs do not depend on it)")
      ->check(CLI::PositiveNumber);
  cmds.push_back(std::move(cmd));
  return *cmds.back();
}

// --- subcommands -----------------------------------------------------------

void add_gen_corpus(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root,
                    std::ostream& out) {
  Command& cmd = add_command(cmds, root, "gen-corpus", "corpus",
                             "synthesize a tone-syllable corpus and its manifest");
  auto spec = std::make_shared<CorpusSpec>();
  auto dir = std::make_shared<std::string>();
  CLI::App* a = cmd.app;
  a->add_option("--out", *dir, "output directory (manifest.txt + wav/)")->required();
  a->add_option("--speakers", spec->n_speakers, "number of speakers");
  a->add_option("--pos", spec->n_pos, "keyword utterances per speaker");
  a->add_option("--neg", spec->n_neg, "ordinary negatives per speaker");
  a->add_option("--confusion", spec->n_confusion, "synthetic confusion words per speaker");
  a->add_option("--synt-neg", spec->n_synt_neg, "synthetic ordinary negatives per speaker");
  a->add_option("--first-speaker", spec->first_speaker, "id of the first speaker");
  a->add_option("--sample-rate", spec->sample_rate, "sample rate in Hz");
  cmd.action = [&cmd, spec, dir, &out] {
    spec->seed = cmd.seed;
    const Manifest m = generate_corpus(*spec, *dir, cmd.jobs);
    out << "wrote " << m.entries.size() << " utterances to " << (fs::path(*dir) / "manifest.txt").string()
        << "\n";
  };
}

void add_featurize(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root,
                   std::ostream& out) {
  Command& cmd = add_command(cmds, root, "featurize", "featurize",
                             "write 80-dim log-mel feature dumps (.kwsf)");
  struct Opts {
    std::string manifest, wav, out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* a = cmd.app;
  auto* m = a->add_option("--manifest", o->manifest, "manifest of utterances to featurize");
  auto* w = a->add_option("--wav", o->wav, "single WAV file to featurize");
  m->excludes(w);
  a->add_option("--out", o->out, "output directory")->required();
  cmd.action = [&cmd, o, &out] {
    if (o->manifest.empty() == o->wav.empty()) {
      throw ValidationError("featurize: give exactly one of --manifest or --wav");
    }
    if (!o->wav.empty()) {
      const fs::path dst = fs::path(o->out) / (fs::path(o->wav).stem().string() + ".kwsf");
      fs::create_directories(o->out);
      write_features(featurize(read_wav(o->wav)).values, dst);
      out << "wrote " << dst.string() << "\n";
      return;
    }
    const Manifest man = load_manifest(o->manifest);
    fs::create_directories(o->out);
    parallel_for(man.entries.size(), cmd.jobs, [&](std::size_t i) {
      const ManifestEntry& e = man.entries[i];
      write_features(featurize(read_wav(man.resolve(e))).values,
                     fs::path(o->out) / (e.utterance_id + ".kwsf"));
    });
    out << "wrote " << man.entries.size() << " feature files to " << o->out << "\n";
  };
}

void add_augment(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root, std::ostream& out) {
  Command& cmd = add_command(cmds, root, "augment", "augment",
                             "write masked copies of keyword utterances");
  struct Opts {
    std::string manifest, wav, out, mode = "waveform";
    MaskSpec spec;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* a = cmd.app;
  auto* m = a->add_option("--manifest", o->manifest, "manifest; its positive entries are masked");
  auto* w = a->add_option("--wav", o->wav, "single WAV file to mask");
  m->excludes(w);
  a->add_option("--out", o->out, "output directory")->required();
  a->add_option("--variants", o->spec.n_variants, "masked copies per utterance");
  a->add_option("--ratio-min", o->spec.ratio_min, "smallest masked fraction");
  a->add_option("--ratio-max", o->spec.ratio_max, "largest masked fraction");
  a->add_option("--noise-rms", o->spec.noise_rms, "standard deviation of the masking noise");
  a->add_option("--mode", o->mode, "waveform (WAV output) or feature (.kwsf segments)")
      ->check(CLI::IsMember({"waveform", "feature"}));
  cmd.action = [&cmd, o, &out] {
    if (o->manifest.empty() == o->wav.empty()) {
      throw ValidationError("augment: give exactly one of --manifest or --wav");
    }
    o->spec.seed = cmd.seed;
    o->spec.validate();
    struct Job {
      std::string id;
      fs::path path;
      std::size_t onset = 0;
    };
    std::vector<Job> jobs;
    if (!o->wav.empty()) {
      jobs.push_back({fs::path(o->wav).stem().string(), o->wav, 0});
    } else {
      const Manifest man = load_manifest(o->manifest);
      for (const auto& e : man.entries) {
        if (e.label == Label::kPositive) {
          jobs.push_back({e.utterance_id, man.resolve(e), e.onset_frame.value_or(0)});
        }
      }
    }
    fs::create_directories(o->out);
    const int nv = o->spec.n_variants;
    std::vector<std::string> rows(jobs.size() * static_cast<std::size_t>(nv));
    const bool feature_mode = o->mode == "feature";
    parallel_for(jobs.size(), cmd.jobs, [&](std::size_t j) {
      const WaveformBuffer buf = read_wav(jobs[j].path);
      const FeatureSegment seg =
          feature_mode ? cut_segment(pad_frames(featurize(buf), jobs[j].onset + kSegmentFrames),
                                     jobs[j].onset)
                       : FeatureSegment{};
      for (int k = 0; k < nv; ++k) {
        const std::string name = jobs[j].id + "-mask" + std::to_string(k);
        MaskSpan span;
        if (feature_mode) {
          Rng rng(derive_seed(o->spec.seed, jobs[j].id, k));
          const MaskedSegment ms = mask_feature(seg, o->spec, rng);
          write_features(ms.segment.values, fs::path(o->out) / (name + ".kwsf"));
          span = ms.span;
        } else {
          const MaskedWaveform mw = mask_variant(buf, o->spec, jobs[j].id, k);
          write_wav(mw.audio, fs::path(o->out) / (name + ".wav"));
          span = mw.span;
        }
        char line[160];
        std::snprintf(line, sizeof line, ",%d,%zu,%zu,%.17g\n", k, span.start, span.length,
                      span.drawn_ratio);
        rows[j * static_cast<std::size_t>(nv) + static_cast<std::size_t>(k)] = jobs[j].id + line;
      }
    });
    std::string index = std::string("id,variant,start,length,drawn_ratio  # units: ") +
                        (feature_mode ? "frames" : "samples") + "\n";
    for (const auto& r : rows) index += r;
    write_text(fs::path(o->out) / "masks.csv", index);
    out << "wrote " << rows.size() << " masked variants to " << o->out << "\n";
  };
}

void add_train(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root, std::ostream& out) {
  Command& cmd = add_command(cmds, root, "train", "train", "train the detector under one setup");
  struct Opts {
    std::string setup, manifest, out, quota = "0,0,0", channels;
    TrainConfig config;
    std::uint32_t emb = 0;
  };
  auto o = std::make_shared<Opts>();
  {
    const Architecture d;
    o->channels = std::to_string(d.c1) + "," + std::to_string(d.c2) + "," + std::to_string(d.c3);
    o->emb = d.d_emb;
  }
  CLI::App* a = cmd.app;
  TrainConfig& c = o->config;
  a->footer(setup_help());
  a->add_option("--setup", o->setup, "one of: baseline mask synt-cw synt-cw-neg synt-cw-coral full-coral")
      ->required();
  a->add_option("--manifest", o->manifest, "training manifest")->required();
  a->add_option("--out", o->out, "output directory (checkpoints + train_log.csv)")->required();
  a->add_option("--epochs", c.epochs, "number of epochs");
  a->add_option("--lr", c.lr0, "initial learning rate");
  a->add_option("--momentum", c.momentum, "Nesterov momentum");
  a->add_option("--patience", c.plateau_patience, "epochs without improvement before decay");
  a->add_option("--lr-decay", c.lr_decay, "learning-rate decay factor");
  a->add_option("--lr-min", c.lr_min, "learning-rate floor");
  a->add_option("--batch-size", c.batch_size, "samples per step (non-CORAL setups)");
  a->add_option("--quota", o->quota,
                "per-batch real-pos,real-neg,synt-neg counts for CORAL setups (0,0,0 = proportional)");
  a->add_option("--min-pos-fraction", c.min_pos_fraction, "minimum positive share (non-CORAL)");
  a->add_option("--channels", o->channels, "conv channels c1,c2,c3");
  a->add_option("--emb", o->emb, "embedding width (fc1 units)");
  a->add_option("--grad-chunk", c.grad_chunk, "samples per gradient chunk");
  a->add_option("--clip-norm", c.clip_norm, "rescale gradients above this L2 norm (0 = off)");
  a->add_option("--checkpoint-every", c.checkpoint_every, "also save every N epochs (0 = off)");
  a->add_option("--mask-variants", c.mask.n_variants, "masked copies per positive (mask setup)");
  a->add_option("--noise-rms", c.mask.noise_rms, "masking noise standard deviation");
  a->add_flag("--log-wall-time", c.log_wall_time, "record wall-clock ms in the log (not reproducible)");
  cmd.action = [&cmd, o, &out] {
    TrainConfig& c = o->config;
    c.setup = parse_setup(o->setup);
    const auto q = parse_triple(o->quota, "--quota");
    c.cluster_quota = q;
    const auto ch = parse_triple(o->channels, "--channels");
    c.arch.c1 = static_cast<std::uint32_t>(ch[0]);
    c.arch.c2 = static_cast<std::uint32_t>(ch[1]);
    c.arch.c3 = static_cast<std::uint32_t>(ch[2]);
    c.arch.d_emb = o->emb;
    c.seed = cmd.seed;
    c.mask.seed = derive_seed(cmd.seed, "mask");
    c.jobs = cmd.jobs;
    c.out_dir = o->out;
    c.validate();
    const Manifest man = load_manifest(o->manifest);
    const TrainResult r = train(c, man);
    const EpochLog& last = r.log.back();
    char buf[160];
    std::snprintf(buf, sizeof buf, "trained %s: %d epochs, final ce %.6g, lr %.3g\n",
                  std::string(to_string(c.setup)).c_str(), last.epoch, last.ce, last.lr);
    out << buf << "checkpoint: " << (fs::path(o->out) / "final").string() << "\n";
  };
}

void add_eval(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root, std::ostream& out) {
  Command& cmd = add_command(cmds, root, "eval", "eval",
                             "score a test manifest; write DET curves and the FR report");
  struct Opts {
    std::string model, manifest, test = "all", out = "eval", label = "model";
    std::size_t stride = 1;
    double target = 1.0;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* a = cmd.app;
  a->add_option("--model", o->model, "checkpoint file")->required();
  a->add_option("--manifest", o->manifest, "test manifest")->required();
  a->add_option("--test", o->test, "test set: real, real+synt-cw or all")
      ->check(CLI::IsMember({"real", "real+synt-cw", "all"}));
  a->add_option("--out", o->out, "output directory");
  a->add_option("--stride", o->stride, "window stride in frames")->check(CLI::PositiveNumber);
  a->add_option("--target-fa", o->target, "false alarms per hour at the operating point");
  a->add_option("--label", o->label, "row name in the report");
  cmd.action = [&cmd, o, &out] {
    const ModelParams params = load_checkpoint(o->model);
    const Manifest man = load_manifest(o->manifest);
    DetectorConfig det;
    det.stride = o->stride;
    std::vector<TestSet> sets;
    if (o->test == "all") {
      sets = {TestSet::kReal, TestSet::kRealPlusConfusion};
    } else {
      sets = {parse_test_set(o->test)};
    }
    // Score the union once; each test set is a subset.
    const std::vector<std::size_t> all = test_entries(man.entries, sets.back());
    const std::vector<ScoredUtterance> scores = score_entries(params, man, all, det, static_cast<int>(cmd.jobs));
    std::vector<ReportRow> rows;
    for (TestSet set : sets) {
      std::vector<ScoredUtterance> subset;
      for (std::size_t k = 0; k < all.size(); ++k) {
        const ManifestEntry& e = man.entries[all[k]];
        if (set == TestSet::kRealPlusConfusion || e.cluster != Cluster::kSyntNeg) {
          subset.push_back(scores[k]);
        }
      }
      const EvalResult r = evaluate_scores(subset, set, o->target);
      const std::string tag(to_string(set));
      write_text(fs::path(o->out) / ("scores_" + tag + ".csv"), format_scores_csv(subset));
      write_text(fs::path(o->out) / ("det_" + tag + ".csv"), format_det_csv(r.curve));
      rows.push_back(make_report_row(o->label, r));
    }
    std::string table = format_report_table(rows, o->target);
    table += "# FA/hour denominator: hours of negative-side test audio (confusion words included"
             " in real+synt-cw)\n";
    write_text(fs::path(o->out) / "report.txt", table);
    write_text(fs::path(o->out) / "report.csv", format_report_csv(rows, o->target));
    out << table;
  };
}

void add_detect(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root, std::ostream& out) {
  Command& cmd = add_command(cmds, root, "detect", "detect",
                             "sliding-window keyword detection; CSV per utterance or chunk");
  struct Opts {
    std::string model, manifest, wav, out = "-";
    DetectorConfig det;
    StreamConfig stream;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* a = cmd.app;
  a->add_option("--model", o->model, "checkpoint file")->required();
  auto* m = a->add_option("--manifest", o->manifest, "score every utterance in a manifest");
  auto* w = a->add_option("--wav", o->wav, "scan a long recording in overlapping chunks");
  m->excludes(w);
  a->add_option("--threshold", o->det.threshold, "trigger when confidence >= threshold");
  a->add_option("--stride", o->det.stride, "window stride in frames")->check(CLI::PositiveNumber);
  a->add_option("--chunk", o->stream.chunk_s, "chunk length in seconds (--wav)");
  a->add_option("--hop", o->stream.hop_s, "chunk hop in seconds (--wav)");
  a->add_option("--out", o->out, "CSV path, '-' for standard output");
  cmd.action = [&cmd, o, &out] {
    if (o->manifest.empty() == o->wav.empty()) {
      throw ValidationError("detect: give exactly one of --manifest or --wav");
    }
    o->det.validate();
    const ModelParams params = load_checkpoint(o->model);
    std::vector<DetectionResult> results;
    if (!o->wav.empty()) {
      results = detect_stream(params, read_wav(o->wav), o->det, o->stream,
                              fs::path(o->wav).stem().string());
    } else {
      const Manifest man = load_manifest(o->manifest);
      results.resize(man.entries.size());
      parallel_for(man.entries.size(), cmd.jobs, [&](std::size_t i) {
        const ManifestEntry& e = man.entries[i];
        results[i] = score_utterance(params, featurize(read_wav(man.resolve(e))), o->det,
                                     e.utterance_id);
      });
    }
    const std::string csv = format_detection_csv(results);
    if (o->out == "-") {
      out << csv;
    } else {
      write_text(o->out, csv);
    }
  };
}

void add_det_curve(std::vector<std::unique_ptr<Command>>& cmds, CLI::App& root,
                   std::ostream& out) {
  Command& cmd = add_command(cmds, root, "det-curve", "eval",
                             "DET curve and FR at a target FA/hour from a scores CSV");
  struct Opts {
    std::string scores, out = "-";
    double target = 1.0;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* a = cmd.app;
  a->add_option("--scores", o->scores, "CSV with id,label,duration_s,confidence")->required();
  a->add_option("--out", o->out, "DET CSV path, '-' for standard output");
  a->add_option("--target-fa", o->target, "false alarms per hour at the operating point");
  cmd.action = [o, &out] {
    const auto scores = parse_scores_csv(read_text(o->scores));
    bool has_cw = false;
    for (const auto& s : scores) has_cw |= source_from_id(s.utterance_id) == Source::kConfusion;
    const EvalResult r =
        evaluate_scores(scores, has_cw ? TestSet::kRealPlusConfusion : TestSet::kReal, o->target);
    const std::string csv = format_det_csv(r.curve);
    if (o->out == "-") {
      out << csv;
    } else {
      write_text(o->out, csv);
      char buf[160];
      std::snprintf(buf, sizeof buf, "FR at %g FA/hour: %.6g%%%s (threshold %.17g)\n", o->target,
                    100.0 * r.at_target.fr_rate, r.at_target.below_target ? " [below target]" : "",
                    r.at_target.threshold);
      out << buf;
    }
  };
}

}  // namespace

ConfigFile parse_config_text(std::string_view text) {
  ConfigFile cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      cfg[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    }
    cfg[section][key] = value;
  }
  return cfg;
}

ConfigFile load_config(const std::string& path) { return parse_config_text(read_text(path)); }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App root{"kws: keyword spotting with synthetic confusion words and CORAL training"};
  root.name("kws");
  root.option_defaults()->always_capture_default();
  root.require_subcommand(1);
  std::vector<std::unique_ptr<Command>> cmds;
  add_gen_corpus(cmds, root, out);
  add_featurize(cmds, root, out);
  add_augment(cmds, root, out);
  add_train(cmds, root, out);
  add_eval(cmds, root, out);
  add_detect(cmds, root, out);
  add_det_curve(cmds, root, out);
  for (auto& c : cmds) c->app->option_defaults()->always_capture_default();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    root.parse(reversed);
    Command* active = nullptr;
    for (auto& c : cmds) {
      if (c->app->parsed()) active = c.get();
    }
    if (active == nullptr) throw ValidationError("no subcommand given");
    apply_config(*active, err);
    print_resolved(*active, err);
    active->action();
    return 0;
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &root;
    for (auto& c : cmds) {
      if (c->app->parsed()) target = c->app;
    }
    out << target->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "kws: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return 0;
    err << "run 'kws --help' or 'kws <subcommand> --help' for usage\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "kws: invalid input: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "kws: I/O error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "kws: numeric failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "kws: error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace kws
