// kws/corpus.h

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

#ifndef KWS_CORPUS_H_
#define KWS_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kws/common.h"

namespace kws {

/// Mono audio. Samples are amplitudes in [-1, 1].
struct WaveformBuffer {
  std::vector<float> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Reads a RIFF/WAVE file holding 16-bit little-endian PCM, one channel.
/// Throws IoError on malformed headers, other encodings or channel counts.
WaveformBuffer read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are quantized as round(x * 32768) and
/// clamped to the int16 range, so read_wav(write_wav(x)) is within 2^-15.
void write_wav(const WaveformBuffer& buf, const std::filesystem::path& path);

enum class Label { kPositive, kNegative };
enum class Cluster { kRealPos, kRealNeg, kSyntNeg };

/// What produced an utterance. Not a manifest column: derived from the
/// utterance id, whose second '-'-separated token names the generator
/// ("kw", "neg", "cw", "sneg"). Ids that do not follow the convention are
/// kExternal and are classified by cluster alone.
enum class Source { kKeyword, kNegative, kConfusion, kSyntheticNegative, kExternal };

std::string_view to_string(Label label);
std::string_view to_string(Cluster cluster);
std::string_view to_string(Source source);
Label parse_label(std::string_view s);
Cluster parse_cluster(std::string_view s);
Source source_from_id(std::string_view utterance_id);

struct ManifestEntry {
  std::string utterance_id;
  std::string path;  // as written; relative paths resolve against the manifest
  Label label = Label::kNegative;
  Cluster cluster = Cluster::kRealNeg;
  std::optional<std::uint32_t> onset_frame;
  double duration_s = 0.0;

  Source source() const { return source_from_id(utterance_id); }
};

/// Throws ValidationError if the label/cluster/onset combination is illegal.
void validate(const ManifestEntry& entry);

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
};

/// One record per line: id|relative_path|label|cluster|onset_frame|duration_s.
/// '#' lines and blank lines are skipped. Order is preserved.
std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path);
std::vector<ManifestEntry> parse_manifest_text(std::string_view text);
Manifest load_manifest(const std::filesystem::path& path);

std::string format_manifest_line(const ManifestEntry& entry);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Procedural corpus.

struct CorpusSpec {
  std::int64_t n_speakers = 40;
  std::int64_t n_pos = 20;        // keyword utterances per speaker
  std::int64_t n_neg = 40;        // ordinary negatives per speaker
  std::int64_t n_confusion = 20;  // synthetic confusion words per speaker
  std::int64_t n_synt_neg = 0;    // synthetic ordinary negatives per speaker
  std::int64_t first_speaker = 0; // offset for speaker ids (disjoint splits)
  std::uint64_t seed = 1;
  int sample_rate = 16000;

  void validate() const;
};

/// One tone syllable: three harmonically related partials.
struct Syllable {
  std::array<double, 3> freqs_hz{};
  double start_s = 0.0;
  double duration_s = 0.0;
};

struct UtterancePlan {
  std::vector<Syllable> syllables;
  double length_s = 0.0;
  double gain = 0.5;
  bool synthetic_voice = false;
  std::uint64_t noise_seed = 0;
  int sample_rate = 16000;
  /// Index of the detuned syllable in a confusion plan, if any.
  std::optional<std::size_t> perturbed_syllable;
};

struct SpeakerProfile {
  double pitch_scale = 1.0;
  std::array<double, 4> keyword_durations_s{};
  std::array<double, 4> keyword_gaps_s{};
};

/// Base frequencies of the four keyword syllables and of the disjoint
/// inventory used for negatives.
std::span<const double> keyword_base_frequencies();
std::span<const double> negative_base_frequencies();

SpeakerProfile make_speaker(std::uint64_t seed, std::int64_t speaker);

UtterancePlan plan_keyword(const SpeakerProfile& speaker, Rng& rng, int sample_rate);

/// Keyword plan with exactly one syllable's triple detuned by 8-15%. With
/// perturb=false the same random draws are made but not applied, which yields
/// the unperturbed twin of the confusion utterance.
UtterancePlan plan_confusion(const SpeakerProfile& speaker, Rng& rng, int sample_rate,
                             bool perturb = true);

UtterancePlan plan_negative(const SpeakerProfile& speaker, Rng& rng, int sample_rate);

WaveformBuffer render(const UtterancePlan& plan);

/// First feature frame whose window starts at or before the first syllable.
std::uint32_t onset_frame_of(const UtterancePlan& plan);

/// Writes <out_dir>/wav/<id>.wav and <out_dir>/manifest.txt. Deterministic
/// under spec.seed regardless of `jobs`.
Manifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir,
                         unsigned jobs = 1);

}  // namespace kws

#endif  // KWS_CORPUS_H_
