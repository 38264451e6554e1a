// corpus.cc

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

#include "kws/corpus.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "kws/frontend.h"

namespace kws {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

WaveformBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw IoError("malformed WAV header (missing RIFF/WAVE)" + where);
  }

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw IoError("truncated WAV chunk" + where);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw IoError("malformed fmt chunk" + where);
      const std::uint16_t format = get_u16(bytes.data() + body);
      channels = get_u16(bytes.data() + body + 2);
      rate = get_u32(bytes.data() + body + 4);
      bits = get_u16(bytes.data() + body + 14);
      if (format != 1) {
        throw IoError("unsupported WAV encoding (format tag " + std::to_string(format) +
                      ", only PCM is supported)" + where);
      }
      if (bits != 16) {
        throw IoError("unsupported WAV sample width " + std::to_string(bits) +
                      " bits (only 16-bit PCM)" + where);
      }
      if (channels != 1) {
        throw IoError("unsupported WAV channel count " + std::to_string(channels) +
                      " (only mono)" + where);
      }
      if (rate == 0) throw IoError("WAV sample rate is zero" + where);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw IoError("WAV data chunk precedes fmt chunk" + where);
      if (size % 2 != 0) throw IoError("odd-sized 16-bit data chunk" + where);
      WaveformBuffer buf;
      buf.sample_rate = static_cast<int>(rate);
      buf.samples.resize(size / 2);
      for (std::size_t i = 0; i < buf.samples.size(); ++i) {
        const auto q = static_cast<std::int16_t>(get_u16(bytes.data() + body + 2 * i));
        buf.samples[i] = static_cast<float>(q / 32768.0);
      }
      return buf;
    }
    pos = body + size + (size & 1u);
  }
  throw IoError("WAV file has no data chunk" + where);
}

void write_wav(const WaveformBuffer& buf, const std::filesystem::path& path) {
  if (buf.sample_rate <= 0) throw ValidationError("write_wav: sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (float x : buf.samples) {
    if (!std::isfinite(x)) throw ValidationError("write_wav: non-finite sample");
    const double q = std::clamp(std::round(static_cast<double>(x) * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write WAV file " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

std::string_view to_string(Label label) {
  return label == Label::kPositive ? "positive" : "negative";
}

std::string_view to_string(Cluster cluster) {
  switch (cluster) {
    case Cluster::kRealPos: return "real-pos";
    case Cluster::kRealNeg: return "real-neg";
    case Cluster::kSyntNeg: return "synt-neg";
  }
  return "?";
}

std::string_view to_string(Source source) {
  switch (source) {
    case Source::kKeyword: return "kw";
    case Source::kNegative: return "neg";
    case Source::kConfusion: return "cw";
    case Source::kSyntheticNegative: return "sneg";
    case Source::kExternal: return "external";
  }
  return "?";
}

Label parse_label(std::string_view s) {
  if (s == "positive") return Label::kPositive;
  if (s == "negative") return Label::kNegative;
  throw ValidationError("unknown label '" + std::string(s) + "' (expected positive|negative)");
}

Cluster parse_cluster(std::string_view s) {
  if (s == "real-pos") return Cluster::kRealPos;
  if (s == "real-neg") return Cluster::kRealNeg;
  if (s == "synt-neg") return Cluster::kSyntNeg;
  throw ValidationError("unknown cluster tag '" + std::string(s) +
                        "' (expected real-pos|real-neg|synt-neg)");
}

Source source_from_id(std::string_view id) {
  const auto a = id.find('-');
  if (a == std::string_view::npos) return Source::kExternal;
  const auto b = id.find('-', a + 1);
  if (b == std::string_view::npos) return Source::kExternal;
  const std::string_view tag = id.substr(a + 1, b - a - 1);
  if (tag == "kw") return Source::kKeyword;
  if (tag == "neg") return Source::kNegative;
  if (tag == "cw") return Source::kConfusion;
  if (tag == "sneg") return Source::kSyntheticNegative;
  return Source::kExternal;
}

void validate(const ManifestEntry& e) {
  const std::string who = "manifest entry '" + e.utterance_id + "': ";
  if (e.utterance_id.empty()) throw ValidationError("manifest entry with empty id");
  if (e.label == Label::kPositive && !e.onset_frame) {
    throw ValidationError(who + "positive entries require an onset_frame");
  }
  if ((e.cluster == Cluster::kRealPos) != (e.label == Label::kPositive)) {
    throw ValidationError(who + "label " + std::string(to_string(e.label)) +
                          " does not match cluster " + std::string(to_string(e.cluster)));
  }
  if (!(e.duration_s >= 0.0) || !std::isfinite(e.duration_s)) {
    throw ValidationError(who + "duration must be a nonnegative number");
  }
}

std::filesystem::path Manifest::resolve(const ManifestEntry& entry) const {
  std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : base_dir / p;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = line.find(sep, start);
    out.push_back(line.substr(start, p == std::string_view::npos ? p : p - start));
    if (p == std::string_view::npos) return out;
    start = p + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest_text(std::string_view text) {
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    const auto f = split(line, '|');
    if (f.size() != 6) {
      throw ValidationError(where + "expected 6 '|'-separated fields, got " +
                            std::to_string(f.size()));
    }
    ManifestEntry e;
    e.utterance_id = std::string(trim(f[0]));
    e.path = std::string(trim(f[1]));
    try {
      e.label = parse_label(trim(f[2]));
      e.cluster = parse_cluster(trim(f[3]));
    } catch (const ValidationError& err) {
      throw ValidationError(where + err.what());
    }
    const auto onset = trim(f[4]);
    if (!onset.empty()) {
      std::uint32_t v = 0;
      for (char c : onset) {
        if (c < '0' || c > '9') throw ValidationError(where + "onset_frame must be a nonnegative integer");
        v = v * 10 + static_cast<std::uint32_t>(c - '0');
      }
      e.onset_frame = v;
    }
    try {
      std::size_t used = 0;
      const std::string dur(trim(f[5]));
      e.duration_s = std::stod(dur, &used);
      if (used != dur.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(where + "duration_s is not a number");
    }
    try {
      validate(e);
    } catch (const ValidationError& err) {
      throw ValidationError(where + err.what());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest_text(ss.str());
}

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m;
  m.base_dir = path.parent_path();
  m.entries = parse_manifest(path);
  return m;
}

std::string format_manifest_line(const ManifestEntry& e) {
  char dur[32];
  std::snprintf(dur, sizeof dur, "%.4f", e.duration_s);
  std::string line = e.utterance_id + "|" + e.path + "|" + std::string(to_string(e.label)) +
                     "|" + std::string(to_string(e.cluster)) + "|";
  if (e.onset_frame) line += std::to_string(*e.onset_frame);
  line += "|";
  line += dur;
  return line;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path) {
  std::string text = "# id|relative_path|label|cluster|onset_frame|duration_s\n";
  for (const auto& e : entries) text += format_manifest_line(e) + "\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Procedural synthesis.

namespace {

constexpr std::array<double, 4> kKeywordBases = {620.0, 880.0, 540.0, 760.0};
constexpr std::array<double, 10> kNegativeBases = {330.0, 410.0, 470.0, 580.0, 690.0,
                                                   820.0, 950.0, 1040.0, 1130.0, 1230.0};
constexpr std::array<double, 3> kRealHarmonicWeights = {0.55, 0.30, 0.15};
constexpr std::array<double, 3> kSynthHarmonicWeights = {0.50, 0.22, 0.28};
constexpr double kRealNoiseStd = 0.004;
constexpr double kSynthNoiseStd = 0.0015;
constexpr double kRampS = 0.020;

std::array<double, 3> triple(double base, double pitch) {
  const double f = base * pitch;
  return {f, 2.0 * f, 3.0 * f};
}

// Keyword content plus enough trailing audio for a full segment after onset.
double keyword_length(double lead_s, double tail_jitter_s) {
  const double segment_s = (kSegmentFrames - 1) * kFrameShiftS + kFrameLenS;
  return lead_s + segment_s + 0.05 + tail_jitter_s;
}

}  // namespace

void CorpusSpec::validate() const {
  if (n_speakers < 0 || n_pos < 0 || n_neg < 0 || n_confusion < 0 || n_synt_neg < 0 ||
      first_speaker < 0) {
    throw ValidationError("corpus spec: counts must be nonnegative");
  }
  if (sample_rate <= 0) throw ValidationError("corpus spec: sample_rate must be positive");
  if (sample_rate % 40 != 0) {
    throw ValidationError("corpus spec: sample_rate must make 25 ms an integer sample count");
  }
}

std::span<const double> keyword_base_frequencies() { return kKeywordBases; }
std::span<const double> negative_base_frequencies() { return kNegativeBases; }

SpeakerProfile make_speaker(std::uint64_t seed, std::int64_t speaker) {
  Rng rng(derive_seed(seed, "speaker", static_cast<std::uint64_t>(speaker)));
  SpeakerProfile p;
  p.pitch_scale = uniform(rng, 0.85, 1.2);
  for (std::size_t i = 0; i < 4; ++i) {
    p.keyword_durations_s[i] = uniform(rng, 0.15, 0.25);
    p.keyword_gaps_s[i] = uniform(rng, 0.02, 0.06);
  }
  return p;
}

UtterancePlan plan_keyword(const SpeakerProfile& speaker, Rng& rng, int sample_rate) {
  UtterancePlan plan;
  plan.sample_rate = sample_rate;
  const double lead = uniform(rng, 0.1, 0.5);
  plan.gain = uniform(rng, 0.3, 0.7);
  plan.noise_seed = rng();
  double t = lead;
  for (std::size_t i = 0; i < 4; ++i) {
    plan.syllables.push_back({triple(kKeywordBases[i], speaker.pitch_scale), t,
                              speaker.keyword_durations_s[i]});
    t += speaker.keyword_durations_s[i] + speaker.keyword_gaps_s[i];
  }
  plan.length_s = keyword_length(lead, uniform(rng, 0.0, 0.35));
  return plan;
}

UtterancePlan plan_confusion(const SpeakerProfile& speaker, Rng& rng, int sample_rate,
                             bool perturb) {
  UtterancePlan plan = plan_keyword(speaker, rng, sample_rate);
  plan.synthetic_voice = true;
  const std::size_t which = uniform_index(rng, 0, 3);
  const double magnitude = uniform(rng, 0.08, 0.15);
  const double sign = (rng() & 1u) ? 1.0 : -1.0;
  if (perturb) {
    for (double& f : plan.syllables[which].freqs_hz) f *= 1.0 + sign * magnitude;
    plan.perturbed_syllable = which;
  }
  return plan;
}

UtterancePlan plan_negative(const SpeakerProfile& speaker, Rng& rng, int sample_rate) {
  UtterancePlan plan;
  plan.sample_rate = sample_rate;
  const double lead = uniform(rng, 0.1, 0.5);
  plan.gain = uniform(rng, 0.3, 0.7);
  plan.noise_seed = rng();
  const std::size_t n = uniform_index(rng, 4, 8);
  double t = lead;
  for (std::size_t i = 0; i < n; ++i) {
    const double base = kNegativeBases[uniform_index(rng, 0, kNegativeBases.size() - 1)];
    const double dur = uniform(rng, 0.15, 0.25);
    plan.syllables.push_back({triple(base, speaker.pitch_scale), t, dur});
    t += dur + uniform(rng, 0.02, 0.08);
  }
  plan.length_s = std::max(t + 0.2, keyword_length(lead, uniform(rng, 0.0, 0.35)));
  return plan;
}

WaveformBuffer render(const UtterancePlan& plan) {
  const double sr = plan.sample_rate;
  WaveformBuffer buf;
  buf.sample_rate = plan.sample_rate;
  const auto length = static_cast<std::size_t>(std::ceil(plan.length_s * sr));
  buf.samples.assign(std::max<std::size_t>(length, 1), 0.0f);

  std::vector<double> acc(buf.samples.size(), 0.0);
  Rng noise(plan.noise_seed);
  const double noise_std = plan.synthetic_voice ? kSynthNoiseStd : kRealNoiseStd;
  for (double& x : acc) x = noise_std * gaussian(noise);

  const auto& weights = plan.synthetic_voice ? kSynthHarmonicWeights : kRealHarmonicWeights;
  const auto ramp = static_cast<std::size_t>(kRampS * sr);
  for (const Syllable& syl : plan.syllables) {
    const auto begin = static_cast<std::size_t>(std::llround(syl.start_s * sr));
    const auto count = static_cast<std::size_t>(std::llround(syl.duration_s * sr));
    for (std::size_t k = 0; k < count && begin + k < acc.size(); ++k) {
      double env = 1.0;
      const std::size_t from_end = count - 1 - k;
      const std::size_t edge = std::min(k, from_end);
      if (edge < ramp) {
        env = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / ramp);
      }
      const double t = k / sr;
      double v = 0.0;
      for (std::size_t h = 0; h < 3; ++h) {
        v += weights[h] * std::sin(2.0 * std::numbers::pi * syl.freqs_hz[h] * t);
      }
      acc[begin + k] += plan.gain * env * v;
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    buf.samples[i] = static_cast<float>(std::clamp(acc[i], -1.0, 1.0));
  }
  return buf;
}

std::uint32_t onset_frame_of(const UtterancePlan& plan) {
  if (plan.syllables.empty()) return 0;
  const auto shift = static_cast<std::int64_t>(std::llround(kFrameShiftS * plan.sample_rate));
  const auto start = std::llround(plan.syllables.front().start_s * plan.sample_rate);
  return static_cast<std::uint32_t>(start / shift);
}

namespace {

struct PendingUtterance {
  std::string id;
  Source source;
  std::int64_t speaker;
};

std::string make_id(std::int64_t speaker, Source source, std::int64_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "spk%03lld-%s-%03lld", static_cast<long long>(speaker),
                std::string(to_string(source)).c_str(), static_cast<long long>(index));
  return buf;
}

}  // namespace

Manifest generate_corpus(const CorpusSpec& spec, const std::filesystem::path& out_dir,
                         unsigned jobs) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "wav", ec);
  if (ec) throw IoError("cannot create " + (out_dir / "wav").string() + ": " + ec.message());

  std::vector<PendingUtterance> todo;
  for (std::int64_t s = spec.first_speaker; s < spec.first_speaker + spec.n_speakers; ++s) {
    const std::pair<Source, std::int64_t> groups[] = {{Source::kKeyword, spec.n_pos},
                                                      {Source::kNegative, spec.n_neg},
                                                      {Source::kConfusion, spec.n_confusion},
                                                      {Source::kSyntheticNegative, spec.n_synt_neg}};
    for (const auto& [source, count] : groups) {
      for (std::int64_t i = 0; i < count; ++i) todo.push_back({make_id(s, source, i), source, s});
    }
  }

  std::vector<ManifestEntry> entries(todo.size());
  parallel_for(todo.size(), jobs, [&](std::size_t i) {
    const PendingUtterance& u = todo[i];
    const SpeakerProfile speaker = make_speaker(spec.seed, u.speaker);
    Rng rng(derive_seed(spec.seed, u.id));
    UtterancePlan plan;
    ManifestEntry e;
    e.utterance_id = u.id;
    e.path = "wav/" + u.id + ".wav";
    switch (u.source) {
      case Source::kKeyword:
        plan = plan_keyword(speaker, rng, spec.sample_rate);
        e.label = Label::kPositive;
        e.cluster = Cluster::kRealPos;
        e.onset_frame = onset_frame_of(plan);
        break;
      case Source::kConfusion:
        plan = plan_confusion(speaker, rng, spec.sample_rate);
        e.label = Label::kNegative;
        e.cluster = Cluster::kSyntNeg;
        e.onset_frame = onset_frame_of(plan);
        break;
      case Source::kSyntheticNegative:
        plan = plan_negative(speaker, rng, spec.sample_rate);
        plan.synthetic_voice = true;
        e.label = Label::kNegative;
        e.cluster = Cluster::kSyntNeg;
        break;
      default:
        plan = plan_negative(speaker, rng, spec.sample_rate);
        e.label = Label::kNegative;
        e.cluster = Cluster::kRealNeg;
        break;
    }
    const WaveformBuffer wav = render(plan);
    e.duration_s = wav.duration_s();
    write_wav(wav, out_dir / e.path);
    entries[i] = std::move(e);
  });

  write_manifest(entries, out_dir / "manifest.txt");
  return Manifest{out_dir, std::move(entries)};
}

}  // namespace kws
