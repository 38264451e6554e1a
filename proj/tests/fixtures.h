// tests/fixtures.h

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

// Small corpora and configurations shared by the trainer tests and the
// acceptance program.

#ifndef KWS_TESTS_FIXTURES_H_
#define KWS_TESTS_FIXTURES_H_

#include <filesystem>

#include "kws/corpus.h"
#include "kws/trainer.h"

namespace kws::testing {

/// Channel counts small enough for second-scale training runs.
inline Architecture small_arch() {
  Architecture a;
  a.c1 = 4;
  a.c2 = 8;
  a.c3 = 8;
  a.d_emb = 16;
  return a;
}

/// One speaker, 4 keyword and 4 ordinary negative utterances.
inline Manifest toy_manifest(const std::filesystem::path& dir, std::uint64_t seed = 5) {
  CorpusSpec spec;
  spec.n_speakers = 1;
  spec.n_pos = 4;
  spec.n_neg = 4;
  spec.n_confusion = 0;
  spec.seed = seed;
  return generate_corpus(spec, dir);
}

/// Baseline training on the toy set: one 8-sample batch per epoch, so the
/// epoch count equals the optimizer step count.
inline TrainConfig toy_config(int steps = 200) {
  TrainConfig c;
  c.setup = Setup::kBaseline;
  c.epochs = steps;
  c.batch_size = 8;
  c.arch = small_arch();
  c.seed = 3;
  c.jobs = 1;
  return c;
}

/// In-memory manifest entries following the generator's id convention.
inline std::vector<ManifestEntry> synthetic_entries(int n_pos, int n_neg, int n_cw, int n_sneg) {
  std::vector<ManifestEntry> out;
  auto add = [&](const char* tag, int n, Label label, Cluster cluster, bool onset) {
    for (int i = 0; i < n; ++i) {
      ManifestEntry e;
      e.utterance_id = std::string("spk000-") + tag + "-" + std::to_string(1000 + i).substr(1);
      e.path = "wav/" + e.utterance_id + ".wav";
      e.label = label;
      e.cluster = cluster;
      if (onset) e.onset_frame = 4;
      e.duration_s = 3.5;
      out.push_back(e);
    }
  };
  add("kw", n_pos, Label::kPositive, Cluster::kRealPos, true);
  add("neg", n_neg, Label::kNegative, Cluster::kRealNeg, false);
  add("cw", n_cw, Label::kNegative, Cluster::kSyntNeg, true);
  add("sneg", n_sneg, Label::kNegative, Cluster::kSyntNeg, false);
  return out;
}

}  // namespace kws::testing

#endif  // KWS_TESTS_FIXTURES_H_
