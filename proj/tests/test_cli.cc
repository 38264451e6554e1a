// test_cli.cc

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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kws/cli.h"
#include "test_util.h"

namespace kws {

using testing::ScratchDir;
using testing::slurp;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config text parsing") {
  const ConfigFile c = parse_config_text(
      "seed = 4  # trailing comment\n; full-line comment\n[train]\nepochs=3\nsetup = \"mask\"\n");
  CHECK(c.at("").at("seed") == "4");
  CHECK(c.at("train").at("epochs") == "3");
  CHECK(c.at("train").at("setup") == "mask");
  CHECK_THROWS_AS(parse_config_text("[train\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("novalue\n"), ValidationError);
  CHECK_THROWS_AS(parse_config_text("= 3\n"), ValidationError);
}

TEST_CASE("flag beats config beats default") {
  ScratchDir dir("cli-prec");
  const auto cfg = dir / "c.ini";
  write_file(cfg, "[corpus]\nspeakers = 1\npos = 2\nneg = 3\nconfusion = 1\nseed = 12\n");
  Run r = run({"gen-corpus", "--config", cfg.string(), "--out", (dir / "a").string(), "--neg", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("#   speakers = 1\n") != std::string::npos);  // from the file
  CHECK(r.err.find("#   neg = 1\n") != std::string::npos);       // flag wins
  CHECK(r.err.find("#   resolved seed = 12\n") != std::string::npos);
  CHECK(r.err.find("#   sample-rate = 16000\n") != std::string::npos);  // default
  CHECK(r.out.find("wrote 4 utterances") != std::string::npos);
}

TEST_CASE("invalid input exits 1, missing files exit 2") {
  ScratchDir dir("cli-err");
  const auto cfg = dir / "c.ini";
  write_file(cfg, "[corpus]\nbogus = 1\n");
  CHECK(run({"gen-corpus", "--config", cfg.string(), "--out", (dir / "x").string()}).code == 1);
  write_file(cfg, "[nonsense]\nseed = 1\n");
  CHECK(run({"gen-corpus", "--config", cfg.string(), "--out", (dir / "x").string()}).code == 1);
  CHECK(run({"train", "--setup", "bogus", "--manifest", "m", "--out", "o"}).code == 1);
  CHECK(run({"gen-corpus"}).code == 1);  // --out is required
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"gen-corpus", "--out", (dir / "x").string(), "--speakers", "-1"}).code == 1);
  CHECK(run({"train", "--setup", "baseline", "--manifest", (dir / "missing.txt").string(), "--out",
             (dir / "o").string()})
            .code == 2);
  CHECK(run({"det-curve", "--scores", (dir / "missing.csv").string()}).code == 2);
  CHECK(run({"gen-corpus", "--config", (dir / "missing.ini").string(), "--out", (dir / "x").string()})
            .code == 2);
}

TEST_CASE("help exits 0 and shows defaults") {
  Run r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gen-corpus") != std::string::npos);
  CHECK(r.out.find("det-curve") != std::string::npos);
  r = run({"train", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--epochs") != std::string::npos);
  CHECK(r.out.find("100") != std::string::npos);
  CHECK(r.out.find("full-coral") != std::string::npos);
}

TEST_CASE("pipeline end to end, identical across job counts") {
  ScratchDir dir("cli-e2e");
  const std::string corpus = (dir / "corpus").string();
  REQUIRE(run({"gen-corpus", "--out", corpus, "--speakers", "1", "--pos", "3", "--neg", "3",
               "--confusion", "3", "--seed", "6"})
              .code == 0);
  const std::string manifest = corpus + "/manifest.txt";
  auto train = [&](const std::string& out, const std::string& jobs) {
    return run({"train", "--setup", "synt-cw-coral", "--manifest", manifest, "--out", out,
                "--epochs", "2", "--channels", "2,2,2", "--emb", "4", "--batch-size", "9",
                "--jobs", jobs});
  };
  REQUIRE(train((dir / "t1").string(), "1").code == 0);
  REQUIRE(train((dir / "t2").string(), "3").code == 0);
  CHECK(slurp(dir / "t1/final") == slurp(dir / "t2/final"));
  CHECK(slurp(dir / "t1/train_log.csv") == slurp(dir / "t2/train_log.csv"));

  const std::string model = (dir / "t1/final").string();
  Run e = run({"eval", "--model", model, "--manifest", manifest, "--out", (dir / "ev").string(),
               "--stride", "8", "--label", "tiny"});
  REQUIRE(e.code == 0);
  CHECK(std::filesystem::exists(dir / "ev/det_real.csv"));
  CHECK(std::filesystem::exists(dir / "ev/det_real+synt-cw.csv"));
  CHECK(slurp(dir / "ev/report.txt").find("tiny") != std::string::npos);

  Run d = run({"det-curve", "--scores", (dir / "ev/scores_real.csv").string(), "--out", "-"});
  REQUIRE(d.code == 0);
  CHECK(d.out == slurp(dir / "ev/det_real.csv"));

  Run det = run({"detect", "--model", model, "--manifest", manifest, "--stride", "8"});
  REQUIRE(det.code == 0);
  CHECK(det.out.rfind("id,confidence,best_start_frame,triggered\n", 0) == 0);
  CHECK(std::count(det.out.begin(), det.out.end(), '\n') == 10);

  REQUIRE(run({"featurize", "--manifest", manifest, "--out", (dir / "feat").string()}).code == 0);
  CHECK(std::filesystem::exists(dir / "feat/spk000-kw-000.kwsf"));
  REQUIRE(run({"augment", "--manifest", manifest, "--out", (dir / "aug").string()}).code == 0);
  CHECK(std::filesystem::exists(dir / "aug/masks.csv"));
  CHECK(std::filesystem::exists(dir / "aug/spk000-kw-000-mask4.wav"));
}

}  // TEST_SUITE

}  // namespace kws
