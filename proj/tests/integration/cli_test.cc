// Copyright 2026 The sftts Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end runs of the command line, in process.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "sftts/cli/cli.h"
#include "sftts/corpus/matrix_file.h"

namespace sftts::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int rc;
  std::string out, err;
};

CliRun Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int rc = RunCli(args, out, err);
  return {rc, out.str(), err.str()};
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

// Narrow model so a handful of steps take well under a second.
std::vector<std::string> SmallModel() {
  std::vector<std::string> a;
  for (const char* s : {"text_encoder", "prompt_encoder", "prosody", "generator", "decoder"}) {
    for (const std::string& kv : {std::string(".hidden_dim=32"), std::string(".ff_dim=48"),
                                  std::string(".heads=2"), std::string(".layers=1")}) {
      a.push_back("--set");
      a.push_back(s + kv);
    }
  }
  for (const char* kv : {"prosody.duration_dim=32", "prosody.pitch_dim=32", "prosody.energy_dim=32",
                         "adaptive.global_style_dim=32", "style_embedder.channels=32",
                         "discriminator.hidden_dim=4", "train.batch_size=2", "train.adv_start=1"}) {
    a.push_back("--set");
    a.push_back(kv);
  }
  return a;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "sftts_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    corpus_ = (root_ / "toy").string();
    const CliRun r = Cli({"toygen", "--out", corpus_, "--speakers-per-language", "1", "--utterances", "2",
                       "--styles", "deterministic", "--val-fraction", "0", "--test-fraction", "0",
                       "--wav", "--seed", "3"});
    ASSERT_EQ(r.rc, kExitOk) << r.err;
    std::vector<std::string> train = {"train", "--corpus", corpus_, "--out", (root_ / "run").string(),
                                      "--steps", "2", "--quiet"};
    for (const auto& s : SmallModel()) train.push_back(s);
    const CliRun t = Cli(train);
    ASSERT_EQ(t.rc, kExitOk) << t.err;
    checkpoint_ = (root_ / "run" / "checkpoint.sftc").string();
  }

  static fs::path root_;
  static std::string corpus_, checkpoint_;
};

fs::path CliTest::root_;
std::string CliTest::corpus_, CliTest::checkpoint_;

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Cli({}).rc, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).rc, kExitUsage);
  EXPECT_EQ(Cli({"toygen", "--out", "x", "--bogus"}).rc, kExitUsage);
  const CliRun r = Cli({"synth", "--checkpoint", checkpoint_, "--corpus", corpus_, "--text-utt",
                     "spk00_det_0000", "--speaker-prompt", "spk00_det_0000", "--style-prompt",
                     "spk01_det_0000", "--no-style-transfer", "--out", (root_ / "x").string()});
  EXPECT_EQ(r.rc, kExitUsage);
  EXPECT_NE(r.err.find("excludes"), std::string::npos);
  EXPECT_EQ(Cli({"train", "--corpus", corpus_, "--out", (root_ / "bad").string(), "--set",
                 "no.such.key=1"}).rc,
            kExitUsage);
  EXPECT_EQ(Cli({"--version"}).rc, kExitOk);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(Cli({"synth", "--checkpoint", (root_ / "missing.sftc").string(), "--text", "0 1",
                 "--speaker-prompt", "x", "--out", (root_ / "y").string()}).rc,
            kExitData);
  EXPECT_EQ(Cli({"prepare", "--corpus", (root_ / "nope").string(), "--out", (root_ / "p").string()}).rc,
            kExitData);
  EXPECT_EQ(Cli({"synth", "--checkpoint", checkpoint_, "--corpus", corpus_, "--text", "zz",
                 "--speaker-prompt", "spk00_det_0000", "--out", (root_ / "y").string()}).rc,
            kExitData);
  EXPECT_EQ(Cli({"inspect", (root_ / "nothing").string()}).rc, kExitData);
}

TEST_F(CliTest, NonFiniteTrainingExitsThree) {
  std::vector<std::string> a = {"train", "--corpus", corpus_, "--out", (root_ / "nan").string(),
                                "--steps", "3", "--quiet", "--set", "train.lr_scale=1e30",
                                "--set", "train.warmup=1", "--set", "train.grad_clip=0"};
  for (const auto& s : SmallModel()) a.push_back(s);
  const CliRun r = Cli(a);
  EXPECT_EQ(r.rc, kExitNumeric) << r.err;
}

TEST_F(CliTest, ResumeOfFinishedRunReportsCompletion) {
  std::vector<std::string> a = {"train", "--corpus", corpus_, "--out", (root_ / "run").string(),
                                "--steps", "2", "--resume"};
  for (const auto& s : SmallModel()) a.push_back(s);
  const CliRun r = Cli(a);
  EXPECT_EQ(r.rc, kExitOk) << r.err;
  EXPECT_NE(r.out.find("already complete"), std::string::npos) << r.out;
  // A different configuration is refused unless forced.
  a.push_back("--set");
  a.push_back("train.lr_scale=0.5");
  EXPECT_EQ(Cli(a).rc, kExitUsage);
}

TEST_F(CliTest, TrainManifestRecordsSeedAndHash) {
  const auto m = nlohmann::json::parse(Slurp(root_ / "run" / "manifest.json"));
  EXPECT_EQ(m["command"], "train");
  EXPECT_TRUE(m.contains("seed"));
  EXPECT_EQ(m["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(m["version"], kVersion);
  EXPECT_EQ(m["steps"], 2);
  EXPECT_TRUE(fs::exists(root_ / "run" / "loss.csv"));
  EXPECT_TRUE(fs::exists(root_ / "run" / "config.txt"));
}

TEST_F(CliTest, CorpusRootFromEnvironment) {
  setenv(kCorpusRootEnv, corpus_.c_str(), 1);
  std::vector<std::string> a = {"train", "--out", (root_ / "env").string(), "--steps", "1", "--quiet"};
  for (const auto& s : SmallModel()) a.push_back(s);
  const CliRun r = Cli(a);
  unsetenv(kCorpusRootEnv);
  EXPECT_EQ(r.rc, kExitOk) << r.err;
  EXPECT_EQ(Cli({"train", "--out", (root_ / "env2").string(), "--steps", "1"}).rc, kExitUsage);
}

TEST_F(CliTest, PrepareFromAudioKeepsAlignment) {
  const fs::path out = root_ / "prepared";
  const CliRun r = Cli({"prepare", "--corpus", corpus_, "--audio", corpus_ + "/wav", "--out", out.string(),
                     "--seed", "9"});
  ASSERT_EQ(r.rc, kExitOk) << r.err;
  EXPECT_NE(r.out.find("4 re-extracted"), std::string::npos) << r.out;
  std::ifstream units(out / "units.csv");
  std::string header;
  std::getline(units, header);
  EXPECT_EQ(header, "utterance,index,phoneme,duration_unit,pitch_unit,energy_unit");
  EXPECT_EQ(Cli({"inspect", out.string()}).rc, kExitOk);
}

TEST_F(CliTest, StylePromptEqualToSpeakerPromptMatchesZeroShot) {
  const fs::path a = root_ / "zs", b = root_ / "st";
  const std::vector<std::string> base = {"synth", "--checkpoint", checkpoint_, "--corpus", corpus_,
                                         "--text-utt", "spk00_det_0001", "--speaker-prompt",
                                         "spk01_det_0000", "--id", "u", "--seed", "4"};
  std::vector<std::string> zs = base, st = base;
  zs.insert(zs.end(), {"--out", a.string()});
  st.insert(st.end(), {"--out", b.string(), "--style-prompt", "spk01_det_0000"});
  ASSERT_EQ(Cli(zs).rc, kExitOk);
  ASSERT_EQ(Cli(st).rc, kExitOk);
  EXPECT_EQ(Slurp(a / "u.out.mel"), Slurp(b / "u.out.mel"));
  EXPECT_EQ(Slurp(a / "u.units.csv"), Slurp(b / "u.units.csv"));
  for (const char* f : {"u.out.dur", "u.ref.dur", "u.prompt.mel", "u.speaker.mel", "u.pitch.csv",
                        "u.mel.png", "u.pitch.png", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
  }
  const auto m = nlohmann::json::parse(Slurp(a / "manifest.json"));
  EXPECT_EQ(m["seed"], 4);
  EXPECT_EQ(m["cross_lingual"], true);
}

TEST_F(CliTest, SymbolTextAndMelFilePrompt) {
  const fs::path out = root_ / "sym";
  const CliRun r = Cli({"synth", "--checkpoint", checkpoint_, "--corpus", corpus_, "--text", "0 1 2 3",
                     "--speaker-prompt", corpus_ + "/feats/spk00_det_0000.mel", "--pitch-offset", "3",
                     "--greedy", "--out", out.string()});
  ASSERT_EQ(r.rc, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(out / "synth.out.mel"));
  EXPECT_FALSE(fs::exists(out / "synth.ref.dur"));
}

TEST_F(CliTest, AnalyzeWritesEveryMode) {
  const fs::path out = root_ / "analysis";
  const CliRun r = Cli({"analyze", "--checkpoint", checkpoint_, "--corpus", corpus_, "--text-utt",
                     "spk00_det_0000", "--speaker-prompt", "spk00_det_0000", "--out", out.string()});
  ASSERT_EQ(r.rc, kExitOk) << r.err;
  for (const char* mode : {"coarse", "filter-only", "source-only"}) {
    EXPECT_TRUE(fs::exists(out / ("analysis." + std::string(mode) + ".out.mel"))) << mode;
  }
  std::ifstream csv(out / "analysis.analysis.csv");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 1 + 6);
  EXPECT_EQ(Cli({"analyze", "--checkpoint", checkpoint_, "--corpus", corpus_, "--text-utt",
                 "spk00_det_0000", "--speaker-prompt", "spk00_det_0000", "--mode", "bogus", "--out",
                 out.string()}).rc,
            kExitUsage);
}

TEST_F(CliTest, MetricsOneRowPerPairPerMetric) {
  const fs::path pairs = root_ / "pairs";
  for (const char* id : {"p1", "p2"}) {
    ASSERT_EQ(Cli({"synth", "--checkpoint", checkpoint_, "--corpus", corpus_, "--text-utt",
                   "spk01_det_0000", "--speaker-prompt", "spk01_det_0001", "--style-prompt",
                   "spk00_det_0000", "--id", id, "--out", pairs.string()}).rc,
              kExitOk);
  }
  const fs::path csv = root_ / "m" / "metrics.csv";
  const CliRun r = Cli({"metrics", "--pairs", pairs.string(), "--checkpoint", checkpoint_, "--corpus",
                     corpus_, "--out", csv.string()});
  ASSERT_EQ(r.rc, kExitOk) << r.err;
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "id,metric,value");
  std::map<std::string, int> per_metric;
  for (std::string line; std::getline(f, line);) per_metric[line.substr(line.find(',') + 1, line.rfind(',') - line.find(',') - 1)]++;
  for (const char* m : {"f0_pcc", "f0_dtw", "secs", "dur_rmse"}) EXPECT_EQ(per_metric[m], 2) << m;
  EXPECT_TRUE(fs::exists(root_ / "m" / "metrics.summary.csv"));
  EXPECT_EQ(Cli({"metrics", "--pairs", (root_ / "empty_dir_missing").string(), "--out", csv.string()}).rc,
            kExitData);
}

TEST_F(CliTest, InspectCheckpointAndConfig) {
  CliRun r = Cli({"inspect", checkpoint_});
  ASSERT_EQ(r.rc, kExitOk) << r.err;
  EXPECT_NE(r.out.find("step 2"), std::string::npos);
  EXPECT_NE(r.out.find("parameters"), std::string::npos);
  r = Cli({"inspect", (root_ / "run" / "config.txt").string()});
  ASSERT_EQ(r.rc, kExitOk) << r.err;
  EXPECT_NE(r.out.find("config hash"), std::string::npos);
}

TEST_F(CliTest, AblationFlagsTrainAndCheckpoint) {
  for (const std::string flag : {"no_source_filter", "no_adaptive_kernels", "no_film"}) {
    std::vector<std::string> a = {"train", "--corpus", corpus_, "--out", (root_ / flag).string(),
                                  "--steps", "1", "--quiet", "--set", "ablation." + flag + "=true"};
    for (const auto& s : SmallModel()) a.push_back(s);
    const CliRun r = Cli(a);
    EXPECT_EQ(r.rc, kExitOk) << flag << ": " << r.err;
    EXPECT_TRUE(fs::exists(root_ / flag / "checkpoint.sftc")) << flag;
  }
}

}  // namespace
}  // namespace sftts::cli
