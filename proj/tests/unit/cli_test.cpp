// Copyright 2026 The pcssl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Drives the installed command-line tool as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct Result {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
  std::string stdout_only;
};

Result run(const std::string& args, bool merge = true) {
  const std::string cmd = std::string("PC_LOG_LEVEL=error ") + PCSSL_CLI + " " + args +
                          (merge ? " 2>&1" : " 2>/dev/null");
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  if (!merge) r.stdout_only = r.output;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr const char* kTinyConfig =
    "dataset_path = synthetic\n"
    "synthetic_frames = 12\n"
    "scene_ground_extent = 10\n"
    "scene_objects = 3\n"
    "scene_points_per_object = 40\n"
    "scene_ground_points = 120\n"
    "scene_seed = 3\n"
    "total_sample = 64\n"
    "shared_sample = 24\n"
    "n = 8\nr = 1.0\nk = 4\n"
    "backbone_widths = 8, 16\n"
    "neighborhood_k = 4\n"
    "projection_hidden = 16\n"
    "embed_dim = 16\n"
    "cluster_count = 4\n"
    "epochs = 1\n"
    "warmup_epochs = 0\n";

class CliTest : public ::testing::Test {
 protected:
  fs::path root = fs::temp_directory_path() /
                  (std::string("pcssl_cli_test_") +
                   ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::path config = root / "tiny.cfg";

  void SetUp() override {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(config) << kTinyConfig;
  }
  void TearDown() override { fs::remove_all(root); }

  std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }
};

TEST_F(CliTest, UnknownCommandPrintsUsage) {
  const auto r = run("frobnicate");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("pretrain"), std::string::npos) << r.output;
  EXPECT_NE(run("").status, 0);
}

TEST_F(CliTest, MissingDatasetPathNamesKey) {
  std::ofstream(root / "bad.cfg") << "epochs = 2\n";
  const auto r = run("pretrain --config " + q(root / "bad.cfg") + " --out " + q(root / "run"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("dataset_path"), std::string::npos) << r.output;
}

TEST_F(CliTest, ConfigParseErrorIsLineNumbered) {
  std::ofstream(root / "bad.cfg") << "dataset_path = synthetic\n# fine\nthis line is wrong\n";
  const auto r = run("pretrain --config " + q(root / "bad.cfg") + " --out " + q(root / "run"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.output.find("bad.cfg:3"), std::string::npos) << r.output;

  std::ofstream(root / "typo.cfg") << "dataset_path = synthetic\nepochz = 3\n";
  const auto t = run("probe --config " + q(root / "typo.cfg") + " --checkpoint x");
  EXPECT_NE(t.status, 0);
  EXPECT_NE(t.output.find("typo.cfg:2"), std::string::npos) << t.output;
}

TEST_F(CliTest, GradCheckOnMicroConfigPasses) {
  const auto r = run("grad-check --out " + q(root / "gc"));
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("max relative error"), std::string::npos) << r.output;
  const auto j = nlohmann::json::parse(slurp(root / "gc" / "grad_check.json"));
  EXPECT_LT(j["max_rel_error"].get<double>(), 1e-4);
}

TEST_F(CliTest, GenScenesIsIdempotent) {
  ASSERT_EQ(run("gen-scenes --config " + q(config) + " --out " + q(root / "a")).status, 0);
  ASSERT_EQ(run("gen-scenes --config " + q(config) + " --out " + q(root / "b")).status, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(root / "b" / e.path().filename())) << e.path();
  }
  EXPECT_EQ(files, 24u);
  // a different seed changes the scenes
  ASSERT_EQ(run("gen-scenes --config " + q(config) + " --seed 4 --out " + q(root / "c")).status, 0);
  EXPECT_NE(slurp(root / "a" / "scene_0000.bin"), slurp(root / "c" / "scene_0000.bin"));
}

TEST_F(CliTest, PipelineIsIdempotent) {
  for (const char* dir : {"r1", "r2"}) {
    const auto out = root / dir;
    const auto p = run("pretrain --config " + q(config) + " --out " + q(out));
    ASSERT_EQ(p.status, 0) << p.output;
    const auto pr = run("probe --config " + q(config) + " --checkpoint " + q(out / "final.ckpt") +
                        " --out " + q(out));
    ASSERT_EQ(pr.status, 0) << pr.output;
    const auto ex = run("export-embeddings --config " + q(config) + " --checkpoint " +
                        q(out / "final.ckpt") + " --out " + q(out));
    ASSERT_EQ(ex.status, 0) << ex.output;
  }
  for (const char* f : {"metrics.jsonl", "final.ckpt", "probe.json", "embeddings.csv",
                        "embedding_labels.csv"}) {
    EXPECT_EQ(slurp(root / "r1" / f), slurp(root / "r2" / f)) << f;
  }
  // rerunning into the same directory overwrites with identical bytes
  const std::string before = slurp(root / "r1" / "metrics.jsonl");
  ASSERT_EQ(run("pretrain --config " + q(config) + " --out " + q(root / "r1")).status, 0);
  EXPECT_EQ(slurp(root / "r1" / "metrics.jsonl"), before);

  const auto probe = nlohmann::json::parse(slurp(root / "r1" / "probe.json"));
  for (const char* key : {"purity", "nmi", "probe_accuracy", "step"}) {
    EXPECT_TRUE(probe.contains(key)) << key;
  }
  EXPECT_EQ(probe["step"].get<int>(), 6);
}

TEST_F(CliTest, InspectProposalsDumpsPairing) {
  const auto r = run("inspect-proposals --config " + q(config) + " --frame 1", false);
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.stdout_only);
  EXPECT_EQ(j["frame"].get<int>(), 1);
  EXPECT_EQ(j["k"].get<int>(), 4);
  ASSERT_EQ(j["pairs"].size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    // paired proposals share their center point
    EXPECT_EQ(j["view1"]["center_ids"][i], j["view2"]["center_ids"][i]);
    EXPECT_EQ(j["view1"]["members"][i].size(), 4u);
  }
  EXPECT_NE(run("inspect-proposals --config " + q(config) + " --frame 99").status, 0);
}

TEST_F(CliTest, ProbeWithoutCheckpointFails) {
  EXPECT_NE(run("probe --config " + q(config)).status, 0);
  EXPECT_NE(run("probe --config " + q(config) + " --checkpoint " + q(root / "missing.ckpt")).status, 0);
}

}  // namespace
