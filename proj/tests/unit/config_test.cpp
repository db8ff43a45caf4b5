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

#include "pcssl/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <string>

#include "pcssl/error.hpp"
#include "pcssl/run_config.hpp"

namespace pcssl {
namespace {

namespace fs = std::filesystem;

// Runs `f`, expecting ConfigError whose message contains every needle.
template <typename F>
void expect_config_error(F&& f, std::initializer_list<std::string> needles) {
  try {
    f();
    ADD_FAILURE() << "expected ConfigError";
  } catch (const ConfigError& e) {
    for (const auto& n : needles) {
      EXPECT_NE(std::string(e.what()).find(n), std::string::npos) << e.what() << " lacks " << n;
    }
  }
}

TEST(KeyValueConfigTest, ParsesValuesCommentsAndBlankLines) {
  const auto kv = KeyValueConfig::parse(
      "# header\n"
      "\n"
      "  tau = 0.25   # trailing comment\n"
      "name=desk\r\n"
      "widths = 8, 16 ,32\n"
      "flag = yes\n");
  EXPECT_EQ(kv.get_double("tau", 0.0), 0.25);
  EXPECT_EQ(kv.get_string("name", ""), "desk");
  EXPECT_EQ(kv.get_sizes("widths", {}), (std::vector<std::size_t>{8, 16, 32}));
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_size("missing", 7), 7u);
  EXPECT_FALSE(kv.contains("missing"));
  EXPECT_EQ(kv.keys().size(), 4u);
}

TEST(KeyValueConfigTest, ErrorsCarryLineNumbers) {
  expect_config_error([] { KeyValueConfig::parse("a = 1\n\nnot a pair\n", "x.cfg"); },
                      {"x.cfg:3"});
  expect_config_error([] { KeyValueConfig::parse("a = 1\nb = 2\na = 3\n", "x.cfg"); },
                      {"x.cfg:3", "duplicate", "'a'", "line 1"});
  expect_config_error([] { KeyValueConfig::parse(" = 4\n", "x.cfg"); }, {"x.cfg:1"});
  const auto kv = KeyValueConfig::parse("a = 1\nb = fast\nc = -3\nd = 1,x\ne = maybe\n", "x.cfg");
  expect_config_error([&] { kv.get_double("b", 0); }, {"x.cfg:2", "'b'"});
  expect_config_error([&] { kv.get_size("c", 0); }, {"x.cfg:3", "'c'"});
  expect_config_error([&] { kv.get_sizes("d", {}); }, {"x.cfg:4", "'d'"});
  expect_config_error([&] { kv.get_bool("e", false); }, {"x.cfg:5", "'e'"});
}

TEST(KeyValueConfigTest, RequireNamesMissingKey) {
  const auto kv = KeyValueConfig::parse("a = 1\nempty =\n");
  EXPECT_EQ(kv.require("a"), "1");
  expect_config_error([&] { kv.require("dataset_path"); }, {"dataset_path"});
  expect_config_error([&] { kv.require("empty"); }, {"empty"});
}

TEST(KeyValueConfigTest, UnknownKeysReportLine) {
  const auto kv = KeyValueConfig::parse("tau = 1\n\ntua = 2\n", "run.cfg");
  const std::string_view known[] = {"tau"};
  expect_config_error([&] { kv.check_known(known); }, {"run.cfg:3", "tua"});
}

TEST(KeyValueConfigTest, SetOverrides) {
  auto kv = KeyValueConfig::parse("seed = 1\n");
  kv.set("seed", "5");
  kv.set("extra", "x");
  EXPECT_EQ(kv.get_u64("seed", 0), 5u);
  EXPECT_EQ(kv.get_string("extra", ""), "x");
}

TEST(KeyValueConfigTest, MissingFileIsConfigError) {
  EXPECT_THROW(KeyValueConfig::load("/nonexistent/run.cfg"), ConfigError);
}

TEST(RunConfigTest, DefaultsAndDerivedValues) {
  const auto c = RunConfig::from_kv(KeyValueConfig::parse("dataset_path = synthetic\n"));
  EXPECT_TRUE(c.data.synthetic());
  EXPECT_EQ(c.objective.weights.tau, 0.1);
  EXPECT_EQ(c.objective.weights.alpha, 1.0);
  EXPECT_EQ(c.objective.weights.beta, 1.0);
  EXPECT_EQ(c.objective.sinkhorn_eps, 0.05);
  EXPECT_EQ(c.objective.sinkhorn_iters, 3u);
  EXPECT_EQ(c.train.max_lr, 0.003);
  EXPECT_EQ(c.model.attention.mode, AttentionMode::kLinearNorm);
  // shared ids default to a fifth of the sampled points
  EXPECT_EQ(c.sample.dropout.shared_sample, c.sample.dropout.total_sample / 5);
  EXPECT_DOUBLE_EQ(c.data.ground.z_cut, 5.0 * c.data.scene.noise_sigma);
}

TEST(RunConfigTest, ReadsOverrides) {
  const auto c = RunConfig::from_kv(KeyValueConfig::parse(
      "dataset_path = frames/\n"
      "dataset_format = csv\n"
      "total_sample = 100\n"
      "n = 12\nr = 0.5\nk = 6\n"
      "backbone_widths = 4, 8\n"
      "attention_mode = softmax\n"
      "scene_classes = box, vertical_pole\n"
      "alpha = 0\n"
      "seed = 9\n"));
  EXPECT_FALSE(c.data.synthetic());
  EXPECT_EQ(c.data.format, CloudFormat::kCsv);
  EXPECT_EQ(c.sample.dropout.shared_sample, 20u);
  EXPECT_EQ(c.sample.proposals.count, 12u);
  EXPECT_EQ(c.sample.proposals.radius, 0.5);
  EXPECT_EQ(c.sample.proposals.k, 6u);
  EXPECT_EQ(c.model.backbone.mlp_widths, (std::vector<std::size_t>{4, 8}));
  EXPECT_EQ(c.model.attention.mode, AttentionMode::kSoftmax);
  EXPECT_EQ(c.data.scene.class_set.size(), 2u);
  EXPECT_EQ(c.objective.weights.alpha, 0.0);
  EXPECT_EQ(c.train.seed, 9u);
}

TEST(RunConfigTest, RejectsBadRuns) {
  expect_config_error([] { RunConfig::from_kv(KeyValueConfig::parse("epochs = 3\n")); },
                      {"dataset_path"});
  expect_config_error(
      [] { RunConfig::from_kv(KeyValueConfig::parse("dataset_path = synthetic\nlr = 1\n", "r.cfg")); },
      {"r.cfg:2", "lr"});
  expect_config_error(
      [] { RunConfig::from_kv(KeyValueConfig::parse("dataset_path = synthetic\ntau = 0\n")); },
      {"tau"});
  expect_config_error(
      [] {
        RunConfig::from_kv(KeyValueConfig::parse("dataset_path = synthetic\nattention_mode = dot\n"));
      },
      {"attention_mode"});
  EXPECT_THROW(
      RunConfig::from_kv(KeyValueConfig::parse("dataset_path = synthetic\nsynthetic_frames = 0\n")),
      ConfigError);
}

TEST(RunConfigTest, KnownKeysAreUnique) {
  const auto keys = RunConfig::known_keys();
  std::set<std::string_view> seen(keys.begin(), keys.end());
  EXPECT_EQ(seen.size(), keys.size());
  EXPECT_TRUE(seen.contains("dataset_path"));
}

TEST(RunConfigTest, ShippedDeskConfigLoads) {
  const auto c = RunConfig::load(fs::path(PCSSL_SOURCE_DIR) / "configs" / "desk.cfg");
  EXPECT_EQ(c.data.synthetic_frames, 64u);
  EXPECT_EQ(c.train.epochs, 50u);
  EXPECT_EQ(c.data.scene.class_set.size(), 3u);
  EXPECT_EQ(c.objective.weights.tau, 0.1);
}

TEST(LoadDatasetTest, SyntheticFramesHaveGroundRemoved) {
  DataConfig cfg;
  cfg.dataset_path = "synthetic";
  cfg.synthetic_frames = 3;
  cfg.scene.objects_per_scene = 3;
  cfg.scene.points_per_object = 50;
  cfg.scene.ground_points = 200;
  cfg.scene.ground_extent = 12.0;
  cfg.ground.z_cut = 0.05;
  const auto ds = load_dataset(cfg);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_TRUE(ds.labeled);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LT(ds.frames[i].size(), ds.scenes[i].cloud.size());
    for (const auto& p : ds.frames[i].points()) EXPECT_GT(p[2], 0.05);
  }
  // frames differ from one another but regenerate identically
  EXPECT_NE(ds.scenes[0].cloud, ds.scenes[1].cloud);
  EXPECT_EQ(load_dataset(cfg).scenes[2].cloud, ds.scenes[2].cloud);
}

TEST(LoadDatasetTest, DirectoryWithAndWithoutLabels) {
  const fs::path dir = fs::temp_directory_path() / "pcssl_dataset_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  SceneConfig sc;
  sc.objects_per_scene = 2;
  sc.points_per_object = 30;
  sc.ground_points = 100;
  sc.ground_extent = 10.0;
  for (int i = 0; i < 2; ++i) {
    sc.seed = static_cast<std::uint64_t>(i);
    export_scene(generate_scene(sc), dir, "frame" + std::to_string(i));
  }
  DataConfig cfg;
  cfg.dataset_path = dir.string();
  cfg.ground.z_cut = 0.05;
  auto ds = load_dataset(cfg);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_TRUE(ds.labeled);

  fs::remove(dir / "frame1.labels.csv");
  ds = load_dataset(cfg);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_FALSE(ds.labeled);

  fs::remove_all(dir);
  fs::create_directories(dir);
  expect_config_error([&] { load_dataset(cfg); }, {"no frames"});
  fs::remove_all(dir);
  expect_config_error([&] { load_dataset(cfg); }, {"not a directory"});
}

}  // namespace
}  // namespace pcssl
