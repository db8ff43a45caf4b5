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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcssl/config.hpp"
#include "pcssl/model.hpp"
#include "pcssl/optim.hpp"
#include "pcssl/point_cloud.hpp"
#include "pcssl/synth.hpp"

namespace pcssl {

struct TrainConfig {
  std::size_t epochs = 36;
  std::size_t batch_frames = 2;
  double max_lr = 0.003;
  std::size_t warmup_epochs = 5;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // 0: only the initial and final checkpoints
  std::size_t data_workers = 1;      // 0: prepare batches on the training thread
  std::size_t prefetch_depth = 4;

  void validate() const;
};

/// Where frames come from: a directory of xyzi_bin (or csv) files, or the
/// literal "synthetic" for generated planted-class scenes.
struct DataConfig {
  std::string dataset_path;
  CloudFormat format = CloudFormat::kXyziBin;
  std::size_t synthetic_frames = 64;
  SceneConfig scene;
  GroundFilterConfig ground;

  bool synthetic() const { return dataset_path == "synthetic"; }
};

struct EvalConfig {
  std::uint64_t seed = 7;
  std::size_t frames = 0;  // 0: every frame
  ProbeConfig probe;
};

/// Complete description of one run, read from a flat key-value file.
struct RunConfig {
  DataConfig data;
  SampleConfig sample;
  ModelConfig model;
  ObjectiveConfig objective;
  TrainConfig train;
  EvalConfig eval;

  /// Unknown keys, malformed values and failed invariants raise
  /// ConfigError. `dataset_path` is required.
  static RunConfig from_kv(const KeyValueConfig& kv);
  static RunConfig load(const std::filesystem::path& path);

  static std::span<const std::string_view> known_keys();

  void validate() const;
};

/// Frames ready for training plus their labels when available.
struct Dataset {
  std::vector<LabeledScene> scenes;   // as loaded, ground included
  std::vector<PointCloud> frames;     // ground removed
  bool labeled = false;

  std::size_t size() const { return frames.size(); }
};

/// Loads or generates every frame and removes ground. Throws ConfigError
/// for a missing path or an empty dataset.
Dataset load_dataset(const DataConfig& cfg);

/// Scene configuration for the i-th synthetic frame.
SceneConfig synthetic_scene_config(const SceneConfig& base, std::size_t index);

}  // namespace pcssl
