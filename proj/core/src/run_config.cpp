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

#include "pcssl/run_config.hpp"

#include <algorithm>
#include <array>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {
namespace {

constexpr std::array<std::string_view, 50> kKeys = {
    // data
    "dataset_path", "dataset_format", "synthetic_frames",
    "scene_ground_extent", "scene_objects", "scene_classes", "scene_points_per_object",
    "scene_ground_points", "scene_noise_sigma", "scene_min_gap", "scene_seed",
    "ground_mode", "z_cut", "ransac_iters", "ransac_inlier_dist",
    // views
    "total_sample", "shared_sample", "max_rotation_deg", "min_scale", "max_scale",
    "flip_probability",
    // proposals
    "n", "r", "k",
    // model
    "backbone_widths", "neighborhood_k", "attention_mode", "attention_width", "attention_guard",
    "projection_hidden", "embed_dim", "cluster_count",
    // objective
    "tau", "alpha", "beta", "sinkhorn_eps", "sinkhorn_iters",
    // training
    "epochs", "batch_frames", "max_lr", "warmup_epochs", "adam_beta1", "adam_beta2", "adam_eps",
    "seed", "checkpoint_every", "data_workers", "prefetch_depth",
    // evaluation
    "eval_seed", "eval_frames",
};

template <typename F>
void wrap(std::string_view key, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (warmup_epochs >= epochs) throw ConfigError("warmup_epochs must be below epochs");
  if (batch_frames == 0) throw ConfigError("batch_frames must be positive");
  if (!(max_lr > 0.0)) throw ConfigError("max_lr must be positive");
  if (prefetch_depth == 0) throw ConfigError("prefetch_depth must be positive");
  adam.validate();
}

std::span<const std::string_view> RunConfig::known_keys() { return kKeys; }

RunConfig RunConfig::from_kv(const KeyValueConfig& kv) {
  kv.check_known(known_keys());
  RunConfig c;

  auto& d = c.data;
  d.dataset_path = kv.require("dataset_path");
  wrap("dataset_format", [&] {
    d.format = parse_cloud_format(kv.get_string("dataset_format", "xyzi_bin"));
  });
  d.synthetic_frames = kv.get_size("synthetic_frames", d.synthetic_frames);
  auto& s = d.scene;
  s.ground_extent = kv.get_double("scene_ground_extent", s.ground_extent);
  s.objects_per_scene = kv.get_size("scene_objects", s.objects_per_scene);
  if (kv.contains("scene_classes")) {
    s.class_set.clear();
    for (const auto& name : kv.get_strings("scene_classes", {})) {
      wrap("scene_classes", [&] { s.class_set.push_back(parse_shape_class(name)); });
    }
  }
  s.points_per_object = kv.get_size("scene_points_per_object", s.points_per_object);
  s.ground_points = kv.get_size("scene_ground_points", s.ground_points);
  s.noise_sigma = kv.get_double("scene_noise_sigma", s.noise_sigma);
  s.min_gap = kv.get_double("scene_min_gap", s.min_gap);
  s.seed = kv.get_u64("scene_seed", s.seed);

  auto& g = d.ground;
  wrap("ground_mode", [&] { g.mode = parse_ground_mode(kv.get_string("ground_mode", "z_threshold")); });
  // without an explicit cut, sit five noise widths above the generated ground
  g.z_cut = kv.get_double("z_cut", 5.0 * s.noise_sigma);
  g.ransac_iters = kv.get_size("ransac_iters", g.ransac_iters);
  g.ransac_inlier_dist = kv.get_double("ransac_inlier_dist", g.ransac_inlier_dist);

  auto& smp = c.sample;
  smp.dropout.total_sample = kv.get_size("total_sample", smp.dropout.total_sample);
  smp.dropout.shared_sample =
      kv.contains("shared_sample")
          ? kv.get_size("shared_sample", 0)
          : DropoutConfig::with_overlap(smp.dropout.total_sample).shared_sample;
  smp.augment.max_rotation_deg = kv.get_double("max_rotation_deg", smp.augment.max_rotation_deg);
  smp.augment.min_scale = kv.get_double("min_scale", smp.augment.min_scale);
  smp.augment.max_scale = kv.get_double("max_scale", smp.augment.max_scale);
  smp.augment.flip_probability = kv.get_double("flip_probability", smp.augment.flip_probability);
  smp.proposals.count = kv.get_size("n", smp.proposals.count);
  smp.proposals.radius = kv.get_double("r", smp.proposals.radius);
  smp.proposals.k = kv.get_size("k", smp.proposals.k);

  auto& m = c.model;
  m.backbone.mlp_widths = kv.get_sizes("backbone_widths", m.backbone.mlp_widths);
  m.backbone.neighborhood_k = kv.get_size("neighborhood_k", m.backbone.neighborhood_k);
  wrap("attention_mode", [&] {
    m.attention.mode = parse_attention_mode(kv.get_string("attention_mode", "linear_norm"));
  });
  m.attention.width = kv.get_size("attention_width", m.attention.width);
  m.attention.guard = kv.get_double("attention_guard", m.attention.guard);
  m.projection_hidden = kv.get_size("projection_hidden", m.projection_hidden);
  m.embed_dim = kv.get_size("embed_dim", m.embed_dim);
  m.clusters = kv.get_size("cluster_count", m.clusters);

  auto& o = c.objective;
  o.weights.tau = kv.get_double("tau", o.weights.tau);
  o.weights.alpha = kv.get_double("alpha", o.weights.alpha);
  o.weights.beta = kv.get_double("beta", o.weights.beta);
  o.sinkhorn_eps = kv.get_double("sinkhorn_eps", o.sinkhorn_eps);
  o.sinkhorn_iters = kv.get_size("sinkhorn_iters", o.sinkhorn_iters);

  auto& t = c.train;
  t.epochs = kv.get_size("epochs", t.epochs);
  t.batch_frames = kv.get_size("batch_frames", t.batch_frames);
  t.max_lr = kv.get_double("max_lr", t.max_lr);
  t.warmup_epochs = kv.get_size("warmup_epochs", t.warmup_epochs);
  t.adam.beta1 = kv.get_double("adam_beta1", t.adam.beta1);
  t.adam.beta2 = kv.get_double("adam_beta2", t.adam.beta2);
  t.adam.eps = kv.get_double("adam_eps", t.adam.eps);
  t.seed = kv.get_u64("seed", t.seed);
  t.checkpoint_every = kv.get_size("checkpoint_every", t.checkpoint_every);
  t.data_workers = kv.get_size("data_workers", t.data_workers);
  t.prefetch_depth = kv.get_size("prefetch_depth", t.prefetch_depth);

  c.eval.seed = kv.get_u64("eval_seed", c.eval.seed);
  c.eval.frames = kv.get_size("eval_frames", c.eval.frames);

  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(kv.source() + ": " + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_kv(KeyValueConfig::load(path));
}

void RunConfig::validate() const {
  if (data.dataset_path.empty()) throw ConfigError("dataset_path must not be empty");
  wrap("scene", [&] { data.scene.validate(); });
  wrap("ground", [&] { data.ground.validate(); });
  wrap("dropout", [&] { sample.dropout.validate(); });
  wrap("augment", [&] { sample.augment.validate(); });
  wrap("proposals", [&] { sample.proposals.validate(); });
  wrap("model", [&] { model.validate(); });
  wrap("objective", [&] { objective.validate(); });
  train.validate();
  if (data.synthetic() && data.synthetic_frames == 0) {
    throw ConfigError("synthetic_frames must be positive");
  }
}

SceneConfig synthetic_scene_config(const SceneConfig& base, std::size_t index) {
  SceneConfig s = base;
  s.seed = Rng::keyed({base.seed, 0x5CE4E, index}).next_u64();
  return s;
}

Dataset load_dataset(const DataConfig& cfg) {
  Dataset ds;
  if (cfg.synthetic()) {
    for (std::size_t i = 0; i < cfg.synthetic_frames; ++i) {
      ds.scenes.push_back(generate_scene(synthetic_scene_config(cfg.scene, i)));
    }
    ds.labeled = true;
  } else {
    namespace fs = std::filesystem;
    const fs::path root(cfg.dataset_path);
    if (!fs::is_directory(root)) {
      throw ConfigError("dataset_path '" + cfg.dataset_path + "' is not a directory");
    }
    const std::string ext = cfg.format == CloudFormat::kCsv ? ".csv" : ".bin";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(root)) {
      const auto& p = entry.path();
      if (!entry.is_regular_file() || p.extension() != ext) continue;
      if (p.stem().extension() == ".labels") continue;  // label sidecars
      files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    bool all_labeled = cfg.format == CloudFormat::kXyziBin && !files.empty();
    for (const auto& f : files) {
      auto sidecar = f;
      sidecar.replace_extension(".labels.csv");
      all_labeled = all_labeled && fs::exists(sidecar);
    }
    for (const auto& f : files) {
      if (all_labeled) {
        ds.scenes.push_back(import_scene(f));
      } else {
        LabeledScene s{load_point_cloud(f, cfg.format), {}, {}, {}};
        s.class_ids.assign(s.cloud.size(), 0);
        s.instance_ids.assign(s.cloud.size(), -1);
        ds.scenes.push_back(std::move(s));
      }
    }
    ds.labeled = all_labeled;
  }
  if (ds.scenes.empty()) throw ConfigError("dataset '" + cfg.dataset_path + "' has no frames");
  for (const auto& s : ds.scenes) ds.frames.push_back(remove_ground(s.cloud, cfg.ground));
  return ds;
}

}  // namespace pcssl
