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
#include <string_view>
#include <vector>

#include "pcssl/point_cloud.hpp"
#include "pcssl/proposals.hpp"

namespace pcssl {

enum class ShapeClass : int { kGround = 0, kSphereShell = 1, kBox = 2, kVerticalPole = 3 };

ShapeClass parse_shape_class(std::string_view name);
std::string_view to_string(ShapeClass c);

/// Synthetic street-like frame: flat ground at z = 0 with objects of
/// distinct geometric classes standing on it.
struct SceneConfig {
  double ground_extent = 24.0;  // side of the square ground patch
  std::size_t objects_per_scene = 8;
  std::vector<ShapeClass> class_set{ShapeClass::kSphereShell, ShapeClass::kBox,
                                    ShapeClass::kVerticalPole};
  std::size_t points_per_object = 160;
  std::size_t ground_points = 1200;
  double noise_sigma = 0.01;
  double min_gap = 2.0;  // clearance between object footprints
  std::uint64_t seed = 0;

  // shape dimensions
  double sphere_radius = 0.5;
  double box_length = 1.4, box_width = 0.8, box_height = 0.9;
  double pole_radius = 0.08, pole_height = 2.4;

  void validate() const;
};

struct PlacedObject {
  ShapeClass shape;
  Vec3 center;      // footprint center on the ground (z = 0)
  double yaw = 0.0;  // boxes only
};

struct LabeledScene {
  PointCloud cloud;
  std::vector<int> class_ids;     // 0 = ground
  std::vector<int> instance_ids;  // -1 = ground, else object index
  std::vector<PlacedObject> objects;
};

/// Objects cycle through `class_set` from a random offset so classes stay
/// balanced, and are placed at random non-overlapping positions. Throws
/// GenerationError when placement fails after bounded retries.
LabeledScene generate_scene(const SceneConfig& cfg);

/// Distance from `p` to the noiseless surface of `obj`.
double surface_distance(const PlacedObject& obj, const SceneConfig& cfg, const Vec3& p);

/// Writes `<stem>.bin` (xyzi_bin) and `<stem>.labels.csv`
/// (`point_index,class_id,instance_id`).
void export_scene(const LabeledScene& scene, const std::filesystem::path& dir,
                  const std::string& stem);

/// Reads a frame written by export_scene.
LabeledScene import_scene(const std::filesystem::path& bin_path);

/// Majority class of each proposal's members (looked up by point id in
/// `scene`), lowest class id on ties.
std::vector<int> proposal_labels(const LabeledScene& scene, const ProposalSet& proposals);

struct ClusterMetrics {
  double purity = 0.0;
  double nmi = 0.0;
};

/// Purity and NMI = I(C;L) / sqrt(H(C) H(L)) with 0/0 taken as 0.
ClusterMetrics cluster_metrics(std::span<const std::size_t> assignments,
                               std::span<const int> labels);

struct ProbeConfig {
  double train_fraction = 0.7;
  std::size_t iterations = 500;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  std::size_t min_per_class = 10;
};

/// Multinomial logistic regression trained by full-batch gradient descent
/// on a stratified 70% split of the rows; returns held-out accuracy.
/// Features are standardized with training-split statistics.
/// Throws ArgumentError (fewer than two classes) or EvaluationError (a
/// class with fewer than min_per_class samples).
double linear_probe(std::span<const double> embeddings, std::size_t dim,
                    std::span<const int> labels, std::uint64_t split_seed,
                    const ProbeConfig& cfg = {});

}  // namespace pcssl
