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
#include <vector>

#include "pcssl/point_cloud.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

/// Ranges the random augmentation draws from.
struct AugmentRanges {
  double max_rotation_deg = 180.0;
  double min_scale = 0.8;
  double max_scale = 1.2;
  double flip_probability = 0.5;

  void validate() const;
};

/// One rigid view transform: rotation about z, optional axis flips, then
/// uniform scaling. Validated on construction.
class AugmentParams {
 public:
  AugmentParams() = default;
  AugmentParams(double rotation_deg, double scale, bool flip_x, bool flip_y,
                std::uint64_t seed = 0);

  static AugmentParams identity() { return {}; }
  /// Independent draw of every component from `ranges`.
  static AugmentParams random(std::uint64_t seed, const AugmentRanges& ranges = {});

  double rotation_deg() const { return rotation_deg_; }
  double scale() const { return scale_; }
  bool flip_x() const { return flip_x_; }
  bool flip_y() const { return flip_y_; }
  std::uint64_t seed() const { return seed_; }

  Vec3 apply(const Vec3& p) const;

 private:
  double rotation_deg_ = 0.0;
  double scale_ = 1.0;
  bool flip_x_ = false;
  bool flip_y_ = false;
  std::uint64_t seed_ = 0;
};

/// p -> S * F * Rz(theta) * p for every point; ids are unchanged.
PointCloud apply_rigid_augment(const PointCloud& pc, const AugmentParams& params);

/// Point dropout: each view holds `total_sample` points of which
/// `shared_sample` come from one index set drawn for both views.
struct DropoutConfig {
  std::size_t total_sample = 4096;
  std::size_t shared_sample = 819;

  /// shared = floor(ratio * total).
  static DropoutConfig with_overlap(std::size_t total, double ratio = 0.2);
  void validate() const;
};

/// One shared original point, located in both views.
struct Correspondence {
  PointId id;
  std::size_t row1;
  std::size_t row2;
};

/// Pairing between the two views through original point ids.
struct CorrespondenceMap {
  std::vector<Correspondence> pairs;

  std::size_t size() const { return pairs.size(); }
  std::vector<PointId> ids() const;
};

struct ViewPair {
  PointCloud view1;
  PointCloud view2;
  CorrespondenceMap correspondence;
};

/// Draws the shared index set once, tops each view up without replacement
/// from the remaining points, then augments each view. The two top-ups are
/// disjoint whenever the frame holds shared + 2 * (total - shared) points,
/// so the views overlap in exactly the shared set; the correspondence lists
/// every point present in both views. View rows follow the original frame
/// order. Deterministic in `seed`. Throws ConfigError when the frame has
/// fewer points than `shared_sample`; `total_sample` is clamped to the
/// frame size.
ViewPair sample_views(const PointCloud& pc, const DropoutConfig& cfg, const AugmentParams& p1,
                      const AugmentParams& p2, std::uint64_t seed);

}  // namespace pcssl
