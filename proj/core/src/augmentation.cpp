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

#include "pcssl/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pcssl/error.hpp"

namespace pcssl {

void AugmentRanges::validate() const {
  if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0)) {
    throw ConfigError("augment.max_rotation_deg must lie in [0, 180]");
  }
  if (!(min_scale >= 0.8 && max_scale <= 1.2 && min_scale <= max_scale)) {
    throw ConfigError("augment scale range must satisfy 0.8 <= min_scale <= max_scale <= 1.2");
  }
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0)) {
    throw ConfigError("augment.flip_probability must lie in [0, 1]");
  }
}

AugmentParams::AugmentParams(double rotation_deg, double scale, bool flip_x, bool flip_y,
                             std::uint64_t seed)
    : rotation_deg_(rotation_deg), scale_(scale), flip_x_(flip_x), flip_y_(flip_y), seed_(seed) {
  if (!(rotation_deg >= -180.0 && rotation_deg <= 180.0)) {
    throw ConfigError("rotation " + std::to_string(rotation_deg) + " deg outside [-180, 180]");
  }
  if (!(scale >= 0.8 && scale <= 1.2)) {
    throw ConfigError("scale " + std::to_string(scale) + " outside [0.8, 1.2]");
  }
}

AugmentParams AugmentParams::random(std::uint64_t seed, const AugmentRanges& ranges) {
  ranges.validate();
  Rng rng(seed);
  const double rot = rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg);
  const double scale = rng.uniform(ranges.min_scale, ranges.max_scale);
  const bool fx = rng.bernoulli(ranges.flip_probability);
  const bool fy = rng.bernoulli(ranges.flip_probability);
  return AugmentParams(rot, scale, fx, fy, seed);
}

Vec3 AugmentParams::apply(const Vec3& p) const {
  const double theta = rotation_deg_ * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  double x = c * p[0] - s * p[1];
  double y = s * p[0] + c * p[1];
  double z = p[2];
  if (flip_x_) x = -x;
  if (flip_y_) y = -y;
  return {scale_ * x, scale_ * y, scale_ * z};
}

PointCloud apply_rigid_augment(const PointCloud& pc, const AugmentParams& params) {
  std::vector<Vec3> out;
  out.reserve(pc.size());
  for (const auto& p : pc.points()) out.push_back(params.apply(p));
  return pc.with_points(std::move(out));
}

DropoutConfig DropoutConfig::with_overlap(std::size_t total, double ratio) {
  DropoutConfig cfg;
  cfg.total_sample = total;
  cfg.shared_sample = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total)));
  cfg.validate();
  return cfg;
}

void DropoutConfig::validate() const {
  if (shared_sample == 0) throw ConfigError("dropout.shared_sample must be > 0");
  if (shared_sample > total_sample) {
    throw ConfigError("dropout.shared_sample must not exceed dropout.total_sample");
  }
}

std::vector<PointId> CorrespondenceMap::ids() const {
  std::vector<PointId> out;
  out.reserve(pairs.size());
  for (const auto& c : pairs) out.push_back(c.id);
  return out;
}

ViewPair sample_views(const PointCloud& pc, const DropoutConfig& cfg, const AugmentParams& p1,
                      const AugmentParams& p2, std::uint64_t seed) {
  cfg.validate();
  const std::size_t n = pc.size();
  if (n < cfg.shared_sample) {
    throw ConfigError("frame has " + std::to_string(n) + " points, fewer than shared_sample=" +
                      std::to_string(cfg.shared_sample));
  }
  const std::size_t total = std::min(cfg.total_sample, n);
  const std::size_t shared = cfg.shared_sample;
  const std::size_t top_up = total - shared;

  Rng rng(seed);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  rng.partial_shuffle(rows, shared);
  std::vector<std::size_t> shared_rows(rows.begin(), rows.begin() + static_cast<long>(shared));
  std::vector<std::size_t> rest(rows.begin() + static_cast<long>(shared), rows.end());

  // Top-ups are disjoint while the frame has room for both; beyond that the
  // second view reuses rows already drawn for the first.
  Rng top = Rng::keyed({seed, 1});
  top.partial_shuffle(rest, std::min(rest.size(), 2 * top_up));
  auto take = [&](std::size_t offset) {
    std::vector<std::size_t> sel = shared_rows;
    for (std::size_t i = 0; i < top_up; ++i) sel.push_back(rest[(offset + i) % rest.size()]);
    std::sort(sel.begin(), sel.end());
    return sel;
  };
  const auto rows1 = take(0);
  const auto rows2 = take(top_up);

  ViewPair out{apply_rigid_augment(pc.subset(rows1), p1), apply_rigid_augment(pc.subset(rows2), p2),
               {}};
  // Both row lists follow frame order, so one merge pass finds every
  // common point.
  for (std::size_t i = 0, j = 0; i < rows1.size() && j < rows2.size();) {
    if (rows1[i] < rows2[j]) {
      ++i;
    } else if (rows2[j] < rows1[i]) {
      ++j;
    } else {
      out.correspondence.pairs.push_back({pc.id(rows1[i]), i, j});
      ++i;
      ++j;
    }
  }
  return out;
}

}  // namespace pcssl
