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

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pcssl {

using Vec3 = std::array<double, 3>;
using PointId = std::int64_t;

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

/// Ordered points with stable identities into the frame they came from.
///
/// Immutable once constructed; the constructor enforces that ids are unique
/// and non-negative, that every coordinate is finite and that intensity,
/// when present, lies in [0, 1].
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::vector<Vec3> points, std::vector<PointId> ids,
             std::optional<std::vector<double>> intensity = std::nullopt);

  /// Assigns ids 0..size-1 in order.
  static PointCloud sequential(std::vector<Vec3> points,
                               std::optional<std::vector<double>> intensity = std::nullopt);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  std::span<const Vec3> points() const { return points_; }
  std::span<const PointId> ids() const { return ids_; }
  bool has_intensity() const { return intensity_.has_value(); }
  /// Empty span when the cloud carries no intensity channel.
  std::span<const double> intensity() const;

  const Vec3& point(std::size_t row) const { return points_[row]; }
  PointId id(std::size_t row) const { return ids_[row]; }

  /// Rows in the given order; ids and intensity travel with their points.
  PointCloud subset(std::span<const std::size_t> rows) const;
  /// Same ids and intensity, new coordinates (one per existing point).
  PointCloud with_points(std::vector<Vec3> points) const;

  /// id -> row lookup table.
  std::unordered_map<PointId, std::size_t> row_index() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Vec3> points_;
  std::vector<PointId> ids_;
  std::optional<std::vector<double>> intensity_;
};

enum class CloudFormat { kXyziBin, kCsv };

/// Parses "xyzi_bin" / "csv".
CloudFormat parse_cloud_format(std::string_view name);

/// Loads a frame. xyzi_bin is headerless little-endian float32 records
/// [x, y, z, intensity]; csv has the header `x,y,z,intensity`.
/// Throws FormatError on malformed layout and DataError (with the record
/// index) on non-finite values.
PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format);

/// Writes the frame in the given layout. Missing intensity is written as 0.
void save_point_cloud(const PointCloud& pc, const std::filesystem::path& path,
                      CloudFormat format);

/// Decodes raw xyzi_bin bytes (exposed for in-memory use and tests).
PointCloud decode_xyzi(std::span<const std::byte> bytes);
std::vector<std::byte> encode_xyzi(const PointCloud& pc);

enum class GroundMode { kZThreshold, kPlaneRansac };

struct GroundFilterConfig {
  GroundMode mode = GroundMode::kZThreshold;
  double z_cut = 0.05;
  std::size_t ransac_iters = 200;
  double ransac_inlier_dist = 0.05;
  std::uint64_t ransac_seed = 0;

  void validate() const;
};

GroundMode parse_ground_mode(std::string_view name);

/// Removes ground points; survivors keep their ids and relative order.
/// Throws EmptyResultError when nothing is left.
PointCloud remove_ground(const PointCloud& pc, const GroundFilterConfig& cfg);

/// Plane n.p + d = 0 with unit normal.
struct Plane {
  Vec3 normal{0.0, 0.0, 1.0};
  double offset = 0.0;

  double distance(const Vec3& p) const {
    return std::abs(normal[0] * p[0] + normal[1] * p[1] + normal[2] * p[2] + offset);
  }
};

/// Plane through three points; nullopt when they are (nearly) collinear.
std::optional<Plane> plane_through(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace pcssl
