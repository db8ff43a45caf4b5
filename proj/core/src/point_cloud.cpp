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

#include "pcssl/point_cloud.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <unordered_set>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

namespace {

constexpr std::size_t kRecordBytes = 4 * sizeof(float);

bool finite3(const Vec3& p) {
  return std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]);
}

float load_le_float(const std::byte* src) {
  std::uint32_t bits;
  std::memcpy(&bits, src, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  return std::bit_cast<float>(bits);
}

void store_le_float(float value, std::byte* dst) {
  auto bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  std::memcpy(dst, &bits, sizeof(bits));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view field, std::size_t line_no) {
  const std::string t = trim(field);
  double v = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw FormatError("csv line " + std::to_string(line_no) + ": cannot parse number '" + t + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

PointCloud::PointCloud(std::vector<Vec3> points, std::vector<PointId> ids,
                       std::optional<std::vector<double>> intensity)
    : points_(std::move(points)), ids_(std::move(ids)), intensity_(std::move(intensity)) {
  if (points_.size() != ids_.size()) {
    throw DataError("point cloud has " + std::to_string(points_.size()) + " points but " +
                    std::to_string(ids_.size()) + " ids");
  }
  if (intensity_ && intensity_->size() != points_.size()) {
    throw DataError("intensity channel length does not match point count");
  }
  std::unordered_set<PointId> seen;
  seen.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] < 0) throw DataError("negative point id at record " + std::to_string(i));
    if (!seen.insert(ids_[i]).second) {
      throw DataError("duplicate point id " + std::to_string(ids_[i]) + " at record " +
                      std::to_string(i));
    }
    if (!finite3(points_[i])) {
      throw DataError("non-finite coordinate at record " + std::to_string(i));
    }
    if (intensity_) {
      const double v = (*intensity_)[i];
      if (!std::isfinite(v)) throw DataError("non-finite intensity at record " + std::to_string(i));
      if (v < 0.0 || v > 1.0) {
        throw DataError("intensity outside [0, 1] at record " + std::to_string(i));
      }
    }
  }
}

PointCloud PointCloud::sequential(std::vector<Vec3> points,
                                  std::optional<std::vector<double>> intensity) {
  std::vector<PointId> ids(points.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<PointId>(i);
  return PointCloud(std::move(points), std::move(ids), std::move(intensity));
}

std::span<const double> PointCloud::intensity() const {
  if (!intensity_) return {};
  return *intensity_;
}

PointCloud PointCloud::subset(std::span<const std::size_t> rows) const {
  std::vector<Vec3> pts;
  std::vector<PointId> ids;
  pts.reserve(rows.size());
  ids.reserve(rows.size());
  std::optional<std::vector<double>> inten;
  if (intensity_) inten.emplace().reserve(rows.size());
  for (auto r : rows) {
    if (r >= points_.size()) throw ArgumentError("subset row out of range");
    pts.push_back(points_[r]);
    ids.push_back(ids_[r]);
    if (inten) inten->push_back((*intensity_)[r]);
  }
  return PointCloud(std::move(pts), std::move(ids), std::move(inten));
}

PointCloud PointCloud::with_points(std::vector<Vec3> points) const {
  if (points.size() != points_.size()) {
    throw ArgumentError("with_points: expected " + std::to_string(points_.size()) + " points");
  }
  return PointCloud(std::move(points), ids_, intensity_);
}

std::unordered_map<PointId, std::size_t> PointCloud::row_index() const {
  std::unordered_map<PointId, std::size_t> index;
  index.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) index.emplace(ids_[i], i);
  return index;
}

CloudFormat parse_cloud_format(std::string_view name) {
  if (name == "xyzi_bin") return CloudFormat::kXyziBin;
  if (name == "csv") return CloudFormat::kCsv;
  throw ConfigError("unknown point cloud format '" + std::string(name) +
                    "' (expected xyzi_bin or csv)");
}

PointCloud decode_xyzi(std::span<const std::byte> bytes) {
  if (bytes.size() % kRecordBytes != 0) {
    throw FormatError("xyzi_bin payload of " + std::to_string(bytes.size()) +
                      " bytes is not a multiple of the 16-byte record size");
  }
  const std::size_t n = bytes.size() / kRecordBytes;
  std::vector<Vec3> pts(n);
  std::vector<double> inten(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::byte* rec = bytes.data() + i * kRecordBytes;
    float v[4];
    for (int c = 0; c < 4; ++c) v[c] = load_le_float(rec + c * sizeof(float));
    for (int c = 0; c < 4; ++c) {
      if (!std::isfinite(v[c])) {
        throw DataError("non-finite value in record " + std::to_string(i));
      }
    }
    pts[i] = {v[0], v[1], v[2]};
    inten[i] = v[3];
  }
  return PointCloud::sequential(std::move(pts), std::move(inten));
}

std::vector<std::byte> encode_xyzi(const PointCloud& pc) {
  std::vector<std::byte> out(pc.size() * kRecordBytes);
  const auto inten = pc.intensity();
  for (std::size_t i = 0; i < pc.size(); ++i) {
    std::byte* rec = out.data() + i * kRecordBytes;
    const Vec3& p = pc.point(i);
    store_le_float(static_cast<float>(p[0]), rec);
    store_le_float(static_cast<float>(p[1]), rec + 4);
    store_le_float(static_cast<float>(p[2]), rec + 8);
    store_le_float(inten.empty() ? 0.0f : static_cast<float>(inten[i]), rec + 12);
  }
  return out;
}

PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open point cloud file " + path.string());

  if (format == CloudFormat::kXyziBin) {
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const std::byte*>(raw.data());
    return decode_xyzi(std::span<const std::byte>(data, raw.size()));
  }

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return PointCloud{};
  ++line_no;
  if (trim(line) != "x,y,z,intensity") {
    throw FormatError(path.string() + ": expected header 'x,y,z,intensity'");
  }
  std::vector<Vec3> pts;
  std::vector<double> inten;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 4) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected 4 fields, got " +
                        std::to_string(fields.size()));
    }
    double v[4];
    for (int c = 0; c < 4; ++c) v[c] = parse_double(fields[c], line_no);
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw DataError("non-finite value in record " + std::to_string(pts.size()));
      }
    }
    pts.push_back({v[0], v[1], v[2]});
    inten.push_back(v[3]);
  }
  return PointCloud::sequential(std::move(pts), std::move(inten));
}

void save_point_cloud(const PointCloud& pc, const std::filesystem::path& path,
                      CloudFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  if (format == CloudFormat::kXyziBin) {
    const auto bytes = encode_xyzi(pc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  } else {
    out << "x,y,z,intensity\n";
    const auto inten = pc.intensity();
    for (std::size_t i = 0; i < pc.size(); ++i) {
      const Vec3& p = pc.point(i);
      out << format_double(p[0]) << ',' << format_double(p[1]) << ',' << format_double(p[2])
          << ',' << format_double(inten.empty() ? 0.0 : inten[i]) << '\n';
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

void GroundFilterConfig::validate() const {
  if (!std::isfinite(z_cut)) throw ConfigError("ground.z_cut must be finite");
  if (!(ransac_inlier_dist > 0.0)) throw ConfigError("ground.ransac_inlier_dist must be > 0");
  if (ransac_iters < 1) throw ConfigError("ground.ransac_iters must be >= 1");
}

GroundMode parse_ground_mode(std::string_view name) {
  if (name == "z_threshold") return GroundMode::kZThreshold;
  if (name == "plane_ransac") return GroundMode::kPlaneRansac;
  throw ConfigError("unknown ground mode '" + std::string(name) +
                    "' (expected z_threshold or plane_ransac)");
}

std::optional<Plane> plane_through(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const Vec3 v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  Vec3 n{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
  if (len < 1e-12) return std::nullopt;
  for (auto& x : n) x /= len;
  return Plane{n, -(n[0] * a[0] + n[1] * a[1] + n[2] * a[2])};
}

PointCloud remove_ground(const PointCloud& pc, const GroundFilterConfig& cfg) {
  cfg.validate();
  if (pc.empty()) throw ArgumentError("remove_ground: input cloud is empty");

  std::vector<std::size_t> keep;
  keep.reserve(pc.size());
  const auto pts = pc.points();

  if (cfg.mode == GroundMode::kZThreshold) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i][2] > cfg.z_cut) keep.push_back(i);
    }
  } else {
    // Best plane = most inliers; earliest iteration wins ties.
    Rng rng(cfg.ransac_seed);
    std::optional<Plane> best;
    std::size_t best_count = 0;
    const std::size_t n = pts.size();
    if (n >= 3) {
      for (std::size_t it = 0; it < cfg.ransac_iters; ++it) {
        const auto i = static_cast<std::size_t>(rng.index(n));
        auto j = static_cast<std::size_t>(rng.index(n - 1));
        if (j >= i) ++j;
        auto k = static_cast<std::size_t>(rng.index(n - 2));
        if (k >= std::min(i, j)) ++k;
        if (k >= std::max(i, j)) ++k;
        const auto plane = plane_through(pts[i], pts[j], pts[k]);
        if (!plane) continue;
        std::size_t count = 0;
        for (const auto& p : pts) {
          if (plane->distance(p) <= cfg.ransac_inlier_dist) ++count;
        }
        if (count > best_count) {
          best_count = count;
          best = plane;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!best || best->distance(pts[i]) > cfg.ransac_inlier_dist) keep.push_back(i);
    }
  }

  if (keep.empty()) throw EmptyResultError("ground removal left no points");
  return pc.subset(keep);
}

}  // namespace pcssl
