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

#include "pcssl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

ShapeClass parse_shape_class(std::string_view name) {
  if (name == "sphere_shell") return ShapeClass::kSphereShell;
  if (name == "box") return ShapeClass::kBox;
  if (name == "vertical_pole") return ShapeClass::kVerticalPole;
  throw ConfigError("unknown shape class '" + std::string(name) +
                    "' (expected sphere_shell, box or vertical_pole)");
}

std::string_view to_string(ShapeClass c) {
  switch (c) {
    case ShapeClass::kGround: return "ground";
    case ShapeClass::kSphereShell: return "sphere_shell";
    case ShapeClass::kBox: return "box";
    case ShapeClass::kVerticalPole: return "vertical_pole";
  }
  return "unknown";
}

void SceneConfig::validate() const {
  if (!(ground_extent > 0.0)) throw ConfigError("scene.ground_extent must be > 0");
  if (objects_per_scene > 0 && class_set.empty()) throw ConfigError("scene.classes must not be empty");
  if (objects_per_scene > 0 && points_per_object == 0) {
    throw ConfigError("scene.points_per_object must be > 0");
  }
  if (ground_points == 0 && objects_per_scene == 0) throw ConfigError("scene has no points");
  if (!(noise_sigma >= 0.0)) throw ConfigError("scene.noise_sigma must be >= 0");
  if (!(min_gap >= 0.0)) throw ConfigError("scene.min_gap must be >= 0");
  for (auto c : class_set) {
    if (c == ShapeClass::kGround) throw ConfigError("ground is not an object class");
  }
}

namespace {

double footprint_radius(ShapeClass c, const SceneConfig& cfg) {
  switch (c) {
    case ShapeClass::kSphereShell: return cfg.sphere_radius;
    case ShapeClass::kBox: return 0.5 * std::hypot(cfg.box_length, cfg.box_width);
    case ShapeClass::kVerticalPole: return cfg.pole_radius;
    default: return 0.0;
  }
}

Vec3 sample_surface(const PlacedObject& obj, const SceneConfig& cfg, Rng& rng) {
  const auto [cx, cy, cz] = obj.center;
  switch (obj.shape) {
    case ShapeClass::kSphereShell: {
      double x, y, z, n;
      do {
        x = rng.normal();
        y = rng.normal();
        z = rng.normal();
        n = std::sqrt(x * x + y * y + z * z);
      } while (n < 1e-12);
      const double r = cfg.sphere_radius;
      return {cx + r * x / n, cy + r * y / n, cz + r + r * z / n};
    }
    case ShapeClass::kVerticalPole: {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      return {cx + cfg.pole_radius * std::cos(a), cy + cfg.pole_radius * std::sin(a),
              rng.uniform(0.0, cfg.pole_height)};
    }
    case ShapeClass::kBox: {
      const double l = cfg.box_length, w = cfg.box_width, h = cfg.box_height;
      // top, +-x sides, +-y sides (no bottom), chosen by area
      const double areas[5] = {l * w, w * h, w * h, l * h, l * h};
      double pick = rng.uniform(0.0, l * w + 2 * w * h + 2 * l * h);
      int face = 0;
      while (face < 4 && pick >= areas[face]) pick -= areas[face++];
      const double u = rng.uniform(), v = rng.uniform();
      double lx = 0, ly = 0, lz = 0;
      switch (face) {
        case 0: lx = (u - 0.5) * l; ly = (v - 0.5) * w; lz = h; break;
        case 1: lx = 0.5 * l; ly = (u - 0.5) * w; lz = v * h; break;
        case 2: lx = -0.5 * l; ly = (u - 0.5) * w; lz = v * h; break;
        case 3: lx = (u - 0.5) * l; ly = 0.5 * w; lz = v * h; break;
        default: lx = (u - 0.5) * l; ly = -0.5 * w; lz = v * h; break;
      }
      const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
      return {cx + c * lx - s * ly, cy + s * lx + c * ly, cz + lz};
    }
    default: break;
  }
  throw InternalError("sample_surface: ground is not an object");
}

}  // namespace

double surface_distance(const PlacedObject& obj, const SceneConfig& cfg, const Vec3& p) {
  const double dx = p[0] - obj.center[0], dy = p[1] - obj.center[1], dz = p[2] - obj.center[2];
  switch (obj.shape) {
    case ShapeClass::kSphereShell: {
      const double r = cfg.sphere_radius;
      return std::abs(std::sqrt(dx * dx + dy * dy + (dz - r) * (dz - r)) - r);
    }
    case ShapeClass::kVerticalPole: {
      const double radial = std::abs(std::hypot(dx, dy) - cfg.pole_radius);
      const double below = std::max(0.0, -dz), above = std::max(0.0, dz - cfg.pole_height);
      return std::hypot(radial, below + above);
    }
    case ShapeClass::kBox: {
      const double c = std::cos(obj.yaw), s = std::sin(obj.yaw);
      const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
      const double q[3] = {std::abs(lx) - 0.5 * cfg.box_length, std::abs(ly) - 0.5 * cfg.box_width,
                           std::abs(dz - 0.5 * cfg.box_height) - 0.5 * cfg.box_height};
      const double ox = std::max(q[0], 0.0), oy = std::max(q[1], 0.0), oz = std::max(q[2], 0.0);
      const double outside = std::sqrt(ox * ox + oy * oy + oz * oz);
      if (outside > 0.0) return outside;
      return -std::max({q[0], q[1], q[2]});
    }
    default: break;
  }
  return std::abs(dz);
}

LabeledScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double half = 0.5 * cfg.ground_extent;

  std::vector<PlacedObject> objects;
  const std::size_t offset =
      cfg.class_set.empty() ? 0 : static_cast<std::size_t>(rng.index(cfg.class_set.size()));
  constexpr int kMaxTries = 1000;
  for (std::size_t i = 0; i < cfg.objects_per_scene; ++i) {
    const ShapeClass shape = cfg.class_set[(offset + i) % cfg.class_set.size()];
    const double fr = footprint_radius(shape, cfg);
    if (fr >= half) throw GenerationError("object does not fit on the ground patch");
    bool placed = false;
    for (int t = 0; t < kMaxTries && !placed; ++t) {
      const Vec3 c{rng.uniform(-half + fr, half - fr), rng.uniform(-half + fr, half - fr), 0.0};
      bool clear = true;
      for (const auto& o : objects) {
        const double need = fr + footprint_radius(o.shape, cfg) + cfg.min_gap;
        if (std::hypot(c[0] - o.center[0], c[1] - o.center[1]) < need) {
          clear = false;
          break;
        }
      }
      if (clear) {
        const double yaw = shape == ShapeClass::kBox ? rng.uniform(0.0, std::numbers::pi) : 0.0;
        objects.push_back({shape, c, yaw});
        placed = true;
      }
    }
    if (!placed) {
      throw GenerationError("could not place object " + std::to_string(i) + " without overlap after " +
                            std::to_string(kMaxTries) + " tries");
    }
  }

  std::vector<Vec3> pts;
  LabeledScene scene;
  auto jitter = [&](Vec3 p) {
    if (cfg.noise_sigma > 0.0) {
      for (auto& v : p) v += cfg.noise_sigma * rng.normal();
    }
    return p;
  };
  for (std::size_t i = 0; i < cfg.ground_points; ++i) {
    pts.push_back(jitter({rng.uniform(-half, half), rng.uniform(-half, half), 0.0}));
    scene.class_ids.push_back(0);
    scene.instance_ids.push_back(-1);
  }
  for (std::size_t o = 0; o < objects.size(); ++o) {
    for (std::size_t i = 0; i < cfg.points_per_object; ++i) {
      pts.push_back(jitter(sample_surface(objects[o], cfg, rng)));
      scene.class_ids.push_back(static_cast<int>(objects[o].shape));
      scene.instance_ids.push_back(static_cast<int>(o));
    }
  }
  scene.cloud = PointCloud::sequential(std::move(pts));
  scene.objects = std::move(objects);
  return scene;
}

void export_scene(const LabeledScene& scene, const std::filesystem::path& dir,
                  const std::string& stem) {
  std::filesystem::create_directories(dir);
  save_point_cloud(scene.cloud, dir / (stem + ".bin"), CloudFormat::kXyziBin);
  std::ofstream out(dir / (stem + ".labels.csv"), std::ios::trunc);
  if (!out) throw FormatError("cannot write labels for " + stem);
  out << "point_index,class_id,instance_id\n";
  for (std::size_t i = 0; i < scene.class_ids.size(); ++i) {
    out << scene.cloud.id(i) << ',' << scene.class_ids[i] << ',' << scene.instance_ids[i] << '\n';
  }
}

LabeledScene import_scene(const std::filesystem::path& bin_path) {
  LabeledScene scene;
  scene.cloud = load_point_cloud(bin_path, CloudFormat::kXyziBin);
  auto label_path = bin_path;
  label_path.replace_extension(".labels.csv");
  std::ifstream in(label_path);
  if (!in) throw FormatError("missing label sidecar " + label_path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("point_index,class_id,instance_id", 0) != 0) {
    throw FormatError(label_path.string() + ": unexpected header");
  }
  scene.class_ids.assign(scene.cloud.size(), 0);
  scene.instance_ids.assign(scene.cloud.size(), -1);
  std::size_t seen = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long idx;
    int cls, inst;
    char c1, c2;
    if (!(ss >> idx >> c1 >> cls >> c2 >> inst) || c1 != ',' || c2 != ',') {
      throw FormatError(label_path.string() + " line " + std::to_string(line_no) + ": malformed");
    }
    if (idx < 0 || static_cast<std::size_t>(idx) >= scene.cloud.size()) {
      throw DataError(label_path.string() + " line " + std::to_string(line_no) +
                      ": point index out of range");
    }
    scene.class_ids[static_cast<std::size_t>(idx)] = cls;
    scene.instance_ids[static_cast<std::size_t>(idx)] = inst;
    ++seen;
  }
  if (seen != scene.cloud.size()) {
    throw DataError(label_path.string() + ": expected " + std::to_string(scene.cloud.size()) +
                    " labels, found " + std::to_string(seen));
  }
  return scene;
}

std::vector<int> proposal_labels(const LabeledScene& scene, const ProposalSet& proposals) {
  const auto rows = scene.cloud.row_index();
  std::vector<int> out;
  out.reserve(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    std::map<int, std::size_t> votes;
    for (auto id : proposals.member_ids_of(i)) {
      const auto it = rows.find(id);
      if (it == rows.end()) {
        throw ArgumentError("proposal member id " + std::to_string(id) + " not in scene");
      }
      ++votes[scene.class_ids[it->second]];
    }
    int best = 0;
    std::size_t best_n = 0;
    for (const auto& [cls, n] : votes) {  // ascending class id
      if (n > best_n) {
        best = cls;
        best_n = n;
      }
    }
    out.push_back(best);
  }
  return out;
}

ClusterMetrics cluster_metrics(std::span<const std::size_t> assignments,
                               std::span<const int> labels) {
  if (assignments.size() != labels.size()) {
    throw ArgumentError("cluster_metrics: assignments and labels differ in length");
  }
  ClusterMetrics m;
  const std::size_t n = labels.size();
  if (n == 0) return m;
  std::map<std::pair<std::size_t, int>, double> joint;
  std::map<std::size_t, double> pc;
  std::map<int, double> pl;
  for (std::size_t i = 0; i < n; ++i) {
    joint[{assignments[i], labels[i]}] += 1.0;
    pc[assignments[i]] += 1.0;
    pl[labels[i]] += 1.0;
  }
  const double N = static_cast<double>(n);

  std::map<std::size_t, double> best_in_cluster;
  for (const auto& [key, cnt] : joint) {
    auto& b = best_in_cluster[key.first];
    b = std::max(b, cnt);
  }
  double hit = 0.0;
  for (const auto& [c, b] : best_in_cluster) hit += b;
  m.purity = hit / N;

  double mi = 0.0;
  for (const auto& [key, cnt] : joint) {
    const double pxy = cnt / N;
    mi += pxy * std::log(pxy / ((pc[key.first] / N) * (pl[key.second] / N)));
  }
  auto entropy = [N](const auto& counts) {
    double h = 0.0;
    for (const auto& [k, c] : counts) h -= (c / N) * std::log(c / N);
    return h;
  };
  const double denom = std::sqrt(entropy(pc) * entropy(pl));
  m.nmi = denom > 0.0 ? std::clamp(mi / denom, 0.0, 1.0) : 0.0;
  return m;
}

double linear_probe(std::span<const double> embeddings, std::size_t dim,
                    std::span<const int> labels, std::uint64_t split_seed,
                    const ProbeConfig& cfg) {
  if (dim == 0 || embeddings.size() != labels.size() * dim) {
    throw ArgumentError("linear_probe: embedding matrix does not match label count");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw ArgumentError("linear_probe: need at least two classes");
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() < cfg.min_per_class) {
      throw EvaluationError("linear_probe: class " + std::to_string(cls) + " has only " +
                            std::to_string(rows.size()) + " samples");
    }
  }

  std::vector<std::size_t> train, test;
  std::vector<int> cls_index(labels.size());
  int ci = 0;
  Rng rng(split_seed);
  for (auto& [cls, rows] : by_class) {
    for (auto r : rows) cls_index[r] = ci;
    ++ci;
    rng.shuffle(rows);
    auto n_train = static_cast<std::size_t>(std::floor(cfg.train_fraction * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    train.insert(train.end(), rows.begin(), rows.begin() + static_cast<long>(n_train));
    test.insert(test.end(), rows.begin() + static_cast<long>(n_train), rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  const auto n_cls = static_cast<std::size_t>(ci);

  std::vector<double> mu(dim, 0.0), sd(dim, 0.0);
  for (auto r : train)
    for (std::size_t d = 0; d < dim; ++d) mu[d] += embeddings[r * dim + d];
  for (auto& v : mu) v /= static_cast<double>(train.size());
  for (auto r : train)
    for (std::size_t d = 0; d < dim; ++d) {
      const double x = embeddings[r * dim + d] - mu[d];
      sd[d] += x * x;
    }
  for (auto& v : sd) v = std::sqrt(v / static_cast<double>(train.size()));
  auto feature = [&](std::size_t r, std::size_t d) {
    return sd[d] > 1e-12 ? (embeddings[r * dim + d] - mu[d]) / sd[d] : 0.0;
  };
  std::vector<double> x_train(train.size() * dim);
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d) x_train[i * dim + d] = feature(train[i], d);

  std::vector<double> w(dim * n_cls, 0.0), b(n_cls, 0.0), gw(dim * n_cls), gb(n_cls), p(n_cls);
  const double inv_n = 1.0 / static_cast<double>(train.size());
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      const double* x = &x_train[i * dim];
      double mx = -1e300;
      for (std::size_t c = 0; c < n_cls; ++c) {
        double s = b[c];
        for (std::size_t d = 0; d < dim; ++d) s += x[d] * w[d * n_cls + c];
        p[c] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (auto& v : p) z += (v = std::exp(v - mx));
      for (std::size_t c = 0; c < n_cls; ++c) {
        const double err = p[c] / z - (static_cast<std::size_t>(cls_index[train[i]]) == c ? 1.0 : 0.0);
        gb[c] += err * inv_n;
        for (std::size_t d = 0; d < dim; ++d) gw[d * n_cls + c] += err * x[d] * inv_n;
      }
    }
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.learning_rate * (gw[j] + cfg.l2 * w[j]);
    for (std::size_t c = 0; c < n_cls; ++c) b[c] -= cfg.learning_rate * gb[c];
  }

  std::size_t correct = 0;
  for (auto r : test) {
    std::size_t best = 0;
    double best_s = -1e300;
    for (std::size_t c = 0; c < n_cls; ++c) {
      double s = b[c];
      for (std::size_t d = 0; d < dim; ++d) s += feature(r, d) * w[d * n_cls + c];
      if (s > best_s) {
        best_s = s;
        best = c;
      }
    }
    if (static_cast<int>(best) == cls_index[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace pcssl
