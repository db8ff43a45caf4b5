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

#include "pcssl/proposals.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "pcssl/error.hpp"

namespace pcssl {

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t n,
                                                 std::size_t start) {
  if (n > points.size()) {
    throw ArgumentError("farthest_point_sampling: n=" + std::to_string(n) + " exceeds " +
                        std::to_string(points.size()) + " points");
  }
  if (n == 0) return {};
  if (start >= points.size()) throw ArgumentError("farthest_point_sampling: start out of range");

  // Selected points are marked with -1 so duplicates can still be chosen
  // once every distinct location is exhausted.
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> out;
  out.reserve(n);
  std::size_t current = start;
  for (std::size_t s = 0; s < n; ++s) {
    out.push_back(current);
    nearest[current] = -1.0;
    if (s + 1 == n) break;
    const Vec3& c = points[current];
    std::size_t best = points.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (nearest[i] < 0.0) continue;
      const double d = squared_distance(points[i], c);
      if (d < nearest[i]) nearest[i] = d;
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    current = best;
  }
  return out;
}

std::vector<std::size_t> radius_group(std::span<const Vec3> points, std::size_t center, double r,
                                      std::size_t k) {
  if (!(r > 0.0)) throw ArgumentError("radius_group: radius must be > 0");
  if (k == 0) throw ArgumentError("radius_group: k must be >= 1");
  if (center >= points.size()) throw ArgumentError("radius_group: center out of range");

  const Vec3& c = points[center];
  const double r2 = r * r;
  std::vector<std::pair<double, std::size_t>> near;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == center) continue;
    const double d = squared_distance(points[i], c);
    if (d <= r2) near.emplace_back(d, i);
  }
  const std::size_t take = std::min(near.size(), k - 1);
  std::partial_sort(near.begin(), near.begin() + static_cast<long>(take), near.end());

  std::vector<std::size_t> out;
  out.reserve(k);
  out.push_back(center);
  for (std::size_t i = 0; i < take; ++i) out.push_back(near[i].second);
  while (out.size() < k) out.push_back(center);
  return out;
}

namespace {

ProposalSet group_view(const PointCloud& view, std::span<const std::size_t> center_rows, double r,
                       std::size_t k, ViewTag tag) {
  ProposalSet set;
  set.k = k;
  set.radius = r;
  set.view = tag;
  set.center_rows.assign(center_rows.begin(), center_rows.end());
  set.member_rows.reserve(center_rows.size() * k);
  for (auto c : center_rows) {
    set.center_ids.push_back(view.id(c));
    for (auto m : radius_group(view.points(), c, r, k)) {
      set.member_rows.push_back(m);
      set.member_ids.push_back(view.id(m));
    }
  }
  return set;
}

}  // namespace

PairedProposals generate_paired_proposals(const PointCloud& x0, const PointCloud& x1,
                                          const PointCloud& x2, const CorrespondenceMap& m,
                                          std::size_t n, double r, std::size_t k) {
  if (m.size() < n) {
    throw ArgumentError("generate_paired_proposals: only " + std::to_string(m.size()) +
                        " shared points for n=" + std::to_string(n) + " proposals");
  }
  const auto x0_rows = x0.row_index();

  // Candidates: shared points located in the original frame, by ascending id.
  std::vector<const Correspondence*> shared;
  shared.reserve(m.size());
  for (const auto& c : m.pairs) shared.push_back(&c);
  std::sort(shared.begin(), shared.end(),
            [](const Correspondence* a, const Correspondence* b) { return a->id < b->id; });

  std::vector<Vec3> coords;
  coords.reserve(shared.size());
  for (const auto* c : shared) {
    const auto it = x0_rows.find(c->id);
    if (it == x0_rows.end()) {
      throw ArgumentError("shared id " + std::to_string(c->id) + " missing from the original frame");
    }
    coords.push_back(x0.point(it->second));
  }

  const auto picked = farthest_point_sampling(coords, n, 0);
  std::vector<std::size_t> rows1, rows2;
  rows1.reserve(n);
  rows2.reserve(n);
  for (auto p : picked) {
    rows1.push_back(shared[p]->row1);
    rows2.push_back(shared[p]->row2);
  }
  return {group_view(x1, rows1, r, k, ViewTag::kView1), group_view(x2, rows2, r, k, ViewTag::kView2)};
}

}  // namespace pcssl
