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

#include <span>
#include <vector>

#include "pcssl/augmentation.hpp"
#include "pcssl/point_cloud.hpp"

namespace pcssl {

enum class ViewTag { kView1, kView2 };

/// N spherical proposals of exactly K members each.
///
/// Member lists are stored flat, proposal-major: members of proposal i are
/// rows [i*K, (i+1)*K). The first member of every proposal is its center.
/// Rows index into the view the set was built on; ids are that view's
/// stable point ids for the same rows.
struct ProposalSet {
  std::vector<std::size_t> center_rows;
  std::vector<std::size_t> member_rows;
  std::vector<PointId> center_ids;
  std::vector<PointId> member_ids;
  std::size_t k = 0;
  double radius = 0.0;
  ViewTag view = ViewTag::kView1;

  std::size_t size() const { return center_rows.size(); }
  std::span<const std::size_t> members_of(std::size_t i) const {
    return std::span<const std::size_t>(member_rows).subspan(i * k, k);
  }
  std::span<const PointId> member_ids_of(std::size_t i) const {
    return std::span<const PointId>(member_ids).subspan(i * k, k);
  }
};

/// Greedy max-min selection of `n` indices starting from `start`; each new
/// index maximizes the distance to its nearest selected point, lowest index
/// on ties. Throws ArgumentError if n > |points| or start is out of range.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t n,
                                                 std::size_t start);

/// K members around `center`: the center first, then the nearest points
/// with distance <= r (lowest index on ties). Short groups are padded by
/// repeating the center.
std::vector<std::size_t> radius_group(std::span<const Vec3> points, std::size_t center, double r,
                                      std::size_t k);

struct PairedProposals {
  ProposalSet first;
  ProposalSet second;
};

/// Samples `n` centers by FPS over the points of `x0` whose ids are shared
/// by both views (start = lowest shared id), then groups members in each
/// view's own coordinates. Proposal i of both sets is a positive pair.
/// Throws ArgumentError when fewer than n shared ids exist.
PairedProposals generate_paired_proposals(const PointCloud& x0, const PointCloud& x1,
                                          const PointCloud& x2, const CorrespondenceMap& m,
                                          std::size_t n, double r, std::size_t k);

}  // namespace pcssl
