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
#include <string_view>
#include <vector>

#include "pcssl/autodiff.hpp"
#include "pcssl/point_cloud.hpp"
#include "pcssl/proposals.hpp"

namespace pcssl {

class Rng;

/// Compact per-point backbone: shared MLP on raw coordinates, k-NN max-pool,
/// one more linear + ReLU. The last MLP width is the feature channel count C.
struct BackboneConfig {
  std::vector<std::size_t> mlp_widths{64, 128};
  std::size_t neighborhood_k = 16;

  std::size_t channels() const { return mlp_widths.back(); }
  void validate() const;
};

enum class AttentionMode { kLinearNorm, kSoftmax };

AttentionMode parse_attention_mode(std::string_view name);
std::string_view to_string(AttentionMode mode);

struct AttentionConfig {
  /// Width of the query/key/value projections; 0 means "same as C".
  std::size_t width = 0;
  AttentionMode mode = AttentionMode::kLinearNorm;
  /// |sum of scores| below this falls back to uniform weights.
  double guard = 1e-8;
};

ad::ParamGroup make_backbone_params(const BackboneConfig& cfg, Rng& rng);
/// The value and output projections carry no bias: a constant shift of y
/// is removed by the projection head's batch norm and would never train.
ad::ParamGroup make_attention_params(std::size_t channels, const AttentionConfig& cfg, Rng& rng);

/// L x C feature matrix, row i belonging to point i of `view`.
ad::Tensor backbone_features(const PointCloud& view, const ad::ParamGroup& params,
                             const BackboneConfig& cfg);

/// Row indices of the k nearest points of every point (itself first, then
/// by distance, lowest index on ties), flattened point-major.
std::vector<std::size_t> knn_rows(std::span<const Vec3> points, std::size_t k);

/// Initial proposal representations for a whole proposal set.
///
/// Features are (N*K) x C, proposal-major; row i*K is the center of
/// proposal i. `coords` holds the matching point coordinates.
struct ProposalFeatures {
  ad::Tensor features;
  std::vector<Vec3> coords;
  std::vector<std::size_t> feature_rows;  // rows of F that were looked up
  std::size_t count = 0;
  std::size_t k = 0;
};

/// Exact row lookup of every member of every proposal. Throws InternalError
/// if a member row does not index into `f` or a proposal does not start
/// with its center.
ProposalFeatures gather_proposal_features(const ad::Tensor& f, const ProposalSet& proposals,
                                          std::span<const Vec3> coords);

struct AttentionTrace {
  ad::Tensor weights;            // N x K attention weights
  std::vector<bool> guarded;     // rows where the denominator guard fired
};

/// Cross-attention proposal encoding. With x_q the center feature and x_k
/// each member feature:
///   w_q = theta(x_q)
///   w_k = phi([x_k - x_q, c_k - c_q]),  w_v = g([x_k - x_q, c_k - c_q])
///   A_k = w_q.w_k / sum_k w_q.w_k  (or softmax in kSoftmax mode)
///   y   = x_q + h(sum_k A_k w_v)
/// Returns Y as N x C.
ad::Tensor encode_proposals(const ProposalFeatures& pf, const ad::ParamGroup& params,
                            const AttentionConfig& cfg, AttentionTrace* trace = nullptr);

}  // namespace pcssl
