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

#include "pcssl/encoder.hpp"

#include <algorithm>
#include <string>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

void BackboneConfig::validate() const {
  if (mlp_widths.empty()) throw ConfigError("backbone.widths must not be empty");
  for (auto w : mlp_widths) {
    if (w == 0) throw ConfigError("backbone.widths entries must be positive");
  }
  if (neighborhood_k == 0) throw ConfigError("backbone.neighborhood_k must be >= 1");
}

AttentionMode parse_attention_mode(std::string_view name) {
  if (name == "linear_norm") return AttentionMode::kLinearNorm;
  if (name == "softmax") return AttentionMode::kSoftmax;
  throw ConfigError("unknown attention_mode '" + std::string(name) +
                    "' (expected linear_norm or softmax)");
}

std::string_view to_string(AttentionMode mode) {
  return mode == AttentionMode::kLinearNorm ? "linear_norm" : "softmax";
}

ad::ParamGroup make_backbone_params(const BackboneConfig& cfg, Rng& rng) {
  cfg.validate();
  ad::ParamGroup g("backbone");
  std::size_t in = 3;
  for (std::size_t i = 0; i < cfg.mlp_widths.size(); ++i) {
    const std::size_t out = cfg.mlp_widths[i];
    g.add_uniform("mlp" + std::to_string(i) + ".weight", {in, out}, in, rng);
    g.add_uniform("mlp" + std::to_string(i) + ".bias", {1, out}, in, rng);
    in = out;
  }
  g.add_uniform("post.weight", {in, in}, in, rng);
  g.add_uniform("post.bias", {1, in}, in, rng);
  return g;
}

ad::ParamGroup make_attention_params(std::size_t channels, const AttentionConfig& cfg, Rng& rng) {
  const std::size_t a = cfg.width == 0 ? channels : cfg.width;
  const std::size_t rel = channels + 3;
  ad::ParamGroup g("attention");
  g.add_uniform("query.weight", {channels, a}, channels, rng);
  g.add_uniform("query.bias", {1, a}, channels, rng);
  g.add_uniform("key.weight", {rel, a}, rel, rng);
  g.add_uniform("key.bias", {1, a}, rel, rng);
  g.add_uniform("value.weight", {rel, a}, rel, rng);
  g.add_uniform("out.weight", {a, channels}, a, rng);
  return g;
}

std::vector<std::size_t> knn_rows(std::span<const Vec3> points, std::size_t k) {
  const std::size_t n = points.size();
  const std::size_t kk = std::min(k, n);
  std::vector<std::size_t> out;
  out.reserve(n * k);
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[j] = {j == i ? -1.0 : squared_distance(points[i], points[j]), j};
    std::partial_sort(d.begin(), d.begin() + static_cast<long>(kk), d.end());
    for (std::size_t t = 0; t < kk; ++t) out.push_back(d[t].second);
    // Frames smaller than k repeat the point itself; max-pool ignores repeats.
    for (std::size_t t = kk; t < k; ++t) out.push_back(i);
  }
  return out;
}

ad::Tensor backbone_features(const PointCloud& view, const ad::ParamGroup& params,
                             const BackboneConfig& cfg) {
  cfg.validate();
  if (view.empty()) throw ArgumentError("backbone_features: empty view");
  std::vector<double> xyz;
  xyz.reserve(view.size() * 3);
  for (const auto& p : view.points()) xyz.insert(xyz.end(), p.begin(), p.end());
  ad::Tensor h = ad::constant({view.size(), 3}, std::move(xyz));
  for (std::size_t i = 0; i < cfg.mlp_widths.size(); ++i) {
    const std::string l = "mlp" + std::to_string(i);
    h = ad::relu(ad::linear(h, params.get(l + ".weight"), params.get(l + ".bias")));
  }
  const auto groups = knn_rows(view.points(), cfg.neighborhood_k);
  h = ad::max_pool(h, groups, cfg.neighborhood_k);
  return ad::relu(ad::linear(h, params.get("post.weight"), params.get("post.bias")));
}

ProposalFeatures gather_proposal_features(const ad::Tensor& f, const ProposalSet& proposals,
                                          std::span<const Vec3> coords) {
  ProposalFeatures pf;
  pf.count = proposals.size();
  pf.k = proposals.k;
  pf.feature_rows.reserve(proposals.member_rows.size());
  pf.coords.reserve(proposals.member_rows.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto members = proposals.members_of(i);
    if (members.empty() || members[0] != proposals.center_rows[i]) {
      throw InternalError("proposal " + std::to_string(i) + " does not start with its center");
    }
    for (auto r : members) {
      if (r >= f.rows() || r >= coords.size()) {
        throw InternalError("proposal member row " + std::to_string(r) +
                            " outside feature matrix " + f.shape().str());
      }
      pf.feature_rows.push_back(r);
      pf.coords.push_back(coords[r]);
    }
  }
  pf.features = ad::gather(f, pf.feature_rows);
  return pf;
}

ad::Tensor encode_proposals(const ProposalFeatures& pf, const ad::ParamGroup& params,
                            const AttentionConfig& cfg, AttentionTrace* trace) {
  const std::size_t n = pf.count, k = pf.k;
  if (n == 0 || k == 0) throw ArgumentError("encode_proposals: empty proposal batch");

  std::vector<std::size_t> center_rows(n), center_of_member(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    center_rows[i] = i * k;
    for (std::size_t j = 0; j < k; ++j) center_of_member[i * k + j] = i * k;
  }
  std::vector<std::size_t> proposal_of_member(n * k);
  for (std::size_t r = 0; r < n * k; ++r) proposal_of_member[r] = r / k;

  std::vector<double> rel_xyz(n * k * 3);
  for (std::size_t r = 0; r < n * k; ++r) {
    const Vec3& c = pf.coords[r];
    const Vec3& q = pf.coords[(r / k) * k];
    for (int d = 0; d < 3; ++d) rel_xyz[r * 3 + d] = c[d] - q[d];
  }

  const ad::Tensor xq = ad::gather(pf.features, center_rows);
  const ad::Tensor diff = ad::sub(pf.features, ad::gather(pf.features, center_of_member));
  const ad::Tensor rel = ad::concat({diff, ad::constant({n * k, 3}, std::move(rel_xyz))}, 1);

  const ad::Tensor wq = ad::linear(xq, params.get("query.weight"), params.get("query.bias"));
  const ad::Tensor wk = ad::linear(rel, params.get("key.weight"), params.get("key.bias"));
  const ad::Tensor wv = ad::matmul(rel, params.get("value.weight"));

  const ad::Tensor scores =
      ad::reshape(ad::sum(ad::mul(ad::gather(wq, proposal_of_member), wk), 1), {n, k});
  std::vector<bool> guarded(n, false);
  const ad::Tensor weights = cfg.mode == AttentionMode::kLinearNorm
                                 ? ad::linear_normalize(scores, cfg.guard, &guarded)
                                 : ad::softmax(scores, 1);
  if (trace) {
    trace->weights = weights;
    trace->guarded = guarded;
  }

  const ad::Tensor wo = ad::segment_sum(ad::mul(wv, ad::reshape(weights, {n * k, 1})), k);
  return ad::add(xq, ad::matmul(wo, params.get("out.weight")));
}

}  // namespace pcssl
