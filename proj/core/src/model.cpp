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

#include "pcssl/model.hpp"

#include <algorithm>
#include <cmath>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

void ProposalConfig::validate() const {
  if (count == 0) throw ConfigError("proposals.count must be >= 1");
  if (!(radius > 0.0)) throw ConfigError("proposals.radius must be > 0");
  if (k == 0) throw ConfigError("proposals.k must be >= 1");
}

void ModelConfig::validate() const {
  backbone.validate();
  if (embed_dim == 0) throw ConfigError("model.embed_dim must be >= 1");
  if (clusters < 2) throw ConfigError("model.clusters must be >= 2");
}

FrameSample prepare_frame(const PointCloud& frame, const SampleConfig& cfg, std::uint64_t seed) {
  cfg.proposals.validate();
  const auto p1 = AugmentParams::random(Rng::keyed({seed, 11}).next_u64(), cfg.augment);
  const auto p2 = AugmentParams::random(Rng::keyed({seed, 12}).next_u64(), cfg.augment);
  ViewPair views = sample_views(frame, cfg.dropout, p1, p2, Rng::keyed({seed, 13}).next_u64());
  auto props = generate_paired_proposals(frame, views.view1, views.view2, views.correspondence,
                                         cfg.proposals.count, cfg.proposals.radius,
                                         cfg.proposals.k);
  return FrameSample{std::move(views.view1), std::move(views.view2),
                     std::move(views.correspondence), std::move(props.first),
                     std::move(props.second)};
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t c = cfg_.backbone.channels();
  const std::size_t hidden = cfg_.projection_hidden == 0 ? c : cfg_.projection_hidden;
  groups_.push_back(make_backbone_params(cfg_.backbone, rng));
  groups_.push_back(make_attention_params(c, cfg_.attention, rng));
  groups_.push_back(make_projection_params(c, hidden, cfg_.embed_dim, rng));
  groups_.push_back(make_predictor_params(cfg_.embed_dim, cfg_.clusters, rng));
}

void Model::zero_grad() {
  for (auto& g : groups_) g.zero_grad();
}

namespace {

ad::Tensor encode_view(Model& model, const PointCloud& view, const ProposalSet& proposals) {
  const ad::Tensor f = backbone_features(view, model.backbone(), model.config().backbone);
  const auto pf = gather_proposal_features(f, proposals, view.points());
  return encode_proposals(pf, model.attention(), model.config().attention);
}

}  // namespace

BatchOutputs forward_batch(Model& model, std::span<const FrameSample> batch, ad::BnMode mode) {
  if (batch.empty()) throw ArgumentError("forward_batch: empty batch");
  std::vector<ad::Tensor> ys1, ys2;
  for (const auto& s : batch) {
    ys1.push_back(encode_view(model, s.view1, s.proposals1));
    ys2.push_back(encode_view(model, s.view2, s.proposals2));
  }
  BatchOutputs out;
  out.y1 = ys1.size() == 1 ? ys1[0] : ad::concat(ys1, 0);
  out.y2 = ys2.size() == 1 ? ys2[0] : ad::concat(ys2, 0);
  out.z1 = project_embed(out.y1, model.projection(), mode);
  out.z2 = project_embed(out.y2, model.projection(), mode);
  out.q1 = predict_clusters(out.z1, model.predictor());
  out.q2 = predict_clusters(out.z2, model.predictor());
  return out;
}

LossOutputs compute_losses(const BatchOutputs& out, const ObjectiveConfig& cfg) {
  cfg.validate();
  const std::size_t n = out.q1.rows(), o = out.q1.cols();
  // Joint clustering of both views, then split back.
  ad::Matrix scores(2 * n, o);
  const auto v1 = out.q1.values();
  const auto v2 = out.q2.values();
  std::copy(v1.begin(), v1.end(), scores.data.begin());
  std::copy(v2.begin(), v2.end(), scores.data.begin() + static_cast<long>(n * o));
  const ad::Matrix joint = sinkhorn_assign(scores, cfg.sinkhorn_eps, cfg.sinkhorn_iters);

  return compute_losses(
      out, cfg,
      ad::Matrix({n, o}, std::vector<double>(joint.data.begin(),
                                             joint.data.begin() + static_cast<long>(n * o))),
      ad::Matrix({n, o}, std::vector<double>(joint.data.begin() + static_cast<long>(n * o),
                                             joint.data.end())));
}

LossOutputs compute_losses(const BatchOutputs& out, const ObjectiveConfig& cfg,
                           const ad::Matrix& assign1, const ad::Matrix& assign2) {
  LossOutputs res;
  res.assign1 = assign1;
  res.assign2 = assign2;
  res.ipd = ipd_loss(out.z1, out.z2, cfg.weights.tau);
  auto ics = ics_loss(out.q1, out.q2, ad::constant(res.assign1), ad::constant(res.assign2));
  res.ics = ics.loss;
  res.clamped_logs = ics.clamped_logs;
  res.total = total_loss(res.ipd, res.ics, cfg.weights);
  return res;
}

PairStats pair_statistics(const ad::Tensor& z1, const ad::Tensor& z2) {
  const std::size_t n = z1.rows(), c = z1.cols();
  double pos = 0.0, neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (std::size_t t = 0; t < c; ++t) d += z1.value(i, t) * z2.value(j, t);
      (i == j ? pos : neg) += d;
    }
  }
  PairStats s;
  s.positive_cosine = pos / static_cast<double>(n);
  s.negative_cosine = n > 1 ? neg / static_cast<double>(n * (n - 1)) : 0.0;
  return s;
}

std::vector<std::size_t> hard_assignments(const ad::Matrix& assign) {
  std::vector<std::size_t> out(assign.rows());
  for (std::size_t i = 0; i < assign.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < assign.cols(); ++j)
      if (assign(i, j) > assign(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

double cluster_entropy(const ad::Matrix& assign) {
  std::vector<double> counts(assign.cols(), 0.0);
  for (auto a : hard_assignments(assign)) counts[a] += 1.0;
  double h = 0.0;
  const auto n = static_cast<double>(assign.rows());
  for (double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

}  // namespace pcssl
