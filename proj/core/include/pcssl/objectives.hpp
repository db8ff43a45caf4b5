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

#include "pcssl/autodiff.hpp"

namespace pcssl {

class Rng;

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 0.1;

  void validate() const;
};

struct ObjectiveConfig {
  LossWeights weights;
  double sinkhorn_eps = 0.05;
  std::size_t sinkhorn_iters = 3;

  void validate() const;
};

/// Projection head: linear (no bias, batch norm follows) -> batch norm ->
/// ReLU -> linear.
ad::ParamGroup make_projection_params(std::size_t in, std::size_t hidden, std::size_t out,
                                      Rng& rng);
/// Predictor: a single linear layer mapping embeddings to O cluster scores.
ad::ParamGroup make_predictor_params(std::size_t in, std::size_t clusters, Rng& rng);

/// Row-wise l2-normalized projection of proposal representations.
/// Throws DegenerateEmbeddingError when a projected row has norm < 1e-12.
ad::Tensor project_embed(const ad::Tensor& y, ad::ParamGroup& params, ad::BnMode mode);

ad::Tensor predict_clusters(const ad::Tensor& z, const ad::ParamGroup& params);

/// Symmetric InfoNCE over paired rows. For every anchor row of one view the
/// positive is the same row of the other view and the candidates are all
/// rows of the other view; each direction is averaged over N and the two
/// directions are summed.
ad::Tensor ipd_loss(const ad::Tensor& z1, const ad::Tensor& z2, double tau);

/// Balanced soft assignment by Sinkhorn-Knopp on exp(scores / eps).
/// Each round rescales columns to mass N/O and then rows to mass 1, so the
/// result is row-stochastic. Runs in the log domain (equivalent to
/// per-row max shifting) and finishes with a linear-domain row
/// normalization.
ad::Matrix sinkhorn_assign(const ad::Matrix& scores, double eps, std::size_t iters);

struct IcsResult {
  ad::Tensor loss;
  std::size_t clamped_logs = 0;
};

/// Swapped prediction: the (detached) assignment of each view supervises the
/// softmax of the paired row of the other view. log(softmax) is clamped at
/// 1e-30; clamp events are counted.
IcsResult ics_loss(const ad::Tensor& q1, const ad::Tensor& q2, const ad::Tensor& assign1,
                   const ad::Tensor& assign2);

ad::Tensor total_loss(const ad::Tensor& ipd, const ad::Tensor& ics, const LossWeights& w);

}  // namespace pcssl
