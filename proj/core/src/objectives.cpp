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

#include "pcssl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

void LossWeights::validate() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) throw ConfigError("alpha/beta must be finite");
}

void ObjectiveConfig::validate() const {
  weights.validate();
  if (!(sinkhorn_eps > 0.0)) throw ConfigError("sinkhorn_eps must be > 0");
  if (sinkhorn_iters < 1) throw ConfigError("sinkhorn_iters must be >= 1");
}

ad::ParamGroup make_projection_params(std::size_t in, std::size_t hidden, std::size_t out,
                                      Rng& rng) {
  ad::ParamGroup g("projection");
  g.add_uniform("fc1.weight", {in, hidden}, in, rng);
  g.add_constant("bn.gamma", {1, hidden}, 1.0);
  g.add_constant("bn.beta", {1, hidden}, 0.0);
  g.add_constant("bn.running_mean", {1, hidden}, 0.0, false);
  g.add_constant("bn.running_var", {1, hidden}, 1.0, false);
  g.add_uniform("fc2.weight", {hidden, out}, hidden, rng);
  g.add_uniform("fc2.bias", {1, out}, hidden, rng);
  return g;
}

ad::ParamGroup make_predictor_params(std::size_t in, std::size_t clusters, Rng& rng) {
  ad::ParamGroup g("predictor");
  g.add_uniform("weight", {in, clusters}, in, rng);
  g.add_uniform("bias", {1, clusters}, in, rng);
  return g;
}

ad::Tensor project_embed(const ad::Tensor& y, ad::ParamGroup& params, ad::BnMode mode) {
  ad::Tensor h = ad::matmul(y, params.get("fc1.weight"));
  h = ad::batch_norm(h, params.get("bn.gamma"), params.get("bn.beta"),
                     params.get("bn.running_mean"), params.get("bn.running_var"), mode);
  h = ad::relu(h);
  h = ad::linear(h, params.get("fc2.weight"), params.get("fc2.bias"));
  return ad::l2_normalize(h, 1, 1e-12);
}

ad::Tensor predict_clusters(const ad::Tensor& z, const ad::ParamGroup& params) {
  return ad::linear(z, params.get("weight"), params.get("bias"));
}

namespace {

/// Diagonal of a square N x N tensor as N x 1.
ad::Tensor diagonal(const ad::Tensor& s) {
  const std::size_t n = s.rows();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i * n + i;
  return ad::gather(ad::reshape(s, {n * n, 1}), idx);
}

}  // namespace

ad::Tensor ipd_loss(const ad::Tensor& z1, const ad::Tensor& z2, double tau) {
  if (!(z1.shape() == z2.shape())) {
    throw ArgumentError("ipd_loss: view shapes differ " + z1.shape().str() + " vs " +
                        z2.shape().str());
  }
  if (!(tau > 0.0)) throw ArgumentError("ipd_loss: tau must be > 0");
  const auto n = static_cast<double>(z1.rows());
  // sim[n][m] = z1_n . z2_m / tau; rows anchor view 1, columns anchor view 2.
  const ad::Tensor sim = ad::scalar_mul(ad::matmul(z1, ad::transpose(z2)), 1.0 / tau);
  const ad::Tensor from1 = ad::sum(ad::log(diagonal(ad::softmax(sim, 1))));
  const ad::Tensor from2 = ad::sum(ad::log(diagonal(ad::softmax(sim, 0))));
  return ad::scalar_mul(ad::add(from1, from2), -1.0 / n);
}

ad::Matrix sinkhorn_assign(const ad::Matrix& scores, double eps, std::size_t iters) {
  const std::size_t n = scores.rows(), o = scores.cols();
  if (n == 0 || o == 0) throw ArgumentError("sinkhorn_assign: empty score matrix");
  if (!(eps > 0.0)) throw ArgumentError("sinkhorn_assign: eps must be > 0");
  for (double v : scores.data) {
    if (!std::isfinite(v)) throw ArgumentError("sinkhorn_assign: non-finite score");
  }

  ad::Matrix logq(n, o);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < o; ++j) mx = std::max(mx, scores(i, j));
    for (std::size_t j = 0; j < o; ++j) logq(i, j) = (scores(i, j) - mx) / eps;
  }

  const double log_col_mass = std::log(static_cast<double>(n) / static_cast<double>(o));
  auto normalize_rows = [&]() {
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < o; ++j) mx = std::max(mx, logq(i, j));
      double s = 0.0;
      for (std::size_t j = 0; j < o; ++j) s += std::exp(logq(i, j) - mx);
      const double lse = mx + std::log(s);
      for (std::size_t j = 0; j < o; ++j) logq(i, j) -= lse;
    }
  };
  for (std::size_t it = 0; it < iters; ++it) {
    for (std::size_t j = 0; j < o; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logq(i, j));
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += std::exp(logq(i, j) - mx);
      const double shift = mx + std::log(s) - log_col_mass;
      for (std::size_t i = 0; i < n; ++i) logq(i, j) -= shift;
    }
    normalize_rows();
  }

  ad::Matrix q(n, o);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < o; ++j) {
      q(i, j) = std::exp(logq(i, j));
      s += q(i, j);
    }
    if (!(s > 0.0) || !std::isfinite(s)) throw InternalError("sinkhorn_assign: degenerate row");
    for (std::size_t j = 0; j < o; ++j) q(i, j) /= s;
  }
  return q;
}

IcsResult ics_loss(const ad::Tensor& q1, const ad::Tensor& q2, const ad::Tensor& assign1,
                   const ad::Tensor& assign2) {
  if (!(q1.shape() == q2.shape()) || !(assign1.shape() == q1.shape()) ||
      !(assign2.shape() == q1.shape())) {
    throw ArgumentError("ics_loss: shape mismatch among " + q1.shape().str() + ", " +
                        q2.shape().str() + ", " + assign1.shape().str() + ", " +
                        assign2.shape().str());
  }
  IcsResult out;
  const auto n = static_cast<double>(q1.rows());
  const ad::Tensor t1 = ad::stop_gradient(assign1);
  const ad::Tensor t2 = ad::stop_gradient(assign2);
  const ad::Tensor logp2 = ad::log(ad::softmax(q2, 1), 1e-30, &out.clamped_logs);
  const ad::Tensor logp1 = ad::log(ad::softmax(q1, 1), 1e-30, &out.clamped_logs);
  const ad::Tensor cross = ad::add(ad::sum(ad::mul(t1, logp2)), ad::sum(ad::mul(t2, logp1)));
  out.loss = ad::scalar_mul(cross, -1.0 / n);
  return out;
}

ad::Tensor total_loss(const ad::Tensor& ipd, const ad::Tensor& ics, const LossWeights& w) {
  return ad::add(ad::scalar_mul(ipd, w.alpha), ad::scalar_mul(ics, w.beta));
}

}  // namespace pcssl
