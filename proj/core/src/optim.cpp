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

#include "pcssl/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pcssl/error.hpp"

namespace pcssl {

double cosine_lr(std::uint64_t step, std::uint64_t total, std::uint64_t warmup, double max_lr) {
  if (step > total) {
    throw ArgumentError("cosine_lr: step " + std::to_string(step) + " exceeds total " +
                        std::to_string(total));
  }
  if (warmup > total) {
    throw ArgumentError("cosine_lr: warmup " + std::to_string(warmup) + " exceeds total " +
                        std::to_string(total));
  }
  if (step < warmup) {
    return max_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (total == warmup) return max_lr;
  const double t = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return max_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

AdamState AdamState::zeros_like(std::span<const ad::ParamGroup> groups) {
  AdamState s;
  for (const auto& g : groups) {
    for (const auto& p : g.entries()) {
      s.m.emplace_back(p.tensor.size(), 0.0);
      s.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  return s;
}

void adam_step(std::span<ad::ParamGroup> groups, AdamState& state, double lr,
               const AdamConfig& cfg) {
  std::size_t count = 0;
  for (auto& g : groups) {
    for (auto& p : g.entries()) {
      if (count >= state.m.size() || state.m[count].size() != p.tensor.size() ||
          state.v[count].size() != p.tensor.size()) {
        throw ShapeError("adam moments do not match parameter " + g.name() + "." + p.name);
      }
      ++count;
      if (!p.trainable || !p.tensor.has_grad()) continue;
      for (double gv : p.tensor.grad_span()) {
        if (!std::isfinite(gv)) {
          throw EvaluationError("non-finite gradient in parameter " + g.name() + "." + p.name);
        }
      }
    }
  }
  if (count != state.m.size()) throw ShapeError("adam state has extra moment buffers");

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  std::size_t index = 0;
  for (auto& g : groups) {
    for (auto& p : g.entries()) {
      const std::size_t i = index++;
      if (!p.trainable) continue;
      auto values = p.tensor.values();
      auto& m = state.m[i];
      auto& v = state.v[i];
      const bool has = p.tensor.has_grad();
      std::span<double> grad = has ? p.tensor.grad_span() : std::span<double>{};
      for (std::size_t j = 0; j < values.size(); ++j) {
        const double gj = has ? grad[j] : 0.0;
        m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
        v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
        values[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
      }
    }
  }
}

}  // namespace pcssl
