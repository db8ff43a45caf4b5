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

#include <cstdint>
#include <span>
#include <vector>

#include "pcssl/autodiff.hpp"

namespace pcssl {

/// Linear warmup from 0 to max_lr over `warmup` steps, then half-cosine
/// decay to 0 at `total`. Throws ArgumentError if step > total or
/// warmup > total.
double cosine_lr(std::uint64_t step, std::uint64_t total, std::uint64_t warmup, double max_lr);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// First and second moments, one buffer per parameter in group order
/// (non-trainable parameters keep zero moments).
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(std::span<const ad::ParamGroup> groups);
};

/// Bias-corrected Adam update of every trainable parameter from its
/// accumulated gradient, without weight decay. All gradients are checked
/// before anything is written: a non-finite entry throws EvaluationError
/// naming the parameter and leaves parameters, moments and step untouched.
void adam_step(std::span<ad::ParamGroup> groups, AdamState& state, double lr,
               const AdamConfig& cfg);

}  // namespace pcssl
