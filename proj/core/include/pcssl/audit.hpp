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

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcssl/run_config.hpp"

namespace pcssl {

struct GradAuditEntry {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
};

struct GradAuditReport {
  double max_rel_error = 0.0;
  std::size_t elements = 0;
  double seconds = 0.0;
  std::vector<GradAuditEntry> parameters;

  nlohmann::json to_json() const;
};

/// Two synthetic frames, N = 8 proposals of K = 4 points, C = 16 channels.
RunConfig micro_grad_config();

/// Central-difference check of the full objective (backbone through the
/// weighted IPD + ICS loss) with respect to every trainable parameter, on
/// the first `frames` frames of cfg's dataset. Cluster assignments are
/// computed once at the unperturbed point and held fixed, matching the
/// stop-gradient in the analytic pass.
GradAuditReport grad_audit(const RunConfig& cfg, double eps = 1e-6, std::size_t frames = 2);

}  // namespace pcssl
