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
#include <vector>

#include <nlohmann/json.hpp>

#include "pcssl/model.hpp"
#include "pcssl/run_config.hpp"

namespace pcssl {

/// Proposal embeddings of the first view of every evaluated frame, with
/// majority labels and Sinkhorn cluster assignments.
struct EmbeddingSet {
  std::size_t rows = 0;
  std::size_t dim = 0;          // embedding width E
  std::vector<double> z;        // rows x dim, unit rows
  std::vector<int> labels;      // majority class per proposal
  std::vector<std::size_t> clusters;
  double positive_cosine = 0.0;
  double negative_cosine = 0.0;
};

/// Embeds frames in eval mode (running batch-norm statistics), one frame
/// at a time, with views drawn from cfg.eval.seed. Requires a labeled
/// dataset. The model's parameters are not modified.
EmbeddingSet embed_dataset(Model& model, const Dataset& data, const RunConfig& cfg);

struct EvalReport {
  std::size_t proposals = 0;
  std::size_t dropped = 0;  // proposals whose class had too few samples to probe
  double purity = 0.0;
  double nmi = 0.0;
  double probe_accuracy = 0.0;
  double positive_cosine = 0.0;
  double negative_cosine = 0.0;

  nlohmann::json to_json() const;
};

/// Cluster purity/NMI against majority labels over all proposals, and a
/// linear probe over the classes with enough proposals to split.
EvalReport evaluate(const EmbeddingSet& set, const EvalConfig& cfg);

}  // namespace pcssl
