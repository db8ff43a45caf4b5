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

#include "pcssl/augmentation.hpp"
#include "pcssl/autodiff.hpp"
#include "pcssl/encoder.hpp"
#include "pcssl/objectives.hpp"
#include "pcssl/proposals.hpp"

namespace pcssl {

struct ProposalConfig {
  std::size_t count = 2048;  // N per frame
  double radius = 1.0;
  std::size_t k = 16;

  void validate() const;
};

/// Everything needed to turn a ground-removed frame into a training sample.
struct SampleConfig {
  DropoutConfig dropout;
  AugmentRanges augment;
  ProposalConfig proposals;
};

/// Two augmented views of one frame and their paired proposals.
struct FrameSample {
  PointCloud view1;
  PointCloud view2;
  CorrespondenceMap correspondence;
  ProposalSet proposals1;
  ProposalSet proposals2;
};

/// Draws augmentation and dropout from `seed` and builds paired proposals.
/// `frame` must already be ground-filtered.
FrameSample prepare_frame(const PointCloud& frame, const SampleConfig& cfg, std::uint64_t seed);

struct ModelConfig {
  BackboneConfig backbone;
  AttentionConfig attention;
  std::size_t projection_hidden = 0;  // 0: same as C
  std::size_t embed_dim = 128;
  std::size_t clusters = 16;

  void validate() const;
};

/// All learnable state: backbone, proposal encoder, projection and
/// predictor heads.
class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  ad::ParamGroup& backbone() { return groups_[0]; }
  ad::ParamGroup& attention() { return groups_[1]; }
  ad::ParamGroup& projection() { return groups_[2]; }
  ad::ParamGroup& predictor() { return groups_[3]; }

  std::vector<ad::ParamGroup>& groups() { return groups_; }
  const std::vector<ad::ParamGroup>& groups() const { return groups_; }

  void zero_grad();

 private:
  ModelConfig cfg_;
  std::vector<ad::ParamGroup> groups_;
};

/// Per-view outputs for a batch; rows are frame-major, proposal-minor.
struct BatchOutputs {
  ad::Tensor y1, y2;  // proposal representations, (B*N) x C
  ad::Tensor z1, z2;  // normalized embeddings, (B*N) x E
  ad::Tensor q1, q2;  // cluster scores, (B*N) x O
};

BatchOutputs forward_batch(Model& model, std::span<const FrameSample> batch, ad::BnMode mode);

struct LossOutputs {
  ad::Tensor total;
  ad::Tensor ipd;
  ad::Tensor ics;
  ad::Matrix assign1, assign2;  // Sinkhorn assignments per view
  std::size_t clamped_logs = 0;
};

/// Clusters the proposals of both views jointly, then evaluates the
/// weighted IPD + ICS objective.
LossOutputs compute_losses(const BatchOutputs& out, const ObjectiveConfig& cfg);

/// Same objective with the cluster assignments supplied by the caller.
LossOutputs compute_losses(const BatchOutputs& out, const ObjectiveConfig& cfg,
                           const ad::Matrix& assign1, const ad::Matrix& assign2);

struct PairStats {
  double positive_cosine = 0.0;  // mean z1_i . z2_i
  double negative_cosine = 0.0;  // mean z1_i . z2_j, i != j
};

PairStats pair_statistics(const ad::Tensor& z1, const ad::Tensor& z2);

/// Entropy (nats) of the hard-assignment histogram.
double cluster_entropy(const ad::Matrix& assign);

std::vector<std::size_t> hard_assignments(const ad::Matrix& assign);

}  // namespace pcssl
