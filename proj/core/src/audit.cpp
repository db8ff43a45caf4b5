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

#include "pcssl/audit.hpp"

#include <algorithm>
#include <chrono>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

nlohmann::json GradAuditReport::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : parameters) {
    params.push_back({{"name", p.name}, {"elements", p.elements}, {"max_rel_error", p.max_rel_error}});
  }
  return {{"max_rel_error", max_rel_error},
          {"elements", elements},
          {"seconds", seconds},
          {"parameters", params}};
}

RunConfig micro_grad_config() {
  RunConfig c;
  c.data.dataset_path = "synthetic";
  c.data.synthetic_frames = 2;
  auto& s = c.data.scene;
  s.ground_extent = 10.0;
  s.objects_per_scene = 3;
  s.points_per_object = 40;
  s.ground_points = 120;
  s.seed = 3;
  c.data.ground.z_cut = 5.0 * s.noise_sigma;
  c.sample.dropout = DropoutConfig{64, 24};
  c.sample.proposals = ProposalConfig{8, 1.0, 4};
  c.model.backbone.mlp_widths = {8, 16};
  c.model.backbone.neighborhood_k = 4;
  c.model.projection_hidden = 16;
  c.model.embed_dim = 16;
  c.model.clusters = 4;
  c.train.epochs = 1;
  c.train.warmup_epochs = 0;
  c.train.seed = 1;
  return c;
}

GradAuditReport grad_audit(const RunConfig& cfg, double eps, std::size_t frames) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  DataConfig data = cfg.data;
  if (data.synthetic()) data.synthetic_frames = std::min(data.synthetic_frames, frames);
  const Dataset ds = load_dataset(data);
  std::vector<FrameSample> batch;
  for (std::size_t f = 0; f < std::min(frames, ds.size()); ++f) {
    batch.push_back(prepare_frame(ds.frames[f], cfg.sample,
                                  Rng::keyed({cfg.train.seed, 0xA0D17, f}).next_u64()));
  }

  Model model(cfg.model, cfg.train.seed);
  const LossOutputs base =
      compute_losses(forward_batch(model, batch, ad::BnMode::kTrain), cfg.objective);
  const ad::Matrix assign1 = base.assign1, assign2 = base.assign2;
  const auto loss = [&] {
    return compute_losses(forward_batch(model, batch, ad::BnMode::kTrain), cfg.objective, assign1,
                          assign2)
        .total;
  };

  GradAuditReport report;
  for (auto& group : model.groups()) {
    for (auto& p : group.entries()) {
      if (!p.trainable) continue;
      model.zero_grad();
      GradAuditEntry e{group.name() + "." + p.name, p.tensor.size(),
                       ad::grad_check(loss, p.tensor, eps)};
      report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
      report.elements += e.elements;
      report.parameters.push_back(std::move(e));
    }
  }
  model.zero_grad();
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pcssl
