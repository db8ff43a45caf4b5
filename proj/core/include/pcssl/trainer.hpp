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
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcssl/checkpoint.hpp"
#include "pcssl/model.hpp"
#include "pcssl/optim.hpp"
#include "pcssl/run_config.hpp"

namespace pcssl {

/// Everything the training loop mutates.
struct TrainState {
  Model model;
  AdamState adam;
  std::uint64_t seed = 0;

  TrainState(const ModelConfig& cfg, std::uint64_t seed);

  std::uint64_t step() const { return adam.step; }
  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);
};

/// One row of the metrics log.
struct StepRecord {
  std::uint64_t step = 0;  // optimizer steps taken before this one
  std::uint64_t epoch = 0;
  double lr = 0.0;
  double ipd = 0.0;
  double ics = 0.0;
  double total = 0.0;
  double positive_cosine = 0.0;
  double negative_cosine = 0.0;
  double cluster_entropy = 0.0;
  std::size_t clamped_logs = 0;

  nlohmann::json to_json() const;
};

/// Frames and samples for one optimizer step.
struct PreparedBatch {
  std::uint64_t step = 0;
  std::vector<std::size_t> frame_indices;
  std::vector<FrameSample> samples;
};

class Trainer {
 public:
  Trainer(RunConfig cfg, std::shared_ptr<const Dataset> data);

  const RunConfig& config() const { return cfg_; }
  TrainState& state() { return state_; }
  const TrainState& state() const { return state_; }

  /// Whole frames per epoch, dropping the remainder (at least one step).
  std::uint64_t steps_per_epoch() const;
  std::uint64_t total_steps() const;
  std::uint64_t warmup_steps() const;

  /// Frame indices and samples for `step`. Depends only on the config
  /// seed and the step, so batches can be built ahead of time or after a
  /// resume and still match.
  PreparedBatch prepare(std::uint64_t step) const;

  /// Forward, backward and Adam update for a batch prepared for the
  /// current step. Throws EvaluationError on a non-finite loss or
  /// gradient, leaving the state unchanged.
  StepRecord train_step(const PreparedBatch& batch);

  /// Trains until `until` steps (clamped to total_steps()) have been taken,
  /// preparing batches on data_workers threads. `on_step` runs after every
  /// update.
  void run(std::uint64_t until, const std::function<void(const StepRecord&)>& on_step);

 private:
  RunConfig cfg_;
  std::shared_ptr<const Dataset> data_;
  TrainState state_;
};

struct PretrainOptions {
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  std::optional<std::uint64_t> stop_after;       // stop once this many steps are done
};

struct PretrainResult {
  std::filesystem::path final_checkpoint;
  std::filesystem::path metrics;
  std::uint64_t steps = 0;
};

/// Full pre-training run. Writes `metrics.jsonl` (one JSON object per
/// step), `checkpoints/step_<n>.ckpt` at step 0, every checkpoint_every
/// steps and at the end, plus `final.ckpt` when all steps completed.
/// Resuming truncates the metrics log to the checkpoint's step first.
PretrainResult pretrain(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        const PretrainOptions& options = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::uint64_t step);

}  // namespace pcssl
