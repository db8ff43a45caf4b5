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

#include "pcssl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "pcssl/error.hpp"
#include "pcssl/logging.hpp"
#include "pcssl/prefetch.hpp"
#include "pcssl/random.hpp"

namespace pcssl {

TrainState::TrainState(const ModelConfig& cfg, std::uint64_t s)
    : model(cfg, s), adam(AdamState::zeros_like(model.groups())), seed(s) {}

Checkpoint TrainState::checkpoint() const { return capture_checkpoint(model.groups(), adam, seed); }

void TrainState::restore(const Checkpoint& ckpt) {
  if (ckpt.seed != seed) {
    throw ConfigError("checkpoint was written with seed " + std::to_string(ckpt.seed) +
                      ", run uses seed " + std::to_string(seed));
  }
  restore_checkpoint(ckpt, model.groups(), adam);
}

nlohmann::json StepRecord::to_json() const {
  return nlohmann::json{{"step", step},
                        {"epoch", epoch},
                        {"lr", lr},
                        {"ipd", ipd},
                        {"ics", ics},
                        {"total", total},
                        {"pos_cos", positive_cosine},
                        {"neg_cos", negative_cosine},
                        {"cluster_entropy", cluster_entropy},
                        {"clamped_logs", clamped_logs}};
}

Trainer::Trainer(RunConfig cfg, std::shared_ptr<const Dataset> data)
    : cfg_(std::move(cfg)), data_(std::move(data)), state_(cfg_.model, cfg_.train.seed) {
  cfg_.validate();
  if (!data_ || data_->size() == 0) throw ConfigError("training dataset is empty");
}

std::uint64_t Trainer::steps_per_epoch() const {
  return std::max<std::uint64_t>(1, data_->size() / cfg_.train.batch_frames);
}

std::uint64_t Trainer::total_steps() const { return steps_per_epoch() * cfg_.train.epochs; }

std::uint64_t Trainer::warmup_steps() const {
  return steps_per_epoch() * cfg_.train.warmup_epochs;
}

PreparedBatch Trainer::prepare(std::uint64_t step) const {
  const std::uint64_t per_epoch = steps_per_epoch();
  const std::uint64_t epoch = step / per_epoch;
  const std::uint64_t slot = step % per_epoch;
  const std::size_t frames = data_->size();

  std::vector<std::size_t> order(frames);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng perm = Rng::keyed({cfg_.train.seed, 0xE90C, epoch});
  perm.shuffle(order);

  PreparedBatch batch;
  batch.step = step;
  const std::size_t take = std::min(cfg_.train.batch_frames, frames);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t f = order[(slot * take + i) % frames];
    batch.frame_indices.push_back(f);
    const std::uint64_t sample_seed = Rng::keyed({cfg_.train.seed, epoch, f}).next_u64();
    batch.samples.push_back(prepare_frame(data_->frames[f], cfg_.sample, sample_seed));
  }
  return batch;
}

StepRecord Trainer::train_step(const PreparedBatch& batch) {
  const std::uint64_t step = state_.adam.step;
  if (batch.step != step) {
    throw InternalError("batch prepared for step " + std::to_string(batch.step) +
                        " handed to step " + std::to_string(step));
  }
  const std::uint64_t total = total_steps();
  if (step >= total) throw InternalError("training already finished");

  Model& model = state_.model;
  // Running statistics are restored if the step is rejected.
  const Checkpoint before = state_.checkpoint();
  model.zero_grad();
  std::optional<BatchOutputs> fwd;
  std::optional<LossOutputs> loss_out;
  try {
    fwd.emplace(forward_batch(model, batch.samples, ad::BnMode::kTrain));
    loss_out.emplace(compute_losses(*fwd, cfg_.objective));
  } catch (const Error&) {
    state_.restore(before);
    throw;
  }
  const BatchOutputs& out = *fwd;
  const LossOutputs& losses = *loss_out;

  StepRecord rec;
  rec.step = step;
  rec.epoch = step / steps_per_epoch();
  rec.lr = cosine_lr(step, total, warmup_steps(), cfg_.train.max_lr);
  rec.ipd = losses.ipd.item();
  rec.ics = losses.ics.item();
  rec.total = losses.total.item();
  rec.clamped_logs = losses.clamped_logs;
  if (!std::isfinite(rec.total)) {
    state_.restore(before);
    throw EvaluationError("non-finite loss at step " + std::to_string(step));
  }
  const PairStats stats = pair_statistics(out.z1, out.z2);
  rec.positive_cosine = stats.positive_cosine;
  rec.negative_cosine = stats.negative_cosine;
  rec.cluster_entropy = cluster_entropy(losses.assign1);

  ad::backward(losses.total);
  try {
    adam_step(model.groups(), state_.adam, rec.lr, cfg_.train.adam);
  } catch (const EvaluationError&) {
    state_.restore(before);
    throw;
  }
  model.zero_grad();
  return rec;
}

void Trainer::run(std::uint64_t until, const std::function<void(const StepRecord&)>& on_step) {
  until = std::min(until, total_steps());
  const std::uint64_t first = state_.adam.step;
  if (first >= until) return;
  OrderedPrefetcher<PreparedBatch> queue([this](std::uint64_t s) { return prepare(s); }, first,
                                         until, cfg_.train.data_workers,
                                         cfg_.train.prefetch_depth);
  while (auto batch = queue.next()) {
    const StepRecord rec = train_step(*batch);
    if (on_step) on_step(rec);
  }
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::uint64_t step) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%08llu.ckpt", static_cast<unsigned long long>(step));
  return out_dir / "checkpoints" / name;
}

namespace {

// Keeps metrics rows for steps before `step`; the rest will be rewritten.
void truncate_metrics(const std::filesystem::path& path, std::uint64_t step) {
  std::vector<std::string> kept;
  if (std::ifstream in(path); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto row = nlohmann::json::parse(line, nullptr, false);
      if (row.is_discarded() || !row.contains("step")) {
        throw DataError("malformed metrics row in " + path.string());
      }
      if (row["step"].get<std::uint64_t>() < step) kept.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : kept) out << l << '\n';
}

}  // namespace

PretrainResult pretrain(const RunConfig& cfg, const std::filesystem::path& out_dir,
                        const PretrainOptions& options) {
  namespace fs = std::filesystem;
  auto data = std::make_shared<const Dataset>(load_dataset(cfg.data));
  Trainer trainer(cfg, data);
  fs::create_directories(out_dir / "checkpoints");

  PretrainResult result;
  result.metrics = out_dir / "metrics.jsonl";
  if (options.resume) {
    trainer.state().restore(load_checkpoint(*options.resume));
    truncate_metrics(result.metrics, trainer.state().step());
    log().info("resuming at step {} from {}", trainer.state().step(), options.resume->string());
  } else {
    std::ofstream(result.metrics, std::ios::trunc);
    save_checkpoint(trainer.state().checkpoint(), checkpoint_path(out_dir, 0));
  }

  const std::uint64_t total = trainer.total_steps();
  const std::uint64_t until = options.stop_after ? std::min(*options.stop_after, total) : total;
  log().info("{} frames, {} steps per epoch, {} steps total", data->size(),
             trainer.steps_per_epoch(), total);

  std::ofstream metrics(result.metrics, std::ios::app);
  if (!metrics) throw DataError("cannot write " + result.metrics.string());
  const std::size_t every = cfg.train.checkpoint_every;
  try {
    trainer.run(until, [&](const StepRecord& rec) {
      metrics << rec.to_json().dump() << '\n';
      metrics.flush();
      const std::uint64_t done = rec.step + 1;
      log().debug("step {} lr {:.6f} total {:.6f} ipd {:.6f} ics {:.6f} pos {:.4f} neg {:.4f}",
                  rec.step, rec.lr, rec.total, rec.ipd, rec.ics, rec.positive_cosine,
                  rec.negative_cosine);
      if (done % trainer.steps_per_epoch() == 0) {
        log().info("epoch {} done: total loss {:.5f}", rec.epoch, rec.total);
      }
      if ((every > 0 && done % every == 0) || done == until) {
        save_checkpoint(trainer.state().checkpoint(), checkpoint_path(out_dir, done));
      }
    });
  } catch (const EvaluationError& e) {
    log().error("training aborted: {}; last checkpoint kept", e.what());
    throw;
  }

  result.steps = trainer.state().step();
  if (result.steps == total) {
    result.final_checkpoint = out_dir / "final.ckpt";
    save_checkpoint(trainer.state().checkpoint(), result.final_checkpoint);
  } else {
    result.final_checkpoint = checkpoint_path(out_dir, result.steps);
  }
  return result;
}

}  // namespace pcssl
