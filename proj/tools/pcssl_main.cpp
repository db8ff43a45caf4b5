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

// pcssl: command-line driver for scene generation, pre-training and
// representation probes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pcssl/audit.hpp"
#include "pcssl/checkpoint.hpp"
#include "pcssl/error.hpp"
#include "pcssl/evaluation.hpp"
#include "pcssl/logging.hpp"
#include "pcssl/random.hpp"
#include "pcssl/run_config.hpp"
#include "pcssl/synth.hpp"
#include "pcssl/trainer.hpp"

namespace fs = std::filesystem;
using pcssl::RunConfig;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::size_t frame = 0;
  double eps = 1e-6;
  std::optional<std::uint64_t> stop_after;
};

RunConfig load_config(const Options& opt, bool seed_is_scene_seed = false) {
  auto kv = pcssl::KeyValueConfig::load(opt.config);
  if (opt.seed) kv.set(seed_is_scene_seed ? "scene_seed" : "seed", std::to_string(*opt.seed));
  return RunConfig::from_kv(kv);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pcssl::DataError("cannot write " + path.string());
  out << text;
}

// Prints to stdout and, when an output directory is given, writes it too.
void emit_json(const nlohmann::json& j, const Options& opt, const std::string& file) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!opt.out.empty()) write_text(fs::path(opt.out) / file, text);
}

pcssl::TrainState load_state(const RunConfig& cfg, const std::string& path) {
  if (path.empty()) throw pcssl::ArgumentError("--checkpoint is required");
  const auto ckpt = pcssl::load_checkpoint(path);
  pcssl::TrainState state(cfg.model, ckpt.seed);
  state.restore(ckpt);
  return state;
}

int cmd_gen_scenes(const Options& opt) {
  const RunConfig cfg = load_config(opt, true);
  const fs::path out(opt.out);
  fs::create_directories(out);
  for (std::size_t i = 0; i < cfg.data.synthetic_frames; ++i) {
    const auto scene = pcssl::generate_scene(pcssl::synthetic_scene_config(cfg.data.scene, i));
    char stem[32];
    std::snprintf(stem, sizeof(stem), "scene_%04zu", i);
    pcssl::export_scene(scene, out, stem);
  }
  pcssl::log().info("wrote {} scenes to {}", cfg.data.synthetic_frames, out.string());
  return 0;
}

int cmd_pretrain(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  pcssl::PretrainOptions po;
  if (!opt.checkpoint.empty()) po.resume = opt.checkpoint;
  po.stop_after = opt.stop_after;
  const auto result = pcssl::pretrain(cfg, opt.out, po);
  std::cout << nlohmann::json{{"steps", result.steps},
                              {"checkpoint", result.final_checkpoint.string()},
                              {"metrics", result.metrics.string()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_probe(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  auto state = load_state(cfg, opt.checkpoint);
  const auto data = pcssl::load_dataset(cfg.data);
  const auto set = pcssl::embed_dataset(state.model, data, cfg);
  auto report = pcssl::evaluate(set, cfg.eval).to_json();
  report["step"] = state.step();
  emit_json(report, opt, "probe.json");
  return 0;
}

int cmd_inspect(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const auto data = pcssl::load_dataset(cfg.data);
  if (opt.frame >= data.size()) {
    throw pcssl::ArgumentError("--frame " + std::to_string(opt.frame) + " out of range (" +
                               std::to_string(data.size()) + " frames)");
  }
  const std::uint64_t seed =
      pcssl::Rng::keyed({cfg.eval.seed, 0xE7A1, opt.frame}).next_u64();
  const auto s = pcssl::prepare_frame(data.frames[opt.frame], cfg.sample, seed);
  auto view_json = [](const pcssl::PointCloud& v, const pcssl::ProposalSet& p) {
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto ids = p.member_ids_of(i);
      members.push_back(std::vector<pcssl::PointId>(ids.begin(), ids.end()));
    }
    return nlohmann::json{{"points", v.size()},
                          {"center_ids", p.center_ids},
                          {"center_rows", p.center_rows},
                          {"members", members}};
  };
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.proposals1.size(); ++i) {
    pairs.push_back({{"proposal", i},
                     {"center_id", s.proposals1.center_ids[i]},
                     {"view1_row", s.proposals1.center_rows[i]},
                     {"view2_row", s.proposals2.center_rows[i]}});
  }
  const nlohmann::json j{{"frame", opt.frame},
                         {"frame_points", data.frames[opt.frame].size()},
                         {"shared_points", s.correspondence.pairs.size()},
                         {"k", s.proposals1.k},
                         {"radius", s.proposals1.radius},
                         {"view1", view_json(s.view1, s.proposals1)},
                         {"view2", view_json(s.view2, s.proposals2)},
                         {"pairs", pairs}};
  emit_json(j, opt, "proposals_frame_" + std::to_string(opt.frame) + ".json");
  return 0;
}

int cmd_export(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  auto state = load_state(cfg, opt.checkpoint);
  const auto data = pcssl::load_dataset(cfg.data);
  const auto set = pcssl::embed_dataset(state.model, data, cfg);
  std::string csv;
  char buf[32];
  for (std::size_t i = 0; i < set.rows; ++i) {
    for (std::size_t c = 0; c < set.dim; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", set.z[i * set.dim + c]);
      if (c > 0) csv += ',';
      csv += buf;
    }
    csv += '\n';
  }
  const fs::path out(opt.out);
  write_text(out / "embeddings.csv", csv);
  std::string labels = "row,class_id,cluster\n";
  for (std::size_t i = 0; i < set.rows; ++i) {
    labels += std::to_string(i) + ',' + std::to_string(set.labels[i]) + ',' +
              std::to_string(set.clusters[i]) + '\n';
  }
  write_text(out / "embedding_labels.csv", labels);
  pcssl::log().info("wrote {} x {} embeddings to {}", set.rows, set.dim, out.string());
  return 0;
}

int cmd_grad_check(const Options& opt) {
  RunConfig cfg = opt.config.empty() ? pcssl::micro_grad_config() : load_config(opt);
  if (opt.config.empty() && opt.seed) cfg.train.seed = *opt.seed;
  const auto report = pcssl::grad_audit(cfg, opt.eps);
  pcssl::log().debug("{}", report.to_json().dump());
  std::printf("max relative error %.3e over %zu parameters (%.1f s)\n", report.max_rel_error,
              report.elements, report.seconds);
  if (!opt.out.empty()) write_text(fs::path(opt.out) / "grad_check.json", report.to_json().dump(2) + "\n");
  return report.max_rel_error < 1e-4 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pcssl: proposal-level contrastive pre-training for point clouds"};
  app.require_subcommand(1, 1);
  Options opt;
  std::string log_level;
  app.add_option("--log-level", log_level, "error, info or debug (overrides PC_LOG_LEVEL)");

  auto with_config = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("--config", opt.config, "run configuration (key = value)");
    if (required) o->required();
    o->check(CLI::ExistingFile);
  };
  auto with_seed = [&](CLI::App* sub, const char* what) { sub->add_option("--seed", opt.seed, what); };

  auto* gen = app.add_subcommand("gen-scenes", "write labeled synthetic scenes");
  with_config(gen);
  gen->add_option("--out", opt.out, "output directory")->required();
  with_seed(gen, "scene seed (overrides scene_seed)");

  auto* pre = app.add_subcommand("pretrain", "run self-supervised pre-training");
  with_config(pre);
  pre->add_option("--out", opt.out, "run directory")->required();
  with_seed(pre, "training seed (overrides seed)");
  pre->add_option("--checkpoint", opt.checkpoint, "resume from this checkpoint");
  pre->add_option("--stop-after", opt.stop_after, "stop once this many steps are done");

  auto* probe = app.add_subcommand("probe", "purity, NMI and linear-probe accuracy as JSON");
  with_config(probe);
  probe->add_option("--checkpoint", opt.checkpoint, "model checkpoint")->required();
  probe->add_option("--out", opt.out, "also write probe.json here");
  with_seed(probe, "ignored; the checkpoint carries its seed");

  auto* inspect = app.add_subcommand("inspect-proposals", "dump proposals of one frame as JSON");
  with_config(inspect);
  inspect->add_option("--frame", opt.frame, "frame index");
  inspect->add_option("--out", opt.out, "also write the JSON here");
  with_seed(inspect, "ignored");

  auto* exp = app.add_subcommand("export-embeddings", "write proposal embeddings as CSV");
  with_config(exp);
  exp->add_option("--checkpoint", opt.checkpoint, "model checkpoint")->required();
  exp->add_option("--out", opt.out, "output directory")->required();
  with_seed(exp, "ignored");

  auto* grad = app.add_subcommand("grad-check", "finite-difference audit of the full objective");
  with_config(grad, false);
  grad->add_option("--eps", opt.eps, "central-difference step")->check(CLI::Range(1e-7, 1e-4));
  grad->add_option("--out", opt.out, "also write grad_check.json here");
  with_seed(grad, "model seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << "\n" << app.help();
    return code;
  }

  try {
    if (!log_level.empty()) pcssl::set_log_level(log_level);
    if (gen->parsed()) return cmd_gen_scenes(opt);
    if (pre->parsed()) return cmd_pretrain(opt);
    if (probe->parsed()) return cmd_probe(opt);
    if (inspect->parsed()) return cmd_inspect(opt);
    if (exp->parsed()) return cmd_export(opt);
    if (grad->parsed()) return cmd_grad_check(opt);
  } catch (const pcssl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
