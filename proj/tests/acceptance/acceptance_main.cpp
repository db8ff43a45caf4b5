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

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   pcssl_acceptance [--only 1,3,6] [--work DIR] [--config FILE]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pcssl/audit.hpp"
#include "pcssl/augmentation.hpp"
#include "pcssl/autodiff.hpp"
#include "pcssl/checkpoint.hpp"
#include "pcssl/encoder.hpp"
#include "pcssl/error.hpp"
#include "pcssl/evaluation.hpp"
#include "pcssl/logging.hpp"
#include "pcssl/model.hpp"
#include "pcssl/objectives.hpp"
#include "pcssl/proposals.hpp"
#include "pcssl/random.hpp"
#include "pcssl/run_config.hpp"
#include "pcssl/trainer.hpp"

namespace fs = std::filesystem;
using namespace pcssl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<nlohmann::json> read_metrics(const fs::path& p) {
  std::vector<nlohmann::json> rows;
  std::istringstream in(read_bytes(p));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  }
  return rows;
}

struct Context {
  RunConfig desk;
  fs::path work;
  std::optional<Dataset> data;

  const Dataset& dataset() {
    if (!data) data = load_dataset(desk.data);
    return *data;
  }
};

// -- 1 ----------------------------------------------------------------------

Outcome gradient_fidelity(Context&) {
  const auto report = grad_audit(micro_grad_config());
  const bool ok = report.max_rel_error < 1e-4 && report.seconds < 30.0;
  return {ok, "max rel err " + sci(report.max_rel_error) + " (< 1e-4) over " +
                  std::to_string(report.elements) + " parameters, " +
                  fmt("%.1f", report.seconds) + " s (< 30 s)"};
}

// -- 2 ----------------------------------------------------------------------

// Symmetric InfoNCE evaluated directly from the embeddings.
double ipd_direct(const std::vector<std::vector<double>>& z1,
                  const std::vector<std::vector<double>>& z2, double tau) {
  const std::size_t n = z1.size();
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  double total = 0.0;
  for (int dir = 0; dir < 2; ++dir) {
    const auto& a = dir == 0 ? z1 : z2;
    const auto& b = dir == 0 ? z2 : z1;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) denom += std::exp(dot(a[i], b[j]) / tau);
      acc += -std::log(std::exp(dot(a[i], b[i]) / tau) / denom);
    }
    total += acc / static_cast<double>(n);
  }
  return total;
}

Outcome loss_identities(Context&) {
  const double tau = 0.1;

  const auto one = ad::constant({1, 3}, {0.6, 0.0, 0.8});
  const double single = ipd_loss(one, one, tau).item();

  const auto eye = ad::constant({2, 2}, {1.0, 0.0, 0.0, 1.0});
  const double pair = ipd_loss(eye, eye, tau).item();
  const double pair_oracle = ipd_direct({{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 0.0}, {0.0, 1.0}}, tau);
  const double pair_closed = 2.0 * std::log1p(std::exp(-1.0 / tau));

  const std::size_t n = 64, o = 16;
  const auto logits = ad::constant(ad::Matrix(n, o, 3.7));
  const auto uniform = ad::constant(ad::Matrix(n, o, 1.0 / static_cast<double>(o)));
  // Both swapped directions are summed, so one direction is half the loss.
  const double per_direction = ics_loss(logits, logits, uniform, uniform).loss.item() / 2.0;
  const double log_o = std::log(static_cast<double>(o));

  const bool ok = single == 0.0 && std::abs(pair - pair_oracle) <= 1e-7 &&
                  std::abs(pair - pair_closed) <= 1e-7 && std::abs(per_direction - log_o) <= 1e-9;
  return {ok, "ipd(N=1) = " + sci(single) + "; ipd(N=2) = " + fmt("%.6e", pair) + " vs " +
                  fmt("%.6e", pair_oracle) + " (|d| " + sci(std::abs(pair - pair_oracle)) +
                  " <= 1e-7); ics per proposal " + fmt("%.12f", per_direction) + " vs log " +
                  std::to_string(o) + " (|d| " + sci(std::abs(per_direction - log_o)) +
                  " <= 1e-9)"};
}

// -- 3 ----------------------------------------------------------------------

Outcome sinkhorn_contract(Context& ctx) {
  const auto& obj = ctx.desk.objective;
  const std::size_t n = 64, o = 16;
  const double target = static_cast<double>(n) / static_cast<double>(o);

  ad::Matrix flat(n, o, 0.37);
  const auto flat_out = sinkhorn_assign(flat, obj.sinkhorn_eps, obj.sinkhorn_iters);
  const bool exact = std::all_of(flat_out.data.begin(), flat_out.data.end(),
                                 [&](double v) { return v == 1.0 / static_cast<double>(o); });

  // Score scales from near-constant up to the cosine range the model feeds in.
  const std::vector<double> scales{0.001, 0.01, 0.1, 1.0};
  Rng rng(33);
  double worst_row = 0.0, worst_col_all = 0.0;
  std::string per_scale;
  for (double scale : scales) {
    double worst_col = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
      ad::Matrix s(n, o);
      for (auto& v : s.data) v = scale * rng.uniform(-1.0, 1.0);
      const auto a = sinkhorn_assign(s, obj.sinkhorn_eps, obj.sinkhorn_iters);
      std::vector<double> col(o, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < o; ++j) {
          row += a(i, j);
          col[j] += a(i, j);
        }
        worst_row = std::max(worst_row, std::abs(row - 1.0));
      }
      for (double c : col) worst_col = std::max(worst_col, std::abs(c - target));
    }
    per_scale += " " + sci(scale) + ":" + sci(worst_col);
    worst_col_all = std::max(worst_col_all, worst_col);
  }
  const bool ok = exact && worst_row <= 1e-6 && worst_col_all <= 1e-3;
  return {ok, "200 random 64x16 inputs, eps " + sci(obj.sinkhorn_eps) + ", " +
                  std::to_string(obj.sinkhorn_iters) + " iterations: max |row sum - 1| " +
                  sci(worst_row) + " (<= 1e-6), max |col sum - N/O| by score scale" + per_scale +
                  " (<= 1e-3); constant input exact uniform: " + (exact ? "yes" : "no")};
}

// -- 4 ----------------------------------------------------------------------

std::vector<std::size_t> fps_brute_force(const std::vector<Vec3>& pts, std::size_t n,
                                         std::size_t start) {
  std::vector<std::size_t> chosen{start};
  std::vector<bool> taken(pts.size(), false);
  taken[start] = true;
  while (chosen.size() < n) {
    std::size_t best = pts.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (taken[i]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) {
        const double dx = pts[i][0] - pts[c][0], dy = pts[i][1] - pts[c][1],
                     dz = pts[i][2] - pts[c][2];
        d = std::min(d, dx * dx + dy * dy + dz * dz);
      }
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    chosen.push_back(best);
    taken[best] = true;
  }
  return chosen;
}

Outcome fps_equivalence(Context&) {
  Rng rng(404);
  int matched = 0;
  const int trials = 200;
  std::size_t largest = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t size = 1 + rng.index(512);
    largest = std::max(largest, size);
    std::vector<Vec3> pts(size);
    for (auto& p : pts) {
      p = {rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0), rng.uniform(-2.0, 2.0)};
      // Every fourth input sits on an integer grid, which forces distance ties.
      if (t % 4 == 0) p = {std::round(p[0] / 4.0), std::round(p[1] / 4.0), 0.0};
    }
    const std::size_t n = 1 + rng.index(std::min<std::size_t>(size, 128));
    const std::size_t start = rng.index(size);
    if (farthest_point_sampling(pts, n, start) == fps_brute_force(pts, n, start)) ++matched;
  }
  return {matched == trials, std::to_string(matched) + "/" + std::to_string(trials) +
                                 " inputs match exactly (up to " + std::to_string(largest) +
                                 " points)"};
}

// -- 5 ----------------------------------------------------------------------

Outcome geometric_invariances(Context& ctx) {
  const auto& ds = ctx.dataset();

  // Pairwise distances scale by s under every rigid view transform.
  double worst_scaling = 0.0;
  for (std::size_t f = 0; f < 8; ++f) {
    const auto& frame = ds.frames[f];
    const auto params = AugmentParams::random(1000 + f, ctx.desk.sample.augment);
    const auto moved = apply_rigid_augment(frame, params);
    const std::size_t m = std::min<std::size_t>(frame.size(), 200);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double before = std::sqrt(squared_distance(frame.point(i), frame.point(j)));
        const double after = std::sqrt(squared_distance(moved.point(i), moved.point(j)));
        worst_scaling = std::max(worst_scaling, std::abs(after - params.scale() * before));
      }
    }
  }

  // Proposal encoding of fixed features under translations that keep the
  // proposals inside the scene, and the attention weight sums, over several
  // initializations.
  const double extent = ctx.desk.data.scene.ground_extent;
  Rng shifts(55);
  double worst_shift = 0.0, worst_shift_y = 0.0, worst_shift_w = 0.0;
  std::size_t rows = 0, exact_rows = 0, guarded = 0;
  double worst_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Model model(ctx.desk.model, seed);
    for (std::size_t f = 0; f < 8; ++f) {
      const auto sample = prepare_frame(ds.frames[f], ctx.desk.sample, 100 * seed + f);
      const auto feats =
          backbone_features(sample.view1, model.backbone(), ctx.desk.model.backbone);
      const auto pf = gather_proposal_features(feats, sample.proposals1, sample.view1.points());
      AttentionTrace trace;
      const auto y = encode_proposals(pf, model.attention(), ctx.desk.model.attention, &trace);

      for (int t = 0; t < 4; ++t) {
        const Vec3 shift{shifts.uniform(-extent, extent), shifts.uniform(-extent, extent),
                         shifts.uniform(-1.0, 1.0)};
        auto shifted = pf;
        for (auto& c : shifted.coords) c = {c[0] + shift[0], c[1] + shift[1], c[2] + shift[2]};
        const auto y_shift =
            encode_proposals(shifted, model.attention(), ctx.desk.model.attention);
        for (std::size_t i = 0; i < y.rows(); ++i) {
          double err = 0.0, y_max = 0.0, w_max = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) {
            err = std::max(err, std::abs(y.value(i, c) - y_shift.value(i, c)));
            y_max = std::max(y_max, std::abs(y.value(i, c)));
          }
          for (std::size_t k = 0; k < trace.weights.cols(); ++k) {
            w_max = std::max(w_max, std::abs(trace.weights.value(i, k)));
          }
          if (err > worst_shift) {
            worst_shift = err;
            worst_shift_y = y_max;
            worst_shift_w = w_max;
          }
        }
      }

      const auto& w = trace.weights;
      for (std::size_t i = 0; i < w.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.cols(); ++k) s += w.value(i, k);
        ++rows;
        if (trace.guarded[i]) ++guarded;
        if (s == 1.0) ++exact_rows;
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
    }
  }

  const bool ok = worst_scaling <= 1e-6 && worst_shift <= 1e-9 && exact_rows == rows;
  return {ok, "max distance-scaling error " + sci(worst_scaling) +
                  " (<= 1e-6); max encoding change under translation " + sci(worst_shift) +
                  " (<= 1e-9; that row has max |y| " + sci(worst_shift_y) +
                  " and max |attention weight| " + sci(worst_shift_w) +
                  "); attention rows summing to exactly 1: " +
                  std::to_string(exact_rows) + "/" + std::to_string(rows) + " (" +
                  std::to_string(guarded) + " guarded, max |sum - 1| " + sci(worst_sum) + ")"};
}

// -- 6 / 7 ------------------------------------------------------------------

struct RunSummary {
  fs::path dir;
  double seconds = 0.0;
  double initial_loss = 0.0;
  double last_epoch_loss = 0.0;
  EvalReport base;
  EvalReport trained;
};

EvalReport evaluate_checkpoint(Context& ctx, const RunConfig& cfg, const fs::path& ckpt) {
  TrainState state(cfg.model, cfg.train.seed);
  state.restore(load_checkpoint(ckpt));
  return evaluate(embed_dataset(state.model, ctx.dataset(), cfg), cfg.eval);
}

RunSummary train_and_evaluate(Context& ctx, const RunConfig& cfg, const std::string& tag,
                              bool with_baseline) {
  RunSummary r;
  r.dir = ctx.work / tag;
  fs::remove_all(r.dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = pretrain(cfg, r.dir);
  r.seconds = seconds_since(t0);

  const auto rows = read_metrics(result.metrics);
  if (rows.empty()) throw EvaluationError(tag + ": empty metrics log");
  r.initial_loss = rows.front().at("total").get<double>();
  const auto last_epoch = rows.back().at("epoch").get<std::uint64_t>();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& row : rows) {
    if (row.at("epoch").get<std::uint64_t>() == last_epoch) {
      sum += row.at("total").get<double>();
      ++count;
    }
  }
  r.last_epoch_loss = sum / static_cast<double>(count);

  if (with_baseline) r.base = evaluate_checkpoint(ctx, cfg, checkpoint_path(r.dir, 0));
  r.trained = evaluate_checkpoint(ctx, cfg, result.final_checkpoint);
  return r;
}

std::map<std::string, RunSummary> g_runs;

const RunSummary& joint_seed0(Context& ctx) {
  auto it = g_runs.find("joint_s0");
  if (it == g_runs.end()) {
    RunConfig cfg = ctx.desk;
    cfg.train.seed = 0;
    it = g_runs.emplace("joint_s0", train_and_evaluate(ctx, cfg, "joint_s0", true)).first;
  }
  return it->second;
}

Outcome training_improves(Context& ctx) {
  const auto& r = joint_seed0(ctx);
  const double probe_gain = 100.0 * (r.trained.probe_accuracy - r.base.probe_accuracy);
  const double nmi_gain = r.trained.nmi - r.base.nmi;
  const bool a = r.last_epoch_loss < 0.5 * r.initial_loss;
  const bool b = r.trained.positive_cosine > 0.8 && r.trained.negative_cosine < 0.5;
  const bool c = probe_gain >= 15.0;
  const bool d = nmi_gain >= 0.2;
  const bool t = r.seconds < 600.0;
  auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  std::string detail =
      std::to_string(ctx.dataset().size()) + " scenes, " +
      std::to_string(ctx.desk.train.epochs) + " epochs: (a) loss " +
      fmt("%.3f", r.initial_loss) + " -> " + fmt("%.3f", r.last_epoch_loss) + " (ratio " +
      fmt("%.3f", r.last_epoch_loss / r.initial_loss) + " < 0.5) " + mark(a) +
      "; (b) positive cos " + fmt("%.3f", r.trained.positive_cosine) + " (> 0.8), negative cos " +
      fmt("%.3f", r.trained.negative_cosine) + " (< 0.5) " + mark(b) + "; (c) probe " +
      fmt("%.3f", r.base.probe_accuracy) + " -> " + fmt("%.3f", r.trained.probe_accuracy) +
      " (+" + fmt("%.1f", probe_gain) + " points >= 15) " + mark(c) + "; (d) NMI " +
      fmt("%.3f", r.base.nmi) + " -> " + fmt("%.3f", r.trained.nmi) + " (+" +
      fmt("%.3f", nmi_gain) + " >= 0.2) " + mark(d) + "; " + fmt("%.0f", r.seconds) +
      " s (< 600 s) " + mark(t);
  return {a && b && c && d && t, detail};
}

Outcome ablation_direction(Context& ctx) {
  struct Variant {
    const char* name;
    double alpha;
    double beta;
  };
  const Variant variants[] = {{"joint", 1.0, 1.0}, {"ipd_only", 1.0, 0.0}, {"ics_only", 0.0, 1.0}};
  std::map<std::string, double> mean;
  std::string per_seed;
  for (const auto& v : variants) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const std::string tag = std::string(v.name) + "_s" + std::to_string(seed);
      double acc = 0.0;
      if (tag == "joint_s0") {
        acc = joint_seed0(ctx).trained.probe_accuracy;
      } else {
        RunConfig cfg = ctx.desk;
        cfg.train.seed = seed;
        cfg.objective.weights.alpha = v.alpha;
        cfg.objective.weights.beta = v.beta;
        acc = train_and_evaluate(ctx, cfg, tag, false).trained.probe_accuracy;
      }
      per_seed += " " + tag + "=" + fmt("%.3f", acc);
      sum += acc;
    }
    mean[v.name] = sum / 3.0;
  }
  const bool ok = mean["joint"] >= mean["ipd_only"] && mean["joint"] >= mean["ics_only"];
  return {ok, "mean probe accuracy over 3 seeds: IPD+ICS " + fmt("%.3f", mean["joint"]) +
                  ", IPD only " + fmt("%.3f", mean["ipd_only"]) + ", ICS only " +
                  fmt("%.3f", mean["ics_only"]) + " (" + per_seed.substr(1) + ")"};
}

// -- 8 ----------------------------------------------------------------------

Outcome determinism(Context& ctx) {
  RunConfig cfg = ctx.desk;
  cfg.data.synthetic_frames = 8;
  cfg.train.epochs = 3;
  cfg.train.warmup_epochs = 1;
  cfg.train.checkpoint_every = 4;
  cfg.train.seed = 5;
  const auto root = ctx.work / "determinism";
  fs::remove_all(root);

  const auto a = pretrain(cfg, root / "a");
  const auto b = pretrain(cfg, root / "b");
  const bool same_logs = read_bytes(a.metrics) == read_bytes(b.metrics);
  const bool same_final = read_bytes(a.final_checkpoint) == read_bytes(b.final_checkpoint);

  // Decode/encode, save/load and restore/capture all reproduce the bytes.
  const std::string bytes = read_bytes(a.final_checkpoint);
  const auto ckpt = load_checkpoint(a.final_checkpoint);
  const auto reencoded = encode_checkpoint(ckpt);
  const bool encode_ok =
      reencoded.size() == bytes.size() &&
      std::equal(reencoded.begin(), reencoded.end(), bytes.begin(),
                 [](std::byte x, char y) { return x == static_cast<std::byte>(y); });
  save_checkpoint(ckpt, root / "copy.ckpt");
  const bool save_ok = read_bytes(root / "copy.ckpt") == bytes;
  TrainState state(cfg.model, cfg.train.seed);
  state.restore(ckpt);
  const bool restore_ok = state.checkpoint() == ckpt;

  PretrainOptions stop;
  stop.stop_after = 6;
  pretrain(cfg, root / "c", stop);
  PretrainOptions resume;
  resume.resume = checkpoint_path(root / "c", 4);
  const auto c = pretrain(cfg, root / "c", resume);
  const bool resume_logs = read_bytes(c.metrics) == read_bytes(a.metrics);
  const bool resume_final = read_bytes(c.final_checkpoint) == read_bytes(a.final_checkpoint);

  auto yn = [](bool v) { return v ? "identical" : "DIFFERENT"; };
  const bool ok = same_logs && same_final && encode_ok && save_ok && restore_ok && resume_logs &&
                  resume_final;
  return {ok, std::to_string(a.steps) + " steps; repeat run metrics " + yn(same_logs) +
                  ", final checkpoint " + yn(same_final) + "; checkpoint re-encode " +
                  yn(encode_ok) + ", save " + yn(save_ok) + ", restore " + yn(restore_ok) +
                  "; resume from step 4 after stopping at 6: metrics " + yn(resume_logs) +
                  ", final checkpoint " + yn(resume_final)};
}

std::set<int> parse_only(const std::string& list) {
  std::set<int> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    const int v = std::stoi(item);
    if (v < 1 || v > 8) throw ArgumentError("--only: criterion " + item + " out of range");
    out.insert(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only{1, 2, 3, 4, 5, 6, 7, 8};
  fs::path work = fs::temp_directory_path() / "pcssl_acceptance";
  fs::path config = fs::path(PCSSL_SOURCE_DIR) / "configs" / "desk.cfg";
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (i + 1 >= argc) throw ArgumentError(arg + " needs a value");
      if (arg == "--only") {
        only = parse_only(argv[++i]);
      } else if (arg == "--work") {
        work = argv[++i];
      } else if (arg == "--config") {
        config = argv[++i];
      } else {
        throw ArgumentError("unknown argument " + arg);
      }
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  set_log_level("error");
  Context ctx{RunConfig::load(config), work, std::nullopt};
  fs::create_directories(work);

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"loss identities", loss_identities},
      {"sinkhorn contract", sinkhorn_contract},
      {"fps oracle equivalence", fps_equivalence},
      {"geometric invariances", geometric_invariances},
      {"training improves representations", training_improves},
      {"ablation direction", ablation_direction},
      {"determinism and persistence", determinism},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.count(id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::printf("%s %d %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first,
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
