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

#include "pcssl/evaluation.hpp"

#include <map>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"
#include "pcssl/synth.hpp"

namespace pcssl {

EmbeddingSet embed_dataset(Model& model, const Dataset& data, const RunConfig& cfg) {
  if (!data.labeled) throw ConfigError("evaluation needs a labeled dataset");
  const std::size_t frames =
      cfg.eval.frames == 0 ? data.size() : std::min(cfg.eval.frames, data.size());
  EmbeddingSet set;
  set.dim = cfg.model.embed_dim;
  std::vector<double> scores;
  double pos = 0.0, neg = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::uint64_t seed = Rng::keyed({cfg.eval.seed, 0xE7A1, f}).next_u64();
    const FrameSample sample = prepare_frame(data.frames[f], cfg.sample, seed);
    const BatchOutputs out = forward_batch(model, std::span(&sample, 1), ad::BnMode::kEval);
    const auto z = out.z1.values();
    set.z.insert(set.z.end(), z.begin(), z.end());
    const auto q = out.q1.values();
    scores.insert(scores.end(), q.begin(), q.end());
    const auto labels = proposal_labels(data.scenes[f], sample.proposals1);
    set.labels.insert(set.labels.end(), labels.begin(), labels.end());
    const PairStats stats = pair_statistics(out.z1, out.z2);
    pos += stats.positive_cosine;
    neg += stats.negative_cosine;
  }
  set.rows = set.labels.size();
  const std::size_t o = cfg.model.clusters;
  const ad::Matrix assign = sinkhorn_assign(ad::Matrix({set.rows, o}, std::move(scores)),
                                            cfg.objective.sinkhorn_eps,
                                            cfg.objective.sinkhorn_iters);
  set.clusters = hard_assignments(assign);
  set.positive_cosine = pos / static_cast<double>(frames);
  set.negative_cosine = neg / static_cast<double>(frames);
  return set;
}

nlohmann::json EvalReport::to_json() const {
  return nlohmann::json{{"proposals", proposals},
                        {"dropped", dropped},
                        {"purity", purity},
                        {"nmi", nmi},
                        {"probe_accuracy", probe_accuracy},
                        {"pos_cos", positive_cosine},
                        {"neg_cos", negative_cosine}};
}

EvalReport evaluate(const EmbeddingSet& set, const EvalConfig& cfg) {
  EvalReport r;
  r.proposals = set.rows;
  r.positive_cosine = set.positive_cosine;
  r.negative_cosine = set.negative_cosine;
  const ClusterMetrics cm = cluster_metrics(set.clusters, set.labels);
  r.purity = cm.purity;
  r.nmi = cm.nmi;

  std::map<int, std::size_t> counts;
  for (int l : set.labels) ++counts[l];
  std::vector<double> z;
  std::vector<int> labels;
  for (std::size_t i = 0; i < set.rows; ++i) {
    if (counts[set.labels[i]] < cfg.probe.min_per_class) {
      ++r.dropped;
      continue;
    }
    labels.push_back(set.labels[i]);
    z.insert(z.end(), set.z.begin() + static_cast<long>(i * set.dim),
             set.z.begin() + static_cast<long>((i + 1) * set.dim));
  }
  r.probe_accuracy = linear_probe(z, set.dim, labels, cfg.seed, cfg.probe);
  return r;
}

}  // namespace pcssl
