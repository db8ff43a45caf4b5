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

#include "pcssl/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {
namespace {

using ad::Tensor;

TEST(CosineLrTest, Landmarks) {
  EXPECT_EQ(cosine_lr(0, 100, 10, 0.003), 0.0);
  EXPECT_EQ(cosine_lr(10, 100, 10, 0.003), 0.003);
  EXPECT_NEAR(cosine_lr(100, 100, 10, 0.003), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(55, 100, 10, 0.003), 0.0015, 1e-15);
  EXPECT_NEAR(cosine_lr(5, 100, 10, 0.003), 0.0015, 1e-15);
}

TEST(CosineLrTest, NoWarmupStartsAtMax) {
  EXPECT_EQ(cosine_lr(0, 50, 0, 0.01), 0.01);
  EXPECT_EQ(cosine_lr(7, 7, 7, 0.01), 0.01);
}

TEST(CosineLrTest, ContinuousAndMonotoneAfterWarmup) {
  double prev = cosine_lr(20, 400, 20, 1.0);
  for (std::uint64_t s = 21; s <= 400; ++s) {
    const double lr = cosine_lr(s, 400, 20, 1.0);
    EXPECT_LE(lr, prev);
    EXPECT_LT(prev - lr, 0.01);
    prev = lr;
  }
  for (std::uint64_t s = 1; s <= 20; ++s) {
    EXPECT_GT(cosine_lr(s, 400, 20, 1.0), cosine_lr(s - 1, 400, 20, 1.0));
  }
}

TEST(CosineLrTest, RejectsOutOfRange) {
  EXPECT_THROW(cosine_lr(11, 10, 2, 0.1), ArgumentError);
  EXPECT_THROW(cosine_lr(1, 10, 11, 0.1), ArgumentError);
}

struct AdamFixture : ::testing::Test {
  std::vector<ad::ParamGroup> groups;

  void SetUp() override {
    Rng rng(3);
    ad::ParamGroup a("a");
    a.add_uniform("w", {3, 2}, 3, rng);
    a.add_constant("frozen", {1, 2}, 5.0, false);
    ad::ParamGroup b("b");
    b.add_uniform("v", {1, 4}, 4, rng);
    groups.push_back(std::move(a));
    groups.push_back(std::move(b));
  }

  // Gradient of sum(p * c) is c.
  void set_grads(Rng& rng) {
    for (auto& g : groups) {
      g.zero_grad();
      for (auto& p : g.entries()) {
        if (!p.trainable) continue;
        std::vector<double> c(p.tensor.size());
        for (auto& x : c) x = rng.uniform(-1, 1);
        ad::backward(ad::sum(ad::mul(p.tensor, ad::constant(p.tensor.shape(), c))));
      }
    }
  }

  std::vector<double> snapshot() const {
    std::vector<double> out;
    for (const auto& g : groups) {
      for (const auto& p : g.entries()) out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
    }
    return out;
  }
};

TEST_F(AdamFixture, ZeroGradientLeavesParametersAndCountsStep) {
  auto state = AdamState::zeros_like(groups);
  for (auto& g : groups) {
    for (auto& p : g.entries()) {
      if (p.trainable) ad::backward(ad::scalar_mul(ad::sum(p.tensor), 0.0));
    }
  }
  const auto before = snapshot();
  adam_step(groups, state, 0.1, {});
  EXPECT_EQ(snapshot(), before);
  EXPECT_EQ(state.step, 1u);
}

TEST(AdamTest, ScalarFirstStepMovesByLr) {
  std::vector<ad::ParamGroup> groups(1, ad::ParamGroup("g"));
  Tensor& x = groups[0].add_constant("x", {1, 1}, 2.0);
  auto state = AdamState::zeros_like(groups);
  ad::backward(ad::sum(x));
  adam_step(groups, state, 0.1, {});
  // m_hat = 1, v_hat = 1, so the update is lr / (1 + eps)
  EXPECT_NEAR(x.item(), 2.0 - 0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(x.item(), 1.9, 1e-8);
}

TEST(AdamTest, MatchesHandRecurrence) {
  std::vector<ad::ParamGroup> groups(1, ad::ParamGroup("g"));
  Tensor& x = groups[0].add_constant("x", {1, 1}, 0.5);
  auto state = AdamState::zeros_like(groups);
  const AdamConfig cfg{0.8, 0.95, 1e-6};
  const std::vector<double> gs{0.3, -1.2, 0.7, 2.0};
  double m = 0.0, v = 0.0, p = 0.5;
  for (std::size_t t = 1; t <= gs.size(); ++t) {
    groups[0].zero_grad();
    ad::backward(ad::scalar_mul(ad::sum(x), gs[t - 1]));
    adam_step(groups, state, 0.05, cfg);
    m = 0.8 * m + 0.2 * gs[t - 1];
    v = 0.95 * v + 0.05 * gs[t - 1] * gs[t - 1];
    const double mh = m / (1.0 - std::pow(0.8, double(t)));
    const double vh = v / (1.0 - std::pow(0.95, double(t)));
    p -= 0.05 * mh / (std::sqrt(vh) + 1e-6);
    EXPECT_NEAR(x.item(), p, 1e-14);
  }
}

TEST_F(AdamFixture, FrozenParametersDoNotMove) {
  auto state = AdamState::zeros_like(groups);
  Rng rng(1);
  set_grads(rng);
  adam_step(groups, state, 0.1, {});
  for (double v : groups[0].get("frozen").values()) EXPECT_EQ(v, 5.0);
}

TEST_F(AdamFixture, NonFiniteGradientNamesParameterAndAborts) {
  auto state = AdamState::zeros_like(groups);
  Rng rng(2);
  set_grads(rng);
  adam_step(groups, state, 0.1, {});
  set_grads(rng);
  auto& v = groups[1].get("v");
  v.zero_grad();
  ad::backward(ad::sum(ad::mul(v, ad::constant({1, 4}, {0, std::nan(""), 0, 0}))));
  const auto before = snapshot();
  const auto moments = state.m;
  try {
    adam_step(groups, state, 0.1, {});
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("b.v"), std::string::npos) << e.what();
  }
  EXPECT_EQ(snapshot(), before);
  EXPECT_EQ(state.m, moments);
  EXPECT_EQ(state.step, 1u);
}

TEST_F(AdamFixture, Deterministic) {
  auto run = [&] {
    groups.clear();
    SetUp();
    auto state = AdamState::zeros_like(groups);
    Rng rng(9);
    for (int i = 0; i < 10; ++i) {
      set_grads(rng);
      adam_step(groups, state, 0.01, {});
    }
    return snapshot();
  };
  EXPECT_EQ(run(), run());
}

TEST_F(AdamFixture, MismatchedStateIsShapeError) {
  auto state = AdamState::zeros_like(groups);
  state.m.pop_back();
  EXPECT_THROW(adam_step(groups, state, 0.1, {}), ShapeError);
}

TEST(AdamConfigTest, Validates) {
  EXPECT_NO_THROW(AdamConfig{}.validate());
  EXPECT_THROW((AdamConfig{1.0, 0.999, 1e-8}.validate()), ConfigError);
  EXPECT_THROW((AdamConfig{0.9, -0.1, 1e-8}.validate()), ConfigError);
  EXPECT_THROW((AdamConfig{0.9, 0.999, 0.0}.validate()), ConfigError);
}

}  // namespace
}  // namespace pcssl
