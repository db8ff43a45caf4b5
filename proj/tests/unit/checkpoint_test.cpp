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

#include "pcssl/checkpoint.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl {
namespace {

namespace fs = std::filesystem;

Checkpoint sample(std::uint64_t seed) {
  Rng rng(seed);
  Checkpoint c;
  c.step = 1234;
  c.seed = seed;
  for (const char* name : {"backbone.mlp0.weight", "projection.bn.running_var"}) {
    Checkpoint::Entry e;
    e.name = name;
    e.trainable = std::string(name).find("running") == std::string::npos;
    e.shape = {2 + rng.index(3), 1 + rng.index(4)};
    for (auto* buf : {&e.values, &e.m, &e.v}) {
      buf->resize(e.shape.size());
      for (auto& x : *buf) x = rng.normal() * 1e-3;
    }
    c.entries.push_back(e);
  }
  return c;
}

// Independent little-endian writer for the documented layout.
struct Bytes {
  std::vector<std::byte> out;
  template <typename T>
  void put(T v) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    for (auto b : raw) out.push_back(std::byte{b});
  }
  void put_str(const std::string& s) {
    for (char ch : s) out.push_back(std::byte(static_cast<unsigned char>(ch)));
  }
};

TEST(CheckpointTest, EncodingFollowsLayout) {
  Checkpoint c;
  c.step = 7;
  c.seed = 42;
  c.entries.push_back({"g.w", true, {1, 2}, {1.5, -2.0}, {0.25, 0.0}, {1e-3, 2e-3}});

  Bytes b;
  b.put_str("PCSSLCKP");
  b.put<std::uint32_t>(1);
  b.put<std::uint64_t>(7);
  b.put<std::uint64_t>(42);
  b.put<std::uint32_t>(1);
  b.put<std::uint32_t>(3);
  b.put_str("g.w");
  b.put<std::uint8_t>(1);
  b.put<std::uint32_t>(2);
  b.put<std::uint64_t>(1);
  b.put<std::uint64_t>(2);
  for (double x : {1.5, -2.0, 0.25, 0.0, 1e-3, 2e-3}) b.put<double>(x);

  EXPECT_EQ(encode_checkpoint(c), b.out);
  EXPECT_EQ(decode_checkpoint(b.out), c);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const Checkpoint c = sample(5);
  const auto bytes = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(back, c);
  EXPECT_EQ(encode_checkpoint(back), bytes);
}

TEST(CheckpointTest, FileRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "pcssl_ckpt_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const Checkpoint c = sample(8);
  save_checkpoint(c, dir / "a.ckpt");
  EXPECT_EQ(load_checkpoint(dir / "a.ckpt"), c);
  save_checkpoint(load_checkpoint(dir / "a.ckpt"), dir / "b.ckpt");
  std::ifstream a(dir / "a.ckpt", std::ios::binary), b(dir / "b.ckpt", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(a), {}),
            std::string(std::istreambuf_iterator<char>(b), {}));
  // no temporaries left behind
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 2);
  fs::remove_all(dir);
}

TEST(CheckpointTest, RejectsCorruptInput) {
  const auto good = encode_checkpoint(sample(3));
  auto bad_magic = good;
  bad_magic[0] = std::byte{'X'};
  EXPECT_THROW(decode_checkpoint(bad_magic), FormatError);

  auto bad_version = good;
  bad_version[8] = std::byte{9};
  EXPECT_THROW(decode_checkpoint(bad_version), FormatError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{20}, good.size() - 1}) {
    EXPECT_THROW(decode_checkpoint(std::span(good).first(cut)), FormatError) << cut;
  }
  auto trailing = good;
  trailing.push_back(std::byte{0});
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), Error);
}

struct ModelFixture : ::testing::Test {
  static std::vector<ad::ParamGroup> make(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ad::ParamGroup> groups;
    groups.emplace_back("enc");
    groups.back().add_uniform("w", {3, 4}, 3, rng);
    groups.back().add_constant("stat", {1, 4}, 1.0, false);
    groups.emplace_back("head");
    groups.back().add_uniform("w", {4, 2}, 4, rng);
    return groups;
  }
};

TEST_F(ModelFixture, CaptureRestoreRoundTrip) {
  auto a = make(1);
  auto adam = AdamState::zeros_like(a);
  adam.step = 17;
  for (auto& m : adam.m) {
    for (auto& x : m) x = 0.5;
  }
  const Checkpoint c = capture_checkpoint(a, adam, 99);
  EXPECT_EQ(c.step, 17u);
  EXPECT_EQ(c.seed, 99u);
  ASSERT_EQ(c.entries.size(), 3u);
  EXPECT_EQ(c.entries[0].name, "enc.w");
  EXPECT_FALSE(c.entries[1].trainable);

  auto b = make(2);
  auto adam_b = AdamState::zeros_like(b);
  restore_checkpoint(decode_checkpoint(encode_checkpoint(c)), b, adam_b);
  EXPECT_EQ(capture_checkpoint(b, adam_b, 99), c);
}

TEST_F(ModelFixture, RestoreRejectsMismatchedModel) {
  auto a = make(1);
  auto adam = AdamState::zeros_like(a);
  Checkpoint c = capture_checkpoint(a, adam, 0);

  auto renamed = c;
  renamed.entries[2].name = "head.v";
  EXPECT_THROW(restore_checkpoint(renamed, a, adam), FormatError);

  auto reshaped = c;
  reshaped.entries[0].shape = {4, 3};
  EXPECT_THROW(restore_checkpoint(reshaped, a, adam), FormatError);

  auto missing = c;
  missing.entries.pop_back();
  EXPECT_THROW(restore_checkpoint(missing, a, adam), FormatError);
}

}  // namespace
}  // namespace pcssl
