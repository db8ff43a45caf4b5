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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcssl/autodiff.hpp"
#include "pcssl/optim.hpp"

namespace pcssl {

/// Versioned binary snapshot of parameters, Adam moments and counters.
///
/// Layout (all integers and floats little-endian):
///   magic "PCSSLCKP", u32 version, u64 step, u64 seed, u32 entry count,
///   then per entry: u32 name length, name bytes, u8 trainable,
///   u32 rank (always 2), u64 rows, u64 cols, f64 values, f64 m, f64 v.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  struct Entry {
    std::string name;  // "<group>.<parameter>"
    bool trainable = true;
    ad::Shape shape;
    std::vector<double> values;
    std::vector<double> m;
    std::vector<double> v;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::vector<Entry> entries;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::byte> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, unknown version, truncation or
/// trailing bytes.
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);

/// Writes through a temporary file and renames, so a crash never leaves a
/// half-written checkpoint under `path`.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint capture_checkpoint(std::span<const ad::ParamGroup> groups, const AdamState& adam,
                              std::uint64_t seed);

/// Copies values and moments into `groups` and `adam` by name. Throws
/// FormatError when names or shapes differ from the live model.
void restore_checkpoint(const Checkpoint& ckpt, std::span<ad::ParamGroup> groups,
                        AdamState& adam);

}  // namespace pcssl
