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

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "pcssl/error.hpp"

namespace pcssl {
namespace {

constexpr char kMagic[8] = {'P', 'C', 'S', 'S', 'L', 'C', 'K', 'P'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::byte*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFF));
    }
  }
  void doubles(const std::vector<double>& v) {
    for (double d : v) le(d);
  }
  std::vector<std::byte> take() { return std::move(out_); }

 private:
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      u |= static_cast<U>(std::to_integer<std::uint8_t>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(u);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(n, '\0');
    std::memcpy(s.data(), in_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles(std::size_t n) {
    if (n > (in_.size() - pos_) / 8) throw FormatError("checkpoint truncated in tensor data");
    std::vector<double> v(n);
    for (auto& d : v) d = le<double>();
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(Checkpoint::kVersion);
  w.le<std::uint64_t>(ckpt.step);
  w.le<std::uint64_t>(ckpt.seed);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    const std::size_t n = e.shape.size();
    if (e.values.size() != n || e.m.size() != n || e.v.size() != n) {
      throw ShapeError("checkpoint entry " + e.name + " does not match shape " + e.shape.str());
    }
    w.le<std::uint32_t>(static_cast<std::uint32_t>(e.name.size()));
    w.bytes(e.name.data(), e.name.size());
    w.le<std::uint8_t>(e.trainable ? 1 : 0);
    w.le<std::uint32_t>(2);
    w.le<std::uint64_t>(e.shape.rows);
    w.le<std::uint64_t>(e.shape.cols);
    w.doubles(e.values);
    w.doubles(e.m);
    w.doubles(e.v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  Reader r(bytes);
  if (r.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.step = r.le<std::uint64_t>();
  c.seed = r.le<std::uint64_t>();
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Checkpoint::Entry e;
    e.name = r.str(r.le<std::uint32_t>());
    const auto flag = r.le<std::uint8_t>();
    if (flag > 1) throw FormatError("checkpoint entry " + e.name + " has bad trainable flag");
    e.trainable = flag == 1;
    if (r.le<std::uint32_t>() != 2) throw FormatError("checkpoint entry " + e.name + " is not 2-D");
    e.shape.rows = r.le<std::uint64_t>();
    e.shape.cols = r.le<std::uint64_t>();
    if (e.shape.cols != 0 && e.shape.rows > (std::size_t(-1) >> 4) / e.shape.cols) {
      throw FormatError("checkpoint entry " + e.name + " has absurd shape");
    }
    const std::size_t n = e.shape.size();
    e.values = r.doubles(n);
    e.m = r.doubles(n);
    e.v = r.doubles(n);
    c.entries.push_back(std::move(e));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::as_bytes(std::span<const char>(raw)));
}

Checkpoint capture_checkpoint(std::span<const ad::ParamGroup> groups, const AdamState& adam,
                              std::uint64_t seed) {
  Checkpoint c;
  c.step = adam.step;
  c.seed = seed;
  std::size_t i = 0;
  for (const auto& g : groups) {
    for (const auto& p : g.entries()) {
      Checkpoint::Entry e;
      e.name = g.name() + "." + p.name;
      e.trainable = p.trainable;
      e.shape = p.tensor.shape();
      e.values.assign(p.tensor.values().begin(), p.tensor.values().end());
      if (i < adam.m.size()) {
        e.m = adam.m[i];
        e.v = adam.v[i];
      } else {
        e.m.assign(e.values.size(), 0.0);
        e.v.assign(e.values.size(), 0.0);
      }
      ++i;
      c.entries.push_back(std::move(e));
    }
  }
  return c;
}

void restore_checkpoint(const Checkpoint& ckpt, std::span<ad::ParamGroup> groups,
                        AdamState& adam) {
  std::map<std::string, const Checkpoint::Entry*> by_name;
  for (const auto& e : ckpt.entries) by_name[e.name] = &e;
  std::size_t total = 0;
  for (const auto& g : groups) total += g.entries().size();
  if (total != ckpt.entries.size()) {
    throw FormatError("checkpoint has " + std::to_string(ckpt.entries.size()) +
                      " parameters, model has " + std::to_string(total));
  }
  // validate everything before mutating
  for (const auto& g : groups) {
    for (const auto& p : g.entries()) {
      const std::string name = g.name() + "." + p.name;
      auto it = by_name.find(name);
      if (it == by_name.end()) throw FormatError("checkpoint lacks parameter " + name);
      if (it->second->shape != p.tensor.shape()) {
        throw FormatError("checkpoint parameter " + name + " has shape " +
                          it->second->shape.str() + ", model expects " + p.tensor.shape().str());
      }
    }
  }
  AdamState next;
  next.step = ckpt.step;
  for (auto& g : groups) {
    for (auto& p : g.entries()) {
      const auto& e = *by_name.at(g.name() + "." + p.name);
      std::copy(e.values.begin(), e.values.end(), p.tensor.values().begin());
      p.tensor.zero_grad();
      next.m.push_back(e.m);
      next.v.push_back(e.v);
    }
  }
  adam = std::move(next);
}

}  // namespace pcssl
