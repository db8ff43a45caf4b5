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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace pcssl {

/// Runs `produce(i)` for i in [first, last) on a pool of worker threads and
/// hands results back strictly in index order. At most `depth` finished or
/// in-flight items exist at any time; each index is delivered once.
/// With zero workers, items are produced on the caller's thread.
template <typename T>
class OrderedPrefetcher {
 public:
  OrderedPrefetcher(std::function<T(std::uint64_t)> produce, std::uint64_t first,
                    std::uint64_t last, std::size_t workers, std::size_t depth)
      : produce_(std::move(produce)), next_out_(first), next_job_(first), last_(last),
        depth_(depth == 0 ? 1 : depth) {
    for (std::size_t w = 0; w < workers; ++w) threads_.emplace_back([this] { work(); });
  }

  OrderedPrefetcher(const OrderedPrefetcher&) = delete;
  OrderedPrefetcher& operator=(const OrderedPrefetcher&) = delete;

  ~OrderedPrefetcher() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  /// Next item in order, or nullopt when the range is exhausted. Rethrows a
  /// producer exception for the item that raised it.
  std::optional<T> next() {
    if (threads_.empty()) {
      if (next_out_ >= last_) return std::nullopt;
      return produce_(next_out_++);
    }
    std::unique_lock lock(mu_);
    if (next_out_ >= last_) return std::nullopt;
    cv_.wait(lock, [this] { return !slots_.empty() && slots_.front().ready; });
    Slot slot = std::move(slots_.front());
    slots_.pop_front();
    ++next_out_;
    lock.unlock();
    cv_.notify_all();
    if (slot.error) std::rethrow_exception(slot.error);
    return std::move(*slot.value);
  }

 private:
  struct Slot {
    std::uint64_t index = 0;
    bool ready = false;
    std::optional<T> value;
    std::exception_ptr error;
  };

  void work() {
    while (true) {
      std::uint64_t index;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stop_ || (next_job_ < last_ && slots_.size() < depth_); });
        if (stop_) return;
        index = next_job_++;
        slots_.push_back(Slot{index, false, std::nullopt, nullptr});
      }
      std::optional<T> value;
      std::exception_ptr error;
      try {
        value.emplace(produce_(index));
      } catch (...) {
        error = std::current_exception();
      }
      {
        std::lock_guard lock(mu_);
        for (auto& s : slots_) {
          if (s.index == index) {
            s.value = std::move(value);
            s.error = error;
            s.ready = true;
            break;
          }
        }
      }
      cv_.notify_all();
    }
  }

  std::function<T(std::uint64_t)> produce_;
  std::uint64_t next_out_;
  std::uint64_t next_job_;
  std::uint64_t last_;
  std::size_t depth_;
  bool stop_ = false;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Slot> slots_;
  std::vector<std::thread> threads_;
};

}  // namespace pcssl
