//
// Copyright 2026 The pacest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <utility>

namespace pacest {

inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Blockwise parallel reduction with a deterministic merge order.
//
// Trials are grouped into fixed-size blocks by the caller; workers claim
// blocks dynamically but completed results are merged strictly in block
// order, so the reduced value is identical for any worker count. Parked
// blocks are bounded by backpressure to keep memory O(workers).
//
// block_fn: (block_index) -> Acc
// merge_fn: (Acc&& block_result) -> void, called in increasing block order
template <class Acc, class BlockFn, class MergeFn>
void ordered_blockwise_reduce(std::uint64_t num_blocks, unsigned workers,
                              BlockFn&& block_fn, MergeFn&& merge_fn) {
  workers = resolve_workers(workers);
  if (num_blocks == 0) return;
  if (workers <= 1 || num_blocks == 1) {
    for (std::uint64_t b = 0; b < num_blocks; ++b) merge_fn(block_fn(b));
    return;
  }

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::uint64_t, Acc> parked;
  std::uint64_t next_to_merge = 0;
  std::atomic<std::uint64_t> next_to_claim{0};
  std::exception_ptr failure;
  const std::uint64_t park_limit = 4ULL * workers + 8;

  auto worker_loop = [&]() {
    for (;;) {
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      const std::uint64_t b = next_to_claim.fetch_add(1);
      if (b >= num_blocks) return;
      try {
        Acc result = block_fn(b);
        std::unique_lock<std::mutex> lock(mu);
        cv.wait(lock, [&] {
          return failure || b < next_to_merge + park_limit;
        });
        if (failure) return;
        parked.emplace(b, std::move(result));
        while (!parked.empty() && parked.begin()->first == next_to_merge) {
          Acc ready = std::move(parked.begin()->second);
          parked.erase(parked.begin());
          merge_fn(std::move(ready));
          ++next_to_merge;
        }
        cv.notify_all();
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        cv.notify_all();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker_loop);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Convenience for per-trial work: maps [0, trials) onto fixed-size blocks.
template <class Acc, class TrialFn, class MergeFn>
void ordered_trial_reduce(std::uint64_t trials, std::uint64_t trials_per_block,
                          unsigned workers, TrialFn&& trial_fn, Acc init,
                          MergeFn&& merge_fn) {
  if (trials_per_block == 0) trials_per_block = 1;
  const std::uint64_t blocks =
      (trials + trials_per_block - 1) / trials_per_block;
  ordered_blockwise_reduce<Acc>(
      blocks, workers,
      [&](std::uint64_t b) {
        Acc acc = init;
        const std::uint64_t lo = b * trials_per_block;
        const std::uint64_t hi = std::min(trials, lo + trials_per_block);
        for (std::uint64_t k = lo; k < hi; ++k) trial_fn(k, acc);
        return acc;
      },
      [&](Acc&& acc) { merge_fn(std::move(acc)); });
}

}  // namespace pacest
