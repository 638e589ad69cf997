#pragma once

// Chunked, seeded parallel execution.
//
// A job of `total` independent units is cut into chunks of `chunk_size`.
// Chunk k runs with derive_stream(seed, tag, k) and produces a partial
// result; partials are folded in chunk order once every worker is done.
// The fold order never depends on the worker count, so results are
// bit-identical for any `workers`.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kacld/random.hpp"

namespace kacld {

struct ChunkPlan {
  std::uint64_t seed = 0;
  std::string tag = "default";
  std::size_t chunk_size = 10000;
  std::size_t workers = 1;

  ChunkPlan with_tag(std::string new_tag) const {
    ChunkPlan p = *this;
    p.tag = std::move(new_tag);
    return p;
  }
};

struct ChunkRange {
  std::size_t index;
  std::size_t begin;
  std::size_t end;
  std::size_t size() const { return end - begin; }
};

/// Runs `work(range, stream) -> Partial` over all chunks and returns the
/// partials in chunk order.
template <typename Work>
auto map_chunks(const ChunkPlan& plan, std::size_t total, Work&& work)
    -> std::vector<decltype(work(std::declval<const ChunkRange&>(),
                                 std::declval<Stream&>()))> {
  using Partial = decltype(work(std::declval<const ChunkRange&>(),
                                std::declval<Stream&>()));
  if (plan.chunk_size == 0) throw std::invalid_argument("chunk_size must be positive");
  const std::size_t chunks = (total + plan.chunk_size - 1) / plan.chunk_size;
  std::vector<Partial> partials(chunks);

  auto run_one = [&](std::size_t k) {
    ChunkRange range{k, k * plan.chunk_size,
                     std::min(total, (k + 1) * plan.chunk_size)};
    Stream stream = derive_stream(plan.seed, plan.tag, k);
    partials[k] = work(range, stream);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min(plan.workers, chunks));
  if (workers == 1) {
    for (std::size_t k = 0; k < chunks; ++k) run_one(k);
    return partials;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next.fetch_add(1); k < chunks; k = next.fetch_add(1)) {
        try {
          run_one(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return partials;
}

/// map_chunks followed by an in-order left fold with `merge(acc, partial)`.
template <typename Work, typename Merge>
auto reduce_chunks(const ChunkPlan& plan, std::size_t total, Work&& work,
                   Merge&& merge) {
  auto partials = map_chunks(plan, total, std::forward<Work>(work));
  using Partial = typename decltype(partials)::value_type;
  Partial acc{};
  for (auto& p : partials) merge(acc, p);
  return acc;
}

}  // namespace kacld
