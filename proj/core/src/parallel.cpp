// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#include "relight/parallel.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace relight {

int worker_count() {
  if (const char* env = std::getenv("RELIGHT_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& body,
                  int64_t chunk) {
  const int64_t n = end - begin;
  if (n <= 0) return;
  const int workers = worker_count();
  if (chunk <= 0) chunk = std::max<int64_t>(1, n / (workers * 8));
  const int64_t num_chunks = (n + chunk - 1) / chunk;

  if (workers == 1 || num_chunks == 1) {
    for (int64_t c = 0; c < num_chunks; ++c) {
      const int64_t lo = begin + c * chunk;
      body(lo, std::min(end, lo + chunk));
    }
    return;
  }

  std::atomic<int64_t> next{0};
  auto run = [&]() {
    for (;;) {
      const int64_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= num_chunks) return;
      const int64_t lo = begin + c * chunk;
      body(lo, std::min(end, lo + chunk));
    }
  };

  std::vector<std::thread> pool;
  const int spawn = static_cast<int>(std::min<int64_t>(workers, num_chunks)) - 1;
  pool.reserve(spawn);
  for (int i = 0; i < spawn; ++i) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

void parallel_for_each(int64_t begin, int64_t end, const std::function<void(int64_t)>& body) {
  parallel_for(begin, end, [&](int64_t lo, int64_t hi) {
    for (int64_t i = lo; i < hi; ++i) body(i);
  });
}

}  // namespace relight
