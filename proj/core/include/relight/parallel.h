// Copyright 2026 The Relight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace relight {

// Worker count: RELIGHT_WORKERS env var if set, else hardware concurrency.
int worker_count();

// Parallel loop over [begin, end). Work is split into fixed chunks whose
// boundaries do not depend on the worker count, so any per-chunk output can
// be merged in index order for bit-reproducible results.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& body,
                  int64_t chunk = 0);

// Convenience per-index form.
void parallel_for_each(int64_t begin, int64_t end, const std::function<void(int64_t)>& body);

}  // namespace relight
