// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <cstddef>
#include <functional>

namespace prefmt {

// Global cap on worker threads (the CLI `--threads` flag). 0 restores the
// default of std::thread::hardware_concurrency().
void set_max_threads(int threads);
int max_threads();

// Splits [0, n) into `chunks` contiguous ranges and runs `fn(chunk, begin,
// end)` for each, on up to max_threads() workers. Chunk boundaries depend only
// on `n` and `chunks`, so callers that reduce per-chunk results in chunk order
// get results independent of the thread count. The first exception thrown by
// any chunk is rethrown after all workers join.
void parallel_chunks(size_t n, size_t chunks,
                     const std::function<void(size_t chunk, size_t begin, size_t end)>& fn);

// Convenience: one chunk per worker thread.
void parallel_for(size_t n, const std::function<void(size_t begin, size_t end)>& fn);

}  // namespace prefmt
