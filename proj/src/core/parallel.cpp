// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "prefmt/error.hpp"

namespace prefmt {

namespace {
std::atomic<int> g_max_threads{0};
}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kInvalidConfiguration: return "invalid-configuration";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kMalformedResponse: return "malformed-response";
    case ErrorCode::kHttpStatus: return "http-status";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kMissingArtifact: return "missing-artifact";
    case ErrorCode::kInvalidArtifact: return "invalid-artifact";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

void set_max_threads(int threads) { g_max_threads.store(std::max(0, threads)); }

int max_threads() {
  const int configured = g_max_threads.load();
  if (configured > 0) return configured;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_chunks(size_t n, size_t chunks,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
  if (n == 0) return;
  chunks = std::clamp<size_t>(chunks, 1, n);
  const size_t base = n / chunks;
  const size_t extra = n % chunks;
  auto bounds = [&](size_t c) {
    const size_t begin = c * base + std::min(c, extra);
    return std::pair<size_t, size_t>(begin, begin + base + (c < extra ? 1 : 0));
  };

  const size_t workers = std::min<size_t>(chunks, static_cast<size_t>(max_threads()));
  if (workers <= 1) {
    for (size_t c = 0; c < chunks; ++c) {
      auto [b, e] = bounds(c);
      fn(c, b, e);
    }
    return;
  }

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        auto [b, e] = bounds(c);
        fn(c, b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (size_t i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

void parallel_for(size_t n, const std::function<void(size_t, size_t)>& fn) {
  parallel_chunks(n, static_cast<size_t>(max_threads()),
                  [&](size_t, size_t b, size_t e) { fn(b, e); });
}

}  // namespace prefmt
