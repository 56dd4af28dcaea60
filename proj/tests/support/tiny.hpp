// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "prefmt/policy.hpp"
#include "prefmt/rng.hpp"

namespace prefmt::testing {

// Two source words, `tgt_vocab` target words, small network. Small enough to
// enumerate every output sequence up to a short length.
inline Policy tiny_policy(int tgt_vocab = 2, uint64_t seed = 7, double scale = 0.5, int embed = 3, int hidden = 5) {
  PolicyConfig c;
  c.src_vocab = 2;
  c.tgt_vocab = tgt_vocab;
  c.embed_dim = embed;
  c.hidden = hidden;
  c.src_radius = 1;
  c.prev_window = 2;
  std::vector<std::string> tw;
  for (int i = 0; i < tgt_vocab; ++i) tw.push_back("t" + std::to_string(i));
  Policy p(c, {"s0", "s1"}, tw);
  if (scale > 0) p.init_random(seed, scale);
  return p;
}

// Every token sequence ending in EOS with length <= max_len.
inline std::vector<std::vector<int>> all_sequences(const Policy& p, int max_len) {
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  std::function<void()> rec = [&] {
    auto done = prefix;
    done.push_back(p.eos());
    out.push_back(done);
    if (static_cast<int>(prefix.size()) + 1 >= max_len) return;
    for (int v = 0; v < p.config().tgt_vocab; ++v) {
      prefix.push_back(v);
      rec();
      prefix.pop_back();
    }
  };
  rec();
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("prefmt_" + tag + "_" + std::to_string(Rng::mix(reinterpret_cast<uintptr_t>(this), ++counter) % 1000000000));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace prefmt::testing
