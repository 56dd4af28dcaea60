// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prefmt {

class Task;

// Structure of the transduction policy p(y_t | x, y_<t).
//
// The state at output step t is the embedding of the source words at
// positions t-src_radius..t+src_radius (PAD outside the sentence) and of the
// prev_window previous target words (BOS before the start), concatenated.
// One tanh hidden layer feeds a softmax over the target words plus EOS.
struct PolicyConfig {
  int src_vocab = 0;
  int tgt_vocab = 0;
  int src_radius = 1;
  int prev_window = 2;
  int embed_dim = 16;
  int hidden = 64;

  void validate() const;
  int slots() const { return 2 * src_radius + 1 + prev_window; }
  int input_dim() const { return slots() * embed_dim; }
  int output_size() const { return tgt_vocab + 1; }
  size_t num_params() const;
};

struct Hypothesis {
  std::vector<int> tokens;  // ends with EOS
  double logp = 0.0;
};

class Policy {
 public:
  Policy(PolicyConfig config, std::vector<std::string> source_words, std::vector<std::string> target_words);

  // A policy sized for `task`'s vocabularies. Parameters start at zero,
  // which is the uniform distribution over target words and EOS.
  static Policy for_task(const Task& task, int embed_dim = 16, int hidden = 64, int src_radius = 1,
                         int prev_window = 2);

  const PolicyConfig& config() const { return config_; }
  size_t num_params() const { return theta_.size(); }
  std::span<double> params() { return theta_; }
  std::span<const double> params() const { return theta_; }

  int eos() const { return config_.tgt_vocab; }
  int output_size() const { return config_.output_size(); }
  int source_pad() const { return config_.src_vocab; }
  int target_bos() const { return config_.tgt_vocab; }

  // Uniform in [-scale, scale) for every weight.
  void init_random(uint64_t seed, double scale = 0.1);

  // Restricts the output distribution to tokens with allowed[v] == true.
  // Empty restores the full vocabulary.
  void set_output_mask(std::vector<bool> allowed);
  const std::vector<bool>& output_mask() const { return mask_; }

  const std::vector<std::string>& source_words() const { return source_words_; }
  const std::vector<std::string>& target_words() const { return target_words_; }

  std::vector<int> encode_source(std::string_view text) const;
  // Target ids followed by EOS.
  std::vector<int> encode_target(std::string_view text) const;
  // Words up to (excluding) the first EOS.
  std::string decode_target(std::span<const int> tokens) const;

  static int default_max_len(size_t src_len) { return static_cast<int>(src_len) + 8; }

  // Log-probabilities of every output token after `prefix`. With force_eos
  // the distribution is a point mass on EOS.
  void next_logprobs(std::span<const int> src, std::span<const int> prefix, bool force_eos,
                     std::span<double> out) const;

  bool operator==(const Policy& other) const;

 private:
  friend class PolicyForward;

  PolicyConfig config_;
  std::vector<std::string> source_words_;
  std::vector<std::string> target_words_;
  std::unordered_map<std::string, int> source_index_;
  std::unordered_map<std::string, int> target_index_;
  std::vector<double> theta_;
  std::vector<bool> mask_;
};

// Sum of token log-probs of `y` (which must end in EOS). With max_len > 0 the
// step at index max_len - 1 is forced to EOS, which makes the sequences of
// length <= max_len an exactly normalized set.
double logprob(const Policy& policy, std::span<const int> src, std::span<const int> y, int max_len = 0);

// Per-step log-probs log p(y_t | x, y_<t).
std::vector<double> token_logprobs(const Policy& policy, std::span<const int> src, std::span<const int> y,
                                   int max_len = 0);

// d logprob / d theta.
std::vector<double> grad_logprob(const Policy& policy, std::span<const int> src, std::span<const int> y,
                                 int max_len = 0);

// Gradient of the single conditional log p(token | x, prefix).
std::vector<double> grad_step_logprob(const Policy& policy, std::span<const int> src,
                                      std::span<const int> prefix, int token);

// Backpropagates an arbitrary per-step logit gradient through the network:
// `fn(step, probs, dlogits)` receives the step's output distribution and
// fills dlogits; the result is accumulated into `grad`.
using LogitGradFn = std::function<void(size_t step, std::span<const double> probs, std::span<double> dlogits)>;
void backprop_sequence(const Policy& policy, std::span<const int> src, std::span<const int> y, int max_len,
                       const LogitGradFn& fn, std::span<double> grad);

// Single-step variant: `fn` sees the distribution after `prefix` (step index
// prefix.size()) and its logit gradient is accumulated into `grad`.
void backprop_step(const Policy& policy, std::span<const int> src, std::span<const int> prefix,
                   const LogitGradFn& fn, std::span<double> grad);

// grad += sum_t weights[t] * d log p(y_t | x, y_<t) / d theta.
void accumulate_logprob_gradient(const Policy& policy, std::span<const int> src, std::span<const int> y,
                                 std::span<const double> weights, int max_len, std::span<double> grad);

// Length-capped beam search over raw log-prob sums (no length
// normalization). Results are sorted by logp descending, ties broken by
// lexicographic token order. beam_size = 1 is greedy decoding.
std::vector<Hypothesis> beam_search(const Policy& policy, std::span<const int> src, int beam_size,
                                    int max_len = 0);

struct SamplingOptions {
  int count = 1;
  int top_k = 0;  // 0 keeps the full vocabulary
  double top_p = 1.0;
  double temperature = 1.0;
  uint64_t seed = 0;
  int max_len = 0;
};

// Ancestral sampling with per-step top-k then nucleus truncation. Each
// hypothesis records its log-prob under the truncated, renormalized
// distributions it was drawn from.
std::vector<Hypothesis> sample(const Policy& policy, std::span<const int> src, const SamplingOptions& options);

// Truncated next-token distribution used by `sample`: probabilities over the
// output vocabulary, zero outside the kept set.
std::vector<double> truncated_distribution(std::span<const double> logprobs, int top_k, double top_p);

// Checkpoint: "PMTPOLCY" magic, u32 format version, u32 structural fields,
// both vocabularies as length-prefixed strings, u64 parameter count, then the
// parameters as little-endian IEEE-754 doubles.
void save_policy(std::ostream& out, const Policy& policy);
Policy load_policy(std::istream& in);
void save_policy_file(const Policy& policy, const std::string& path);
Policy load_policy_file(const std::string& path);

}  // namespace prefmt
