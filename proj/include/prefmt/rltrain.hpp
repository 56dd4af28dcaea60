// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefmt/policy.hpp"
#include "prefmt/scoring.hpp"
#include "prefmt/synthdata.hpp"

namespace prefmt {

// ---------------------------------------------------------------------------
// MLE
// ---------------------------------------------------------------------------

struct EncodedPair {
  std::vector<int> src;
  std::vector<int> tgt;  // ends with EOS
};

std::vector<EncodedPair> encode_pairs(const Policy& policy, std::span<const SentencePair> pairs);

// -log p(y | x) / |y|, the per-token negative log-likelihood of one pair.
double sequence_nll(const Policy& policy, const EncodedPair& pair);
double mean_nll(const Policy& policy, std::span<const EncodedPair> pairs);

// Gradient of mean_nll over `pairs`. The reduction is chunked with a fixed
// chunk count, so the result does not depend on the thread count.
std::vector<double> nll_gradient(const Policy& policy, std::span<const EncodedPair> pairs);

// One plain gradient-descent step on mean_nll.
void mle_sgd_step(Policy& policy, std::span<const EncodedPair> pairs, double lr);

struct MleOptions {
  int epochs = 20;
  double learning_rate = 1e-2;  // Adam
  int batch_size = 32;
  // Halve the learning rate after a dev epoch without improvement; stop after
  // this many such epochs in a row.
  int early_stop_patience = 3;
  double lr_decay = 0.5;
  // 0 = no cap. Otherwise training stops after this many updates.
  size_t max_updates = 0;
  uint64_t seed = 1;
};

struct MleEpoch {
  int epoch = 0;
  double train_nll = 0.0;
  double dev_nll = 0.0;
  double learning_rate = 0.0;
};

struct MleResult {
  std::vector<MleEpoch> history;
  double best_dev_nll = 0.0;
  size_t updates = 0;
};

// Minimizes the mean per-token NLL of `train` with Adam. `policy` ends at the
// epoch with the lowest dev NLL (dev = train when `dev` is empty).
MleResult mle_train(Policy& policy, const Corpus& train, const Corpus& dev, const MleOptions& options,
                    const std::function<void(const MleEpoch&)>& on_epoch = nullptr);

// ---------------------------------------------------------------------------
// RL
// ---------------------------------------------------------------------------

enum class BaselineMode {
  kBatchMean,    // mean return over every token step of the update batch
  kPerPosition,  // mean return over the steps at the same output position
  kNone,
};

std::string baseline_name(BaselineMode mode);
BaselineMode parse_baseline(const std::string& name);

struct PpoConfig {
  double learning_rate = 2e-5;
  double gamma = 0.99;
  size_t trajectory_limit = 10000;
  int rollout_beam_size = 5;
  size_t batch_size = 32;  // token steps per minibatch
  int ppo_epochs = 4;
  double clip_epsilon = 0.2;
  double kl_coef = 0.0;
  BaselineMode baseline = BaselineMode::kBatchMean;

  void validate() const;
};

nlohmann::json to_json(const PpoConfig& cfg);

struct Trajectory {
  std::string src;
  std::vector<int> src_ids;
  Hypothesis hyp;
  int max_len = 0;
  double reward = 0.0;
  // log p(y_t | x, y_<t) under the rollout parameters, one per token.
  std::vector<double> old_logps;
};

// Decodes every source with beam search, keeps the top hypothesis and scores
// it with `reward` (refs are required when the backend uses references).
std::vector<Trajectory> rollout(const Policy& policy, std::span<const std::string> srcs,
                                std::span<const std::string> refs, MetricBackend& reward, int beam_size);

// G_t = gamma^(T-1-t) * R for t = 0..T-1.
std::vector<double> compute_returns(size_t length, double gamma, double reward);

struct TokenStep {
  size_t trajectory = 0;
  size_t position = 0;
  double old_logp = 0.0;
  double ret = 0.0;
  double advantage = 0.0;
};

// Flattens trajectories into token steps with returns and baseline-centered
// advantages.
std::vector<TokenStep> make_token_steps(std::span<const Trajectory> trajs, const PpoConfig& cfg);

// min(r*A, clip(r, 1-eps, 1+eps)*A)
double clipped_objective(double ratio, double advantage, double epsilon);

struct PpoGradient {
  std::vector<double> grad;  // ascent direction of `objective`
  double objective = 0.0;    // mean clipped surrogate minus kl_coef * mean KL
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
};

// Gradient of the minibatch objective at `policy`. KL(new || rollout) is the
// exact divergence between the two next-token distributions at each step.
PpoGradient ppo_gradient(const Policy& policy, const Policy& rollout_policy, std::span<const Trajectory> trajs,
                         std::span<const TokenStep> minibatch, const PpoConfig& cfg);

struct PpoStats {
  double mean_reward = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;
  double mean_objective = 0.0;
  size_t minibatches = 0;
};

// cfg.ppo_epochs passes of SGD ascent over shuffled minibatches of token
// steps.
PpoStats ppo_update(Policy& policy, std::span<const Trajectory> trajs, const PpoConfig& cfg, uint64_t seed);

struct RlOptions {
  size_t rollouts_per_iter = 128;
  uint64_t seed = 1;
  // Dev evaluation after every iteration; at most this many dev pairs.
  size_t dev_limit = 200;
};

struct RlIteration {
  size_t iteration = 0;
  size_t trajectories = 0;  // consumed so far
  double mean_reward = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
  double dev_reward = 0.0;
  double dev_chrf = 0.0;
};

struct RlResult {
  std::vector<RlIteration> history;
  double start_dev_reward = 0.0;
  double best_dev_reward = 0.0;
  size_t best_iteration = 0;  // 0 = the starting parameters
  size_t trajectories = 0;
};

// Alternates rollout and ppo_update until cfg.trajectory_limit trajectories
// are consumed. `policy` ends at the checkpoint with the best dev mean reward,
// the starting parameters included.
RlResult rl_train(Policy& policy, const Corpus& train, const Corpus& dev, MetricBackend& reward,
                  const PpoConfig& cfg, const RlOptions& options,
                  const std::function<void(const RlIteration&)>& on_iteration = nullptr);

std::string rl_stats_csv_header();
std::string rl_stats_csv_row(const RlIteration& it);

}  // namespace prefmt
