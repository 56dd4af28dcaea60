// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/rltrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "prefmt/error.hpp"
#include "prefmt/parallel.hpp"
#include "prefmt/rng.hpp"

namespace prefmt {

namespace {

// Fixed chunk count for gradient reductions; keeps sums independent of the
// number of worker threads.
constexpr size_t kReductionChunks = 8;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Mean per-token NLL of `pairs` and, if `grad` is non-empty, its gradient.
double nll_and_gradient(const Policy& policy, std::span<const EncodedPair> pairs, std::span<double> grad) {
  require(!pairs.empty(), ErrorCode::kInvalidInput, "mle: empty batch");
  const size_t chunks = std::min(kReductionChunks, pairs.size());
  const size_t p = policy.num_params();
  std::vector<std::vector<double>> partial(grad.empty() ? 0 : chunks, std::vector<double>(p, 0.0));
  std::vector<double> losses(chunks, 0.0);
  const double inv_n = 1.0 / static_cast<double>(pairs.size());
  parallel_chunks(pairs.size(), chunks, [&](size_t c, size_t b, size_t e) {
    std::vector<double> weights;
    for (size_t k = b; k < e; ++k) {
      const auto& pr = pairs[k];
      const double inv_len = 1.0 / static_cast<double>(pr.tgt.size());
      losses[c] -= logprob(policy, pr.src, pr.tgt) * inv_len * inv_n;
      if (!grad.empty()) {
        // d(-logp / L / N) = sum_t (-1 / (L N)) d log p_t
        weights.assign(pr.tgt.size(), -inv_len * inv_n);
        accumulate_logprob_gradient(policy, pr.src, pr.tgt, weights, 0, partial[c]);
      }
    }
  });
  if (!grad.empty()) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& part : partial) {
      for (size_t i = 0; i < p; ++i) grad[i] += part[i];
    }
  }
  return std::accumulate(losses.begin(), losses.end(), 0.0);
}

}  // namespace

std::vector<EncodedPair> encode_pairs(const Policy& policy, std::span<const SentencePair> pairs) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    try {
      out.push_back({policy.encode_source(pairs[i].src), policy.encode_target(pairs[i].ref)});
    } catch (const Error& e) {
      throw Error(e.code(), "pair " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

double sequence_nll(const Policy& policy, const EncodedPair& pair) {
  return -logprob(policy, pair.src, pair.tgt) / static_cast<double>(pair.tgt.size());
}

double mean_nll(const Policy& policy, std::span<const EncodedPair> pairs) {
  return nll_and_gradient(policy, pairs, {});
}

std::vector<double> nll_gradient(const Policy& policy, std::span<const EncodedPair> pairs) {
  std::vector<double> grad(policy.num_params(), 0.0);
  nll_and_gradient(policy, pairs, grad);
  return grad;
}

void mle_sgd_step(Policy& policy, std::span<const EncodedPair> pairs, double lr) {
  const auto grad = nll_gradient(policy, pairs);
  auto theta = policy.params();
  for (size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

MleResult mle_train(Policy& policy, const Corpus& train, const Corpus& dev, const MleOptions& options,
                    const std::function<void(const MleEpoch&)>& on_epoch) {
  require(!train.empty(), ErrorCode::kInvalidInput, "mle: empty training corpus");
  require(options.epochs >= 1 && options.batch_size >= 1 && options.learning_rate > 0.0 &&
              options.early_stop_patience >= 1 && options.lr_decay > 0.0 && options.lr_decay <= 1.0,
          ErrorCode::kInvalidConfiguration, "mle: epochs, batch size, patience and learning rate must be positive");

  const auto train_set = encode_pairs(policy, train.pairs);
  const auto dev_set = dev.empty() ? train_set : encode_pairs(policy, dev.pairs);

  const size_t p = policy.num_params();
  std::vector<double> m(p, 0.0), v(p, 0.0), grad(p, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double lr = options.learning_rate;
  size_t updates = 0;

  MleResult result;
  result.best_dev_nll = mean_nll(policy, dev_set);
  std::vector<double> best(policy.params().begin(), policy.params().end());
  int bad_epochs = 0;

  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<EncodedPair> batch;

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    Rng rng(Rng::mix(options.seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += options.batch_size) {
      if (options.max_updates > 0 && updates >= options.max_updates) break;
      const size_t end = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
      const double loss = nll_and_gradient(policy, batch, grad);
      if (!std::isfinite(loss) || !all_finite(grad)) {
        fail(ErrorCode::kDivergence, "mle: loss diverged (" + std::to_string(loss) + ") at epoch " +
                                         std::to_string(epoch) + ", update " + std::to_string(updates) +
                                         ", learning rate " + std::to_string(lr));
      }
      epoch_loss += loss * static_cast<double>(batch.size());
      seen += batch.size();
      ++updates;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(updates));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(updates));
      auto theta = policy.params();
      for (size_t i = 0; i < p; ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    }
    if (seen == 0) break;

    MleEpoch rec;
    rec.epoch = epoch;
    rec.train_nll = epoch_loss / static_cast<double>(seen);
    rec.dev_nll = mean_nll(policy, dev_set);
    rec.learning_rate = lr;
    if (!std::isfinite(rec.dev_nll)) {
      fail(ErrorCode::kDivergence, "mle: dev loss diverged at epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.dev_nll < result.best_dev_nll) {
      result.best_dev_nll = rec.dev_nll;
      best.assign(policy.params().begin(), policy.params().end());
      bad_epochs = 0;
    } else {
      lr *= options.lr_decay;
      if (++bad_epochs >= options.early_stop_patience) break;
    }
  }
  std::copy(best.begin(), best.end(), policy.params().begin());
  result.updates = updates;
  return result;
}

std::string baseline_name(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::kBatchMean: return "batch-mean";
    case BaselineMode::kPerPosition: return "per-position";
    case BaselineMode::kNone: return "none";
  }
  return "unknown";
}

BaselineMode parse_baseline(const std::string& name) {
  if (name == "batch-mean") return BaselineMode::kBatchMean;
  if (name == "per-position") return BaselineMode::kPerPosition;
  if (name == "none") return BaselineMode::kNone;
  fail(ErrorCode::kInvalidConfiguration, "unknown baseline mode '" + name + "'");
}

void PpoConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::kInvalidConfiguration, "ppo: learning_rate must be > 0");
  require(gamma > 0.0 && gamma <= 1.0, ErrorCode::kInvalidConfiguration, "ppo: gamma must be in (0, 1]");
  require(trajectory_limit >= 1, ErrorCode::kInvalidConfiguration, "ppo: trajectory_limit must be >= 1");
  require(rollout_beam_size >= 1, ErrorCode::kInvalidConfiguration, "ppo: rollout_beam_size must be >= 1");
  require(batch_size >= 1, ErrorCode::kInvalidConfiguration, "ppo: batch_size must be >= 1");
  require(ppo_epochs >= 1, ErrorCode::kInvalidConfiguration, "ppo: ppo_epochs must be >= 1");
  require(clip_epsilon > 0.0 && clip_epsilon < 1.0, ErrorCode::kInvalidConfiguration,
          "ppo: clip_epsilon must be in (0, 1)");
  require(kl_coef >= 0.0, ErrorCode::kInvalidConfiguration, "ppo: kl_coef must be >= 0");
}

nlohmann::json to_json(const PpoConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate}, {"gamma", cfg.gamma},
          {"trajectory_limit", cfg.trajectory_limit}, {"rollout_beam_size", cfg.rollout_beam_size},
          {"batch_size", cfg.batch_size}, {"ppo_epochs", cfg.ppo_epochs},
          {"clip_epsilon", cfg.clip_epsilon}, {"kl_coef", cfg.kl_coef},
          {"baseline", baseline_name(cfg.baseline)}};
}

std::vector<Trajectory> rollout(const Policy& policy, std::span<const std::string> srcs,
                                std::span<const std::string> refs, MetricBackend& reward, int beam_size) {
  require(beam_size >= 1, ErrorCode::kInvalidInput, "rollout: beam_size must be >= 1");
  require(!reward.uses_reference() || refs.size() == srcs.size(), ErrorCode::kInvalidInput,
          "rollout: reward '" + reward.name() + "' needs one reference per source");
  std::vector<Trajectory> trajs(srcs.size());
  parallel_chunks(srcs.size(), std::min<size_t>(srcs.size(), kReductionChunks * 4),
                  [&](size_t, size_t b, size_t e) {
                    for (size_t k = b; k < e; ++k) {
                      Trajectory& t = trajs[k];
                      t.src = srcs[k];
                      try {
                        t.src_ids = policy.encode_source(srcs[k]);
                      } catch (const Error& err) {
                        throw Error(err.code(), "rollout: src index " + std::to_string(k) + ": " + err.what());
                      }
                      t.max_len = Policy::default_max_len(t.src_ids.size());
                      t.hyp = beam_search(policy, t.src_ids, beam_size, t.max_len).front();
                      t.old_logps = token_logprobs(policy, t.src_ids, t.hyp.tokens, t.max_len);
                    }
                  });
  if (trajs.empty()) return trajs;

  std::vector<ScoreRequestItem> items;
  items.reserve(trajs.size());
  for (size_t k = 0; k < trajs.size(); ++k) {
    std::optional<std::string> ref;
    if (reward.uses_reference()) ref = refs[k];
    items.push_back({trajs[k].src, policy.decode_target(trajs[k].hyp.tokens), std::move(ref)});
  }
  std::vector<MetricScore> scores;
  try {
    scores = reward.score_batch(items);
  } catch (const Error& e) {
    for (size_t k = 0; k < items.size(); ++k) {
      try {
        reward.score_one(items[k]);
      } catch (const Error& inner) {
        throw Error(inner.code(), "rollout: reward failed for src index " + std::to_string(k) + ": " + inner.what());
      }
    }
    throw Error(e.code(), std::string("rollout: reward batch failed: ") + e.what());
  }
  for (size_t k = 0; k < trajs.size(); ++k) trajs[k].reward = scores[k].value;
  return trajs;
}

std::vector<double> compute_returns(size_t length, double gamma, double reward) {
  std::vector<double> g(length);
  double acc = reward;
  for (size_t t = length; t-- > 0;) {
    g[t] = acc;
    acc *= gamma;
  }
  return g;
}

std::vector<TokenStep> make_token_steps(std::span<const Trajectory> trajs, const PpoConfig& cfg) {
  std::vector<TokenStep> steps;
  for (size_t k = 0; k < trajs.size(); ++k) {
    const auto& tr = trajs[k];
    require(tr.old_logps.size() == tr.hyp.tokens.size(), ErrorCode::kInvalidInput,
            "ppo: trajectory " + std::to_string(k) + " has mismatched old log-probs");
    const auto g = compute_returns(tr.hyp.tokens.size(), cfg.gamma, tr.reward);
    for (size_t t = 0; t < g.size(); ++t) steps.push_back({k, t, tr.old_logps[t], g[t], 0.0});
  }
  if (steps.empty()) return steps;

  switch (cfg.baseline) {
    case BaselineMode::kNone:
      for (auto& s : steps) s.advantage = s.ret;
      break;
    case BaselineMode::kBatchMean: {
      double sum = 0.0;
      for (const auto& s : steps) sum += s.ret;
      const double b = sum / static_cast<double>(steps.size());
      for (auto& s : steps) s.advantage = s.ret - b;
      break;
    }
    case BaselineMode::kPerPosition: {
      std::vector<double> sum, count;
      for (const auto& s : steps) {
        if (s.position >= sum.size()) {
          sum.resize(s.position + 1, 0.0);
          count.resize(s.position + 1, 0.0);
        }
        sum[s.position] += s.ret;
        count[s.position] += 1.0;
      }
      for (auto& s : steps) s.advantage = s.ret - sum[s.position] / count[s.position];
      break;
    }
  }
  return steps;
}

double clipped_objective(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoGradient ppo_gradient(const Policy& policy, const Policy& rollout_policy, std::span<const Trajectory> trajs,
                         std::span<const TokenStep> minibatch, const PpoConfig& cfg) {
  require(!minibatch.empty(), ErrorCode::kInvalidInput, "ppo: empty minibatch");
  PpoGradient out;
  out.grad.assign(policy.num_params(), 0.0);
  const double inv_m = 1.0 / static_cast<double>(minibatch.size());
  const double eps = cfg.clip_epsilon;
  std::vector<double> qlog(policy.output_size());
  size_t clipped = 0;

  for (const auto& s : minibatch) {
    const auto& tr = trajs[s.trajectory];
    const int token = tr.hyp.tokens[s.position];
    const auto prefix = std::span<const int>(tr.hyp.tokens).first(s.position);
    if (tr.max_len > 0 && s.position + 1 == static_cast<size_t>(tr.max_len)) {
      // Forced EOS: probability 1 under every parameter setting.
      out.objective += s.advantage * inv_m;
      out.mean_ratio += inv_m;
      continue;
    }
    if (cfg.kl_coef > 0.0) rollout_policy.next_logprobs(tr.src_ids, prefix, false, qlog);
    backprop_step(
        policy, tr.src_ids, prefix,
        [&](size_t, std::span<const double> p, std::span<double> dz) {
          const double ratio = std::exp(std::log(p[token]) - s.old_logp);
          out.objective += clipped_objective(ratio, s.advantage, eps) * inv_m;
          out.mean_ratio += ratio * inv_m;
          if (std::abs(ratio - 1.0) > eps) ++clipped;
          // The clipped branch is flat in theta once it is the minimum.
          const bool active = s.advantage >= 0.0 ? ratio <= 1.0 + eps : ratio >= 1.0 - eps;
          if (active && s.advantage != 0.0) {
            const double coef = s.advantage * ratio * inv_m;
            for (size_t o = 0; o < p.size(); ++o) dz[o] -= coef * p[o];
            dz[token] += coef;
          }
          if (cfg.kl_coef > 0.0) {
            double kl = 0.0;
            for (size_t o = 0; o < p.size(); ++o) {
              if (p[o] > 0.0) kl += p[o] * (std::log(p[o]) - qlog[o]);
            }
            out.mean_kl += kl * inv_m;
            out.objective -= cfg.kl_coef * kl * inv_m;
            for (size_t o = 0; o < p.size(); ++o) {
              if (p[o] > 0.0) dz[o] -= cfg.kl_coef * inv_m * p[o] * (std::log(p[o]) - qlog[o] - kl);
            }
          }
        },
        out.grad);
  }
  out.clip_fraction = static_cast<double>(clipped) * inv_m;
  return out;
}

PpoStats ppo_update(Policy& policy, std::span<const Trajectory> trajs, const PpoConfig& cfg, uint64_t seed) {
  cfg.validate();
  require(!trajs.empty(), ErrorCode::kInvalidInput, "ppo: no trajectories");
  const Policy rollout_policy = policy;
  std::vector<TokenStep> steps = make_token_steps(trajs, cfg);

  PpoStats stats;
  for (const auto& t : trajs) stats.mean_reward += t.reward;
  stats.mean_reward /= static_cast<double>(trajs.size());

  double weight = 0.0;
  for (int epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(steps);
    for (size_t start = 0; start < steps.size(); start += cfg.batch_size) {
      const size_t end = std::min(steps.size(), start + cfg.batch_size);
      const auto mb = std::span<const TokenStep>(steps).subspan(start, end - start);
      const PpoGradient g = ppo_gradient(policy, rollout_policy, trajs, mb, cfg);
      if (!std::isfinite(g.objective) || !all_finite(g.grad)) {
        fail(ErrorCode::kDivergence, "ppo: objective diverged (" + std::to_string(g.objective) + ") at epoch " +
                                         std::to_string(epoch) + ", minibatch " + std::to_string(stats.minibatches) +
                                         ", mean ratio " + std::to_string(g.mean_ratio));
      }
      auto theta = policy.params();
      for (size_t i = 0; i < theta.size(); ++i) theta[i] += cfg.learning_rate * g.grad[i];
      const double w = static_cast<double>(mb.size());
      stats.mean_ratio += g.mean_ratio * w;
      stats.clip_fraction += g.clip_fraction * w;
      stats.mean_kl += g.mean_kl * w;
      stats.mean_objective += g.objective * w;
      weight += w;
      ++stats.minibatches;
    }
  }
  stats.mean_ratio /= weight;
  stats.clip_fraction /= weight;
  stats.mean_kl /= weight;
  stats.mean_objective /= weight;
  return stats;
}

namespace {

struct DevEval {
  double reward = 0.0;
  double chrf = 0.0;
};

DevEval evaluate_dev(const Policy& policy, std::span<const std::string> srcs, std::span<const std::string> refs,
                     MetricBackend& reward, int beam_size) {
  DevEval out;
  if (srcs.empty()) return out;
  const auto trajs = rollout(policy, srcs, refs, reward, beam_size);
  for (size_t k = 0; k < trajs.size(); ++k) {
    out.reward += trajs[k].reward;
    out.chrf += chrf(policy.decode_target(trajs[k].hyp.tokens), refs[k]).value;
  }
  out.reward /= static_cast<double>(trajs.size());
  out.chrf /= static_cast<double>(trajs.size());
  return out;
}

}  // namespace

RlResult rl_train(Policy& policy, const Corpus& train, const Corpus& dev, MetricBackend& reward,
                  const PpoConfig& cfg, const RlOptions& options,
                  const std::function<void(const RlIteration&)>& on_iteration) {
  cfg.validate();
  require(!train.empty(), ErrorCode::kInvalidInput, "rl: empty training corpus");
  require(!dev.empty(), ErrorCode::kInvalidInput, "rl: empty dev corpus");
  require(options.rollouts_per_iter >= 1, ErrorCode::kInvalidConfiguration, "rl: rollouts_per_iter must be >= 1");

  std::vector<std::string> dev_srcs, dev_refs;
  for (size_t i = 0; i < dev.size() && i < std::max<size_t>(1, options.dev_limit); ++i) {
    dev_srcs.push_back(dev.pairs[i].src);
    dev_refs.push_back(dev.pairs[i].ref);
  }

  RlResult result;
  const DevEval start = evaluate_dev(policy, dev_srcs, dev_refs, reward, cfg.rollout_beam_size);
  result.start_dev_reward = start.reward;
  result.best_dev_reward = start.reward;
  std::vector<double> best(policy.params().begin(), policy.params().end());

  Rng rng(Rng::mix(options.seed, 0x726c));
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(order);
  size_t cursor = 0;

  std::vector<std::string> srcs, refs;
  size_t iteration = 0;
  while (result.trajectories < cfg.trajectory_limit) {
    ++iteration;
    const size_t n = std::min(options.rollouts_per_iter, cfg.trajectory_limit - result.trajectories);
    srcs.clear();
    refs.clear();
    for (size_t k = 0; k < n; ++k) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const auto& pr = train.pairs[order[cursor++]];
      srcs.push_back(pr.src);
      refs.push_back(pr.ref);
    }
    const auto trajs = rollout(policy, srcs, refs, reward, cfg.rollout_beam_size);
    const PpoStats stats = ppo_update(policy, trajs, cfg, Rng::mix(options.seed, iteration));
    result.trajectories += trajs.size();

    const DevEval d = evaluate_dev(policy, dev_srcs, dev_refs, reward, cfg.rollout_beam_size);
    RlIteration rec;
    rec.iteration = iteration;
    rec.trajectories = result.trajectories;
    rec.mean_reward = stats.mean_reward;
    rec.clip_fraction = stats.clip_fraction;
    rec.mean_ratio = stats.mean_ratio;
    rec.dev_reward = d.reward;
    rec.dev_chrf = d.chrf;
    result.history.push_back(rec);
    if (on_iteration) on_iteration(rec);

    if (d.reward > result.best_dev_reward) {
      result.best_dev_reward = d.reward;
      result.best_iteration = iteration;
      best.assign(policy.params().begin(), policy.params().end());
    }
  }
  std::copy(best.begin(), best.end(), policy.params().begin());
  return result;
}

std::string rl_stats_csv_header() {
  return "iteration,trajectories,mean_reward,clip_fraction,mean_ratio,dev_reward,dev_chrf";
}

std::string rl_stats_csv_row(const RlIteration& it) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f", it.iteration, it.trajectories, it.mean_reward,
                it.clip_fraction, it.mean_ratio, it.dev_reward, it.dev_chrf);
  return buf;
}

}  // namespace prefmt
