// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "prefmt/error.hpp"
#include "prefmt/rng.hpp"
#include "prefmt/synthdata.hpp"
#include "prefmt/textmetrics.hpp"

namespace prefmt {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

void PolicyConfig::validate() const {
  require(src_vocab >= 1 && tgt_vocab >= 1, ErrorCode::kInvalidConfiguration, "policy: empty vocabulary");
  require(src_radius >= 0 && prev_window >= 0, ErrorCode::kInvalidConfiguration,
          "policy: context windows must be non-negative");
  require(embed_dim >= 1 && hidden >= 1, ErrorCode::kInvalidConfiguration,
          "policy: embed_dim and hidden must be >= 1");
}

size_t PolicyConfig::num_params() const {
  const size_t d = embed_dim;
  const size_t h = hidden;
  const size_t v = output_size();
  return (src_vocab + 1) * d + (tgt_vocab + 1) * d + h * input_dim() + h + v * h + v;
}

// Parameter views and the forward/backward arithmetic for one output step.
class PolicyForward {
 public:
  explicit PolicyForward(const Policy& p)
      : cfg_(p.config_), theta_(p.theta_.data()), mask_(p.mask_) {
    const size_t d = cfg_.embed_dim;
    const size_t h = cfg_.hidden;
    const size_t v = cfg_.output_size();
    off_esrc_ = 0;
    off_etgt_ = off_esrc_ + (cfg_.src_vocab + 1) * d;
    off_w1_ = off_etgt_ + (cfg_.tgt_vocab + 1) * d;
    off_b1_ = off_w1_ + h * cfg_.input_dim();
    off_w2_ = off_b1_ + h;
    off_b2_ = off_w2_ + v * h;
    x_.resize(cfg_.input_dim());
    hid_.resize(h);
    rows_.resize(cfg_.slots());
    dh_.resize(h);
    dx_.resize(cfg_.input_dim());
  }

  // Fills x_, hid_ and `logp` (size output_size) for step t.
  void step(std::span<const int> src, std::span<const int> prefix, bool force_eos, std::span<double> logp) {
    const int d = cfg_.embed_dim;
    const int h = cfg_.hidden;
    const int v = cfg_.output_size();
    const int t = static_cast<int>(prefix.size());
    const int n = static_cast<int>(src.size());

    int slot = 0;
    for (int k = -cfg_.src_radius; k <= cfg_.src_radius; ++k, ++slot) {
      const int pos = t + k;
      const int id = (pos >= 0 && pos < n) ? src[pos] : cfg_.src_vocab;
      rows_[slot] = off_esrc_ + static_cast<size_t>(id) * d;
    }
    for (int j = 1; j <= cfg_.prev_window; ++j, ++slot) {
      const int pos = t - j;
      const int id = pos >= 0 ? prefix[pos] : cfg_.tgt_vocab;
      rows_[slot] = off_etgt_ + static_cast<size_t>(id) * d;
    }
    for (int s = 0; s < cfg_.slots(); ++s) {
      std::memcpy(&x_[static_cast<size_t>(s) * d], theta_ + rows_[s], sizeof(double) * d);
    }

    const int in = cfg_.input_dim();
    for (int i = 0; i < h; ++i) {
      const double* w = theta_ + off_w1_ + static_cast<size_t>(i) * in;
      double a = theta_[off_b1_ + i];
      for (int k = 0; k < in; ++k) a += w[k] * x_[k];
      hid_[i] = std::tanh(a);
    }

    if (force_eos) {
      std::fill(logp.begin(), logp.end(), kNegInf);
      logp[cfg_.tgt_vocab] = 0.0;
      return;
    }

    double max_logit = kNegInf;
    for (int o = 0; o < v; ++o) {
      if (!mask_.empty() && !mask_[o]) {
        logp[o] = kNegInf;
        continue;
      }
      const double* w = theta_ + off_w2_ + static_cast<size_t>(o) * h;
      double z = theta_[off_b2_ + o];
      for (int i = 0; i < h; ++i) z += w[i] * hid_[i];
      logp[o] = z;
      max_logit = std::max(max_logit, z);
    }
    double sum = 0.0;
    for (int o = 0; o < v; ++o) {
      if (logp[o] != kNegInf) sum += std::exp(logp[o] - max_logit);
    }
    const double log_norm = max_logit + std::log(sum);
    for (int o = 0; o < v; ++o) {
      if (logp[o] != kNegInf) logp[o] -= log_norm;
    }
  }

  // Accumulates the gradient of the step whose activations are in x_/hid_,
  // given the gradient with respect to the logits.
  void backward(std::span<const double> dlogits, std::span<double> grad) {
    const int d = cfg_.embed_dim;
    const int h = cfg_.hidden;
    const int v = cfg_.output_size();
    const int in = cfg_.input_dim();

    std::fill(dh_.begin(), dh_.end(), 0.0);
    for (int o = 0; o < v; ++o) {
      const double dz = dlogits[o];
      if (dz == 0.0) continue;
      grad[off_b2_ + o] += dz;
      double* gw = grad.data() + off_w2_ + static_cast<size_t>(o) * h;
      const double* w = theta_ + off_w2_ + static_cast<size_t>(o) * h;
      for (int i = 0; i < h; ++i) {
        gw[i] += dz * hid_[i];
        dh_[i] += dz * w[i];
      }
    }
    std::fill(dx_.begin(), dx_.end(), 0.0);
    for (int i = 0; i < h; ++i) {
      const double da = dh_[i] * (1.0 - hid_[i] * hid_[i]);
      if (da == 0.0) continue;
      grad[off_b1_ + i] += da;
      double* gw = grad.data() + off_w1_ + static_cast<size_t>(i) * in;
      const double* w = theta_ + off_w1_ + static_cast<size_t>(i) * in;
      for (int k = 0; k < in; ++k) {
        gw[k] += da * x_[k];
        dx_[k] += da * w[k];
      }
    }
    for (int s = 0; s < cfg_.slots(); ++s) {
      double* g = grad.data() + rows_[s];
      for (int k = 0; k < d; ++k) g[k] += dx_[static_cast<size_t>(s) * d + k];
    }
  }

 private:
  const PolicyConfig& cfg_;
  const double* theta_;
  const std::vector<bool>& mask_;
  size_t off_esrc_ = 0, off_etgt_ = 0, off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0;
  std::vector<double> x_, hid_, dh_, dx_;
  std::vector<size_t> rows_;
};

Policy::Policy(PolicyConfig config, std::vector<std::string> source_words, std::vector<std::string> target_words)
    : config_(config), source_words_(std::move(source_words)), target_words_(std::move(target_words)) {
  config_.validate();
  require(source_words_.size() == static_cast<size_t>(config_.src_vocab) &&
              target_words_.size() == static_cast<size_t>(config_.tgt_vocab),
          ErrorCode::kInvalidConfiguration, "policy: vocabulary sizes disagree with the config");
  for (int i = 0; i < config_.src_vocab; ++i) source_index_.emplace(source_words_[i], i);
  for (int i = 0; i < config_.tgt_vocab; ++i) target_index_.emplace(target_words_[i], i);
  theta_.assign(config_.num_params(), 0.0);
}

Policy Policy::for_task(const Task& task, int embed_dim, int hidden, int src_radius, int prev_window) {
  PolicyConfig cfg;
  cfg.src_vocab = static_cast<int>(task.source_vocab().size());
  cfg.tgt_vocab = static_cast<int>(task.target_vocab().size());
  cfg.embed_dim = embed_dim;
  cfg.hidden = hidden;
  cfg.src_radius = src_radius;
  cfg.prev_window = prev_window;
  return Policy(cfg, task.source_vocab(), task.target_vocab());
}

void Policy::init_random(uint64_t seed, double scale) {
  Rng rng(Rng::mix(seed, 0x9011C7));
  for (double& w : theta_) w = rng.symmetric(scale);
}

void Policy::set_output_mask(std::vector<bool> allowed) {
  require(allowed.empty() || allowed.size() == static_cast<size_t>(output_size()),
          ErrorCode::kInvalidConfiguration, "policy: output mask has the wrong size");
  require(allowed.empty() || std::find(allowed.begin(), allowed.end(), true) != allowed.end(),
          ErrorCode::kInvalidConfiguration, "policy: output mask excludes every token");
  mask_ = std::move(allowed);
}

std::vector<int> Policy::encode_source(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : tokenize(text)) {
    auto it = source_index_.find(w);
    require(it != source_index_.end(), ErrorCode::kInvalidInput, "policy: unknown source word '" + w + "'");
    ids.push_back(it->second);
  }
  return ids;
}

std::vector<int> Policy::encode_target(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : tokenize(text)) {
    auto it = target_index_.find(w);
    require(it != target_index_.end(), ErrorCode::kInvalidInput, "policy: unknown target word '" + w + "'");
    ids.push_back(it->second);
  }
  ids.push_back(eos());
  return ids;
}

std::string Policy::decode_target(std::span<const int> tokens) const {
  std::string out;
  for (int id : tokens) {
    if (id == eos()) break;
    require(id >= 0 && id < config_.tgt_vocab, ErrorCode::kInvalidInput, "policy: token id out of range");
    if (!out.empty()) out.push_back(' ');
    out += target_words_[id];
  }
  return out;
}

void Policy::next_logprobs(std::span<const int> src, std::span<const int> prefix, bool force_eos,
                           std::span<double> out) const {
  require(out.size() == static_cast<size_t>(output_size()), ErrorCode::kInvalidInput,
          "policy: output buffer has the wrong size");
  PolicyForward fwd(*this);
  fwd.step(src, prefix, force_eos, out);
}

bool Policy::operator==(const Policy& other) const {
  const auto& a = config_;
  const auto& b = other.config_;
  return a.src_vocab == b.src_vocab && a.tgt_vocab == b.tgt_vocab && a.src_radius == b.src_radius &&
         a.prev_window == b.prev_window && a.embed_dim == b.embed_dim && a.hidden == b.hidden &&
         source_words_ == other.source_words_ && target_words_ == other.target_words_ &&
         theta_.size() == other.theta_.size() &&
         std::memcmp(theta_.data(), other.theta_.data(), theta_.size() * sizeof(double)) == 0;
}

namespace {

void check_sequence(const Policy& policy, std::span<const int> src, std::span<const int> y, int max_len) {
  const int v = policy.output_size();
  for (int id : src) {
    require(id >= 0 && id < policy.config().src_vocab, ErrorCode::kInvalidInput,
            "policy: source token id " + std::to_string(id) + " out of vocabulary");
  }
  require(!y.empty() && y.back() == policy.eos(), ErrorCode::kInvalidInput, "policy: sequence must end with EOS");
  for (size_t t = 0; t < y.size(); ++t) {
    require(y[t] >= 0 && y[t] < v, ErrorCode::kInvalidInput,
            "policy: target token id " + std::to_string(y[t]) + " out of vocabulary");
    require(t + 1 == y.size() || y[t] != policy.eos(), ErrorCode::kInvalidInput, "policy: EOS before the end");
  }
  require(max_len <= 0 || y.size() <= static_cast<size_t>(max_len), ErrorCode::kInvalidInput,
          "policy: sequence longer than max_len");
}

bool forced(size_t step, int max_len) { return max_len > 0 && step + 1 == static_cast<size_t>(max_len); }

}  // namespace

std::vector<double> token_logprobs(const Policy& policy, std::span<const int> src, std::span<const int> y,
                                   int max_len) {
  check_sequence(policy, src, y, max_len);
  PolicyForward fwd(policy);
  std::vector<double> lp(policy.output_size());
  std::vector<double> out(y.size());
  for (size_t t = 0; t < y.size(); ++t) {
    fwd.step(src, y.first(t), forced(t, max_len), lp);
    out[t] = lp[y[t]];
  }
  return out;
}

double logprob(const Policy& policy, std::span<const int> src, std::span<const int> y, int max_len) {
  const auto steps = token_logprobs(policy, src, y, max_len);
  return std::accumulate(steps.begin(), steps.end(), 0.0);
}

void backprop_sequence(const Policy& policy, std::span<const int> src, std::span<const int> y, int max_len,
                       const LogitGradFn& fn, std::span<double> grad) {
  check_sequence(policy, src, y, max_len);
  require(grad.size() == policy.num_params(), ErrorCode::kInvalidInput, "policy: gradient buffer size mismatch");
  PolicyForward fwd(policy);
  const size_t v = policy.output_size();
  std::vector<double> lp(v), probs(v), dz(v);
  for (size_t t = 0; t < y.size(); ++t) {
    const bool f = forced(t, max_len);
    fwd.step(src, y.first(t), f, lp);
    for (size_t o = 0; o < v; ++o) probs[o] = lp[o] == kNegInf ? 0.0 : std::exp(lp[o]);
    std::fill(dz.begin(), dz.end(), 0.0);
    fn(t, probs, dz);
    // A forced step has no dependence on theta.
    if (f) continue;
    fwd.backward(dz, grad);
  }
}

void backprop_step(const Policy& policy, std::span<const int> src, std::span<const int> prefix,
                   const LogitGradFn& fn, std::span<double> grad) {
  require(grad.size() == policy.num_params(), ErrorCode::kInvalidInput, "policy: gradient buffer size mismatch");
  PolicyForward fwd(policy);
  const size_t v = policy.output_size();
  std::vector<double> lp(v), probs(v), dz(v, 0.0);
  fwd.step(src, prefix, false, lp);
  for (size_t o = 0; o < v; ++o) probs[o] = lp[o] == kNegInf ? 0.0 : std::exp(lp[o]);
  fn(prefix.size(), probs, dz);
  fwd.backward(dz, grad);
}

void accumulate_logprob_gradient(const Policy& policy, std::span<const int> src, std::span<const int> y,
                                 std::span<const double> weights, int max_len, std::span<double> grad) {
  require(weights.size() == y.size(), ErrorCode::kInvalidInput, "policy: one weight per step expected");
  backprop_sequence(
      policy, src, y, max_len,
      [&](size_t t, std::span<const double> probs, std::span<double> dz) {
        const double w = weights[t];
        if (w == 0.0) return;
        for (size_t o = 0; o < probs.size(); ++o) dz[o] = -w * probs[o];
        dz[y[t]] += w;
      },
      grad);
}

std::vector<double> grad_logprob(const Policy& policy, std::span<const int> src, std::span<const int> y,
                                 int max_len) {
  std::vector<double> grad(policy.num_params(), 0.0);
  std::vector<double> ones(y.size(), 1.0);
  accumulate_logprob_gradient(policy, src, y, ones, max_len, grad);
  return grad;
}

std::vector<double> grad_step_logprob(const Policy& policy, std::span<const int> src,
                                      std::span<const int> prefix, int token) {
  require(token >= 0 && token < policy.output_size(), ErrorCode::kInvalidInput, "policy: token out of range");
  PolicyForward fwd(policy);
  const size_t v = policy.output_size();
  std::vector<double> lp(v), dz(v);
  fwd.step(src, prefix, false, lp);
  for (size_t o = 0; o < v; ++o) dz[o] = lp[o] == kNegInf ? 0.0 : -std::exp(lp[o]);
  dz[token] += 1.0;
  std::vector<double> grad(policy.num_params(), 0.0);
  fwd.backward(dz, grad);
  return grad;
}

namespace {

struct Partial {
  std::vector<int> tokens;
  double logp;
};

bool better(double la, std::span<const int> a, double lb, std::span<const int> b) {
  if (la != lb) return la > lb;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

std::vector<Hypothesis> beam_search(const Policy& policy, std::span<const int> src, int beam_size, int max_len) {
  require(beam_size >= 1, ErrorCode::kInvalidInput, "beam_search: beam_size must be >= 1");
  if (max_len <= 0) max_len = Policy::default_max_len(src.size());
  const int v = policy.output_size();
  const int eos = policy.eos();
  PolicyForward fwd(policy);
  std::vector<double> lp(v);

  std::vector<Partial> live{{{}, 0.0}};
  std::vector<Hypothesis> finished;

  struct Candidate {
    size_t beam;
    int token;
    double logp;
  };
  std::vector<Candidate> cands;
  std::vector<int> buf_a, buf_b;
  auto cand_tokens = [&](const Candidate& c, std::vector<int>& buf) -> std::span<const int> {
    buf = live[c.beam].tokens;
    buf.push_back(c.token);
    return buf;
  };

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    const bool force = step + 1 == max_len;
    cands.clear();
    for (size_t b = 0; b < live.size(); ++b) {
      fwd.step(src, live[b].tokens, force, lp);
      for (int o = 0; o < v; ++o) {
        if (lp[o] != kNegInf) cands.push_back({b, o, live[b].logp + lp[o]});
      }
    }
    const size_t keep = std::min(cands.size(), static_cast<size_t>(beam_size));
    std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return better(0.0, cand_tokens(a, buf_a), 0.0, cand_tokens(b, buf_b));
    });

    std::vector<Partial> next;
    for (size_t i = 0; i < keep; ++i) {
      std::vector<int> tokens = live[cands[i].beam].tokens;
      tokens.push_back(cands[i].token);
      if (cands[i].token == eos) {
        finished.push_back({std::move(tokens), cands[i].logp});
      } else {
        next.push_back({std::move(tokens), cands[i].logp});
      }
    }
    live = std::move(next);

    // Log-probs only decrease, so once beam_size finished hypotheses beat
    // every live prefix nothing can enter the final top list.
    if (finished.size() >= static_cast<size_t>(beam_size) && !live.empty()) {
      std::vector<double> scores;
      for (const auto& h : finished) scores.push_back(h.logp);
      std::nth_element(scores.begin(), scores.begin() + (beam_size - 1), scores.end(), std::greater<>());
      const double kth = scores[beam_size - 1];
      double best_live = kNegInf;
      for (const auto& p : live) best_live = std::max(best_live, p.logp);
      if (best_live < kth) break;
    }
  }

  std::sort(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return better(a.logp, a.tokens, b.logp, b.tokens);
  });
  if (finished.size() > static_cast<size_t>(beam_size)) finished.resize(beam_size);
  return finished;
}

std::vector<double> truncated_distribution(std::span<const double> logprobs, int top_k, double top_p) {
  const size_t v = logprobs.size();
  std::vector<int> order;
  order.reserve(v);
  for (size_t o = 0; o < v; ++o) {
    if (logprobs[o] != kNegInf) order.push_back(static_cast<int>(o));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return logprobs[a] > logprobs[b]; });
  if (top_k > 0 && order.size() > static_cast<size_t>(top_k)) order.resize(top_k);

  double total = 0.0;
  for (int o : order) total += std::exp(logprobs[o]);
  size_t keep = 0;
  double cum = 0.0;
  while (keep < order.size()) {
    cum += std::exp(logprobs[order[keep]]) / total;
    ++keep;
    if (cum >= top_p - 1e-12) break;
  }
  order.resize(std::max<size_t>(keep, 1));

  std::vector<double> probs(v, 0.0);
  double kept = 0.0;
  for (int o : order) kept += std::exp(logprobs[o]);
  for (int o : order) probs[o] = std::exp(logprobs[o]) / kept;
  return probs;
}

std::vector<Hypothesis> sample(const Policy& policy, std::span<const int> src, const SamplingOptions& options) {
  require(options.count >= 1, ErrorCode::kInvalidInput, "sample: count must be >= 1");
  require(options.top_p > 0.0 && options.top_p <= 1.0, ErrorCode::kInvalidInput, "sample: top_p must lie in (0, 1]");
  require(options.top_k >= 0, ErrorCode::kInvalidInput, "sample: top_k must be >= 0");
  require(options.temperature > 0.0, ErrorCode::kInvalidInput, "sample: temperature must be positive");
  const int max_len = options.max_len > 0 ? options.max_len : Policy::default_max_len(src.size());
  const int v = policy.output_size();
  const int eos = policy.eos();

  PolicyForward fwd(policy);
  Rng rng(options.seed);
  std::vector<double> lp(v);
  std::vector<Hypothesis> out;
  out.reserve(options.count);
  for (int n = 0; n < options.count; ++n) {
    Hypothesis hyp;
    for (int step = 0; step < max_len; ++step) {
      const bool force = step + 1 == max_len;
      fwd.step(src, hyp.tokens, force, lp);
      if (options.temperature != 1.0 && !force) {
        double m = kNegInf;
        for (double& x : lp) {
          if (x != kNegInf) {
            x /= options.temperature;
            m = std::max(m, x);
          }
        }
        double s = 0.0;
        for (double x : lp) {
          if (x != kNegInf) s += std::exp(x - m);
        }
        const double norm = m + std::log(s);
        for (double& x : lp) {
          if (x != kNegInf) x -= norm;
        }
      }
      const std::vector<double> probs = truncated_distribution(lp, options.top_k, options.top_p);
      const double u = rng.uniform01();
      double cum = 0.0;
      int chosen = -1;
      int last_nonzero = -1;
      for (int o = 0; o < v; ++o) {
        if (probs[o] <= 0.0) continue;
        last_nonzero = o;
        cum += probs[o];
        if (u < cum) {
          chosen = o;
          break;
        }
      }
      if (chosen < 0) chosen = last_nonzero;
      hyp.tokens.push_back(chosen);
      hyp.logp += std::log(probs[chosen]);
      if (chosen == eos) break;
    }
    out.push_back(std::move(hyp));
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'P', 'M', 'T', 'P', 'O', 'L', 'C', 'Y'};
constexpr uint32_t kFormatVersion = 1;

void put_u64(std::ostream& out, uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

void put_u32(std::ostream& out, uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 4);
}

uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  require(in.gcount() == 8, ErrorCode::kInvalidArtifact, "policy checkpoint: truncated");
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  require(in.gcount() == 4, ErrorCode::kInvalidArtifact, "policy checkpoint: truncated");
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void put_words(std::ostream& out, const std::vector<std::string>& words) {
  for (const auto& w : words) {
    put_u32(out, static_cast<uint32_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
}

std::vector<std::string> get_words(std::istream& in, uint32_t count) {
  std::vector<std::string> words(count);
  for (auto& w : words) {
    const uint32_t len = get_u32(in);
    require(len < (1u << 20), ErrorCode::kInvalidArtifact, "policy checkpoint: implausible word length");
    w.resize(len);
    in.read(w.data(), len);
    require(static_cast<uint32_t>(in.gcount()) == len, ErrorCode::kInvalidArtifact, "policy checkpoint: truncated");
  }
  return words;
}

}  // namespace

void save_policy(std::ostream& out, const Policy& policy) {
  const auto& c = policy.config();
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  for (int field : {c.src_vocab, c.tgt_vocab, c.src_radius, c.prev_window, c.embed_dim, c.hidden}) {
    put_u32(out, static_cast<uint32_t>(field));
  }
  put_words(out, policy.source_words());
  put_words(out, policy.target_words());
  put_u64(out, policy.num_params());
  for (double w : policy.params()) put_u64(out, std::bit_cast<uint64_t>(w));
  require(static_cast<bool>(out), ErrorCode::kIo, "policy checkpoint: write failed");
}

Policy load_policy(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0, ErrorCode::kInvalidArtifact,
          "policy checkpoint: bad magic");
  const uint32_t version = get_u32(in);
  require(version == kFormatVersion, ErrorCode::kInvalidArtifact,
          "policy checkpoint: unsupported format version " + std::to_string(version));
  PolicyConfig c;
  c.src_vocab = static_cast<int>(get_u32(in));
  c.tgt_vocab = static_cast<int>(get_u32(in));
  c.src_radius = static_cast<int>(get_u32(in));
  c.prev_window = static_cast<int>(get_u32(in));
  c.embed_dim = static_cast<int>(get_u32(in));
  c.hidden = static_cast<int>(get_u32(in));
  require(c.src_vocab > 0 && c.src_vocab <= 100000 && c.tgt_vocab > 0 && c.tgt_vocab <= 100000,
          ErrorCode::kInvalidArtifact, "policy checkpoint: implausible vocabulary size");
  auto src_words = get_words(in, static_cast<uint32_t>(c.src_vocab));
  auto tgt_words = get_words(in, static_cast<uint32_t>(c.tgt_vocab));
  Policy policy(c, std::move(src_words), std::move(tgt_words));
  const uint64_t count = get_u64(in);
  require(count == policy.num_params(), ErrorCode::kInvalidArtifact,
          "policy checkpoint: parameter count does not match the structure");
  for (double& w : policy.params()) w = std::bit_cast<double>(get_u64(in));
  return policy;
}

void save_policy_file(const Policy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open '" + path + "' for writing");
  save_policy(out, policy);
}

Policy load_policy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingArtifact, "cannot open checkpoint '" + path + "'");
  return load_policy(in);
}

}  // namespace prefmt
