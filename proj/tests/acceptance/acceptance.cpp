// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   prefmt_acceptance [--only <substring>] [--keep <dir>]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "backends.hpp"
#include "json.hpp"
#include "prefmt/error.hpp"
#include "prefmt/filter.hpp"
#include "prefmt/pipeline.hpp"
#include "prefmt/policy.hpp"
#include "prefmt/rerank.hpp"
#include "prefmt/rltrain.hpp"
#include "prefmt/scoring.hpp"
#include "prefmt/synthdata.hpp"
#include "prefmt/textmetrics.hpp"

#ifndef PREFMT_MBR_CASES
#error "PREFMT_MBR_CASES must name the MBR oracle case file"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace prefmt;

namespace {

// ---- Tolerances and pinned regression constants -----------------------------

constexpr double kMetricTol = 1e-6;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradFloor = 1e-3;  // relative error is taken against max(|fd|, |g|, floor)
constexpr double kFdStep = 1e-5;
constexpr int kGradTriples = 60;
constexpr double kPpoRatioOneTol = 1e-8;
constexpr double kZeroAdvantageTol = 1e-9;
constexpr int kInvarianceTrials = 100;
constexpr double kMbrOracleSeconds = 10.0;
constexpr double kGradSeconds = 30.0;
constexpr double kFilterSeconds = 600.0;
constexpr double kRlSeconds = 600.0;
constexpr double kBenchSeconds = 300.0;
constexpr double kCleanFraction = 0.95;
constexpr double kScalingRatio = 3.0;

// Held-out chrF margins measured by pilot runs on the configurations below.
// A run passes when it is strictly positive and within kMarginSlack of the pin.
constexpr double kFilterMargin = 0.0224;
constexpr double kRlChrfMargin = 0.1134;
constexpr double kRlQeMargin = 0.1115;
constexpr double kCompositionMargin = 0.1170;
constexpr double kMarginSlack = 0.005;

// Published wall-clock minutes, first dataset column: {training, inference}.
struct PublishedRow {
  const char* method;
  double training;
  double inference;
};
constexpr PublishedRow kPublished[] = {
    {"MLE", 480, 5}, {"RL", 288, 5}, {"MBR", 0, 212}, {"N-RR", 0, 183}};

// ---- Harness -----------------------------------------------------------------

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_work;

fs::path workdir(const std::string& name) {
  const fs::path p = g_work / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool margin_ok(double margin, double pinned) { return margin > 0.0 && margin >= pinned - kMarginSlack; }

std::string margin_detail(double base, double treated, double pinned) {
  return "chrF " + fmt("%.4f", base) + " -> " + fmt("%.4f", treated) + ", margin " + fmt("%.4f", treated - base) +
         " (pinned " + fmt("%.4f", pinned) + ")";
}

// ---- MBR oracle --------------------------------------------------------------

Outcome mbr_oracle() {
  std::ifstream in(PREFMT_MBR_CASES);
  if (!in) return {false, "cannot open " PREFMT_MBR_CASES};
  const json cases = json::parse(in);
  const Utility utility(std::make_shared<ChrfBackend>());
  const auto t0 = std::chrono::steady_clock::now();
  size_t matched = 0;
  double worst = 0.0;
  size_t max_n = 0;
  for (const auto& c : cases) {
    CandidateSet cs;
    cs.hyps = c["hyps"].get<std::vector<std::string>>();
    max_n = std::max(max_n, cs.hyps.size());
    const Selection sel = mbr_select(cs, utility);
    if (sel.index == c["index"].get<size_t>()) ++matched;
    const auto eu = c["expected_utility"].get<std::vector<double>>();
    if (eu.size() != sel.scores.size()) {
      worst = 1.0;
      continue;
    }
    for (size_t i = 0; i < eu.size(); ++i) worst = std::max(worst, std::abs(sel.scores[i] - eu[i]));
  }
  const double secs = seconds_since(t0);
  const bool pass = cases.size() == 200 && matched == cases.size() && max_n <= 8 && worst < kMetricTol &&
                    secs < kMbrOracleSeconds;
  return {pass, std::to_string(matched) + "/" + std::to_string(cases.size()) + " indices match, N <= " +
                    std::to_string(max_n) + ", max |EU diff| " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) +
                    " s"};
}

// ---- Complexity --------------------------------------------------------------

Outcome complexity() {
  std::string detail;
  bool pass = true;
  for (size_t n : {size_t{1}, size_t{8}, size_t{32}}) {
    CandidateSet cs;
    cs.src = "ka lo";
    for (size_t i = 0; i < n; ++i) cs.hyps.push_back("h" + std::to_string(i % 5));
    auto ref_backend = std::make_shared<ConstantBackend>(0.5, true);
    mbr_select(cs, Utility(ref_backend));
    ConstantBackend qe(0.5, false);
    nbest_rerank(cs, qe);
    const bool ok = ref_backend->cost_counter() == n * n && qe.cost_counter() == n;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + std::string("N=") + std::to_string(n) + ": mbr " +
              std::to_string(ref_backend->cost_counter()) + ", nbest " + std::to_string(qe.cost_counter());
  }
  return {pass, detail};
}

// ---- Metric fixtures -----------------------------------------------------------

struct Fixture {
  const char* hyp;
  const char* ref;
  double expected;
};

// Constants from tests/oracles/metrics_oracle.py.
constexpr Fixture kBleuFixtures[] = {
    {"the cat sat on the mat", "the cat sat on the mat", 1.000000000000},
    {"the the the", "the cat sat", 0.485491771707},
    {"the cat", "the cat sat on the mat", 0.135335283237},
    {"a b c d e", "a b c d", 0.752120618617},
    {"a b c d", "a b x d", 0.500000000000},
    {"the quick brown fox", "the fast brown fox jumps", 0.389400391536},
    {"x y z", "a b c", 0.000000000000},
    {"one two three four five six", "six five four three two one", 0.302137539736},
    {"a a b b", "a b a b", 0.537284965912},
    {"a", "a b", 0.367879441171},
    {"hello world", "hello there world", 0.510029457494},
    {"ka lo mi ka lo", "ka lo mi nu ka", 0.531829589694},
};

constexpr Fixture kChrfFixtures[] = {
    {"abcdef", "abcdef", 1.000000000000},
    {"zzzz", "abcd", 0.000000000000},
    {"abcd", "abce", 0.479166666667},
    {"abce", "abcd", 0.479166666667},
    {"the cat", "the cat sat", 0.564397838737},
    {"ab", "abcdefgh", 0.078014184397},
    {"abcdefgh", "ab", 0.183333333333},
    {"kalo  mi", "kalo mi nu", 0.630499804933},
    {"a b c", "a  b   c", 1.000000000000},
    {"colorless green", "colourless green", 0.746136360478},
    {"aaaa", "aa", 0.390625000000},
    {"sleep furiously", "sleep furious", 0.962488511029},
};

Outcome metric_fixtures() {
  size_t total = 0, ok = 0;
  double worst = 0.0;
  auto check = [&](double got, double want) {
    ++total;
    const double d = std::abs(got - want);
    worst = std::max(worst, d);
    if (d <= kMetricTol) ++ok;
  };
  for (const auto& f : kBleuFixtures) check(sentence_bleu(tokenize(f.hyp), tokenize(f.ref)).value, f.expected);
  for (const auto& f : kChrfFixtures) check(chrf(f.hyp, f.ref).value, f.expected);
  size_t identity = 0, identity_ok = 0;
  for (const char* s : {"ka lo mi", "a", "the cat sat on the mat", "x y z w v u t", "sleep furiously"}) {
    identity += 2;
    identity_ok += sentence_bleu(tokenize(s), tokenize(s)).value == 1.0;
    identity_ok += std::abs(chrf(s, s).value - 1.0) <= kMetricTol;
  }
  const bool pass = total >= 20 && ok == total && identity_ok == identity;
  return {pass, std::to_string(ok) + "/" + std::to_string(total) + " fixtures within " + fmt("%.0e", kMetricTol) +
                    " (max diff " + fmt("%.1e", worst) + "), identity " + std::to_string(identity_ok) + "/" +
                    std::to_string(identity)};
}

// ---- Argmax invariances --------------------------------------------------------

std::vector<std::string> random_hyps(std::mt19937_64& rng, size_t n) {
  static const char* kSyl[] = {"ka", "lo", "mi", "nu", "be", "ta", "so", "ri"};
  std::uniform_int_distribution<int> len(1, 6), syl(0, 7), coin(0, 3);
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    if (!out.empty() && coin(rng) == 0) {
      out.push_back(out[std::uniform_int_distribution<size_t>(0, out.size() - 1)(rng)]);
      continue;
    }
    std::string s;
    const int words = len(rng);
    for (int w = 0; w < words; ++w) s += (w ? " " : "") + std::string(kSyl[syl(rng)]) + kSyl[syl(rng)];
    out.push_back(s);
  }
  return out;
}

Outcome invariances() {
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> scale(0.05, 20.0), shift(-10.0, 10.0);
  std::uniform_int_distribution<size_t> size(1, 12);
  size_t mbr_same = 0, nbest_same = 0;
  for (int t = 0; t < kInvarianceTrials; ++t) {
    CandidateSet cs;
    cs.hyps = random_hyps(rng, size(rng));
    const double a = scale(rng), b = shift(rng);
    const auto base = mbr_select(cs, Utility(std::make_shared<ChrfBackend>()));
    const auto mapped = mbr_select(
        cs, Utility(std::make_shared<testing::MappedChrfBackend>([a, b](double u) { return a * u + b; })));
    mbr_same += base.index == mapped.index;
  }
  const std::vector<std::function<double(double)>> transforms = {
      [](double x) { return std::exp(3.0 * x); },
      [](double x) { return x * x * x; },
      [](double x) { return std::log(x + 2.0); },
      [](double x) { return 7.5 * x - 3.0; },
      [](double x) { return std::atan(x); },
  };
  for (int t = 0; t < kInvarianceTrials; ++t) {
    CandidateSet cs;
    cs.src = "src";
    const size_t n = size(rng);
    std::unordered_map<std::string, double> table;
    std::uniform_int_distribution<int> grid(-1000, 1000);
    for (size_t i = 0; i < n; ++i) {
      cs.hyps.push_back("h" + std::to_string(i));
      table[cs.hyps.back()] = grid(rng) / 1000.0;
    }
    testing::MappedTableBackend plain(table, [](double x) { return x; });
    testing::MappedTableBackend mapped(table, transforms[t % transforms.size()]);
    nbest_same += nbest_rerank(cs, plain).index == nbest_rerank(cs, mapped).index;
  }
  const bool pass = mbr_same == kInvarianceTrials && nbest_same == kInvarianceTrials;
  return {pass, "mbr affine " + std::to_string(mbr_same) + "/" + std::to_string(kInvarianceTrials) +
                    ", nbest monotone " + std::to_string(nbest_same) + "/" + std::to_string(kInvarianceTrials)};
}

// ---- Gradient check ------------------------------------------------------------

Outcome gradient_check() {
  PolicyConfig c;
  c.src_vocab = 6;
  c.tgt_vocab = 5;
  c.embed_dim = 4;
  c.hidden = 6;
  c.src_radius = 1;
  c.prev_window = 2;
  std::vector<std::string> sw, tw;
  for (int i = 0; i < c.src_vocab; ++i) sw.push_back("s" + std::to_string(i));
  for (int i = 0; i < c.tgt_vocab; ++i) tw.push_back("t" + std::to_string(i));

  std::mt19937_64 rng(4242);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  size_t checked = 0, bad = 0;
  for (int trial = 0; trial < kGradTriples; ++trial) {
    Policy p(c, sw, tw);
    p.init_random(1000 + trial, 0.8);
    std::vector<int> src(std::uniform_int_distribution<int>(1, 5)(rng));
    for (int& s : src) s = std::uniform_int_distribution<int>(0, c.src_vocab - 1)(rng);
    std::vector<int> y(std::uniform_int_distribution<int>(0, 5)(rng));
    for (int& t : y) t = std::uniform_int_distribution<int>(0, c.tgt_vocab - 1)(rng);
    y.push_back(p.eos());

    const auto g = grad_logprob(p, src, y);
    auto theta = p.params();
    for (size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      theta[k] = saved + kFdStep;
      const double up = logprob(p, src, y);
      theta[k] = saved - kFdStep;
      const double down = logprob(p, src, y);
      theta[k] = saved;
      const double fd = (up - down) / (2 * kFdStep);
      const double rel = std::abs(fd - g[k]) / std::max({std::abs(fd), std::abs(g[k]), kGradFloor});
      worst = std::max(worst, rel);
      bad += rel >= kGradRelTol;
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = bad == 0 && kGradTriples >= 50 && secs < kGradSeconds;
  return {pass, std::to_string(kGradTriples) + " triples, " + std::to_string(checked) + " partials, max rel err " +
                    fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// ---- Filtering -------------------------------------------------------------------

TaskSpec filter_task() {
  TaskSpec t;
  t.vocab_size = 200;
  t.min_len = 6;
  t.max_len = 14;
  t.swap_rate = 0.2;
  t.noise_rate = 0.3;
  t.zipf_exponent = 1.0;
  t.seed = 3;
  return t;
}

Outcome filter_recovery() {
  const Corpus corpus = gen_corpus(filter_task(), 10000);
  MockQeBackend qe(corpus.task);
  const auto scored = score_corpus(corpus, qe, 64);
  const auto kept = select_indices(
      [&] {
        std::vector<double> v;
        for (const auto& s : scored) v.push_back(s.qe_score.value);
        return v;
      }(),
      SubsetSpec::by_count(7000));
  size_t clean = 0;
  for (size_t i : kept) clean += !corpus.pairs[i].is_noisy;
  const double frac = static_cast<double>(clean) / kept.size();
  return {frac >= kCleanFraction, std::to_string(clean) + "/" + std::to_string(kept.size()) + " kept pairs clean (" +
                                      fmt("%.4f", frac) + ")"};
}

json filter_config(const std::string& stages) {
  return {{"stages", stages}, {"seed", 1}, {"task", to_json(filter_task())}, {"corpus_size", 10000},
          {"mle", {{"epochs", 4}}}};
}

Outcome filter_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto full = run_pipeline(filter_config("mle,eval"), workdir("filter_full").string());
  const auto filtered = run_pipeline(filter_config("filter,mle,eval"), workdir("filter_subset").string());
  const double secs = seconds_since(t0);
  const double margin = filtered.chrf - full.chrf;
  return {margin_ok(margin, kFilterMargin) && secs < kFilterSeconds,
          margin_detail(full.chrf, filtered.chrf, kFilterMargin) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- RL --------------------------------------------------------------------------

json rl_config(const std::string& stages, const std::string& reward) {
  TaskSpec t;
  t.vocab_size = 200;
  t.min_len = 6;
  t.max_len = 14;
  t.zipf_exponent = 1.0;
  t.noise_rate = 0.3;
  t.seed = 3;
  return {{"stages", stages},
          {"seed", 1},
          {"task", to_json(t)},
          {"corpus_size", 4000},
          {"mle", {{"epochs", 1}, {"max_updates", 40}}},
          {"rl", {{"learning_rate", 0.05}, {"trajectory_limit", 2048}, {"reward", reward}}}};
}

Outcome rl_improvement(const std::string& reward, double pinned) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = run_pipeline(rl_config("mle,eval", reward), workdir("rl_base_" + reward).string());
  const auto tuned = run_pipeline(rl_config("mle,rl,eval", reward), workdir("rl_" + reward).string());
  const double secs = seconds_since(t0);
  const double margin = tuned.chrf - base.chrf;
  return {margin_ok(margin, pinned) && secs < kRlSeconds,
          "reward " + reward + ": " + margin_detail(base.chrf, tuned.chrf, pinned) + ", " + fmt("%.1f", secs) + " s"};
}

// ---- PPO identities -------------------------------------------------------------

Outcome ppo_identities() {
  TaskSpec spec;
  spec.vocab_size = 10;
  spec.min_len = 2;
  spec.max_len = 4;
  spec.seed = 5;
  const Corpus corpus = gen_corpus(spec, 24);
  Policy policy = Policy::for_task(*corpus.task, 8, 16);
  policy.init_random(5, 0.4);
  std::vector<std::string> srcs, refs;
  for (const auto& p : corpus.pairs) {
    srcs.push_back(p.src);
    refs.push_back(p.ref);
  }

  ChrfBackend chrf_reward;
  const auto trajs = rollout(policy, srcs, refs, chrf_reward, 2);
  PpoConfig cfg;
  cfg.gamma = 0.95;
  const auto steps = make_token_steps(trajs, cfg);
  const auto ppo = ppo_gradient(policy, policy, trajs, steps, cfg);
  std::vector<double> pg(policy.num_params(), 0.0);
  for (const auto& s : steps) {
    const auto& tr = trajs[s.trajectory];
    if (s.position + 1 == static_cast<size_t>(tr.max_len)) continue;
    const auto prefix = std::span<const int>(tr.hyp.tokens).first(s.position);
    const auto g = grad_step_logprob(policy, tr.src_ids, prefix, tr.hyp.tokens[s.position]);
    for (size_t i = 0; i < pg.size(); ++i) pg[i] += s.advantage * g[i] / static_cast<double>(steps.size());
  }
  double diff = 0.0;
  for (size_t i = 0; i < pg.size(); ++i) diff = std::max(diff, std::abs(ppo.grad[i] - pg[i]));

  ConstantBackend constant(0.8, false);
  const auto flat = rollout(policy, srcs, refs, constant, 2);
  PpoConfig zero = cfg;
  zero.gamma = 1.0;
  zero.learning_rate = 0.5;
  Policy moved = policy;
  ppo_update(moved, flat, zero, 1);
  double change = 0.0;
  for (size_t i = 0; i < moved.num_params(); ++i) {
    change = std::max(change, std::abs(moved.params()[i] - policy.params()[i]));
  }
  const bool pass = diff < kPpoRatioOneTol && change < kZeroAdvantageTol;
  return {pass, "ratio-1 vs REINFORCE max diff " + fmt("%.2e", diff) + ", zero-advantage max change " +
                    fmt("%.2e", change)};
}

// ---- Pipeline composition and bench ------------------------------------------

json composition_config(const std::string& stages) {
  json cfg = rl_config(stages, "chrf");
  cfg["sampling"] = {{"count", 16}};
  return cfg;
}

Outcome composition() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = run_pipeline(composition_config("filter,mle,eval"), workdir("compose_base").string());
  const auto full = run_pipeline(composition_config("filter,mle,rl,mbr,eval"), workdir("compose_full").string());
  const double secs = seconds_since(t0);
  const double margin = full.chrf - base.chrf;
  return {margin_ok(margin, kCompositionMargin),
          "filter,mle -> filter,mle,rl,mbr: " + margin_detail(base.chrf, full.chrf, kCompositionMargin) + ", " +
              fmt("%.1f", secs) + " s"};
}

Outcome bench_shape() {
  const fs::path run = g_work / "compose_full";
  if (!fs::exists(run / "mle" / "policy.bin")) run_pipeline(composition_config("filter,mle,rl,mbr,eval"), run.string());
  const auto t0 = std::chrono::steady_clock::now();
  const BenchReport rep = run_bench({{"run_dir", run.string()}});
  const double secs = seconds_since(t0);

  std::map<std::string, BenchRow> by_prefix;
  for (const auto& r : rep.rows) {
    for (const char* m : {"MBR", "N-RR", "MLE + RL", "MLE", "beam search"}) {
      if (r.method.rfind(m, 0) == 0 && !by_prefix.count(m)) {
        by_prefix[m] = r;
        break;
      }
    }
  }
  bool pass = by_prefix.size() == 5;
  // Reranking and plain decoding have no training cost, as in the published table;
  // trained methods do.
  for (const auto& pub : kPublished) {
    const std::string key = std::string(pub.method) == "RL" ? "MLE + RL" : pub.method;
    if (!by_prefix.count(key)) continue;
    const bool zero = by_prefix[key].training_seconds == 0.0;
    pass = pass && zero == (pub.training == 0.0);
  }
  pass = pass && by_prefix["beam search"].training_seconds == 0.0;
  // Inference: MBR costs more than N-RR at the same N.
  pass = pass && by_prefix["MBR"].inference_seconds > by_prefix["N-RR"].inference_seconds;
  pass = pass && rep.scaling_large_n == 2 * rep.scaling_small_n && rep.scaling_ratio() >= kScalingRatio &&
         secs < kBenchSeconds;
  return {pass, "training zeros match for MBR/N-RR/beam, MBR inference " +
                    fmt("%.3f", by_prefix["MBR"].inference_seconds) + " s > N-RR " +
                    fmt("%.3f", by_prefix["N-RR"].inference_seconds) + " s, t(N=" +
                    std::to_string(rep.scaling_large_n) + ")/t(N=" + std::to_string(rep.scaling_small_n) +
                    ") = " + fmt("%.2f", rep.scaling_ratio()) + ", " + fmt("%.1f", secs) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  fs::path keep;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else if (a == "--keep" && i + 1 < argc) {
      keep = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only <substring>] [--keep <dir>]\n", argv[0]);
      return 2;
    }
  }
  g_work = keep.empty() ? fs::temp_directory_path() / "prefmt_acceptance" : keep;
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mbr-oracle", mbr_oracle},
      {"complexity", complexity},
      {"metric-fixtures", metric_fixtures},
      {"argmax-invariance", invariances},
      {"gradient-check", gradient_check},
      {"filter-recovery", filter_recovery},
      {"filter-efficacy", filter_efficacy},
      {"rl-chrf", [] { return rl_improvement("chrf", kRlChrfMargin); }},
      {"rl-mock-qe", [] { return rl_improvement("mock-qe", kRlQeMargin); }},
      {"ppo-identities", ppo_identities},
      {"pipeline-composition", composition},
      {"bench-shape", bench_shape},
  };

  int failed = 0, ran = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    ++ran;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  if (keep.empty()) fs::remove_all(g_work);
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
