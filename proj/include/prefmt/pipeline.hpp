// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefmt/filter.hpp"
#include "prefmt/policy.hpp"
#include "prefmt/rerank.hpp"
#include "prefmt/rltrain.hpp"
#include "prefmt/synthdata.hpp"

namespace prefmt {

using Logger = std::function<void(const std::string&)>;

// ---------------------------------------------------------------------------
// Decoding and evaluation helpers
// ---------------------------------------------------------------------------

// Beam search for every source; the whole beam is kept as the candidate set.
std::vector<CandidateSet> decode_beam_sets(const Policy& policy, std::span<const std::string> srcs, int beam_size);

// `options.count` samples per source. Source i uses seed mix(options.seed, i),
// so the output does not depend on thread scheduling.
std::vector<CandidateSet> decode_sample_sets(const Policy& policy, std::span<const std::string> srcs,
                                             const SamplingOptions& options);

struct EvalReport {
  size_t sentences = 0;
  double bleu = 0.0;     // corpus BLEU
  double chrf = 0.0;     // mean sentence chrF
  double mock_qe = 0.0;  // mean mock QE; 0 without an oracle
  bool has_mock_qe = false;

  nlohmann::json to_json() const;
  std::string to_markdown(const std::string& label) const;
};

EvalReport evaluate_outputs(std::span<const std::string> hyps, std::span<const SentencePair> refs,
                            const GoldOracle* oracle);

struct PolicyDims {
  int embed_dim = 16;
  int hidden = 64;
  int src_radius = 1;
  int prev_window = 2;
  double init_scale = 0.1;
};

Policy make_policy(const Task& task, const PolicyDims& dims, uint64_t seed);

nlohmann::json to_json(const MleOptions& o);
MleOptions mle_options_from_json(const nlohmann::json& j, MleOptions base = {});
PpoConfig ppo_config_from_json(const nlohmann::json& j, PpoConfig base = {});
PolicyDims policy_dims_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

// Known stages in their only valid relative order.
inline constexpr const char* kStageOrder[] = {"filter", "mle", "rl", "nrr", "mbr", "eval"};

// Parses "filter,mle,..." and checks that the stages are known, unique and in
// order. Throws kInvalidConfiguration otherwise.
std::vector<std::string> parse_stages(const std::string& list);

// Runs the configured stages and writes every artifact below `out_dir`.
// Returns the final evaluation over the test split; also written to
// out_dir/report.json and out_dir/report.md.
EvalReport run_pipeline(const nlohmann::json& config, const std::string& out_dir, const Logger& log = nullptr);

// The configuration with every default filled in, as stored in the run's
// config snapshot.
nlohmann::json pipeline_defaults();

// ---------------------------------------------------------------------------
// Filter size sweep
// ---------------------------------------------------------------------------

// config: {"train", "dev", "task", "scores"?, "qe", "sizes", "mle", "policy",
//          "beam_size", "selection_metric", "eval_limit", "seed", "endpoint"}
SweepReport run_sweep(const nlohmann::json& config, const Logger& log = nullptr);

// ---------------------------------------------------------------------------
// Wall-clock benchmark
// ---------------------------------------------------------------------------

struct BenchRow {
  std::string method;
  double training_seconds = 0.0;
  double inference_seconds = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  size_t scaling_small_n = 0;
  size_t scaling_large_n = 0;
  double scaling_small_seconds = 0.0;
  double scaling_large_seconds = 0.0;

  double scaling_ratio() const;
  std::string to_csv() const;
  std::string to_markdown() const;
  nlohmann::json to_json() const;
};

// config: {"run_dir" (needs data/{train,dev,test}.jsonl, data/task.json and
// mle/policy.bin), "mle_epochs", "rl_trajectories", "sources", "candidates",
// "scaling_n": [small, large], "scaling_sources", "work_per_item", "repeats"}
BenchReport run_bench(const nlohmann::json& config, const Logger& log = nullptr);

}  // namespace prefmt
