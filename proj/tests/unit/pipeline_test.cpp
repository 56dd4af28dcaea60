// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "prefmt/error.hpp"
#include "prefmt/pipeline.hpp"
#include "tiny.hpp"

using namespace prefmt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config(const std::string& stages) {
  return {
      {"stages", stages},
      {"seed", 4},
      {"task", {{"vocab_size", 12}, {"min_len", 2}, {"max_len", 5}, {"noise_rate", 0.3}, {"seed", 4}}},
      {"corpus_size", 240},
      {"policy", {{"embed_dim", 8}, {"hidden", 16}}},
      {"mle", {{"epochs", 3}}},
      {"rl", {{"trajectory_limit", 64}, {"rollouts_per_iter", 32}, {"dev_limit", 10}}},
      {"sampling", {{"count", 6}}},
      {"nrr", {{"keep", 3}}},
  };
}

size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("stage lists") {
  CHECK(parse_stages("filter,mle,rl,mbr") == std::vector<std::string>{"filter", "mle", "rl", "mbr"});
  CHECK(parse_stages(" mle , eval ") == std::vector<std::string>{"mle", "eval"});
  try {
    parse_stages("mbr,mle");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidConfiguration);
    CHECK(std::string(e.what()).find("'mle' cannot follow 'mbr'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_stages("mle,mle"), Error);
  CHECK_THROWS_AS(parse_stages("mle,decode"), Error);
  CHECK_THROWS_AS(parse_stages(""), Error);
}

TEST_CASE("defaults") {
  const auto d = pipeline_defaults();
  CHECK(d["stages"] == "mle,eval");
  CHECK(d["filter"]["keep"] == 0.7);
  CHECK(d["sampling"]["count"] == 100);
  CHECK(d["sampling"]["top_k"] == 300);
  CHECK(d["sampling"]["top_p"] == 0.6);
  auto cfg = ppo_config_from_json(d["rl"]);
  CHECK(cfg.trajectory_limit == 2048);
  CHECK(cfg.baseline == BaselineMode::kBatchMean);
  auto mle = mle_options_from_json(d["mle"]);
  CHECK(mle.batch_size == 32);
  CHECK_THROWS_AS(mle_options_from_json(json{{"epochs", "many"}}), Error);
  CHECK_THROWS_AS(ppo_config_from_json(json{{"baseline", "value-head"}}), Error);
}

TEST_CASE("evaluation report") {
  std::vector<std::string> hyps{"a b c d", "x y"};
  std::vector<SentencePair> refs{{"s", "a b c d", false}, {"s", "x z", false}};
  auto r = evaluate_outputs(hyps, refs, nullptr);
  CHECK(r.sentences == 2);
  CHECK(r.chrf == doctest::Approx((1.0 + chrf("x y", "x z").value) / 2));
  CHECK_FALSE(r.has_mock_qe);
  CHECK(r.to_markdown("run").find("| run |") != std::string::npos);
  CHECK(r.to_json()["sentences"] == 2);
  std::vector<std::string> short_hyps{"a"};
  CHECK_THROWS_AS(evaluate_outputs(short_hyps, refs, nullptr), Error);
}

TEST_CASE("full pipeline writes every stage artifact") {
  prefmt::testing::TempDir dir("pipe");
  std::vector<std::string> logged;
  auto report = run_pipeline(small_config("filter,mle,rl,nrr,mbr,eval"), dir.path().string(),
                             [&](const std::string& m) { logged.push_back(m); });
  const auto& root = dir.path();
  for (const char* f : {"config.json", "data/train.jsonl", "data/dev.jsonl", "data/test.jsonl", "data/task.json",
                        "filter/scores.tsv", "filter/subset.jsonl", "mle/history.csv", "mle/policy.bin",
                        "rl/stats.csv", "rl/policy.bin", "nrr/candidates.jsonl", "nrr/selection.jsonl",
                        "nrr/kept.jsonl", "mbr/selection.jsonl", "eval/outputs.txt",
                        "report.json", "report.md"}) {
    CHECK_MESSAGE(fs::exists(root / f), std::string(f));
  }
  CHECK(line_count(root / "data/test.jsonl") == report.sentences);
  CHECK(line_count(root / "eval/outputs.txt") == report.sentences);
  // 240 * 0.8 = 192 train pairs, 70% kept.
  CHECK(line_count(root / "filter/subset.jsonl") == 134);
  CHECK(report.has_mock_qe);
  CHECK_FALSE(logged.empty());

  std::ifstream cfg_in(root / "config.json");
  auto snapshot = json::parse(cfg_in);
  CHECK(snapshot["corpus_size"] == 240);
  CHECK(snapshot["sampling"]["top_p"] == 0.6);
}

TEST_CASE("pipeline runs are reproducible") {
  prefmt::testing::TempDir a("pipe_a"), b("pipe_b");
  auto ra = run_pipeline(small_config("mle,eval"), a.path().string());
  auto rb = run_pipeline(small_config("mle,eval"), b.path().string());
  CHECK(ra.chrf == rb.chrf);
  std::ifstream fa(a.path() / "eval/outputs.txt"), fb(b.path() / "eval/outputs.txt");
  std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == sb);
}

TEST_CASE("a failing stage is named and earlier artifacts are kept") {
  prefmt::testing::TempDir dir("pipe_fail");
  auto cfg = small_config("mle,rl,eval");
  cfg["rl"]["reward"] = "remote:chrf";  // no endpoint configured
  try {
    run_pipeline(cfg, dir.path().string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("stage 'rl' failed") != std::string::npos);
  }
  CHECK(fs::exists(dir.path() / "mle/policy.bin"));
  CHECK_FALSE(fs::exists(dir.path() / "report.json"));
}

TEST_CASE("bench reports") {
  BenchReport r;
  r.rows = {{"MLE", 120.0, 3.0}, {"MBR", 0.0, 30.0}};
  r.scaling_small_n = 32;
  r.scaling_large_n = 64;
  r.scaling_small_seconds = 1.0;
  r.scaling_large_seconds = 4.2;
  CHECK(r.scaling_ratio() == doctest::Approx(4.2));
  const auto csv = r.to_csv();
  CHECK(csv.find("MLE,2.00,") != std::string::npos);
  CHECK(csv.find("MBR,0.00,") != std::string::npos);
  CHECK(r.to_markdown().find("| MBR |") != std::string::npos);
  CHECK(r.to_json()["rows"].size() == 2);
}

TEST_CASE("bench needs a trained run") {
  prefmt::testing::TempDir dir("bench_missing");
  try {
    run_bench(json{{"run_dir", dir.path().string()}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingArtifact);
  }
}
