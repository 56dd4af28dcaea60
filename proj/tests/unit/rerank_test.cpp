// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include <sstream>

#include "backends.hpp"
#include "doctest.h"
#include "prefmt/error.hpp"
#include "prefmt/rerank.hpp"
#include "prefmt/rng.hpp"
#include "prefmt/synthdata.hpp"

using namespace prefmt;

namespace {

CandidateSet set_of(std::vector<std::string> hyps, std::string src = "src") {
  return {std::move(src), std::move(hyps), std::nullopt};
}

}  // namespace

TEST_CASE("n-best reranking") {
  TableBackend qe({{"a", 0.1}, {"b", 0.9}, {"c", 0.5}}, 0.0);
  auto sel = nbest_rerank(set_of({"a", "b", "c"}), qe);
  CHECK(sel.index == 1);
  CHECK(sel.selected == "b");
  CHECK(sel.scores == std::vector<double>{0.1, 0.9, 0.5});
  CHECK(qe.cost_counter() == 3);

  CHECK(nbest_rerank(set_of({"zzz"}), qe).index == 0);
  TableBackend ties({}, 0.4);
  CHECK(nbest_rerank(set_of({"x", "y", "z"}), ties).index == 0);
}

TEST_CASE("n-best needs a reference-free scorer") {
  ChrfBackend chrf_b;
  CHECK_THROWS_AS(nbest_rerank(set_of({"a"}), chrf_b), Error);
  TableBackend qe({}, 0.0);
  CHECK_THROWS_AS(nbest_rerank(set_of({}), qe), Error);
}

TEST_CASE("n-best with mock qe prefers the clean candidate") {
  TaskSpec spec;
  spec.seed = 13;
  auto task = std::make_shared<Task>(spec);
  const auto& sv = task->source_vocab();
  const std::string src = sv[1] + " " + sv[2] + " " + sv[3] + " " + sv[4] + " " + sv[5];
  auto gold = tokenize(*task->gold(src));
  auto corrupt = [&](size_t k) {
    auto w = gold;
    for (size_t i = 0; i < k; ++i) w[i] = "qq" + std::to_string(i);
    return detokenize(w);
  };
  MockQeBackend qe(task);
  auto sel = nbest_rerank(set_of({corrupt(1), corrupt(3), corrupt(0)}, src), qe);
  CHECK(sel.index == 2);
}

TEST_CASE("failing scorer names the candidate") {
  prefmt::testing::FailingBackend qe(false);
  try {
    nbest_rerank(set_of({"a", "b"}), qe);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTransport);
    CHECK(std::string(e.what()).find("candidate 0") != std::string::npos);
  }
}

TEST_CASE("utility matrix") {
  auto exact = make_backend("exact");
  Utility u(exact);
  auto m = utility_matrix(set_of({"A", "A", "B"}), u);
  const std::vector<double> expected{1, 1, 0, 1, 1, 0, 0, 0, 1};
  CHECK(std::vector<double>(m.values().begin(), m.values().end()) == expected);
  CHECK(exact->cost_counter() == 9);

  exact->reset_counter();
  auto tri = utility_matrix(set_of({"A", "A", "B", "C"}), u, true);
  CHECK(exact->cost_counter() == 10);
  CHECK(tri.at(3, 3) == 1.0);
  CHECK(tri.at(0, 1) == tri.at(1, 0));

  auto chrf_b = make_backend("chrf");
  std::vector<std::string> hyps{"kalo mi", "kalo nu", "be ta so", "kalo mi nu"};
  auto cm = utility_matrix(set_of(hyps), Utility(chrf_b));
  for (size_t j = 0; j < 4; ++j) {
    for (size_t i = 0; i < 4; ++i) CHECK(cm.at(j, i) == chrf(hyps[i], hyps[j]).value);
  }

  // Asymmetric utilities ignore the cache request.
  chrf_b->reset_counter();
  utility_matrix(set_of(hyps), Utility(chrf_b), true);
  CHECK(chrf_b->cost_counter() == 16);
}

TEST_CASE("mbr selection") {
  Utility exact(make_backend("exact"));
  auto sel = mbr_select(set_of({"A", "A", "B"}), exact);
  CHECK(sel.index == 0);
  CHECK(sel.scores[0] == doctest::Approx(2.0 / 3));
  CHECK(sel.scores[1] == doctest::Approx(2.0 / 3));
  CHECK(sel.scores[2] == doctest::Approx(1.0 / 3));

  auto chrf_b = make_backend("chrf");
  auto single = mbr_select(set_of({"solo"}), Utility(chrf_b));
  CHECK(single.index == 0);
  CHECK(single.scores[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(mbr_select(set_of({}), exact), Error);
}

TEST_CASE("mbr counts") {
  for (size_t n : {1u, 8u, 32u}) {
    auto c = std::make_shared<ConstantBackend>(1.0, true);
    std::vector<std::string> hyps;
    for (size_t i = 0; i < n; ++i) hyps.push_back("h" + std::to_string(i));
    mbr_select(set_of(hyps), Utility(c));
    CHECK(c->cost_counter() == n * n);
    c->reset_counter();
    mbr_select(set_of(hyps), Utility(c), true);
    CHECK(c->cost_counter() == n * (n + 1) / 2);
  }
}

TEST_CASE("mbr invariance under affine utility maps") {
  Rng rng(3);
  const std::vector<std::string> words{"ka", "lo", "mi", "nu", "kalo", "mimi"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> hyps;
    const size_t n = 2 + rng.uniform_index(6);
    for (size_t i = 0; i < n; ++i) {
      std::string h;
      for (size_t k = 0, len = 1 + rng.uniform_index(4); k < len; ++k) {
        h += (k ? " " : "") + words[rng.uniform_index(words.size())];
      }
      hyps.push_back(h);
    }
    const double a = 0.5 + 4 * rng.uniform01();
    const double b = rng.symmetric(3.0);
    auto base = mbr_select(set_of(hyps), Utility(make_backend("chrf")));
    auto mapped = mbr_select(set_of(hyps),
                             Utility(std::make_shared<prefmt::testing::MappedChrfBackend>(
                                 [a, b](double x) { return a * x + b; })));
    CHECK(base.index == mapped.index);
  }
}

TEST_CASE("pipeline selection") {
  auto chrf_b = make_backend("chrf");
  std::vector<std::string> hyps{"kalo mi", "kalo nu", "be ta so", "kalo mi nu", "kalo mi"};
  auto cands = set_of(hyps);
  const auto direct = mbr_select(cands, Utility(chrf_b));

  SUBCASE("mbr alone") {
    std::vector<SelectorStage> stages{MbrStage{chrf_b, false}};
    CHECK(pipeline_select(cands, stages).index == direct.index);
  }
  SUBCASE("keep-all n-best is the identity") {
    auto qe = std::make_shared<TableBackend>(std::unordered_map<std::string, double>{}, 0.3);
    std::vector<SelectorStage> stages{NbestStage{qe, kKeepAll}, MbrStage{chrf_b, false}};
    CHECK(pipeline_select(cands, stages).index == direct.index);
  }
  SUBCASE("n-best alone") {
    auto qe = std::make_shared<TableBackend>(
        std::unordered_map<std::string, double>{{"be ta so", 0.9}, {"kalo nu", 0.95}}, 0.1);
    std::vector<SelectorStage> stages{NbestStage{qe, 2}};
    auto sel = pipeline_select(cands, stages);
    CHECK(sel.index == 1);
  }
  SUBCASE("empty stage list") {
    std::vector<SelectorStage> none;
    CHECK_THROWS_AS(pipeline_select(cands, none), Error);
  }
}

TEST_CASE("n-best then mbr equals the manual two-step computation") {
  TaskSpec spec;
  spec.seed = 17;
  auto task = std::make_shared<Task>(spec);
  auto corpus = gen_corpus(spec, 1);
  const std::string src = corpus.pairs[0].src;
  auto gold = tokenize(*task->gold(src));
  Rng rng(99);
  std::vector<std::string> hyps;
  for (int i = 0; i < 20; ++i) {
    auto w = gold;
    for (auto& t : w) {
      if (rng.bernoulli(0.3)) t = task->target_vocab()[rng.uniform_index(task->target_vocab().size())];
    }
    hyps.push_back(detokenize(w));
  }
  CandidateSet cands{src, hyps, std::nullopt};
  auto qe = std::make_shared<MockQeBackend>(task);
  auto chrf_b = make_backend("chrf");
  std::vector<SelectorStage> stages{NbestStage{qe, 5}, MbrStage{chrf_b, false}};
  auto composed = pipeline_select(cands, stages);

  // Manual: top 5 by QE (stable, lower index first), original order, then MBR.
  auto scored = nbest_rerank(cands, *qe);
  std::vector<size_t> order(20);
  for (size_t i = 0; i < 20; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scored.scores[a] > scored.scores[b]; });
  order.resize(5);
  std::sort(order.begin(), order.end());
  CandidateSet kept{src, {}, std::nullopt};
  for (size_t k : order) kept.hyps.push_back(hyps[k]);
  auto manual = mbr_select(kept, Utility(chrf_b));
  CHECK(composed.index == order[manual.index]);
  CHECK(composed.selected == kept.hyps[manual.index]);
}

TEST_CASE("candidate jsonl") {
  std::vector<CandidateSet> sets{{"s1", {"a", "b"}, std::vector<double>{-1.0, -2.5}}, {"s2", {"c"}, std::nullopt}};
  std::stringstream buf;
  write_candidates_jsonl(buf, sets);
  auto back = read_candidates_jsonl(buf);
  REQUIRE(back.size() == 2);
  CHECK(back[0].hyps == sets[0].hyps);
  CHECK(*back[0].logps == *sets[0].logps);
  CHECK_FALSE(back[1].logps.has_value());

  std::istringstream bad("{\"src\":\"s\",\"hyps\":[]}\n");
  CHECK_THROWS_AS(read_candidates_jsonl(bad), Error);
  std::istringstream mismatch("{\"src\":\"s\",\"hyps\":[\"a\"],\"logps\":[1,2]}\n");
  CHECK_THROWS_AS(read_candidates_jsonl(mismatch), Error);

  std::ostringstream sel_out;
  Selection sel{1, "b", {0.2, 0.8}};
  write_selection_jsonl(sel_out, sets[0], sel);
  CHECK(sel_out.str().find("\"index\":1") != std::string::npos);
}
