// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include <algorithm>
#include <functional>
#include <thread>

#include "doctest.h"
#include "fixture_server.hpp"
#include "prefmt/error.hpp"
#include "prefmt/scoring.hpp"
#include "prefmt/synthdata.hpp"

using namespace prefmt;
using prefmt::testing::FixtureServer;

namespace {

std::shared_ptr<const Task> default_task() {
  TaskSpec spec;
  spec.vocab_size = 40;
  spec.seed = 11;
  return std::make_shared<Task>(spec);
}

// Replaces the first `k` words of `gold` with target words that do not occur
// in it.
std::string corrupt(const Task& task, const std::string& gold, int k) {
  auto words = tokenize(gold);
  int next = 0;
  for (int i = 0; i < k; ++i) {
    std::string w;
    do {
      w = task.target_vocab()[next++];
    } while (std::find(words.begin(), words.end(), w) != words.end() || gold.find(w) != std::string::npos);
    words[i] = w;
  }
  return detokenize(words);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("local backends") {
  BleuBackend bleu;
  ScoreRequestItem same{"s", "a b c d", std::string("a b c d")};
  CHECK(bleu.score_one(same).value == doctest::Approx(1.0));
  CHECK(bleu.uses_reference());

  ChrfBackend chrf_backend;
  ScoreRequestItem item{"s", "abce", std::string("abcd")};
  CHECK(chrf_backend.score_one(item).value == doctest::Approx(0.479166666667).epsilon(1e-9));

  ExactMatchBackend exact;
  CHECK(exact.score_one({"s", "x", std::string("y")}).value == 0.0);
  CHECK(exact.score_one({"s", "x", std::string("x")}).value == 1.0);
  CHECK(exact.symmetric());
}

TEST_CASE("reference contract") {
  ChrfBackend b;
  ScoreRequestItem no_ref{"s", "abc", std::nullopt};
  CHECK(code_of([&] { b.score_one(no_ref); }) == ErrorCode::kInvalidInput);
  CHECK(b.cost_counter() == 0);
  std::vector<ScoreRequestItem> empty;
  CHECK(code_of([&] { b.score_batch(empty); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("cost counter equals items scored") {
  ConstantBackend c(0.5, false);
  std::vector<ScoreRequestItem> items(7, ScoreRequestItem{"s", "m", std::nullopt});
  c.score_batch(items);
  c.score_batch(std::span(items).subspan(0, 3));
  c.score_one(items[0]);
  CHECK(c.cost_counter() == 11);
  c.reset_counter();
  CHECK(c.cost_counter() == 0);
}

TEST_CASE("cost counter under concurrent calls") {
  ConstantBackend c(0.5, false);
  std::vector<ScoreRequestItem> items(5, ScoreRequestItem{"s", "m", std::nullopt});
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) c.score_batch(items);
    });
  }
  for (auto& t : threads) t.join();
  CHECK(c.cost_counter() == 4 * 50 * 5);
}

TEST_CASE("mock qe") {
  auto task = default_task();
  MockQeBackend qe(task);
  CHECK_FALSE(qe.uses_reference());
  const std::string src = task->source_vocab()[0] + " " + task->source_vocab()[1] + " " + task->source_vocab()[2] +
                          " " + task->source_vocab()[3] + " " + task->source_vocab()[4] + " " +
                          task->source_vocab()[5];
  const std::string gold = *task->gold(src);

  SUBCASE("gold scores 1") { CHECK(qe.score_one({src, gold, std::nullopt}).value == doctest::Approx(1.0)); }
  SUBCASE("disjoint scores 0") {
    CHECK(mock_qe_score(src, "QQQQ", *task).value == 0.0);
  }
  SUBCASE("delegates to chrf") {
    const std::string mt = corrupt(*task, gold, 1);
    CHECK(mock_qe_score(src, mt, *task).value == doctest::Approx(chrf(mt, gold).value).epsilon(1e-12));
  }
  SUBCASE("more corruption scores lower") {
    const double s0 = mock_qe_score(src, corrupt(*task, gold, 0), *task).value;
    const double s1 = mock_qe_score(src, corrupt(*task, gold, 1), *task).value;
    const double s3 = mock_qe_score(src, corrupt(*task, gold, 3), *task).value;
    CHECK(s0 > s1);
    CHECK(s1 > s3);
  }
  SUBCASE("unknown source") {
    CHECK(code_of([&] { qe.score_one({"nope", "x", std::nullopt}); }) == ErrorCode::kInvalidInput);
  }
}

TEST_CASE("make_backend") {
  CHECK(make_backend("bleu")->metric_id() == MetricId::kBleu);
  CHECK(make_backend("chrf")->metric_id() == MetricId::kChrf);
  CHECK(make_backend("exact")->metric_id() == MetricId::kExactMatch);
  CHECK_FALSE(make_backend("constant:0.25")->uses_reference());
  CHECK(make_backend("constant-ref:1")->uses_reference());
  CHECK(make_backend("remote:comet", nullptr, "http://127.0.0.1:1")->uses_reference());
  CHECK_FALSE(make_backend("remote:comet-qe", nullptr, "http://127.0.0.1:1")->uses_reference());
  CHECK(code_of([] { make_backend("mock-qe"); }) == ErrorCode::kInvalidConfiguration);
  CHECK(code_of([] { make_backend("remote:comet"); }) == ErrorCode::kInvalidConfiguration);
  CHECK(code_of([] { make_backend("constant:abc"); }) == ErrorCode::kInvalidInput);
  CHECK(code_of([] { make_backend("meteor"); }) == ErrorCode::kInvalidInput);
}

TEST_CASE("utility") {
  Utility bleu(make_backend("bleu"));
  CHECK(bleu("a b c d", "a b c d") == doctest::Approx(1.0));
  Utility chrf_u(make_backend("chrf"));
  // u(pseudo_ref, hyp) scores hyp against pseudo_ref.
  CHECK(chrf_u("abcd", "abce") == doctest::Approx(chrf("abce", "abcd").value).epsilon(1e-12));
  Utility exact(make_backend("exact"));
  CHECK(exact("x", "y") == 0.0);
  CHECK(code_of([] { Utility u(make_backend("constant:1")); }) == ErrorCode::kInvalidInput);
}

// ---------------------------------------------------------------------------
// Remote client against the in-process fixture server.
// ---------------------------------------------------------------------------

namespace {

RemoteConfig remote_config(const std::string& url, const std::string& metric = "fixture") {
  RemoteConfig c;
  c.endpoint = url;
  c.metric = metric;
  c.timeout = std::chrono::milliseconds(2000);
  c.initial_backoff = std::chrono::milliseconds(1);
  return c;
}

std::vector<ScoreRequestItem> items_of(std::initializer_list<const char*> mts) {
  std::vector<ScoreRequestItem> out;
  for (const char* m : mts) out.push_back({"src", m, std::string("ref")});
  return out;
}

}  // namespace

TEST_CASE("remote constant fixture") {
  FixtureServer server(FixtureServer::Mode::kConstant, 0.5);
  RemoteBackend backend(remote_config(server.url()));
  auto scores = backend.score_batch(items_of({"a", "b", "c"}));
  REQUIRE(scores.size() == 3);
  for (const auto& s : scores) CHECK(s.value == 0.5);
  CHECK(backend.cost_counter() == 3);
  CHECK(server.requests() == 1);
}

TEST_CASE("remote echo fixture") {
  FixtureServer server(FixtureServer::Mode::kEcho);
  RemoteBackend backend(remote_config(server.url()));
  auto scores = backend.score_batch(items_of({"0.3", "0.7"}));
  CHECK(scores[0].value == 0.3);
  CHECK(scores[1].value == 0.7);
}

TEST_CASE("remote chrf proxy matches native chrf") {
  FixtureServer server(FixtureServer::Mode::kChrfProxy);
  RemoteBackend remote(remote_config(server.url(), "chrf"));
  ChrfBackend native;
  std::vector<ScoreRequestItem> items{
      {"s", "abcd", std::string("abce")},
      {"s", "the cat", std::string("the cat sat")},
      {"s", "kalo  mi", std::string("kalo mi nu")},
      {"s", "identical", std::string("identical")},
  };
  auto r = remote.score_batch(items);
  auto n = native.score_batch(items);
  for (size_t i = 0; i < items.size(); ++i) CHECK(r[i].value == doctest::Approx(n[i].value).epsilon(1e-6));
  CHECK(r[3].value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("remote splits batches above the limit") {
  FixtureServer server(FixtureServer::Mode::kEcho);
  std::vector<ScoreRequestItem> items;
  for (int i = 0; i < 600; ++i) items.push_back({"s", std::to_string(i), std::string("r")});
  for (int in_flight : {1, 3}) {
    auto c = remote_config(server.url());
    c.max_in_flight = in_flight;
    auto scores = remote_score_batch(c, items);
    REQUIRE(scores.size() == 600);
    for (int i = 0; i < 600; ++i) CHECK(scores[i] == static_cast<double>(i));
  }
  auto sizes = server.batch_sizes();
  CHECK(sizes.size() == 6);
  for (size_t s : sizes) CHECK(s <= kRemoteBatchLimit);
}

TEST_CASE("remote 300 items without splitting are rejected by the server") {
  FixtureServer server(FixtureServer::Mode::kConstant);
  auto c = remote_config(server.url());
  c.batch_limit = 300;
  std::vector<ScoreRequestItem> items(300, ScoreRequestItem{"s", "m", std::string("r")});
  try {
    remote_score_batch(c, items);
    FAIL("expected HTTP 400");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kHttpStatus);
    CHECK(std::string(e.what()).find("400") != std::string::npos);
    CHECK(std::string(e.what()).find("limit") != std::string::npos);
  }
}

TEST_CASE("remote error statuses fail without retry") {
  for (int status : {400, 404, 500}) {
    FixtureServer server(FixtureServer::Mode::kFailStatus, 0.0, status);
    RemoteBackend backend(remote_config(server.url()));
    try {
      backend.score_batch(items_of({"a"}));
      FAIL("expected an HTTP error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kHttpStatus);
      CHECK(std::string(e.what()).find(std::to_string(status)) != std::string::npos);
      CHECK(std::string(e.what()).find("fixture failure") != std::string::npos);
    }
    CHECK(server.requests() == 1);
  }
}

TEST_CASE("remote malformed bodies") {
  {
    FixtureServer server(FixtureServer::Mode::kMalformed);
    RemoteBackend backend(remote_config(server.url()));
    CHECK(code_of([&] { backend.score_batch(items_of({"a"})); }) == ErrorCode::kMalformedResponse);
  }
  {
    FixtureServer server(FixtureServer::Mode::kShort);
    RemoteBackend backend(remote_config(server.url()));
    CHECK(code_of([&] { backend.score_batch(items_of({"a", "b"})); }) == ErrorCode::kMalformedResponse);
  }
}

TEST_CASE("remote unreachable endpoint") {
  const int port = prefmt::testing::unused_port();
  auto c = remote_config("http://127.0.0.1:" + std::to_string(port));
  c.max_retries = 3;
  c.timeout = std::chrono::milliseconds(300);
  try {
    remote_score_batch(c, items_of({"a"}));
    FAIL("expected a transport error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTransport);
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}
