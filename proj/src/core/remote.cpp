// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include <httplib.h>

#include <algorithm>
#include <exception>
#include <thread>

#include "json.hpp"
#include "prefmt/error.hpp"
#include "prefmt/scoring.hpp"

namespace prefmt {

namespace {

using nlohmann::json;

std::string request_body(const std::string& metric, std::span<const ScoreRequestItem> items) {
  json body;
  body["metric"] = metric;
  json arr = json::array();
  for (const auto& item : items) {
    json j;
    j["src"] = item.src;
    j["mt"] = item.mt;
    j["ref"] = item.ref ? json(*item.ref) : json(nullptr);
    arr.push_back(std::move(j));
  }
  body["items"] = std::move(arr);
  return body.dump();
}

std::vector<double> parse_scores(const std::string& body, size_t expected, size_t batch) {
  const std::string where = "remote scorer: batch " + std::to_string(batch) + ": ";
  json parsed = json::parse(body, nullptr, false);
  require(!parsed.is_discarded() && parsed.is_object(), ErrorCode::kMalformedResponse,
          where + "response is not a JSON object");
  auto it = parsed.find("scores");
  require(it != parsed.end() && it->is_array(), ErrorCode::kMalformedResponse,
          where + "response lacks a \"scores\" array");
  require(it->size() == expected, ErrorCode::kMalformedResponse,
          where + "expected " + std::to_string(expected) + " scores, got " + std::to_string(it->size()));
  std::vector<double> out;
  out.reserve(expected);
  for (const auto& v : *it) {
    require(v.is_number(), ErrorCode::kMalformedResponse, where + "non-numeric score");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> post_batch(const RemoteConfig& config, std::span<const ScoreRequestItem> items,
                               size_t batch) {
  httplib::Client client(config.endpoint);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::string body = request_body(config.metric, items);
  auto backoff = config.initial_backoff;
  const int attempts = std::max(1, config.max_retries);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post("/v1/score", body, "application/json");
    if (res) {
      if (res->status < 200 || res->status >= 300) {
        std::string detail = res->body;
        json err = json::parse(res->body, nullptr, false);
        if (!err.is_discarded() && err.is_object() && err.contains("error") && err["error"].is_string()) {
          detail = err["error"].get<std::string>();
        }
        fail(ErrorCode::kHttpStatus, "remote scorer: batch " + std::to_string(batch) + ": HTTP " +
                                         std::to_string(res->status) + ": " + detail);
      }
      return parse_scores(res->body, items.size(), batch);
    }
    last_error = httplib::to_string(res.error());
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  fail(ErrorCode::kTransport, "remote scorer: batch " + std::to_string(batch) + ": transport failure after " +
                                  std::to_string(attempts) + " attempts (" + last_error + ") at " +
                                  config.endpoint);
}

}  // namespace

std::vector<double> remote_score_batch(const RemoteConfig& config, std::span<const ScoreRequestItem> items) {
  require(config.batch_limit >= 1, ErrorCode::kInvalidConfiguration, "remote scorer: batch limit must be >= 1");
  const size_t n = items.size();
  const size_t batches = (n + config.batch_limit - 1) / config.batch_limit;
  std::vector<std::vector<double>> results(batches);

  auto run = [&](size_t b) {
    const size_t begin = b * config.batch_limit;
    const size_t end = std::min(n, begin + config.batch_limit);
    results[b] = post_batch(config, items.subspan(begin, end - begin), b);
  };

  const size_t in_flight = static_cast<size_t>(std::max(1, config.max_in_flight));
  if (in_flight <= 1 || batches <= 1) {
    for (size_t b = 0; b < batches; ++b) run(b);
  } else {
    // Waves of at most `in_flight` concurrent requests; each batch owns its
    // result slot, so the output order never depends on completion order.
    std::vector<std::exception_ptr> errors(batches);
    for (size_t wave = 0; wave < batches; wave += in_flight) {
      std::vector<std::thread> threads;
      for (size_t b = wave; b < std::min(batches, wave + in_flight); ++b) {
        threads.emplace_back([&, b] {
          try {
            run(b);
          } catch (...) {
            errors[b] = std::current_exception();
          }
        });
      }
      for (auto& t : threads) t.join();
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<double> out;
  out.reserve(n);
  for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace prefmt
