// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "prefmt/textmetrics.hpp"

namespace prefmt {

struct ScoreRequestItem {
  std::string src;
  std::string mt;
  std::optional<std::string> ref;
};

// Source of clean targets behind the mock QE scorer. Returns nullopt for a
// source the oracle cannot transduce.
class GoldOracle {
 public:
  virtual ~GoldOracle() = default;
  virtual std::optional<std::string> gold(std::string_view src) const = 0;
};

// Uniform scorer interface. `score_batch` validates the reference contract,
// bumps the cost counter by the batch size and delegates to `compute`.
// Implementations must be safe for concurrent `score_batch` calls.
class MetricBackend {
 public:
  MetricBackend(MetricId id, std::string name, bool uses_reference)
      : id_(id), name_(std::move(name)), uses_reference_(uses_reference) {}
  virtual ~MetricBackend() = default;

  MetricBackend(const MetricBackend&) = delete;
  MetricBackend& operator=(const MetricBackend&) = delete;

  MetricId metric_id() const { return id_; }
  const std::string& name() const { return name_; }
  bool uses_reference() const { return uses_reference_; }

  // True when u(a, b) = u(b, a) for every pair; lets MBR fill only one
  // triangle of the utility matrix.
  virtual bool symmetric() const { return false; }

  std::vector<MetricScore> score_batch(std::span<const ScoreRequestItem> items);
  MetricScore score_one(const ScoreRequestItem& item);

  uint64_t cost_counter() const { return counter_.load(); }
  void reset_counter() { counter_.store(0); }

 protected:
  virtual std::vector<double> compute(std::span<const ScoreRequestItem> items) = 0;

 private:
  MetricId id_;
  std::string name_;
  bool uses_reference_;
  std::atomic<uint64_t> counter_{0};
};

using BackendPtr = std::shared_ptr<MetricBackend>;

class BleuBackend final : public MetricBackend {
 public:
  explicit BleuBackend(int max_n = 4);

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;

 private:
  int max_n_;
};

class ChrfBackend final : public MetricBackend {
 public:
  explicit ChrfBackend(int char_n = 6, double beta = 2.0);

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;

 private:
  int char_n_;
  double beta_;
};

// Reference-free stand-in for a neural QE model: chrF of the MT output
// against the oracle's clean target for the source.
MetricScore mock_qe_score(std::string_view src, std::string_view mt, const GoldOracle& oracle);

class MockQeBackend final : public MetricBackend {
 public:
  explicit MockQeBackend(std::shared_ptr<const GoldOracle> oracle);

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;

 private:
  std::shared_ptr<const GoldOracle> oracle_;
};

// u(a, b) = 1 iff a == b. Reference-based and symmetric.
class ExactMatchBackend final : public MetricBackend {
 public:
  ExactMatchBackend();
  bool symmetric() const override { return true; }

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;
};

// Returns a fixed value. `work_per_item` spins a fixed amount of arithmetic
// per item so benchmarks get a constant, non-trivial per-call cost.
class ConstantBackend final : public MetricBackend {
 public:
  ConstantBackend(double value, bool uses_reference, uint64_t work_per_item = 0);
  bool symmetric() const override { return true; }

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;

 private:
  double value_;
  uint64_t work_per_item_;
};

// Reference-free fixture scorer: looks the MT string up in a table.
class TableBackend final : public MetricBackend {
 public:
  TableBackend(std::unordered_map<std::string, double> table, double fallback);

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;

 private:
  std::unordered_map<std::string, double> table_;
  double fallback_;
};

// ---------------------------------------------------------------------------
// Remote scoring over HTTP.
//
// POST {endpoint}/v1/score
//   request:  {"metric": str, "items": [{"src": str, "mt": str, "ref": str|null}]}
//   response: {"scores": [number]}  (same length as items)
//   errors:   {"error": str} with a non-2xx status
// ---------------------------------------------------------------------------

inline constexpr size_t kRemoteBatchLimit = 256;

struct RemoteConfig {
  std::string endpoint;  // e.g. "http://127.0.0.1:8311"
  std::string metric;
  bool uses_reference = true;
  std::chrono::milliseconds timeout{10000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{50};
  size_t batch_limit = kRemoteBatchLimit;
  int max_in_flight = 1;
};

// Scores `items` in request order, splitting into ceil(n / batch_limit)
// requests. Transport failures (connect, read, timeout) are retried up to
// max_retries times with doubling backoff; HTTP error statuses and malformed
// bodies fail immediately. Errors name the failing batch index.
std::vector<double> remote_score_batch(const RemoteConfig& config,
                                       std::span<const ScoreRequestItem> items);

class RemoteBackend final : public MetricBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  const RemoteConfig& config() const { return config_; }

 protected:
  std::vector<double> compute(std::span<const ScoreRequestItem> items) override;

 private:
  RemoteConfig config_;
};

// Builds a backend from a short spec string:
//   bleu | chrf | exact | mock-qe | constant:<v> | constant-ref:<v> |
//   remote:<metric>
// mock-qe needs `oracle`; remote needs `endpoint`. Remote metrics whose name
// contains "qe" are treated as reference-free.
BackendPtr make_backend(std::string_view spec, std::shared_ptr<const GoldOracle> oracle = nullptr,
                        std::string_view endpoint = {});

// Utility u(pseudo_ref, hyp) backed by a reference-based scorer: the
// pseudo-reference is sent in the ref slot and the hypothesis in the mt slot.
class Utility {
 public:
  explicit Utility(BackendPtr backend);

  double operator()(const std::string& pseudo_ref, const std::string& hyp) const;

  // Scores (pseudo_ref, hyp) pairs for one source in a single batch.
  std::vector<double> evaluate(std::string_view src,
                               std::span<const std::pair<std::string_view, std::string_view>> pairs) const;

  bool symmetric() const { return backend_->symmetric(); }
  MetricBackend& backend() const { return *backend_; }

 private:
  BackendPtr backend_;
};

Utility as_utility(BackendPtr backend);

}  // namespace prefmt
