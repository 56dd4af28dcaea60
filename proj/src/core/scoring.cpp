// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/scoring.hpp"

#include <charconv>

#include "prefmt/error.hpp"

namespace prefmt {

std::vector<MetricScore> MetricBackend::score_batch(std::span<const ScoreRequestItem> items) {
  require(!items.empty(), ErrorCode::kInvalidInput, name_ + ": empty scoring batch");
  if (uses_reference_) {
    for (size_t i = 0; i < items.size(); ++i) {
      require(items[i].ref.has_value(), ErrorCode::kInvalidInput,
              name_ + ": item " + std::to_string(i) + " lacks the reference this metric needs");
    }
  }
  counter_.fetch_add(items.size());
  const std::vector<double> values = compute(items);
  require(values.size() == items.size(), ErrorCode::kMalformedResponse,
          name_ + ": backend returned " + std::to_string(values.size()) + " scores for " +
              std::to_string(items.size()) + " items");
  std::vector<MetricScore> out;
  out.reserve(values.size());
  for (double v : values) out.push_back({v, id_, uses_reference_});
  return out;
}

MetricScore MetricBackend::score_one(const ScoreRequestItem& item) {
  return score_batch(std::span<const ScoreRequestItem>(&item, 1)).front();
}

BleuBackend::BleuBackend(int max_n) : MetricBackend(MetricId::kBleu, "bleu", true), max_n_(max_n) {}

std::vector<double> BleuBackend::compute(std::span<const ScoreRequestItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    out.push_back(sentence_bleu(tokenize(item.mt), tokenize(*item.ref), max_n_).value);
  }
  return out;
}

ChrfBackend::ChrfBackend(int char_n, double beta)
    : MetricBackend(MetricId::kChrf, "chrf", true), char_n_(char_n), beta_(beta) {}

std::vector<double> ChrfBackend::compute(std::span<const ScoreRequestItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(chrf(item.mt, *item.ref, char_n_, beta_).value);
  return out;
}

MetricScore mock_qe_score(std::string_view src, std::string_view mt, const GoldOracle& oracle) {
  const std::optional<std::string> gold = oracle.gold(src);
  require(gold.has_value(), ErrorCode::kInvalidInput,
          "mock-qe: source not covered by the gold oracle: '" + std::string(src) + "'");
  MetricScore score = chrf(mt, *gold);
  score.metric = MetricId::kMockQe;
  score.used_reference = false;
  return score;
}

MockQeBackend::MockQeBackend(std::shared_ptr<const GoldOracle> oracle)
    : MetricBackend(MetricId::kMockQe, "mock-qe", false), oracle_(std::move(oracle)) {
  require(oracle_ != nullptr, ErrorCode::kInvalidConfiguration, "mock-qe: no gold oracle");
}

std::vector<double> MockQeBackend::compute(std::span<const ScoreRequestItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(mock_qe_score(item.src, item.mt, *oracle_).value);
  return out;
}

ExactMatchBackend::ExactMatchBackend() : MetricBackend(MetricId::kExactMatch, "exact", true) {}

std::vector<double> ExactMatchBackend::compute(std::span<const ScoreRequestItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(item.mt == *item.ref ? 1.0 : 0.0);
  return out;
}

ConstantBackend::ConstantBackend(double value, bool uses_reference, uint64_t work_per_item)
    : MetricBackend(MetricId::kConstant, uses_reference ? "constant-ref" : "constant", uses_reference),
      value_(value),
      work_per_item_(work_per_item) {}

std::vector<double> ConstantBackend::compute(std::span<const ScoreRequestItem> items) {
  std::vector<double> out(items.size(), value_);
  if (work_per_item_ > 0) {
    for (size_t i = 0; i < items.size(); ++i) {
      volatile double acc = 0.0;
      for (uint64_t k = 0; k < work_per_item_; ++k) acc = acc + 1e-9 * static_cast<double>(k & 7);
      out[i] = value_ + 0.0 * acc;
    }
  }
  return out;
}

TableBackend::TableBackend(std::unordered_map<std::string, double> table, double fallback)
    : MetricBackend(MetricId::kTable, "table", false), table_(std::move(table)), fallback_(fallback) {}

std::vector<double> TableBackend::compute(std::span<const ScoreRequestItem> items) {
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto it = table_.find(item.mt);
    out.push_back(it == table_.end() ? fallback_ : it->second);
  }
  return out;
}

RemoteBackend::RemoteBackend(RemoteConfig config)
    : MetricBackend(MetricId::kRemote, "remote:" + config.metric, config.uses_reference),
      config_(std::move(config)) {
  require(!config_.endpoint.empty(), ErrorCode::kInvalidConfiguration,
          "remote scorer: no endpoint configured");
  require(!config_.metric.empty(), ErrorCode::kInvalidConfiguration, "remote scorer: empty metric name");
}

std::vector<double> RemoteBackend::compute(std::span<const ScoreRequestItem> items) {
  return remote_score_batch(config_, items);
}

namespace {

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorCode::kInvalidInput,
          "backend spec: cannot parse " + std::string(what) + " '" + std::string(text) + "'");
  return v;
}

}  // namespace

BackendPtr make_backend(std::string_view spec, std::shared_ptr<const GoldOracle> oracle,
                        std::string_view endpoint) {
  if (spec == "bleu") return std::make_shared<BleuBackend>();
  if (spec == "chrf") return std::make_shared<ChrfBackend>();
  if (spec == "exact") return std::make_shared<ExactMatchBackend>();
  if (spec == "mock-qe") {
    require(oracle != nullptr, ErrorCode::kInvalidConfiguration,
            "mock-qe needs the task definition for its gold oracle");
    return std::make_shared<MockQeBackend>(std::move(oracle));
  }
  if (spec.starts_with("constant:")) {
    return std::make_shared<ConstantBackend>(parse_number(spec.substr(9), "constant"), false);
  }
  if (spec.starts_with("constant-ref:")) {
    return std::make_shared<ConstantBackend>(parse_number(spec.substr(13), "constant"), true);
  }
  if (spec.starts_with("remote:")) {
    RemoteConfig config;
    config.endpoint = std::string(endpoint);
    config.metric = std::string(spec.substr(7));
    config.uses_reference = config.metric.find("qe") == std::string::npos;
    return std::make_shared<RemoteBackend>(std::move(config));
  }
  fail(ErrorCode::kInvalidInput, "unknown metric backend '" + std::string(spec) + "'");
}

Utility::Utility(BackendPtr backend) : backend_(std::move(backend)) {
  require(backend_ != nullptr, ErrorCode::kInvalidInput, "utility: null backend");
  require(backend_->uses_reference(), ErrorCode::kInvalidInput,
          "utility: backend '" + backend_->name() + "' is reference-free; MBR needs a reference-based metric");
}

double Utility::operator()(const std::string& pseudo_ref, const std::string& hyp) const {
  const std::pair<std::string_view, std::string_view> pair(pseudo_ref, hyp);
  return evaluate("", std::span(&pair, 1)).front();
}

std::vector<double> Utility::evaluate(
    std::string_view src, std::span<const std::pair<std::string_view, std::string_view>> pairs) const {
  std::vector<ScoreRequestItem> items;
  items.reserve(pairs.size());
  for (const auto& [ref, hyp] : pairs) {
    items.push_back({std::string(src), std::string(hyp), std::string(ref)});
  }
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& s : backend_->score_batch(items)) out.push_back(s.value);
  return out;
}

Utility as_utility(BackendPtr backend) { return Utility(std::move(backend)); }

}  // namespace prefmt
