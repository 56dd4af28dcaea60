// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/filter.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>

#include "prefmt/error.hpp"
#include "prefmt/parallel.hpp"

namespace prefmt {

namespace {

using nlohmann::json;

// Scores pairs[offset + k] for k in [0, pairs.size()); batches of batch_size
// are scored concurrently and written back by position.
std::vector<double> score_block(std::span<const SentencePair> pairs, size_t offset, MetricBackend& qe,
                                size_t batch_size) {
  require(!qe.uses_reference(), ErrorCode::kInvalidInput,
          "filter: '" + qe.name() + "' needs references; filtering takes a reference-free scorer");
  std::vector<double> out(pairs.size());
  const size_t batches = (pairs.size() + batch_size - 1) / batch_size;
  auto run_batch = [&](size_t b) {
    const size_t begin = b * batch_size;
    const size_t end = std::min(pairs.size(), begin + batch_size);
    std::vector<ScoreRequestItem> items;
    items.reserve(end - begin);
    for (size_t k = begin; k < end; ++k) items.push_back({pairs[k].src, pairs[k].ref, std::nullopt});
    std::vector<MetricScore> scores;
    try {
      scores = qe.score_batch(items);
    } catch (const Error& e) {
      for (size_t k = begin; k < end; ++k) {
        try {
          qe.score_one(items[k - begin]);
        } catch (const Error& inner) {
          throw Error(inner.code(),
                      "filter: scoring failed at original_index " + std::to_string(offset + k) + ": " + inner.what());
        }
      }
      throw Error(e.code(), "filter: scoring failed for original_index range [" + std::to_string(offset + begin) +
                                ", " + std::to_string(offset + end) + "): " + e.what());
    }
    for (size_t k = begin; k < end; ++k) out[k] = scores[k - begin].value;
  };
  parallel_chunks(batches, batches, [&](size_t, size_t b, size_t) { run_batch(b); });
  return out;
}

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::vector<ScoredPair> score_corpus(const Corpus& corpus, MetricBackend& qe, size_t batch_size) {
  require(batch_size >= 1, ErrorCode::kInvalidInput, "filter: batch_size must be >= 1");
  const auto values = score_block(corpus.pairs, 0, qe, batch_size);
  std::vector<ScoredPair> out;
  out.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    out.push_back({corpus.pairs[i], MetricScore{values[i], qe.metric_id(), false}, i});
  }
  return out;
}

size_t score_corpus_stream(std::istream& corpus_jsonl, MetricBackend& qe, size_t batch_size,
                           std::ostream& scores_tsv) {
  require(batch_size >= 1, ErrorCode::kInvalidInput, "filter: batch_size must be >= 1");
  const size_t block = batch_size * static_cast<size_t>(max_threads());
  size_t offset = 0;
  std::string line;
  std::vector<std::string> lines;
  scores_tsv << "index\tqe_score\n";
  bool done = false;
  while (!done) {
    lines.clear();
    while (lines.size() < block) {
      if (!std::getline(corpus_jsonl, line)) {
        done = true;
        break;
      }
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      lines.push_back(line);
    }
    if (lines.empty()) break;
    std::string joined;
    for (const auto& l : lines) {
      joined += l;
      joined.push_back('\n');
    }
    std::istringstream chunk(joined);
    const auto pairs = read_corpus_jsonl(chunk, "corpus block at " + std::to_string(offset));
    const auto values = score_block(pairs, offset, qe, batch_size);
    for (size_t k = 0; k < values.size(); ++k) scores_tsv << (offset + k) << '\t' << format_score(values[k]) << '\n';
    offset += pairs.size();
  }
  return offset;
}

std::vector<double> read_scores_tsv(std::istream& in, const std::string& source_name) {
  std::vector<double> scores;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.starts_with("index")) continue;
    std::istringstream fields(line);
    size_t index = 0;
    double value = 0.0;
    require(static_cast<bool>(fields >> index >> value), ErrorCode::kInvalidArtifact,
            source_name + ":" + std::to_string(lineno) + ": expected \"index<TAB>score\"");
    require(index == scores.size(), ErrorCode::kInvalidArtifact,
            source_name + ":" + std::to_string(lineno) + ": indices must be consecutive from 0");
    scores.push_back(value);
  }
  return scores;
}

void write_scores_tsv(std::ostream& out, std::span<const ScoredPair> scored) {
  out << "index\tqe_score\n";
  for (const auto& s : scored) out << s.original_index << '\t' << format_score(s.qe_score.value) << '\n';
}

std::vector<size_t> select_indices(std::span<const double> scores, const SubsetSpec& spec) {
  std::vector<size_t> picked;
  if (spec.mode == SubsetSpec::Mode::kByThreshold) {
    require(spec.threshold >= 0.0, ErrorCode::kInvalidInput, "select: threshold must be >= 0");
    for (size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= spec.threshold) picked.push_back(i);
    }
    if (picked.empty()) {
      std::cerr << "warning: no pair reaches the threshold " << spec.threshold << "; the subset is empty\n";
    }
    return picked;
  }
  require(spec.count >= 1, ErrorCode::kInvalidInput, "select: --top-k must be >= 1");
  require(spec.count <= scores.size(), ErrorCode::kInvalidInput,
          "select: top-k " + std::to_string(spec.count) + " exceeds the corpus size " + std::to_string(scores.size()));
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto before = [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + (spec.count - 1), order.end(), before);
  order.resize(spec.count);
  std::sort(order.begin(), order.end());
  return order;
}

Corpus select_subset(std::span<const ScoredPair> scored, const SubsetSpec& spec, std::shared_ptr<const Task> task) {
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& s : scored) scores.push_back(s.qe_score.value);
  Corpus out;
  out.task = std::move(task);
  for (size_t i : select_indices(scores, spec)) out.pairs.push_back(scored[i].pair);
  return out;
}

size_t select_subset_stream(std::istream& corpus_jsonl, std::istream& scores_tsv, const SubsetSpec& spec,
                            std::ostream& out_jsonl) {
  const std::vector<double> scores = read_scores_tsv(scores_tsv);
  const std::vector<size_t> picked = select_indices(scores, spec);
  size_t next = 0;
  size_t index = 0;
  std::string line;
  while (next < picked.size() && std::getline(corpus_jsonl, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (index == picked[next]) {
      out_jsonl << line << '\n';
      ++next;
    }
    ++index;
  }
  require(next == picked.size(), ErrorCode::kInvalidArtifact,
          "select: the score file lists more pairs than the corpus holds");
  return picked.size();
}

json SweepReport::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries) {
    json j{{"size", e.size}, {"scores", e.scores}};
    j["error"] = e.error ? json(*e.error) : json(nullptr);
    entries_json.push_back(std::move(j));
  }
  json out{{"selection_metric", selection_metric}, {"entries", entries_json}};
  out["chosen_size"] = chosen_size ? json(*chosen_size) : json(nullptr);
  return out;
}

SweepReport sweep_subsets(std::span<const ScoredPair> scored, std::span<const size_t> sizes,
                          const TrainAndEval& train_and_eval, const std::string& selection_metric,
                          std::shared_ptr<const Task> task) {
  require(!sizes.empty(), ErrorCode::kInvalidInput, "sweep: no sizes given");
  for (size_t i = 0; i < sizes.size(); ++i) {
    require(sizes[i] >= 1 && sizes[i] <= scored.size(), ErrorCode::kInvalidInput,
            "sweep: size " + std::to_string(sizes[i]) + " outside [1, " + std::to_string(scored.size()) + "]");
    require(i == 0 || sizes[i] > sizes[i - 1], ErrorCode::kInvalidInput, "sweep: sizes must be strictly increasing");
  }
  SweepReport report;
  report.selection_metric = selection_metric;
  std::optional<double> best;
  for (size_t size : sizes) {
    SweepEntry entry;
    entry.size = size;
    try {
      entry.scores = train_and_eval(select_subset(scored, SubsetSpec::by_count(size), task));
      auto it = entry.scores.find(selection_metric);
      if (it == entry.scores.end()) {
        entry.error = "selection metric '" + selection_metric + "' missing from the evaluation";
      } else if (!best || it->second > *best) {
        best = it->second;
        report.chosen_size = size;
      }
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace prefmt
