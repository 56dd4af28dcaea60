// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefmt/scoring.hpp"
#include "prefmt/synthdata.hpp"

namespace prefmt {

struct ScoredPair {
  SentencePair pair;
  MetricScore qe_score;
  size_t original_index = 0;
};

// Scores every pair exactly once as (src, mt = ref) with a reference-free
// backend. Output follows corpus order. Batches run concurrently.
std::vector<ScoredPair> score_corpus(const Corpus& corpus, MetricBackend& qe, size_t batch_size);

// Streaming variant: corpus JSONL in, scores TSV out ("index\tscore" with six
// decimals). Holds at most max_threads() batches in memory. Returns the
// number of pairs scored.
size_t score_corpus_stream(std::istream& corpus_jsonl, MetricBackend& qe, size_t batch_size,
                           std::ostream& scores_tsv);

std::vector<double> read_scores_tsv(std::istream& in, const std::string& source_name = "scores");
void write_scores_tsv(std::ostream& out, std::span<const ScoredPair> scored);

struct SubsetSpec {
  enum class Mode { kByCount, kByThreshold };
  Mode mode = Mode::kByCount;
  size_t count = 0;
  double threshold = 0.0;

  static SubsetSpec by_count(size_t k) { return {Mode::kByCount, k, 0.0}; }
  static SubsetSpec by_threshold(double tau) { return {Mode::kByThreshold, 0, tau}; }
};

// Original indices of the selected pairs, ascending. By count: the k highest
// scores, boundary ties to the lower index. By threshold: every score >= tau;
// an empty result is allowed and reported on stderr.
std::vector<size_t> select_indices(std::span<const double> scores, const SubsetSpec& spec);

// Selected pairs in original corpus order.
Corpus select_subset(std::span<const ScoredPair> scored, const SubsetSpec& spec,
                     std::shared_ptr<const Task> task = nullptr);

// Second pass of the streaming design: loads the score file, then copies the
// selected lines of the corpus JSONL. Returns the number of pairs kept.
size_t select_subset_stream(std::istream& corpus_jsonl, std::istream& scores_tsv, const SubsetSpec& spec,
                            std::ostream& out_jsonl);

struct SweepEntry {
  size_t size = 0;
  std::map<std::string, double> scores;
  std::optional<std::string> error;
};

struct SweepReport {
  std::string selection_metric;
  std::vector<SweepEntry> entries;
  std::optional<size_t> chosen_size;

  nlohmann::json to_json() const;
};

using TrainAndEval = std::function<std::map<std::string, double>(const Corpus& subset)>;

// Trains on the top-`size` subset for each size (strictly increasing) and
// picks the size with the best `selection_metric`; ties go to the smaller
// size. A failing size is recorded and skipped.
SweepReport sweep_subsets(std::span<const ScoredPair> scored, std::span<const size_t> sizes,
                          const TrainAndEval& train_and_eval, const std::string& selection_metric = "chrf",
                          std::shared_ptr<const Task> task = nullptr);

}  // namespace prefmt
