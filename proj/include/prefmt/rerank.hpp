// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "prefmt/scoring.hpp"

namespace prefmt {

struct CandidateSet {
  std::string src;
  std::vector<std::string> hyps;
  std::optional<std::vector<double>> logps;
};

struct Selection {
  size_t index = 0;
  std::string selected;
  // N-best: the QE score per candidate. MBR: expected utility per candidate.
  std::vector<double> scores;
};

// argmax_i QE(src, hyp_i) with exactly N scorer evaluations; ties go to the
// lowest index.
Selection nbest_rerank(const CandidateSet& cands, MetricBackend& qe);

// Row j, column i holds u(hyp_j, hyp_i): hyp_j is the pseudo-reference.
class UtilityMatrix {
 public:
  UtilityMatrix() = default;
  explicit UtilityMatrix(size_t n) : n_(n), values_(n * n, 0.0) {}

  size_t size() const { return n_; }
  double at(size_t j, size_t i) const { return values_[j * n_ + i]; }
  double& at(size_t j, size_t i) { return values_[j * n_ + i]; }
  std::span<const double> values() const { return values_; }

 private:
  size_t n_ = 0;
  std::vector<double> values_;
};

// Exactly N^2 utility evaluations, or N(N+1)/2 when `symmetric_cache` is set
// and the utility declares itself symmetric. Entries are computed in parallel
// chunks; the matrix does not depend on the evaluation order.
UtilityMatrix utility_matrix(const CandidateSet& cands, const Utility& utility, bool symmetric_cache = false);

// Expected utility of candidate i: (1/N) * sum_j u(hyp_j, hyp_i), self term
// included. Returns the argmax, ties to the lowest index.
Selection mbr_from_matrix(const CandidateSet& cands, const UtilityMatrix& matrix);
Selection mbr_select(const CandidateSet& cands, const Utility& utility, bool symmetric_cache = false);

inline constexpr size_t kKeepAll = std::numeric_limits<size_t>::max();

// Keeps the `keep` best candidates by QE score, in their original order.
struct NbestStage {
  BackendPtr qe;
  size_t keep = 1;
};

// Reduces the set to its MBR choice.
struct MbrStage {
  BackendPtr utility;
  bool symmetric_cache = false;
};

using SelectorStage = std::variant<NbestStage, MbrStage>;

// Applies the stages left to right. If more than one candidate survives the
// last stage, the one with the best last-stage score wins.
Selection pipeline_select(const CandidateSet& cands, std::span<const SelectorStage> stages);

// Candidate JSONL: {"src": str, "hyps": [str], "logps": [number]|null}.
void write_candidates_jsonl(std::ostream& out, std::span<const CandidateSet> sets);
std::vector<CandidateSet> read_candidates_jsonl(std::istream& in, const std::string& source_name = "candidates");

// Selection report JSONL: {"src", "selected", "index", "scores"}.
void write_selection_jsonl(std::ostream& out, const CandidateSet& cands, const Selection& sel);

}  // namespace prefmt
