// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/rerank.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "prefmt/error.hpp"
#include "prefmt/parallel.hpp"

namespace prefmt {

namespace {

using nlohmann::json;

size_t argmax_lowest(std::span<const double> values) {
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

// Re-scores one item at a time to name the first failing position, then
// rethrows with that position in the message.
template <typename ScoreOne>
[[noreturn]] void locate_failure(const Error& batch_error, size_t n, const std::string& what, ScoreOne&& score_one) {
  for (size_t k = 0; k < n; ++k) {
    try {
      score_one(k);
    } catch (const Error& e) {
      throw Error(e.code(), what + " " + std::to_string(k) + ": " + e.what());
    }
  }
  throw Error(batch_error.code(), what + " batch: " + batch_error.what());
}

}  // namespace

Selection nbest_rerank(const CandidateSet& cands, MetricBackend& qe) {
  require(!cands.hyps.empty(), ErrorCode::kInvalidInput, "nbest_rerank: empty candidate set");
  require(!qe.uses_reference(), ErrorCode::kInvalidInput,
          "nbest_rerank: '" + qe.name() + "' needs references; N-best reranking takes a reference-free scorer");
  std::vector<ScoreRequestItem> items;
  items.reserve(cands.hyps.size());
  for (const auto& h : cands.hyps) items.push_back({cands.src, h, std::nullopt});

  Selection sel;
  try {
    for (const auto& s : qe.score_batch(items)) sel.scores.push_back(s.value);
  } catch (const Error& e) {
    locate_failure(e, items.size(), "nbest_rerank: candidate", [&](size_t k) { qe.score_one(items[k]); });
  }
  sel.index = argmax_lowest(sel.scores);
  sel.selected = cands.hyps[sel.index];
  return sel;
}

UtilityMatrix utility_matrix(const CandidateSet& cands, const Utility& utility, bool symmetric_cache) {
  const size_t n = cands.hyps.size();
  require(n >= 1, ErrorCode::kInvalidInput, "utility_matrix: empty candidate set");
  const bool triangle = symmetric_cache && utility.symmetric();

  std::vector<std::pair<size_t, size_t>> cells;  // (j, i)
  cells.reserve(triangle ? n * (n + 1) / 2 : n * n);
  for (size_t j = 0; j < n; ++j) {
    for (size_t i = triangle ? j : 0; i < n; ++i) cells.emplace_back(j, i);
  }

  UtilityMatrix m(n);
  auto score_range = [&](size_t begin, size_t end) {
    std::vector<std::pair<std::string_view, std::string_view>> pairs;
    pairs.reserve(end - begin);
    for (size_t c = begin; c < end; ++c) {
      pairs.emplace_back(cands.hyps[cells[c].first], cands.hyps[cells[c].second]);
    }
    const auto values = utility.evaluate(cands.src, pairs);
    for (size_t c = begin; c < end; ++c) {
      const auto [j, i] = cells[c];
      m.at(j, i) = values[c - begin];
      if (triangle) m.at(i, j) = values[c - begin];
    }
  };

  try {
    const size_t chunks = std::min<size_t>(cells.size(), static_cast<size_t>(max_threads()));
    parallel_chunks(cells.size(), chunks, [&](size_t, size_t b, size_t e) { score_range(b, e); });
  } catch (const Error& e) {
    for (const auto& [j, i] : cells) {
      try {
        utility(cands.hyps[j], cands.hyps[i]);
      } catch (const Error& inner) {
        throw Error(inner.code(), "utility_matrix: entry (" + std::to_string(j) + ", " + std::to_string(i) +
                                      "): " + inner.what());
      }
    }
    throw;
  }
  return m;
}

Selection mbr_from_matrix(const CandidateSet& cands, const UtilityMatrix& matrix) {
  const size_t n = cands.hyps.size();
  require(n >= 1 && matrix.size() == n, ErrorCode::kInvalidInput, "mbr: matrix does not match the candidate set");
  Selection sel;
  sel.scores.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) sum += matrix.at(j, i);
    sel.scores[i] = sum / static_cast<double>(n);
  }
  sel.index = argmax_lowest(sel.scores);
  sel.selected = cands.hyps[sel.index];
  return sel;
}

Selection mbr_select(const CandidateSet& cands, const Utility& utility, bool symmetric_cache) {
  return mbr_from_matrix(cands, utility_matrix(cands, utility, symmetric_cache));
}

Selection pipeline_select(const CandidateSet& cands, std::span<const SelectorStage> stages) {
  require(!stages.empty(), ErrorCode::kInvalidConfiguration, "pipeline_select: no stages");
  require(!cands.hyps.empty(), ErrorCode::kInvalidConfiguration, "pipeline_select: empty candidate set");

  // Positions into the original candidate list, in original order.
  std::vector<size_t> alive(cands.hyps.size());
  std::iota(alive.begin(), alive.end(), size_t{0});
  std::vector<double> last_scores;

  for (size_t s = 0; s < stages.size(); ++s) {
    CandidateSet current{cands.src, {}, std::nullopt};
    for (size_t k : alive) current.hyps.push_back(cands.hyps[k]);

    if (const auto* nb = std::get_if<NbestStage>(&stages[s])) {
      require(nb->qe != nullptr, ErrorCode::kInvalidConfiguration, "pipeline_select: N-best stage without scorer");
      require(nb->keep >= 1, ErrorCode::kInvalidConfiguration,
              "pipeline_select: stage " + std::to_string(s) + " keeps no candidates");
      const Selection scored = nbest_rerank(current, *nb->qe);
      std::vector<size_t> order(alive.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return scored.scores[a] > scored.scores[b]; });
      order.resize(std::min(order.size(), nb->keep));
      std::sort(order.begin(), order.end());
      std::vector<size_t> next;
      last_scores.clear();
      for (size_t k : order) {
        next.push_back(alive[k]);
        last_scores.push_back(scored.scores[k]);
      }
      alive = std::move(next);
    } else {
      const auto& mbr = std::get<MbrStage>(stages[s]);
      const Selection chosen = mbr_select(current, Utility(mbr.utility), mbr.symmetric_cache);
      alive = {alive[chosen.index]};
      last_scores = {chosen.scores[chosen.index]};
    }
    require(!alive.empty(), ErrorCode::kInvalidConfiguration,
            "pipeline_select: stage " + std::to_string(s) + " left no candidates");
  }

  const size_t best = argmax_lowest(last_scores);
  Selection out;
  out.index = alive[best];
  out.selected = cands.hyps[out.index];
  out.scores = last_scores;
  return out;
}

void write_candidates_jsonl(std::ostream& out, std::span<const CandidateSet> sets) {
  for (const auto& c : sets) {
    json j{{"src", c.src}, {"hyps", c.hyps}};
    j["logps"] = c.logps ? json(*c.logps) : json(nullptr);
    out << j.dump() << '\n';
  }
}

std::vector<CandidateSet> read_candidates_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<CandidateSet> sets;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source_name + ":" + std::to_string(lineno);
    json j = json::parse(line, nullptr, false);
    require(!j.is_discarded() && j.is_object(), ErrorCode::kInvalidArtifact, where + ": not a JSON object");
    require(j.contains("src") && j["src"].is_string(), ErrorCode::kInvalidArtifact, where + ": missing \"src\"");
    require(j.contains("hyps") && j["hyps"].is_array() && !j["hyps"].empty(), ErrorCode::kInvalidArtifact,
            where + ": \"hyps\" must be a non-empty array");
    CandidateSet c;
    c.src = j["src"].get<std::string>();
    for (const auto& h : j["hyps"]) {
      require(h.is_string(), ErrorCode::kInvalidArtifact, where + ": non-string hypothesis");
      c.hyps.push_back(h.get<std::string>());
    }
    if (j.contains("logps") && !j["logps"].is_null()) {
      require(j["logps"].is_array() && j["logps"].size() == c.hyps.size(), ErrorCode::kInvalidArtifact,
              where + ": \"logps\" must match \"hyps\" in length");
      std::vector<double> lp;
      for (const auto& v : j["logps"]) {
        require(v.is_number(), ErrorCode::kInvalidArtifact, where + ": non-numeric log-prob");
        lp.push_back(v.get<double>());
      }
      c.logps = std::move(lp);
    }
    sets.push_back(std::move(c));
  }
  return sets;
}

void write_selection_jsonl(std::ostream& out, const CandidateSet& cands, const Selection& sel) {
  json j{{"src", cands.src}, {"selected", sel.selected}, {"index", sel.index}, {"scores", sel.scores}};
  out << j.dump() << '\n';
}

}  // namespace prefmt
