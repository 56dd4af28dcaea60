// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/textmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "prefmt/error.hpp"

namespace prefmt {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts word_ngrams(const TokenSequence& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

struct OrderStats {
  long matches = 0;
  long total = 0;
};

// Clipped matches and hypothesis n-gram totals for orders 1..max_n.
std::vector<OrderStats> bleu_stats(const TokenSequence& hyp, const TokenSequence& ref,
                                   int max_n) {
  std::vector<OrderStats> stats(max_n);
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts h = word_ngrams(hyp, n);
    const NgramCounts r = word_ngrams(ref, n);
    OrderStats& s = stats[n - 1];
    for (const auto& [gram, count] : h) {
      s.total += count;
      if (auto it = r.find(gram); it != r.end()) s.matches += std::min(count, it->second);
    }
  }
  return stats;
}

double brevity_penalty(double hyp_len, double ref_len) {
  if (hyp_len <= 0.0) return 0.0;
  return std::min(1.0, std::exp(1.0 - ref_len / hyp_len));
}

}  // namespace

const char* metric_name(MetricId id) {
  switch (id) {
    case MetricId::kBleu: return "bleu";
    case MetricId::kChrf: return "chrf";
    case MetricId::kMockQe: return "mock-qe";
    case MetricId::kExactMatch: return "exact";
    case MetricId::kConstant: return "constant";
    case MetricId::kTable: return "table";
    case MetricId::kRemote: return "remote";
  }
  return "unknown";
}

TokenSequence tokenize(std::string_view text) {
  TokenSequence tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

MetricScore sentence_bleu(const TokenSequence& hyp, const TokenSequence& ref, int max_n) {
  require(max_n >= 1, ErrorCode::kInvalidInput, "sentence_bleu: max_n must be >= 1");
  MetricScore score{0.0, MetricId::kBleu, true};
  if (hyp.empty() || ref.empty()) return score;

  const auto stats = bleu_stats(hyp, ref, max_n);
  if (stats[0].matches == 0) return score;
  double log_sum = std::log(static_cast<double>(stats[0].matches) / stats[0].total);
  for (int n = 2; n <= max_n; ++n) {
    const auto& s = stats[n - 1];
    log_sum += std::log((s.matches + 1.0) / (s.total + 1.0));
  }
  const double bp = brevity_penalty(static_cast<double>(hyp.size()),
                                    static_cast<double>(ref.size()));
  score.value = std::clamp(bp * std::exp(log_sum / max_n), 0.0, 1.0);
  return score;
}

MetricScore corpus_bleu(std::span<const std::pair<TokenSequence, TokenSequence>> pairs,
                        int max_n) {
  require(!pairs.empty(), ErrorCode::kInvalidInput, "corpus_bleu: empty corpus");
  require(max_n >= 1, ErrorCode::kInvalidInput, "corpus_bleu: max_n must be >= 1");
  std::vector<OrderStats> totals(max_n);
  double hyp_len = 0.0;
  double ref_len = 0.0;
  for (const auto& [hyp, ref] : pairs) {
    require(!ref.empty(), ErrorCode::kInvalidInput, "corpus_bleu: empty reference");
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    const auto stats = bleu_stats(hyp, ref, max_n);
    for (int n = 0; n < max_n; ++n) {
      totals[n].matches += stats[n].matches;
      totals[n].total += stats[n].total;
    }
  }
  MetricScore score{0.0, MetricId::kBleu, true};
  double log_sum = 0.0;
  for (const auto& s : totals) {
    if (s.matches == 0) return score;
    log_sum += std::log(static_cast<double>(s.matches) / s.total);
  }
  score.value = std::clamp(brevity_penalty(hyp_len, ref_len) * std::exp(log_sum / max_n), 0.0, 1.0);
  return score;
}

std::string normalize_whitespace(std::string_view text) {
  return detokenize(tokenize(text));
}

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= text.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

MetricScore chrf(std::string_view hyp, std::string_view ref, int char_n, double beta) {
  require(char_n >= 1, ErrorCode::kInvalidInput, "chrf: char_n must be >= 1");
  require(beta > 0.0, ErrorCode::kInvalidInput, "chrf: beta must be positive");
  const std::u32string r = utf8_decode(normalize_whitespace(ref));
  const std::u32string h = utf8_decode(normalize_whitespace(hyp));

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= char_n; ++n) {
    std::unordered_map<std::u32string, int> h_counts;
    std::unordered_map<std::u32string, int> r_counts;
    for (size_t i = 0; i + n <= h.size(); ++i) ++h_counts[h.substr(i, n)];
    for (size_t i = 0; i + n <= r.size(); ++i) ++r_counts[r.substr(i, n)];
    const long h_total = h.size() >= static_cast<size_t>(n) ? static_cast<long>(h.size() - n + 1) : 0;
    const long r_total = r.size() >= static_cast<size_t>(n) ? static_cast<long>(r.size() - n + 1) : 0;
    if (h_total == 0 && r_total == 0) continue;
    long matches = 0;
    for (const auto& [gram, count] : h_counts) {
      if (auto it = r_counts.find(gram); it != r_counts.end()) matches += std::min(count, it->second);
    }
    precision_sum += h_total > 0 ? static_cast<double>(matches) / h_total : 0.0;
    recall_sum += r_total > 0 ? static_cast<double>(matches) / r_total : 0.0;
    ++orders;
  }

  MetricScore score{0.0, MetricId::kChrf, true};
  if (orders == 0) return score;
  const double p = precision_sum / orders;
  const double rc = recall_sum / orders;
  if (p + rc <= 0.0) return score;
  const double b2 = beta * beta;
  score.value = std::clamp((1.0 + b2) * p * rc / (b2 * p + rc), 0.0, 1.0);
  return score;
}

}  // namespace prefmt
