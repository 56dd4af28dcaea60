// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefmt {

using TokenSequence = std::vector<std::string>;

enum class MetricId {
  kBleu,
  kChrf,
  kMockQe,
  kExactMatch,
  kConstant,
  kTable,
  kRemote,
};

const char* metric_name(MetricId id);

struct MetricScore {
  double value = 0.0;
  MetricId metric = MetricId::kBleu;
  bool used_reference = true;
};

// Splits on runs of ASCII whitespace after trimming.
TokenSequence tokenize(std::string_view text);

// Joins tokens with single spaces.
std::string detokenize(std::span<const std::string> tokens);

// Sentence-level BLEU: geometric mean of clipped n-gram precisions for
// n = 1..max_n times the brevity penalty min(1, exp(1 - |ref|/|hyp|)).
// Orders n >= 2 use add-one smoothing on both numerator and denominator;
// unigram precision is unsmoothed, so a hypothesis without a single matching
// token scores 0. An empty hypothesis or reference scores 0.
MetricScore sentence_bleu(const TokenSequence& hyp, const TokenSequence& ref, int max_n = 4);

// Corpus-level BLEU with n-gram statistics summed over all pairs before the
// precisions are formed. Unsmoothed: a zero count at any order yields 0.
MetricScore corpus_bleu(std::span<const std::pair<TokenSequence, TokenSequence>> pairs,
                        int max_n = 4);

// Character n-gram F-score. Whitespace runs are collapsed to a single space
// and trimmed, the strings are split into code points, and precision and
// recall are averaged uniformly over the orders 1..char_n that have at least
// one n-gram on either side before being combined into F_beta. Two empty
// strings score 0.
MetricScore chrf(std::string_view hyp, std::string_view ref, int char_n = 6, double beta = 2.0);

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view text);

}  // namespace prefmt
