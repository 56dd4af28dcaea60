// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "prefmt/scoring.hpp"
#include "prefmt/textmetrics.hpp"

namespace prefmt {

struct TaskSpec {
  int vocab_size = 40;
  int min_len = 4;
  int max_len = 10;
  // Fraction of source words that open a swap with a following non-opener.
  double swap_rate = 0.2;
  // Fraction of pairs whose reference is corrupted.
  double noise_rate = 0.0;
  // 0 draws source words uniformly; s > 0 draws word k with weight 1/(k+1)^s.
  double zipf_exponent = 0.0;
  uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);

// The synthetic transduction behind a TaskSpec. Every source word maps to a
// target word through a fixed bijection; then any adjacent pair whose first
// word is a swap opener and whose second word is not gets reordered. The rule
// is local (each output position depends on the source words at t-1, t, t+1)
// and length-preserving.
class Task final : public GoldOracle {
 public:
  explicit Task(const TaskSpec& spec);

  const TaskSpec& spec() const { return spec_; }
  const std::vector<std::string>& source_vocab() const { return source_words_; }
  const std::vector<std::string>& target_vocab() const { return target_words_; }

  std::optional<int> source_id(std::string_view word) const;
  std::optional<int> target_id(std::string_view word) const;

  // Clean target ids for source ids.
  std::vector<int> transduce(const std::vector<int>& src) const;

  // Clean target for a source sentence, or nullopt if it has unknown words.
  std::optional<std::string> gold(std::string_view src) const override;

  bool is_opener(int source_word) const { return opener_[source_word]; }
  int mapped(int source_word) const { return mapping_[source_word]; }

 private:
  TaskSpec spec_;
  std::vector<std::string> source_words_;
  std::vector<std::string> target_words_;
  std::unordered_map<std::string, int> source_index_;
  std::unordered_map<std::string, int> target_index_;
  std::vector<int> mapping_;
  std::vector<bool> opener_;
};

struct SentencePair {
  std::string src;
  std::string ref;
  // Generator ledger; never written to corpus files.
  bool is_noisy = false;
};

struct Corpus {
  std::vector<SentencePair> pairs;
  std::shared_ptr<const Task> task;

  size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

Corpus gen_corpus(const TaskSpec& spec, size_t size);

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Shuffles by `seed` and cuts floor(train_frac * n) / floor(dev_frac * n) /
// remainder. Every part must be non-empty.
CorpusSplit split(const Corpus& corpus, double train_frac, double dev_frac, uint64_t seed);

// Replaces every reference with the oracle's clean target.
Corpus with_gold_references(const Corpus& corpus);

// Corpus JSONL: one {"src": ..., "ref": ...} object per line.
void write_corpus_jsonl(std::ostream& out, const Corpus& corpus);
std::vector<SentencePair> read_corpus_jsonl(std::istream& in, const std::string& source_name = "corpus");
// Ledger TSV with header "index\tis_noisy".
void write_ledger_tsv(std::ostream& out, const Corpus& corpus);

// File helpers. The task definition is stored as JSON next to the corpus.
void save_corpus(const Corpus& corpus, const std::string& jsonl_path, const std::string& task_path = {},
                 const std::string& ledger_path = {});
Corpus load_corpus(const std::string& jsonl_path, const std::string& task_path);
std::shared_ptr<const Task> load_task(const std::string& task_path);
void save_task(const TaskSpec& spec, const std::string& task_path);

}  // namespace prefmt
