// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "prefmt/error.hpp"
#include "prefmt/rng.hpp"

namespace prefmt {

namespace {

using nlohmann::json;

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr int kSyllables = 14 * 5;
constexpr int kTargetOffset = 2000;

// Word number k spelled with at least two consonant-vowel syllables.
std::string spell(int k) {
  std::string word;
  int syllables = 0;
  while (k > 0 || syllables < 2) {
    const int s = k % kSyllables;
    word.push_back(kConsonants[s / 5]);
    word.push_back(kVowels[s % 5]);
    k /= kSyllables;
    ++syllables;
  }
  return word;
}

void check_rate(double v, const char* name) {
  require(v >= 0.0 && v <= 1.0, ErrorCode::kInvalidInput,
          std::string("task spec: ") + name + " must lie in [0, 1], got " + std::to_string(v));
}

}  // namespace

void TaskSpec::validate() const {
  require(vocab_size >= 2 && vocab_size <= 1000, ErrorCode::kInvalidInput,
          "task spec: vocab_size must lie in [2, 1000], got " + std::to_string(vocab_size));
  require(min_len >= 1 && min_len <= max_len && max_len <= 64, ErrorCode::kInvalidInput,
          "task spec: need 1 <= min_len <= max_len <= 64, got " + std::to_string(min_len) + ".." +
              std::to_string(max_len));
  check_rate(swap_rate, "swap_rate");
  check_rate(noise_rate, "noise_rate");
  require(zipf_exponent >= 0.0 && std::isfinite(zipf_exponent), ErrorCode::kInvalidInput,
          "task spec: zipf_exponent must be finite and >= 0");
}

json to_json(const TaskSpec& spec) {
  return json{{"vocab_size", spec.vocab_size}, {"min_len", spec.min_len},
              {"max_len", spec.max_len},       {"swap_rate", spec.swap_rate},
              {"noise_rate", spec.noise_rate}, {"zipf_exponent", spec.zipf_exponent},
              {"seed", spec.seed}};
}

TaskSpec task_spec_from_json(const json& j) {
  TaskSpec spec;
  try {
    spec.vocab_size = j.at("vocab_size").get<int>();
    spec.min_len = j.at("min_len").get<int>();
    spec.max_len = j.at("max_len").get<int>();
    spec.swap_rate = j.at("swap_rate").get<double>();
    spec.noise_rate = j.at("noise_rate").get<double>();
    spec.zipf_exponent = j.value("zipf_exponent", 0.0);
    spec.seed = j.at("seed").get<uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArtifact, std::string("task definition: ") + e.what());
  }
  spec.validate();
  return spec;
}

Task::Task(const TaskSpec& spec) : spec_(spec) {
  spec_.validate();
  const int v = spec_.vocab_size;
  for (int k = 0; k < v; ++k) {
    source_words_.push_back(spell(k));
    target_words_.push_back(spell(k + kTargetOffset));
    source_index_.emplace(source_words_.back(), k);
    target_index_.emplace(target_words_.back(), k);
  }
  Rng rng(Rng::mix(spec_.seed, 0x7A5C));
  mapping_.resize(v);
  std::iota(mapping_.begin(), mapping_.end(), 0);
  rng.shuffle(mapping_);

  std::vector<int> order(v);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const int openers = static_cast<int>(std::lround(spec_.swap_rate * v));
  opener_.assign(v, false);
  for (int i = 0; i < openers; ++i) opener_[order[i]] = true;
}

std::optional<int> Task::source_id(std::string_view word) const {
  auto it = source_index_.find(std::string(word));
  if (it == source_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Task::target_id(std::string_view word) const {
  auto it = target_index_.find(std::string(word));
  if (it == target_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Task::transduce(const std::vector<int>& src) const {
  std::vector<int> out(src.size());
  for (size_t t = 0; t < src.size(); ++t) out[t] = mapping_[src[t]];
  // An opener never sits in the second slot of a swap and a non-opener never
  // in the first, so the left-to-right scan has no overlapping choices.
  for (size_t t = 0; t + 1 < src.size(); ++t) {
    if (opener_[src[t]] && !opener_[src[t + 1]]) {
      std::swap(out[t], out[t + 1]);
      ++t;
    }
  }
  return out;
}

std::optional<std::string> Task::gold(std::string_view src) const {
  const TokenSequence words = tokenize(src);
  if (words.empty()) return std::nullopt;
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) {
    auto id = source_id(w);
    if (!id) return std::nullopt;
    ids.push_back(*id);
  }
  std::string out;
  for (int id : transduce(ids)) {
    if (!out.empty()) out.push_back(' ');
    out += target_words_[id];
  }
  return out;
}

Corpus gen_corpus(const TaskSpec& spec, size_t size) {
  require(size >= 1, ErrorCode::kInvalidInput, "gen_corpus: size must be >= 1");
  auto task = std::make_shared<const Task>(spec);
  const int v = spec.vocab_size;

  std::vector<double> cdf;
  if (spec.zipf_exponent > 0.0) {
    cdf.resize(v);
    double acc = 0.0;
    for (int k = 0; k < v; ++k) {
      acc += 1.0 / std::pow(k + 1.0, spec.zipf_exponent);
      cdf[k] = acc;
    }
    for (double& c : cdf) c /= acc;
  }

  Rng rng(Rng::mix(spec.seed, 0xC0));
  auto draw_word = [&]() -> int {
    if (cdf.empty()) return static_cast<int>(rng.uniform_index(v));
    const double u = rng.uniform01();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(v - 1, static_cast<int>(it - cdf.begin()));
  };

  Corpus corpus;
  corpus.task = task;
  corpus.pairs.reserve(size);
  const int span = spec.max_len - spec.min_len + 1;
  for (size_t i = 0; i < size; ++i) {
    const int len = spec.min_len + static_cast<int>(rng.uniform_index(span));
    std::vector<int> src(len);
    for (int& w : src) w = draw_word();
    std::vector<int> ref = task->transduce(src);

    SentencePair pair;
    pair.is_noisy = rng.bernoulli(spec.noise_rate);
    if (pair.is_noisy) {
      bool changed = false;
      for (int& w : ref) {
        if (rng.bernoulli(0.5)) {
          w = (w + 1 + static_cast<int>(rng.uniform_index(v - 1))) % v;
          changed = true;
        }
      }
      if (!changed) {
        int& w = ref[rng.uniform_index(ref.size())];
        w = (w + 1 + static_cast<int>(rng.uniform_index(v - 1))) % v;
      }
    }
    for (size_t t = 0; t < src.size(); ++t) {
      if (t) {
        pair.src.push_back(' ');
        pair.ref.push_back(' ');
      }
      pair.src += task->source_vocab()[src[t]];
      pair.ref += task->target_vocab()[ref[t]];
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

CorpusSplit split(const Corpus& corpus, double train_frac, double dev_frac, uint64_t seed) {
  require(train_frac > 0.0 && dev_frac > 0.0 && train_frac + dev_frac < 1.0, ErrorCode::kInvalidInput,
          "split: fractions must be positive and sum to less than 1");
  const size_t n = corpus.size();
  const auto n_train = static_cast<size_t>(std::floor(train_frac * static_cast<double>(n) + 1e-9));
  const auto n_dev = static_cast<size_t>(std::floor(dev_frac * static_cast<double>(n) + 1e-9));
  require(n_train >= 1 && n_dev >= 1 && n_train + n_dev < n, ErrorCode::kInvalidInput,
          "split: " + std::to_string(n) + " pairs cannot fill non-empty train/dev/test parts");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(Rng::mix(seed, 0x5B));
  rng.shuffle(order);

  CorpusSplit out;
  out.train.task = out.dev.task = out.test.task = corpus.task;
  for (size_t i = 0; i < n; ++i) {
    Corpus& part = i < n_train ? out.train : (i < n_train + n_dev ? out.dev : out.test);
    part.pairs.push_back(corpus.pairs[order[i]]);
  }
  return out;
}

Corpus with_gold_references(const Corpus& corpus) {
  require(corpus.task != nullptr, ErrorCode::kInvalidConfiguration, "corpus has no task definition");
  Corpus out = corpus;
  for (auto& p : out.pairs) {
    auto g = corpus.task->gold(p.src);
    require(g.has_value(), ErrorCode::kInvalidInput, "source outside the task vocabulary: '" + p.src + "'");
    p.ref = *g;
    p.is_noisy = false;
  }
  return out;
}

void write_corpus_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus.pairs) out << json{{"src", p.src}, {"ref", p.ref}}.dump() << '\n';
}

std::vector<SentencePair> read_corpus_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<SentencePair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    const std::string where = source_name + ":" + std::to_string(lineno);
    require(!j.is_discarded() && j.is_object(), ErrorCode::kInvalidArtifact, where + ": not a JSON object");
    require(j.contains("src") && j["src"].is_string() && j.contains("ref") && j["ref"].is_string(),
            ErrorCode::kInvalidArtifact, where + ": expected string fields \"src\" and \"ref\"");
    SentencePair p{j["src"].get<std::string>(), j["ref"].get<std::string>(), false};
    require(!tokenize(p.src).empty() && !tokenize(p.ref).empty(), ErrorCode::kInvalidArtifact,
            where + ": empty src or ref");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void write_ledger_tsv(std::ostream& out, const Corpus& corpus) {
  out << "index\tis_noisy\n";
  for (size_t i = 0; i < corpus.pairs.size(); ++i) {
    out << i << '\t' << (corpus.pairs[i].is_noisy ? 1 : 0) << '\n';
  }
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kMissingArtifact, "cannot open '" + path + "'");
  return in;
}

}  // namespace

void save_task(const TaskSpec& spec, const std::string& task_path) {
  auto out = open_out(task_path);
  out << to_json(spec).dump(2) << '\n';
}

std::shared_ptr<const Task> load_task(const std::string& task_path) {
  auto in = open_in(task_path);
  json j = json::parse(in, nullptr, false);
  require(!j.is_discarded(), ErrorCode::kInvalidArtifact, task_path + ": not valid JSON");
  return std::make_shared<const Task>(task_spec_from_json(j));
}

void save_corpus(const Corpus& corpus, const std::string& jsonl_path, const std::string& task_path,
                 const std::string& ledger_path) {
  {
    auto out = open_out(jsonl_path);
    write_corpus_jsonl(out, corpus);
  }
  if (!task_path.empty()) {
    require(corpus.task != nullptr, ErrorCode::kInvalidConfiguration, "corpus has no task definition");
    save_task(corpus.task->spec(), task_path);
  }
  if (!ledger_path.empty()) {
    auto out = open_out(ledger_path);
    write_ledger_tsv(out, corpus);
  }
}

Corpus load_corpus(const std::string& jsonl_path, const std::string& task_path) {
  Corpus corpus;
  if (!task_path.empty()) corpus.task = load_task(task_path);
  auto in = open_in(jsonl_path);
  corpus.pairs = read_corpus_jsonl(in, jsonl_path);
  return corpus;
}

}  // namespace prefmt
