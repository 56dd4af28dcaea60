// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "prefmt/error.hpp"
#include "prefmt/parallel.hpp"
#include "prefmt/rng.hpp"

namespace prefmt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

std::ofstream open_out(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_lines(const fs::path& path, std::span<const std::string> lines) {
  auto out = open_out(path);
  for (const auto& l : lines) out << l << '\n';
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> sources_of(const Corpus& c, size_t limit = 0) {
  std::vector<std::string> out;
  for (const auto& p : c.pairs) {
    if (limit > 0 && out.size() >= limit) break;
    out.push_back(p.src);
  }
  return out;
}

std::vector<std::string> top_outputs(const Policy& policy, std::span<const std::string> srcs, int beam_size) {
  std::vector<std::string> out;
  for (const auto& set : decode_beam_sets(policy, srcs, beam_size)) out.push_back(set.hyps.front());
  return out;
}

// Reads a JSON field with a useful message on a type mismatch.
template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidConfiguration, std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<CandidateSet> decode_beam_sets(const Policy& policy, std::span<const std::string> srcs, int beam_size) {
  require(beam_size >= 1, ErrorCode::kInvalidInput, "decode: beam size must be >= 1");
  std::vector<CandidateSet> sets(srcs.size());
  parallel_chunks(srcs.size(), std::min<size_t>(srcs.size(), 64), [&](size_t, size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      std::vector<int> ids;
      try {
        ids = policy.encode_source(srcs[i]);
      } catch (const Error& err) {
        throw Error(err.code(), "decode: source " + std::to_string(i) + ": " + err.what());
      }
      CandidateSet& s = sets[i];
      s.src = srcs[i];
      std::vector<double> logps;
      for (const auto& h : beam_search(policy, ids, beam_size, Policy::default_max_len(ids.size()))) {
        s.hyps.push_back(policy.decode_target(h.tokens));
        logps.push_back(h.logp);
      }
      s.logps = std::move(logps);
    }
  });
  return sets;
}

std::vector<CandidateSet> decode_sample_sets(const Policy& policy, std::span<const std::string> srcs,
                                             const SamplingOptions& options) {
  std::vector<CandidateSet> sets(srcs.size());
  parallel_chunks(srcs.size(), std::min<size_t>(srcs.size(), 64), [&](size_t, size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      std::vector<int> ids;
      try {
        ids = policy.encode_source(srcs[i]);
      } catch (const Error& err) {
        throw Error(err.code(), "decode: source " + std::to_string(i) + ": " + err.what());
      }
      SamplingOptions o = options;
      o.seed = Rng::mix(options.seed, i);
      if (o.max_len <= 0) o.max_len = Policy::default_max_len(ids.size());
      CandidateSet& s = sets[i];
      s.src = srcs[i];
      std::vector<double> logps;
      for (const auto& h : sample(policy, ids, o)) {
        s.hyps.push_back(policy.decode_target(h.tokens));
        logps.push_back(h.logp);
      }
      s.logps = std::move(logps);
    }
  });
  return sets;
}

json EvalReport::to_json() const {
  json j{{"sentences", sentences}, {"bleu", bleu}, {"chrf", chrf}};
  j["mock_qe"] = has_mock_qe ? json(mock_qe) : json(nullptr);
  return j;
}

std::string EvalReport::to_markdown(const std::string& label) const {
  std::ostringstream out;
  out << "| system | BLEU | chrF | mock-QE | sentences |\n";
  out << "|---|---:|---:|---:|---:|\n";
  out << "| " << label << " | " << fmt("%.2f", 100.0 * bleu) << " | " << fmt("%.2f", 100.0 * chrf) << " | "
      << (has_mock_qe ? fmt("%.2f", 100.0 * mock_qe) : std::string("-")) << " | " << sentences << " |\n";
  return out.str();
}

EvalReport evaluate_outputs(std::span<const std::string> hyps, std::span<const SentencePair> refs,
                            const GoldOracle* oracle) {
  require(!hyps.empty(), ErrorCode::kInvalidInput, "eval: no hypotheses");
  require(hyps.size() == refs.size(), ErrorCode::kInvalidInput,
          "eval: " + std::to_string(hyps.size()) + " hypotheses for " + std::to_string(refs.size()) + " references");
  EvalReport r;
  r.sentences = hyps.size();
  std::vector<std::pair<TokenSequence, TokenSequence>> tok;
  tok.reserve(hyps.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    tok.emplace_back(tokenize(hyps[i]), tokenize(refs[i].ref));
    r.chrf += chrf(hyps[i], refs[i].ref).value;
    if (oracle != nullptr) r.mock_qe += mock_qe_score(refs[i].src, hyps[i], *oracle).value;
  }
  r.bleu = corpus_bleu(tok).value;
  r.chrf /= static_cast<double>(hyps.size());
  if (oracle != nullptr) {
    r.has_mock_qe = true;
    r.mock_qe /= static_cast<double>(hyps.size());
  }
  return r;
}

Policy make_policy(const Task& task, const PolicyDims& dims, uint64_t seed) {
  Policy p = Policy::for_task(task, dims.embed_dim, dims.hidden, dims.src_radius, dims.prev_window);
  if (dims.init_scale > 0.0) p.init_random(seed, dims.init_scale);
  return p;
}

json to_json(const MleOptions& o) {
  return {{"epochs", o.epochs},
          {"learning_rate", o.learning_rate},
          {"batch_size", o.batch_size},
          {"early_stop_patience", o.early_stop_patience},
          {"lr_decay", o.lr_decay},
          {"max_updates", o.max_updates},
          {"seed", o.seed}};
}

MleOptions mle_options_from_json(const json& j, MleOptions o) {
  o.epochs = field(j, "epochs", o.epochs);
  o.learning_rate = field(j, "learning_rate", o.learning_rate);
  o.batch_size = field(j, "batch_size", o.batch_size);
  o.early_stop_patience = field(j, "early_stop_patience", o.early_stop_patience);
  o.lr_decay = field(j, "lr_decay", o.lr_decay);
  o.max_updates = field(j, "max_updates", o.max_updates);
  o.seed = field(j, "seed", o.seed);
  return o;
}

PpoConfig ppo_config_from_json(const json& j, PpoConfig c) {
  c.learning_rate = field(j, "learning_rate", c.learning_rate);
  c.gamma = field(j, "gamma", c.gamma);
  c.trajectory_limit = field(j, "trajectory_limit", c.trajectory_limit);
  c.rollout_beam_size = field(j, "rollout_beam_size", c.rollout_beam_size);
  c.batch_size = field(j, "batch_size", c.batch_size);
  c.ppo_epochs = field(j, "ppo_epochs", c.ppo_epochs);
  c.clip_epsilon = field(j, "clip_epsilon", c.clip_epsilon);
  c.kl_coef = field(j, "kl_coef", c.kl_coef);
  if (j.contains("baseline")) c.baseline = parse_baseline(field<std::string>(j, "baseline", "batch-mean"));
  c.validate();
  return c;
}

PolicyDims policy_dims_from_json(const json& j) {
  PolicyDims d;
  d.embed_dim = field(j, "embed_dim", d.embed_dim);
  d.hidden = field(j, "hidden", d.hidden);
  d.src_radius = field(j, "src_radius", d.src_radius);
  d.prev_window = field(j, "prev_window", d.prev_window);
  d.init_scale = field(j, "init_scale", d.init_scale);
  return d;
}

// ---------------------------------------------------------------------------

std::vector<std::string> parse_stages(const std::string& list) {
  std::vector<std::string> stages;
  std::string cur;
  std::istringstream in(list);
  while (std::getline(in, cur, ',')) {
    cur.erase(0, cur.find_first_not_of(" \t"));
    cur.erase(cur.find_last_not_of(" \t") + 1);
    if (!cur.empty()) stages.push_back(cur);
  }
  require(!stages.empty(), ErrorCode::kInvalidConfiguration, "pipeline: no stages given");
  int last = -1;
  std::string last_name;
  for (const auto& s : stages) {
    const auto* it = std::find_if(std::begin(kStageOrder), std::end(kStageOrder),
                                  [&](const char* name) { return s == name; });
    require(it != std::end(kStageOrder), ErrorCode::kInvalidConfiguration,
            "pipeline: unknown stage '" + s + "' (known: filter, mle, rl, nrr, mbr, eval)");
    const int rank = static_cast<int>(it - std::begin(kStageOrder));
    require(rank > last, ErrorCode::kInvalidConfiguration,
            "pipeline: invalid stage order: '" + s + "' cannot follow '" + last_name + "'");
    last = rank;
    last_name = s;
  }
  return stages;
}

json pipeline_defaults() {
  MleOptions mle;
  PpoConfig ppo;
  // Toy-scale learning rate; the reference value is kept in PpoConfig.
  ppo.learning_rate = 0.05;
  ppo.trajectory_limit = 2048;
  json rl = to_json(ppo);
  rl["reward"] = "chrf";
  rl["rollouts_per_iter"] = 128;
  rl["dev_limit"] = 200;
  return {
      {"stages", "mle,eval"},
      {"seed", 1},
      {"task", to_json(TaskSpec{})},
      {"corpus_size", 3000},
      {"train_frac", 0.8},
      {"dev_frac", 0.1},
      {"endpoint", ""},
      {"beam_size", 5},
      {"policy", {{"embed_dim", 16}, {"hidden", 64}, {"src_radius", 1}, {"prev_window", 2}, {"init_scale", 0.1}}},
      {"filter", {{"qe", "mock-qe"}, {"keep", 0.7}, {"batch_size", 64}}},
      {"mle", to_json(mle)},
      {"rl", rl},
      {"sampling", {{"count", 100}, {"top_k", 300}, {"top_p", 0.6}, {"temperature", 1.0}}},
      {"nrr", {{"qe", "mock-qe"}, {"keep", 20}}},
      {"mbr", {{"utility", "chrf"}, {"symmetric_cache", false}}},
  };
}

EvalReport run_pipeline(const json& config, const std::string& out_dir, const Logger& log) {
  require(config.is_object(), ErrorCode::kInvalidConfiguration, "pipeline: configuration must be a JSON object");
  json cfg = pipeline_defaults();
  cfg.merge_patch(config);

  std::string stage_list;
  if (cfg["stages"].is_array()) {
    for (const auto& s : cfg["stages"]) stage_list += field<std::string>(json{{"s", s}}, "s", "") + ",";
  } else {
    stage_list = field<std::string>(cfg, "stages", "");
  }
  const auto stages = parse_stages(stage_list);
  auto has = [&](const char* s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };

  const uint64_t seed = field<uint64_t>(cfg, "seed", 1);
  const std::string endpoint = field<std::string>(cfg, "endpoint", "");
  const int beam_size = field(cfg, "beam_size", 5);
  const PolicyDims dims = policy_dims_from_json(cfg["policy"]);
  const fs::path root(out_dir);

  // Data.
  Corpus corpus;
  if (cfg.contains("corpus") && cfg["corpus"].is_string()) {
    corpus = load_corpus(cfg["corpus"].get<std::string>(), field<std::string>(cfg, "task_path", ""));
    require(corpus.task != nullptr, ErrorCode::kInvalidConfiguration, "pipeline: 'corpus' needs 'task_path'");
  } else {
    corpus = gen_corpus(task_spec_from_json(cfg["task"]), field<size_t>(cfg, "corpus_size", 3000));
  }
  const auto task = corpus.task;
  CorpusSplit parts =
      split(corpus, field(cfg, "train_frac", 0.8), field(cfg, "dev_frac", 0.1), Rng::mix(seed, 0x5911));
  parts.dev = with_gold_references(parts.dev);
  parts.test = with_gold_references(parts.test);

  fs::create_directories(root / "data");
  write_text(root / "config.json", cfg.dump(2) + "\n");
  save_corpus(parts.train, (root / "data" / "train.jsonl").string(), (root / "data" / "task.json").string());
  save_corpus(parts.dev, (root / "data" / "dev.jsonl").string());
  save_corpus(parts.test, (root / "data" / "test.jsonl").string());
  say(log, "data: train " + std::to_string(parts.train.size()) + ", dev " + std::to_string(parts.dev.size()) +
               ", test " + std::to_string(parts.test.size()));

  Corpus train = parts.train;
  std::optional<Policy> policy;
  auto ensure_policy = [&]() -> Policy& {
    if (!policy) policy = make_policy(*task, dims, Rng::mix(seed, 0x7011));
    return *policy;
  };
  const auto test_srcs = sources_of(parts.test);
  std::vector<CandidateSet> sets;
  std::vector<std::string> outputs;

  auto run_stage = [&](const std::string& name, const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    say(log, "stage " + name + ": start");
    try {
      body();
    } catch (const Error& e) {
      throw Error(e.code(), "stage '" + name + "' failed: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kInvalidConfiguration, "stage '" + name + "' failed: " + e.what());
    }
    say(log, "stage " + name + ": done in " + fmt("%.2f", seconds_since(start)) + " s");
  };

  for (const auto& stage : stages) {
    const fs::path dir = root / stage;
    if (stage == "filter") {
      run_stage(stage, [&] {
        const json& f = cfg["filter"];
        auto qe = make_backend(field<std::string>(f, "qe", "mock-qe"), task, endpoint);
        const auto scored = score_corpus(train, *qe, field<size_t>(f, "batch_size", 64));
        const double keep = field(f, "keep", 0.7);
        require(keep > 0.0 && keep <= 1.0, ErrorCode::kInvalidConfiguration, "filter: keep must be in (0, 1]");
        const size_t k = std::max<size_t>(1, static_cast<size_t>(std::llround(keep * scored.size())));
        {
          auto out = open_out(dir / "scores.tsv");
          write_scores_tsv(out, scored);
        }
        train = select_subset(scored, SubsetSpec::by_count(k), task);
        save_corpus(train, (dir / "subset.jsonl").string());
        say(log, "filter: kept " + std::to_string(train.size()) + " of " + std::to_string(scored.size()));
      });
    } else if (stage == "mle") {
      run_stage(stage, [&] {
        Policy& p = ensure_policy();
        auto hist = open_out(dir / "history.csv");
        hist << "epoch,train_nll,dev_nll,learning_rate\n";
        const auto result =
            mle_train(p, train, parts.dev, mle_options_from_json(cfg["mle"]), [&](const MleEpoch& e) {
              hist << e.epoch << ',' << fmt("%.6f", e.train_nll) << ',' << fmt("%.6f", e.dev_nll) << ','
                   << fmt("%.6g", e.learning_rate) << '\n';
              say(log, "mle: epoch " + std::to_string(e.epoch) + " dev nll " + fmt("%.4f", e.dev_nll));
            });
        hist.close();
        save_policy_file(p, (dir / "policy.bin").string());
        say(log, "mle: best dev nll " + fmt("%.4f", result.best_dev_nll));
      });
    } else if (stage == "rl") {
      run_stage(stage, [&] {
        Policy& p = ensure_policy();
        const json& r = cfg["rl"];
        const PpoConfig ppo = ppo_config_from_json(r);
        RlOptions opts;
        opts.rollouts_per_iter = field<size_t>(r, "rollouts_per_iter", opts.rollouts_per_iter);
        opts.dev_limit = field<size_t>(r, "dev_limit", opts.dev_limit);
        opts.seed = Rng::mix(seed, 0x7212);
        auto reward = make_backend(field<std::string>(r, "reward", "chrf"), task, endpoint);
        auto stats = open_out(dir / "stats.csv");
        stats << rl_stats_csv_header() << '\n';
        const auto result = rl_train(p, train, parts.dev, *reward, ppo, opts, [&](const RlIteration& it) {
          stats << rl_stats_csv_row(it) << '\n';
          say(log, "rl: iteration " + std::to_string(it.iteration) + " dev reward " + fmt("%.4f", it.dev_reward));
        });
        stats.close();
        save_policy_file(p, (dir / "policy.bin").string());
        say(log, "rl: dev reward " + fmt("%.4f", result.start_dev_reward) + " -> " +
                     fmt("%.4f", result.best_dev_reward) + " (iteration " + std::to_string(result.best_iteration) +
                     ")");
      });
    } else if (stage == "nrr" || stage == "mbr") {
      run_stage(stage, [&] {
        Policy& p = ensure_policy();
        if (sets.empty()) {
          const json& s = cfg["sampling"];
          SamplingOptions so;
          so.count = field(s, "count", 100);
          so.top_k = field(s, "top_k", 300);
          so.top_p = field(s, "top_p", 0.6);
          so.temperature = field(s, "temperature", 1.0);
          so.seed = Rng::mix(seed, 0x5a3);
          sets = decode_sample_sets(p, test_srcs, so);
          auto out = open_out(dir / "candidates.jsonl");
          write_candidates_jsonl(out, sets);
        }
        std::vector<SelectorStage> selector;
        if (stage == "nrr") {
          const json& n = cfg["nrr"];
          const size_t keep = has("mbr") ? std::max<size_t>(1, field<size_t>(n, "keep", 20)) : 1;
          selector.push_back(NbestStage{make_backend(field<std::string>(n, "qe", "mock-qe"), task, endpoint), keep});
        } else {
          const json& m = cfg["mbr"];
          selector.push_back(MbrStage{make_backend(field<std::string>(m, "utility", "chrf"), task, endpoint),
                                      field(m, "symmetric_cache", false)});
        }
        std::vector<CandidateSet> kept(sets.size());
        outputs.assign(sets.size(), std::string());
        auto sel_out = open_out(dir / "selection.jsonl");
        for (size_t i = 0; i < sets.size(); ++i) {
          CandidateSet& cs = sets[i];
          if (const auto* nb = std::get_if<NbestStage>(&selector.front()); nb != nullptr && nb->keep > 1) {
            const Selection scored = nbest_rerank(cs, *nb->qe);
            std::vector<size_t> order(cs.hyps.size());
            std::iota(order.begin(), order.end(), size_t{0});
            std::stable_sort(order.begin(), order.end(),
                             [&](size_t a, size_t b) { return scored.scores[a] > scored.scores[b]; });
            order.resize(std::min(order.size(), nb->keep));
            std::sort(order.begin(), order.end());
            kept[i].src = cs.src;
            for (size_t k : order) kept[i].hyps.push_back(cs.hyps[k]);
            write_selection_jsonl(sel_out, cs, scored);
            outputs[i] = scored.selected;
          } else {
            const Selection sel = pipeline_select(cs, selector);
            write_selection_jsonl(sel_out, cs, sel);
            outputs[i] = sel.selected;
            kept[i] = CandidateSet{cs.src, {sel.selected}, std::nullopt};
          }
        }
        sel_out.close();
        if (stage == "nrr" && has("mbr")) {
          auto out = open_out(dir / "kept.jsonl");
          write_candidates_jsonl(out, kept);
          sets = std::move(kept);
        }
      });
    }
  }

  EvalReport report;
  run_stage("eval", [&] {
    if (outputs.empty()) outputs = top_outputs(ensure_policy(), test_srcs, beam_size);
    write_lines(root / "eval" / "outputs.txt", outputs);
    report = evaluate_outputs(outputs, parts.test.pairs, task.get());
    write_text(root / "report.json", report.to_json().dump(2) + "\n");
    std::string label;
    for (const auto& s : stages) label += (label.empty() ? "" : " + ") + s;
    write_text(root / "report.md", report.to_markdown(label));
    say(log, "eval: bleu " + fmt("%.4f", report.bleu) + ", chrf " + fmt("%.4f", report.chrf) + ", mock-qe " +
                 fmt("%.4f", report.mock_qe));
  });
  return report;
}

// ---------------------------------------------------------------------------

SweepReport run_sweep(const json& config, const Logger& log) {
  require(config.is_object(), ErrorCode::kInvalidConfiguration, "sweep: configuration must be a JSON object");
  const std::string train_path = field<std::string>(config, "train", "");
  const std::string dev_path = field<std::string>(config, "dev", "");
  const std::string task_path = field<std::string>(config, "task", "");
  require(!train_path.empty() && !dev_path.empty() && !task_path.empty(), ErrorCode::kInvalidConfiguration,
          "sweep: 'train', 'dev' and 'task' are required");
  const Corpus train = load_corpus(train_path, task_path);
  const Corpus dev = load_corpus(dev_path, task_path);
  const auto task = train.task;
  const uint64_t seed = field<uint64_t>(config, "seed", 1);
  const int beam_size = field(config, "beam_size", 5);
  const size_t eval_limit = field<size_t>(config, "eval_limit", 0);
  const PolicyDims dims = policy_dims_from_json(config.value("policy", json::object()));
  const MleOptions mle = mle_options_from_json(config.value("mle", json::object()));

  std::vector<size_t> sizes;
  try {
    sizes = config.at("sizes").get<std::vector<size_t>>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidConfiguration, "sweep: 'sizes' must be a list of positive integers");
  }

  std::vector<ScoredPair> scored;
  const std::string scores_path = field<std::string>(config, "scores", "");
  if (!scores_path.empty()) {
    std::ifstream in(scores_path);
    require(static_cast<bool>(in), ErrorCode::kMissingArtifact, "cannot open '" + scores_path + "'");
    const auto values = read_scores_tsv(in, scores_path);
    require(values.size() == train.size(), ErrorCode::kInvalidArtifact,
            "sweep: " + std::to_string(values.size()) + " scores for " + std::to_string(train.size()) + " pairs");
    for (size_t i = 0; i < values.size(); ++i) scored.push_back({train.pairs[i], {values[i], MetricId::kMockQe, false}, i});
  } else {
    auto qe = make_backend(field<std::string>(config, "qe", "mock-qe"), task, field<std::string>(config, "endpoint", ""));
    scored = score_corpus(train, *qe, 64);
  }

  Corpus dev_eval = dev;
  if (eval_limit > 0 && dev_eval.pairs.size() > eval_limit) dev_eval.pairs.resize(eval_limit);
  const auto dev_srcs = sources_of(dev_eval);

  auto train_and_eval = [&](const Corpus& subset) {
    Policy p = make_policy(*task, dims, Rng::mix(seed, 0x7011));
    const auto r = mle_train(p, subset, dev, mle);
    const auto outputs = top_outputs(p, dev_srcs, beam_size);
    const auto rep = evaluate_outputs(outputs, dev_eval.pairs, task.get());
    std::map<std::string, double> scores{{"bleu", rep.bleu}, {"chrf", rep.chrf}, {"dev_nll", r.best_dev_nll}};
    if (rep.has_mock_qe) scores["mock_qe"] = rep.mock_qe;
    say(log, "sweep: size " + std::to_string(subset.size()) + " chrf " + fmt("%.4f", rep.chrf));
    return scores;
  };
  return sweep_subsets(scored, sizes, train_and_eval, field<std::string>(config, "selection_metric", "chrf"), task);
}

// ---------------------------------------------------------------------------

double BenchReport::scaling_ratio() const {
  return scaling_small_seconds > 0.0 ? scaling_large_seconds / scaling_small_seconds : 0.0;
}

std::string BenchReport::to_csv() const {
  std::ostringstream out;
  out << "method,training_minutes,inference_minutes,training_seconds,inference_seconds\n";
  for (const auto& r : rows) {
    out << r.method << ',' << fmt("%.2f", r.training_seconds / 60.0) << ',' << fmt("%.2f", r.inference_seconds / 60.0)
        << ',' << fmt("%.3f", r.training_seconds) << ',' << fmt("%.3f", r.inference_seconds) << '\n';
  }
  return out.str();
}

std::string BenchReport::to_markdown() const {
  std::ostringstream out;
  out << "| method | training (min) | inference (min) | training (s) | inference (s) |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& r : rows) {
    out << "| " << r.method << " | " << fmt("%.2f", r.training_seconds / 60.0) << " | "
        << fmt("%.2f", r.inference_seconds / 60.0) << " | " << fmt("%.3f", r.training_seconds) << " | "
        << fmt("%.3f", r.inference_seconds) << " |\n";
  }
  out << "\nMBR utility phase, constant-cost utility: N=" << scaling_small_n << " "
      << fmt("%.4f", scaling_small_seconds) << " s, N=" << scaling_large_n << " " << fmt("%.4f", scaling_large_seconds)
      << " s, ratio " << fmt("%.2f", scaling_ratio()) << "\n";
  return out.str();
}

json BenchReport::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    rows_json.push_back(
        {{"method", r.method}, {"training_seconds", r.training_seconds}, {"inference_seconds", r.inference_seconds}});
  }
  return {{"rows", rows_json},
          {"mbr_scaling",
           {{"small_n", scaling_small_n},
            {"large_n", scaling_large_n},
            {"small_seconds", scaling_small_seconds},
            {"large_seconds", scaling_large_seconds},
            {"ratio", scaling_ratio()}}}};
}

BenchReport run_bench(const json& config, const Logger& log) {
  require(config.is_object(), ErrorCode::kInvalidConfiguration, "bench: configuration must be a JSON object");
  const std::string run_dir = field<std::string>(config, "run_dir", "");
  require(!run_dir.empty(), ErrorCode::kInvalidConfiguration, "bench: 'run_dir' is required");
  const fs::path root(run_dir);
  for (const auto* rel : {"data/train.jsonl", "data/dev.jsonl", "data/test.jsonl", "data/task.json", "mle/policy.bin"}) {
    require(fs::exists(root / rel), ErrorCode::kMissingArtifact, "bench: missing artifact '" + (root / rel).string() + "'");
  }
  const std::string task_path = (root / "data" / "task.json").string();
  const Corpus train = load_corpus((root / "data" / "train.jsonl").string(), task_path);
  const Corpus dev = load_corpus((root / "data" / "dev.jsonl").string(), task_path);
  const Corpus test = load_corpus((root / "data" / "test.jsonl").string(), task_path);
  const Policy trained = load_policy_file((root / "mle" / "policy.bin").string());
  const auto task = train.task;

  const uint64_t seed = field<uint64_t>(config, "seed", 1);
  const int beam_size = field(config, "beam_size", 5);
  const size_t sources = field<size_t>(config, "sources", 50);
  const int candidates = field(config, "candidates", 32);
  const int repeats = std::max(1, field(config, "repeats", 3));
  const uint64_t work = field<uint64_t>(config, "work_per_item", 2000);
  std::vector<size_t> scaling_n{32, 64};
  if (config.contains("scaling_n")) scaling_n = config["scaling_n"].get<std::vector<size_t>>();
  require(scaling_n.size() == 2 && scaling_n[0] >= 1 && scaling_n[1] > scaling_n[0], ErrorCode::kInvalidConfiguration,
          "bench: 'scaling_n' must be [small, large] with small < large");
  const size_t scaling_sources = field<size_t>(config, "scaling_sources", 2);

  const auto srcs = sources_of(test, sources);
  require(!srcs.empty(), ErrorCode::kInvalidArtifact, "bench: empty test split");
  BenchReport rep;

  // Training rows.
  MleOptions mle = mle_options_from_json(config.value("mle", json::object()));
  mle.epochs = field(config, "mle_epochs", 2);
  Policy fresh = make_policy(*task, PolicyDims{trained.config().embed_dim, trained.config().hidden,
                                               trained.config().src_radius, trained.config().prev_window, 0.1},
                             Rng::mix(seed, 0x7011));
  auto t0 = std::chrono::steady_clock::now();
  mle_train(fresh, train, dev, mle);
  const double mle_seconds = seconds_since(t0);
  say(log, "bench: mle " + fmt("%.3f", mle_seconds) + " s");

  PpoConfig ppo = ppo_config_from_json(config.value("rl", json::object()), [] {
    PpoConfig c;
    c.learning_rate = 0.05;
    return c;
  }());
  ppo.trajectory_limit = field<size_t>(config, "rl_trajectories", 256);
  RlOptions rl_opts;
  rl_opts.dev_limit = 50;
  rl_opts.seed = seed;
  Policy rl_policy = trained;
  ChrfBackend reward;
  t0 = std::chrono::steady_clock::now();
  rl_train(rl_policy, train, dev, reward, ppo, rl_opts);
  const double rl_seconds = seconds_since(t0);
  say(log, "bench: rl " + fmt("%.3f", rl_seconds) + " s");

  // Inference rows.
  t0 = std::chrono::steady_clock::now();
  decode_beam_sets(trained, srcs, beam_size);
  const double beam_seconds = seconds_since(t0);

  SamplingOptions so;
  so.count = candidates;
  so.top_p = 0.6;
  so.seed = Rng::mix(seed, 0x5a3);
  t0 = std::chrono::steady_clock::now();
  const auto sets = decode_sample_sets(trained, srcs, so);
  const double sample_seconds = seconds_since(t0);

  MockQeBackend qe(task);
  t0 = std::chrono::steady_clock::now();
  for (const auto& s : sets) nbest_rerank(s, qe);
  const double nrr_seconds = sample_seconds + seconds_since(t0);

  const Utility chrf_utility(std::make_shared<ChrfBackend>());
  t0 = std::chrono::steady_clock::now();
  for (const auto& s : sets) mbr_select(s, chrf_utility);
  const double mbr_seconds = sample_seconds + seconds_since(t0);

  rep.rows.push_back({"MLE", mle_seconds, beam_seconds});
  rep.rows.push_back({"MLE + RL", rl_seconds, beam_seconds});
  rep.rows.push_back({"beam search", 0.0, beam_seconds});
  rep.rows.push_back({"N-RR (N=" + std::to_string(candidates) + ")", 0.0, nrr_seconds});
  rep.rows.push_back({"MBR (N=" + std::to_string(candidates) + ")", 0.0, mbr_seconds});

  // MBR scaling: only the utility matrix and the selection are timed, with a
  // utility whose per-call cost is fixed. Best of `repeats`.
  const Utility constant_utility(std::make_shared<ConstantBackend>(0.5, true, work));
  auto time_mbr = [&](size_t n) {
    SamplingOptions o = so;
    o.count = static_cast<int>(n);
    const auto scaling_srcs = sources_of(test, scaling_sources);
    const auto cand = decode_sample_sets(trained, scaling_srcs, o);
    double best = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      for (const auto& s : cand) mbr_select(s, constant_utility);
      const double t = seconds_since(start);
      if (r == 0 || t < best) best = t;
    }
    return best;
  };
  rep.scaling_small_n = scaling_n[0];
  rep.scaling_large_n = scaling_n[1];
  rep.scaling_small_seconds = time_mbr(scaling_n[0]);
  rep.scaling_large_seconds = time_mbr(scaling_n[1]);
  say(log, "bench: mbr scaling ratio " + fmt("%.2f", rep.scaling_ratio()));
  return rep;
}

}  // namespace prefmt
