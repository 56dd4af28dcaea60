// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

#include "prefmt/prefmt.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <new>
#include <sstream>

#include "prefmt/error.hpp"
#include "prefmt/filter.hpp"
#include "prefmt/parallel.hpp"
#include "prefmt/pipeline.hpp"
#include "prefmt/policy.hpp"
#include "prefmt/rerank.hpp"
#include "prefmt/rltrain.hpp"
#include "prefmt/scoring.hpp"
#include "prefmt/synthdata.hpp"
#include "prefmt/textmetrics.hpp"

struct pmt_backend {
  prefmt::BackendPtr ptr;
};

struct pmt_policy {
  prefmt::Policy policy;
};

namespace {

using prefmt::ErrorCode;
using prefmt::require;

thread_local std::string g_last_error;

std::mutex g_log_mutex;
pmt_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

pmt_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return PMT_ERR_INVALID_INPUT;
    case ErrorCode::kInvalidConfiguration: return PMT_ERR_INVALID_CONFIG;
    case ErrorCode::kTransport: return PMT_ERR_TRANSPORT;
    case ErrorCode::kMalformedResponse: return PMT_ERR_MALFORMED_RESPONSE;
    case ErrorCode::kHttpStatus: return PMT_ERR_HTTP_STATUS;
    case ErrorCode::kDivergence: return PMT_ERR_DIVERGENCE;
    case ErrorCode::kMissingArtifact: return PMT_ERR_MISSING_ARTIFACT;
    case ErrorCode::kInvalidArtifact: return PMT_ERR_INVALID_ARTIFACT;
    case ErrorCode::kIo: return PMT_ERR_IO;
  }
  return PMT_ERR_INTERNAL;
}

template <typename F>
pmt_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PMT_OK;
  } catch (const prefmt::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PMT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PMT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PMT_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::kInvalidInput, std::string(what) + " must not be NULL");
}

std::string opt(const char* s) { return s == nullptr ? std::string() : std::string(s); }

prefmt::Logger logger() {
  return [](const std::string& msg) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    if (g_log_fn != nullptr) g_log_fn(msg.c_str(), g_log_user);
  };
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_config(const char* text) {
  need(text, "config_json");
  auto j = nlohmann::json::parse(text, nullptr, false);
  require(!j.is_discarded() && j.is_object(), ErrorCode::kInvalidConfiguration, "configuration is not a JSON object");
  return j;
}

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

std::vector<std::string> read_lines(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> corpus_sources(const std::string& path) {
  std::vector<std::string> srcs;
  for (const auto& p : prefmt::load_corpus(path, {}).pairs) srcs.push_back(p.src);
  return srcs;
}

void write_outputs(const char* selection_path, const char* text_path, std::span<const prefmt::CandidateSet> sets,
                   const std::function<prefmt::Selection(const prefmt::CandidateSet&)>& choose) {
  need(selection_path, "selection_path");
  auto sel_out = open_out(selection_path);
  std::ofstream text_out;
  if (text_path != nullptr) text_out = open_out(text_path);
  for (size_t i = 0; i < sets.size(); ++i) {
    prefmt::Selection sel;
    try {
      sel = choose(sets[i]);
    } catch (const prefmt::Error& e) {
      throw prefmt::Error(e.code(), "candidate set " + std::to_string(i) + ": " + e.what());
    }
    prefmt::write_selection_jsonl(sel_out, sets[i], sel);
    if (text_out.is_open()) text_out << sel.selected << '\n';
  }
}

void fill_eval(const prefmt::EvalReport& r, pmt_eval_result* out) {
  if (out == nullptr) return;
  out->sentences = r.sentences;
  out->bleu = r.bleu;
  out->chrf = r.chrf;
  out->mock_qe = r.mock_qe;
  out->has_mock_qe = r.has_mock_qe ? 1 : 0;
}

}  // namespace

extern "C" {

const char* pmt_version(void) { return "0.1.0"; }

const char* pmt_last_error(void) { return g_last_error.c_str(); }

const char* pmt_status_name(pmt_status status) {
  switch (status) {
    case PMT_OK: return "ok";
    case PMT_ERR_INVALID_INPUT: return "invalid-input";
    case PMT_ERR_INVALID_CONFIG: return "invalid-configuration";
    case PMT_ERR_TRANSPORT: return "transport";
    case PMT_ERR_MALFORMED_RESPONSE: return "malformed-response";
    case PMT_ERR_HTTP_STATUS: return "http-status";
    case PMT_ERR_DIVERGENCE: return "divergence";
    case PMT_ERR_MISSING_ARTIFACT: return "missing-artifact";
    case PMT_ERR_INVALID_ARTIFACT: return "invalid-artifact";
    case PMT_ERR_IO: return "io";
    case PMT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void pmt_string_free(char* s) { std::free(s); }

void pmt_set_max_threads(int threads) { prefmt::set_max_threads(threads); }

void pmt_set_logger(pmt_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

// ---- Metrics ---------------------------------------------------------------

pmt_status pmt_sentence_bleu(const char* hyp, const char* ref, double* out) {
  return guarded([&] {
    need(hyp, "hyp");
    need(ref, "ref");
    need(out, "out");
    *out = prefmt::sentence_bleu(prefmt::tokenize(hyp), prefmt::tokenize(ref)).value;
  });
}

pmt_status pmt_chrf(const char* hyp, const char* ref, double* out) {
  return guarded([&] {
    need(hyp, "hyp");
    need(ref, "ref");
    need(out, "out");
    *out = prefmt::chrf(hyp, ref).value;
  });
}

pmt_status pmt_corpus_bleu(const char* const* hyps, const char* const* refs, size_t n, double* out) {
  return guarded([&] {
    need(hyps, "hyps");
    need(refs, "refs");
    need(out, "out");
    std::vector<std::pair<prefmt::TokenSequence, prefmt::TokenSequence>> pairs;
    for (size_t i = 0; i < n; ++i) {
      need(hyps[i], "hyps[i]");
      need(refs[i], "refs[i]");
      pairs.emplace_back(prefmt::tokenize(hyps[i]), prefmt::tokenize(refs[i]));
    }
    *out = prefmt::corpus_bleu(pairs).value;
  });
}

// ---- Backends --------------------------------------------------------------

pmt_status pmt_backend_create(const char* spec, const char* task_path, const char* endpoint, pmt_backend** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    std::shared_ptr<const prefmt::GoldOracle> oracle;
    if (task_path != nullptr) oracle = prefmt::load_task(task_path);
    auto backend = prefmt::make_backend(spec, oracle, opt(endpoint));
    *out = new pmt_backend{std::move(backend)};
  });
}

void pmt_backend_free(pmt_backend* backend) { delete backend; }

int pmt_backend_uses_reference(const pmt_backend* backend) {
  return backend != nullptr && backend->ptr->uses_reference() ? 1 : 0;
}

uint64_t pmt_backend_cost(const pmt_backend* backend) { return backend == nullptr ? 0 : backend->ptr->cost_counter(); }

pmt_status pmt_backend_score(pmt_backend* backend, const char* const* srcs, const char* const* mts,
                             const char* const* refs, size_t n, double* out) {
  return guarded([&] {
    need(backend, "backend");
    need(srcs, "srcs");
    need(mts, "mts");
    need(out, "out");
    std::vector<prefmt::ScoreRequestItem> items(n);
    for (size_t i = 0; i < n; ++i) {
      need(srcs[i], "srcs[i]");
      need(mts[i], "mts[i]");
      items[i].src = srcs[i];
      items[i].mt = mts[i];
      if (refs != nullptr && refs[i] != nullptr) items[i].ref = std::string(refs[i]);
    }
    const auto scores = backend->ptr->score_batch(items);
    for (size_t i = 0; i < n; ++i) out[i] = scores[i].value;
  });
}

// ---- Data ------------------------------------------------------------------

void pmt_gen_options_init(pmt_gen_options* o) {
  if (o == nullptr) return;
  const prefmt::TaskSpec d;
  o->vocab_size = d.vocab_size;
  o->min_len = d.min_len;
  o->max_len = d.max_len;
  o->swap_rate = d.swap_rate;
  o->noise_rate = d.noise_rate;
  o->zipf_exponent = d.zipf_exponent;
  o->seed = d.seed;
  o->size = 1000;
}

pmt_status pmt_gen_corpus(const pmt_gen_options* o, const char* corpus_path, const char* task_path,
                          const char* ledger_path) {
  return guarded([&] {
    need(o, "options");
    need(corpus_path, "corpus_path");
    need(task_path, "task_path");
    prefmt::TaskSpec spec;
    spec.vocab_size = o->vocab_size;
    spec.min_len = o->min_len;
    spec.max_len = o->max_len;
    spec.swap_rate = o->swap_rate;
    spec.noise_rate = o->noise_rate;
    spec.zipf_exponent = o->zipf_exponent;
    spec.seed = o->seed;
    const auto corpus = prefmt::gen_corpus(spec, o->size);
    prefmt::save_corpus(corpus, corpus_path, task_path, opt(ledger_path));
  });
}

pmt_status pmt_split_corpus(const char* corpus_path, double train_frac, double dev_frac, uint64_t seed,
                            const char* train_path, const char* dev_path, const char* test_path) {
  return guarded([&] {
    need(corpus_path, "corpus_path");
    need(train_path, "train_path");
    need(dev_path, "dev_path");
    need(test_path, "test_path");
    const auto parts = prefmt::split(prefmt::load_corpus(corpus_path, {}), train_frac, dev_frac, seed);
    prefmt::save_corpus(parts.train, train_path);
    prefmt::save_corpus(parts.dev, dev_path);
    prefmt::save_corpus(parts.test, test_path);
  });
}

// ---- Filtering -------------------------------------------------------------

pmt_status pmt_filter_score(pmt_backend* qe, const char* corpus_path, size_t batch_size, const char* scores_path,
                            size_t* scored) {
  return guarded([&] {
    need(qe, "qe");
    need(corpus_path, "corpus_path");
    need(scores_path, "scores_path");
    auto in = open_in(corpus_path);
    auto out = open_out(scores_path);
    const size_t n = prefmt::score_corpus_stream(in, *qe->ptr, batch_size, out);
    if (scored != nullptr) *scored = n;
  });
}

pmt_status pmt_filter_select(const char* corpus_path, const char* scores_path, size_t top_k, double threshold,
                             const char* out_path, size_t* kept) {
  return guarded([&] {
    need(corpus_path, "corpus_path");
    need(scores_path, "scores_path");
    need(out_path, "out_path");
    auto corpus = open_in(corpus_path);
    auto scores = open_in(scores_path);
    auto out = open_out(out_path);
    const auto spec =
        top_k > 0 ? prefmt::SubsetSpec::by_count(top_k) : prefmt::SubsetSpec::by_threshold(threshold);
    const size_t n = prefmt::select_subset_stream(corpus, scores, spec, out);
    if (kept != nullptr) *kept = n;
  });
}

pmt_status pmt_filter_sweep(const char* config_json, const char* report_path, char** report_json) {
  return guarded([&] {
    const auto report = prefmt::run_sweep(parse_config(config_json), logger());
    const std::string text = report.to_json().dump(2);
    if (report_path != nullptr) open_out(report_path) << text << '\n';
    if (report_json != nullptr) *report_json = dup_string(text);
  });
}

// ---- Policy ----------------------------------------------------------------

void pmt_policy_options_init(pmt_policy_options* o) {
  if (o == nullptr) return;
  const prefmt::PolicyDims d;
  o->embed_dim = d.embed_dim;
  o->hidden = d.hidden;
  o->src_radius = d.src_radius;
  o->prev_window = d.prev_window;
  o->init_scale = d.init_scale;
  o->seed = 1;
}

pmt_status pmt_policy_create(const char* task_path, const pmt_policy_options* o, pmt_policy** out) {
  return guarded([&] {
    need(task_path, "task_path");
    need(o, "options");
    need(out, "out");
    const auto task = prefmt::load_task(task_path);
    prefmt::PolicyDims dims{o->embed_dim, o->hidden, o->src_radius, o->prev_window, o->init_scale};
    *out = new pmt_policy{prefmt::make_policy(*task, dims, o->seed)};
  });
}

pmt_status pmt_policy_load(const char* path, pmt_policy** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new pmt_policy{prefmt::load_policy_file(path)};
  });
}

pmt_status pmt_policy_save(const pmt_policy* policy, const char* path) {
  return guarded([&] {
    need(policy, "policy");
    need(path, "path");
    prefmt::save_policy_file(policy->policy, path);
  });
}

void pmt_policy_free(pmt_policy* policy) { delete policy; }

size_t pmt_policy_num_params(const pmt_policy* policy) { return policy == nullptr ? 0 : policy->policy.num_params(); }

pmt_status pmt_policy_logprob(const pmt_policy* policy, const char* src, const char* tgt, double* out) {
  return guarded([&] {
    need(policy, "policy");
    need(src, "src");
    need(tgt, "tgt");
    need(out, "out");
    const auto& p = policy->policy;
    *out = prefmt::logprob(p, p.encode_source(src), p.encode_target(tgt));
  });
}

// ---- Training --------------------------------------------------------------

void pmt_mle_options_init(pmt_mle_options* o) {
  if (o == nullptr) return;
  const prefmt::MleOptions d;
  o->epochs = d.epochs;
  o->learning_rate = d.learning_rate;
  o->batch_size = d.batch_size;
  o->early_stop_patience = d.early_stop_patience;
  o->lr_decay = d.lr_decay;
  o->max_updates = d.max_updates;
  o->seed = d.seed;
}

pmt_status pmt_train_mle(pmt_policy* policy, const char* train_path, const char* dev_path, const pmt_mle_options* o,
                         const char* history_csv_path, double* best_dev_nll) {
  return guarded([&] {
    need(policy, "policy");
    need(train_path, "train_path");
    need(o, "options");
    const auto train = prefmt::load_corpus(train_path, {});
    const auto dev = dev_path != nullptr ? prefmt::load_corpus(dev_path, {}) : prefmt::Corpus{};
    prefmt::MleOptions opts;
    opts.epochs = o->epochs;
    opts.learning_rate = o->learning_rate;
    opts.batch_size = o->batch_size;
    opts.early_stop_patience = o->early_stop_patience;
    opts.lr_decay = o->lr_decay;
    opts.max_updates = o->max_updates;
    opts.seed = o->seed;
    std::ofstream hist;
    if (history_csv_path != nullptr) {
      hist = open_out(history_csv_path);
      hist << "epoch,train_nll,dev_nll,learning_rate\n";
    }
    auto log = logger();
    const auto r = prefmt::mle_train(policy->policy, train, dev, opts, [&](const prefmt::MleEpoch& e) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6g", e.epoch, e.train_nll, e.dev_nll, e.learning_rate);
      if (hist.is_open()) hist << buf << '\n';
      log(std::string("mle epoch ") + std::to_string(e.epoch) + ": " + buf);
    });
    if (best_dev_nll != nullptr) *best_dev_nll = r.best_dev_nll;
  });
}

void pmt_rl_options_init(pmt_rl_options* o) {
  if (o == nullptr) return;
  const prefmt::PpoConfig c;
  const prefmt::RlOptions r;
  o->learning_rate = c.learning_rate;
  o->gamma = c.gamma;
  o->trajectory_limit = c.trajectory_limit;
  o->rollout_beam_size = c.rollout_beam_size;
  o->batch_size = c.batch_size;
  o->ppo_epochs = c.ppo_epochs;
  o->clip_epsilon = c.clip_epsilon;
  o->kl_coef = c.kl_coef;
  o->baseline = PMT_BASELINE_BATCH_MEAN;
  o->rollouts_per_iter = r.rollouts_per_iter;
  o->dev_limit = r.dev_limit;
  o->seed = r.seed;
}

pmt_status pmt_train_rl(pmt_policy* policy, const char* train_path, const char* dev_path, pmt_backend* reward,
                        const pmt_rl_options* o, const char* stats_csv_path, double* start_dev_reward,
                        double* best_dev_reward) {
  return guarded([&] {
    need(policy, "policy");
    need(train_path, "train_path");
    need(dev_path, "dev_path");
    need(reward, "reward");
    need(o, "options");
    prefmt::PpoConfig cfg;
    cfg.learning_rate = o->learning_rate;
    cfg.gamma = o->gamma;
    cfg.trajectory_limit = o->trajectory_limit;
    cfg.rollout_beam_size = o->rollout_beam_size;
    cfg.batch_size = o->batch_size;
    cfg.ppo_epochs = o->ppo_epochs;
    cfg.clip_epsilon = o->clip_epsilon;
    cfg.kl_coef = o->kl_coef;
    switch (o->baseline) {
      case PMT_BASELINE_BATCH_MEAN: cfg.baseline = prefmt::BaselineMode::kBatchMean; break;
      case PMT_BASELINE_PER_POSITION: cfg.baseline = prefmt::BaselineMode::kPerPosition; break;
      case PMT_BASELINE_NONE: cfg.baseline = prefmt::BaselineMode::kNone; break;
      default: prefmt::fail(ErrorCode::kInvalidConfiguration, "unknown baseline mode");
    }
    prefmt::RlOptions opts;
    opts.rollouts_per_iter = o->rollouts_per_iter;
    opts.dev_limit = o->dev_limit;
    opts.seed = o->seed;
    const auto train = prefmt::load_corpus(train_path, {});
    const auto dev = prefmt::load_corpus(dev_path, {});
    std::ofstream stats;
    if (stats_csv_path != nullptr) {
      stats = open_out(stats_csv_path);
      stats << prefmt::rl_stats_csv_header() << '\n';
    }
    auto log = logger();
    const auto r =
        prefmt::rl_train(policy->policy, train, dev, *reward->ptr, cfg, opts, [&](const prefmt::RlIteration& it) {
          const std::string row = prefmt::rl_stats_csv_row(it);
          if (stats.is_open()) stats << row << '\n';
          log("rl iteration " + std::to_string(it.iteration) + ": " + row);
        });
    if (start_dev_reward != nullptr) *start_dev_reward = r.start_dev_reward;
    if (best_dev_reward != nullptr) *best_dev_reward = r.best_dev_reward;
  });
}

// ---- Decoding --------------------------------------------------------------

pmt_status pmt_decode_beam(const pmt_policy* policy, const char* corpus_path, int beam_size, const char* text_path,
                           const char* candidates_path) {
  return guarded([&] {
    need(policy, "policy");
    need(corpus_path, "corpus_path");
    need(text_path, "text_path");
    const auto srcs = corpus_sources(corpus_path);
    const auto sets = prefmt::decode_beam_sets(policy->policy, srcs, beam_size);
    auto text = open_out(text_path);
    for (const auto& s : sets) text << s.hyps.front() << '\n';
    if (candidates_path != nullptr) {
      auto out = open_out(candidates_path);
      prefmt::write_candidates_jsonl(out, sets);
    }
  });
}

void pmt_sample_options_init(pmt_sample_options* o) {
  if (o == nullptr) return;
  o->count = 100;
  o->top_k = 300;
  o->top_p = 0.6;
  o->temperature = 1.0;
  o->seed = 1;
}

pmt_status pmt_decode_sample(const pmt_policy* policy, const char* corpus_path, const pmt_sample_options* o,
                             const char* candidates_path) {
  return guarded([&] {
    need(policy, "policy");
    need(corpus_path, "corpus_path");
    need(o, "options");
    need(candidates_path, "candidates_path");
    prefmt::SamplingOptions so;
    so.count = o->count;
    so.top_k = o->top_k;
    so.top_p = o->top_p;
    so.temperature = o->temperature;
    so.seed = o->seed;
    const auto sets = prefmt::decode_sample_sets(policy->policy, corpus_sources(corpus_path), so);
    auto out = open_out(candidates_path);
    prefmt::write_candidates_jsonl(out, sets);
  });
}

// ---- Reranking -------------------------------------------------------------

pmt_status pmt_rerank_nbest(pmt_backend* qe, const char* candidates_path, const char* selection_path,
                            const char* text_path) {
  return guarded([&] {
    need(qe, "qe");
    need(candidates_path, "candidates_path");
    auto in = open_in(candidates_path);
    const auto sets = prefmt::read_candidates_jsonl(in, candidates_path);
    write_outputs(selection_path, text_path, sets,
                  [&](const prefmt::CandidateSet& s) { return prefmt::nbest_rerank(s, *qe->ptr); });
  });
}

pmt_status pmt_rerank_mbr(pmt_backend* utility, int symmetric_cache, const char* candidates_path,
                          const char* selection_path, const char* text_path) {
  return guarded([&] {
    need(utility, "utility");
    need(candidates_path, "candidates_path");
    auto in = open_in(candidates_path);
    const auto sets = prefmt::read_candidates_jsonl(in, candidates_path);
    const prefmt::Utility u(utility->ptr);
    write_outputs(selection_path, text_path, sets,
                  [&](const prefmt::CandidateSet& s) { return prefmt::mbr_select(s, u, symmetric_cache != 0); });
  });
}

// ---- Evaluation, pipeline, bench -------------------------------------------

pmt_status pmt_eval(const char* hyps_path, const char* corpus_path, const char* task_path, const char* report_path,
                    pmt_eval_result* out) {
  return guarded([&] {
    need(hyps_path, "hyps_path");
    need(corpus_path, "corpus_path");
    const auto corpus = prefmt::load_corpus(corpus_path, opt(task_path));
    const auto hyps = read_lines(hyps_path);
    const auto report = prefmt::evaluate_outputs(hyps, corpus.pairs, corpus.task.get());
    if (report_path != nullptr) open_out(report_path) << report.to_json().dump(2) << '\n';
    fill_eval(report, out);
  });
}

pmt_status pmt_pipeline_defaults(char** config_json) {
  return guarded([&] {
    need(config_json, "config_json");
    *config_json = dup_string(prefmt::pipeline_defaults().dump(2));
  });
}

pmt_status pmt_pipeline_check_stages(const char* stages) {
  return guarded([&] {
    need(stages, "stages");
    prefmt::parse_stages(stages);
  });
}

pmt_status pmt_pipeline_run(const char* config_json, const char* out_dir, pmt_eval_result* out) {
  return guarded([&] {
    need(out_dir, "out_dir");
    fill_eval(prefmt::run_pipeline(parse_config(config_json), out_dir, logger()), out);
  });
}

pmt_status pmt_bench_run(const char* config_json, const char* out_dir, char** markdown) {
  return guarded([&] {
    need(out_dir, "out_dir");
    const auto report = prefmt::run_bench(parse_config(config_json), logger());
    const std::string dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    open_out(dir + "/bench.csv") << report.to_csv();
    open_out(dir + "/bench.md") << report.to_markdown();
    open_out(dir + "/bench.json") << report.to_json().dump(2) << '\n';
    if (markdown != nullptr) *markdown = dup_string(report.to_markdown());
  });
}

}  // extern "C"
