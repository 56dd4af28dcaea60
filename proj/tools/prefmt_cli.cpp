// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The prefmt Authors

// prefmt command-line tool. Talks to the library through the C API only.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "prefmt/prefmt.h"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitUsage = 2;
constexpr int kExitArtifact = 3;
constexpr int kExitRemote = 4;

int exit_code(pmt_status s) {
  switch (s) {
    case PMT_OK: return kExitOk;
    case PMT_ERR_INVALID_INPUT:
    case PMT_ERR_INVALID_CONFIG: return kExitUsage;
    case PMT_ERR_MISSING_ARTIFACT:
    case PMT_ERR_INVALID_ARTIFACT: return kExitArtifact;
    case PMT_ERR_TRANSPORT:
    case PMT_ERR_MALFORMED_RESPONSE:
    case PMT_ERR_HTTP_STATUS: return kExitRemote;
    default: return kExitOther;
  }
}

// Thrown by `check` to unwind out of a command with the mapped exit code.
struct CommandFailed {
  int code;
};

void check(pmt_status s) {
  if (s == PMT_OK) return;
  std::cerr << "error (" << pmt_status_name(s) << "): " << pmt_last_error() << "\n";
  throw CommandFailed{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  throw CommandFailed{kExitUsage};
}

struct BackendDeleter {
  void operator()(pmt_backend* b) const { pmt_backend_free(b); }
};
struct PolicyDeleter {
  void operator()(pmt_policy* p) const { pmt_policy_free(p); }
};
struct StringDeleter {
  void operator()(char* s) const { pmt_string_free(s); }
};
using BackendHandle = std::unique_ptr<pmt_backend, BackendDeleter>;
using PolicyHandle = std::unique_ptr<pmt_policy, PolicyDeleter>;
using StringHandle = std::unique_ptr<char, StringDeleter>;

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string endpoint_from(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("PREFMT_SCORER_URL");
  return env != nullptr ? env : "";
}

BackendHandle make_backend(const std::string& spec, const std::string& task, const std::string& url) {
  const std::string endpoint = endpoint_from(url);
  if (spec.rfind("remote:", 0) == 0 && endpoint.empty()) {
    usage_error("metric '" + spec + "' needs --scorer-url or PREFMT_SCORER_URL");
  }
  pmt_backend* b = nullptr;
  check(pmt_backend_create(spec.c_str(), or_null(task), or_null(endpoint), &b));
  return BackendHandle(b);
}

PolicyHandle load_policy(const std::string& path) {
  pmt_policy* p = nullptr;
  check(pmt_policy_load(path.c_str(), &p));
  return PolicyHandle(p);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    throw CommandFailed{kExitOther};
  }
  out << text;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    throw CommandFailed{kExitArtifact};
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) usage_error("'" + path + "' is not a JSON object");
  return j;
}

// Records every option of `cmd` (and the global ones) so the run can be
// repeated exactly.
void write_snapshot(const CLI::App& root, const CLI::App& cmd, const std::string& path) {
  json opts = json::object();
  auto add = [&](const CLI::App& app) {
    for (const CLI::Option* o : app.get_options()) {
      if (o->get_name() == "--help" || o->get_name().empty()) continue;
      std::string name = o->get_name();
      const auto results = o->results();
      if (results.empty()) {
        opts[name] = o->get_default_str();
      } else if (results.size() == 1) {
        opts[name] = results.front();
      } else {
        opts[name] = results;
      }
    }
  };
  add(root);
  add(cmd);
  std::string command;
  for (const CLI::App* a = &cmd; a != nullptr && a->get_parent() != nullptr; a = a->get_parent()) {
    command = a->get_name() + (command.empty() ? "" : " " + command);
  }
  write_file(path, json{{"command", command}, {"options", opts}, {"version", pmt_version()}}.dump(2) + "\n");
}

void stderr_logger(const char* msg, void*) { std::cerr << msg << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prefmt: QE-guided data filtering, RL fine-tuning and reranking on a synthetic translation task"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", quiet, "No progress messages");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "Generate a synthetic parallel corpus");
  size_t gen_size = 0;
  int vocab = 40, min_len = 4, max_len = 10;
  double swap_rate = 0.2, noise = 0.0, zipf = 0.0;
  uint64_t gen_seed = 1;
  std::string gen_out = "corpus.jsonl", gen_task = "task.json", gen_ledger;
  gen->add_option("--size", gen_size, "Number of pairs")->required()->check(CLI::PositiveNumber);
  gen->add_option("--vocab", vocab, "Source vocabulary size")->capture_default_str();
  gen->add_option("--min-len", min_len, "Minimum sentence length")->capture_default_str();
  gen->add_option("--max-len", max_len, "Maximum sentence length")->capture_default_str();
  gen->add_option("--swap-rate", swap_rate, "Fraction of source words that trigger a swap")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--noise", noise, "Fraction of pairs with corrupted references")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  gen->add_option("--zipf", zipf, "Zipf exponent of the source word distribution (0 = uniform)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Corpus JSONL")->capture_default_str();
  gen->add_option("--task", gen_task, "Task definition JSON")->capture_default_str();
  gen->add_option("--ledger", gen_ledger, "Noise ledger TSV (default: <out>.ledger.tsv)");

  // ---- split ----
  auto* split = app.add_subcommand("split", "Shuffle and split a corpus into train/dev/test");
  std::string split_in, split_train = "train.jsonl", split_dev = "dev.jsonl", split_test = "test.jsonl";
  double train_frac = 0.8, dev_frac = 0.1;
  uint64_t split_seed = 1;
  split->add_option("--corpus", split_in, "Corpus JSONL")->required();
  split->add_option("--train-frac", train_frac)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  split->add_option("--dev-frac", dev_frac)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  split->add_option("--seed", split_seed)->capture_default_str();
  split->add_option("--train-out", split_train)->capture_default_str();
  split->add_option("--dev-out", split_dev)->capture_default_str();
  split->add_option("--test-out", split_test)->capture_default_str();

  // ---- filter ----
  auto* filter = app.add_subcommand("filter", "QE-based data filtering");
  filter->require_subcommand(1);
  auto* fscore = filter->add_subcommand("score", "Score every pair with a reference-free metric");
  std::string fs_corpus, fs_task, fs_qe = "mock-qe", fs_url, fs_out = "scores.tsv";
  size_t fs_batch = 64;
  fscore->add_option("--corpus", fs_corpus, "Corpus JSONL")->required();
  fscore->add_option("--task", fs_task, "Task definition JSON (needed by mock-qe)");
  fscore->add_option("--qe", fs_qe, "mock-qe or remote:<metric>")->capture_default_str();
  fscore->add_option("--scorer-url", fs_url, "Scoring service URL (overrides PREFMT_SCORER_URL)");
  fscore->add_option("--batch-size", fs_batch)->check(CLI::PositiveNumber)->capture_default_str();
  fscore->add_option("--out", fs_out, "Scores TSV")->capture_default_str();

  auto* fselect = filter->add_subcommand("select", "Select a subset from a scores file");
  std::string sel_corpus, sel_scores, sel_out = "subset.jsonl";
  size_t top_k = 0;
  double threshold = 0.0;
  fselect->add_option("--corpus", sel_corpus, "Corpus JSONL")->required();
  fselect->add_option("--scores", sel_scores, "Scores TSV")->required();
  auto* topk_opt = fselect->add_option("--top-k", top_k, "Keep the k best pairs")->check(CLI::PositiveNumber);
  auto* thr_opt = fselect->add_option("--threshold", threshold, "Keep pairs scoring >= threshold");
  topk_opt->excludes(thr_opt);
  fselect->add_option("--out", sel_out, "Subset JSONL")->capture_default_str();

  auto* fsweep = filter->add_subcommand("sweep", "Train on top-k subsets of several sizes");
  std::string sw_train, sw_dev, sw_task, sw_scores, sw_qe = "mock-qe", sw_url, sw_out = "sweep.json", sw_config;
  std::vector<size_t> sw_sizes;
  fsweep->add_option("--train", sw_train, "Training corpus JSONL")->required();
  fsweep->add_option("--dev", sw_dev, "Dev corpus JSONL")->required();
  fsweep->add_option("--task", sw_task, "Task definition JSON")->required();
  fsweep->add_option("--sizes", sw_sizes, "Subset sizes, increasing")->required()->delimiter(',');
  fsweep->add_option("--scores", sw_scores, "Precomputed scores TSV");
  fsweep->add_option("--qe", sw_qe)->capture_default_str();
  fsweep->add_option("--scorer-url", sw_url);
  fsweep->add_option("--config", sw_config, "JSON with extra settings (mle, policy, beam_size, eval_limit, seed)");
  fsweep->add_option("--out", sw_out, "Report JSON")->capture_default_str();

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train a policy");
  train->require_subcommand(1);
  auto* tmle = train->add_subcommand("mle", "Maximum-likelihood training");
  std::string m_task, m_train, m_dev, m_init, m_out = "policy.bin", m_history;
  pmt_mle_options mle_opts;
  pmt_mle_options_init(&mle_opts);
  pmt_policy_options pol_opts;
  pmt_policy_options_init(&pol_opts);
  tmle->add_option("--task", m_task, "Task definition JSON")->required();
  tmle->add_option("--train", m_train, "Training corpus JSONL")->required();
  tmle->add_option("--dev", m_dev, "Dev corpus JSONL (default: the training corpus)");
  tmle->add_option("--init", m_init, "Start from this checkpoint instead of a fresh policy");
  tmle->add_option("--out", m_out, "Checkpoint path")->capture_default_str();
  tmle->add_option("--history", m_history, "Per-epoch CSV (default: <out>.history.csv)");
  tmle->add_option("--epochs", mle_opts.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  tmle->add_option("--lr", mle_opts.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  tmle->add_option("--batch-size", mle_opts.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  tmle->add_option("--patience", mle_opts.early_stop_patience)->check(CLI::PositiveNumber)->capture_default_str();
  tmle->add_option("--max-updates", mle_opts.max_updates, "0 = unlimited")->capture_default_str();
  tmle->add_option("--seed", mle_opts.seed)->capture_default_str();
  tmle->add_option("--embed-dim", pol_opts.embed_dim)->check(CLI::PositiveNumber)->capture_default_str();
  tmle->add_option("--hidden", pol_opts.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  tmle->add_option("--src-radius", pol_opts.src_radius)->check(CLI::NonNegativeNumber)->capture_default_str();
  tmle->add_option("--prev-window", pol_opts.prev_window)->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* trl = train->add_subcommand("rl", "PPO fine-tuning against a reward metric");
  std::string r_policy, r_train, r_dev, r_task, r_reward = "chrf", r_url, r_out = "policy.rl.bin", r_stats;
  std::string r_baseline = "batch-mean";
  pmt_rl_options rl_opts;
  pmt_rl_options_init(&rl_opts);
  trl->add_option("--policy", r_policy, "Starting checkpoint")->required();
  trl->add_option("--train", r_train, "Training corpus JSONL")->required();
  trl->add_option("--dev", r_dev, "Dev corpus JSONL")->required();
  trl->add_option("--task", r_task, "Task definition JSON (needed by mock-qe)");
  trl->add_option("--reward", r_reward, "bleu, chrf, mock-qe or remote:<metric>")->capture_default_str();
  trl->add_option("--scorer-url", r_url);
  trl->add_option("--out", r_out, "Checkpoint path")->capture_default_str();
  trl->add_option("--stats", r_stats, "Per-iteration CSV (default: <out>.stats.csv)");
  trl->add_option("--lr", rl_opts.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  trl->add_option("--gamma", rl_opts.gamma)->capture_default_str();
  trl->add_option("--trajectory-limit", rl_opts.trajectory_limit)->check(CLI::PositiveNumber)->capture_default_str();
  trl->add_option("--beam", rl_opts.rollout_beam_size)->check(CLI::PositiveNumber)->capture_default_str();
  trl->add_option("--batch-size", rl_opts.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  trl->add_option("--ppo-epochs", rl_opts.ppo_epochs)->check(CLI::PositiveNumber)->capture_default_str();
  trl->add_option("--clip", rl_opts.clip_epsilon)->capture_default_str();
  trl->add_option("--kl", rl_opts.kl_coef)->capture_default_str();
  trl->add_option("--baseline", r_baseline)
      ->check(CLI::IsMember({"batch-mean", "per-position", "none"}))
      ->capture_default_str();
  trl->add_option("--rollouts-per-iter", rl_opts.rollouts_per_iter)->check(CLI::PositiveNumber)->capture_default_str();
  trl->add_option("--dev-limit", rl_opts.dev_limit)->capture_default_str();
  trl->add_option("--seed", rl_opts.seed)->capture_default_str();

  // ---- decode ----
  auto* decode = app.add_subcommand("decode", "Generate translations");
  decode->require_subcommand(1);
  auto* dbeam = decode->add_subcommand("beam", "Beam search");
  std::string db_policy, db_corpus, db_out = "outputs.txt", db_nbest;
  int db_beam = 5;
  dbeam->add_option("--policy", db_policy)->required();
  dbeam->add_option("--corpus", db_corpus, "Corpus JSONL with the sources")->required();
  dbeam->add_option("--beam", db_beam)->check(CLI::PositiveNumber)->capture_default_str();
  dbeam->add_option("--out", db_out, "Top hypothesis per line")->capture_default_str();
  dbeam->add_option("--nbest", db_nbest, "Candidate JSONL with the whole beam");

  auto* dsample = decode->add_subcommand("sample", "Sample candidate lists");
  std::string ds_policy, ds_corpus, ds_out = "candidates.jsonl";
  pmt_sample_options so;
  pmt_sample_options_init(&so);
  dsample->add_option("--policy", ds_policy)->required();
  dsample->add_option("--corpus", ds_corpus)->required();
  dsample->add_option("--count", so.count)->check(CLI::PositiveNumber)->capture_default_str();
  dsample->add_option("--top-k", so.top_k, "0 = no top-k cut")->check(CLI::NonNegativeNumber)->capture_default_str();
  dsample->add_option("--top-p", so.top_p)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  dsample->add_option("--temperature", so.temperature)->check(CLI::PositiveNumber)->capture_default_str();
  dsample->add_option("--seed", so.seed)->capture_default_str();
  dsample->add_option("--out", ds_out)->capture_default_str();

  // ---- rerank ----
  auto* rerank = app.add_subcommand("rerank", "Choose one candidate per source");
  rerank->require_subcommand(1);
  auto* rnbest = rerank->add_subcommand("nbest", "N-best reranking with a reference-free metric");
  std::string rn_cands, rn_qe = "mock-qe", rn_task, rn_url, rn_out = "selection.jsonl", rn_text;
  rnbest->add_option("--candidates", rn_cands)->required();
  rnbest->add_option("--qe", rn_qe)->capture_default_str();
  rnbest->add_option("--task", rn_task);
  rnbest->add_option("--scorer-url", rn_url);
  rnbest->add_option("--out", rn_out)->capture_default_str();
  rnbest->add_option("--text", rn_text, "Selected hypothesis per line");

  auto* rmbr = rerank->add_subcommand("mbr", "Minimum Bayes risk selection");
  std::string rm_cands, rm_utility = "chrf", rm_task, rm_url, rm_out = "selection.jsonl", rm_text;
  bool rm_sym = false;
  rmbr->add_option("--candidates", rm_cands)->required();
  rmbr->add_option("--utility", rm_utility, "Reference-based metric")->capture_default_str();
  rmbr->add_option("--task", rm_task);
  rmbr->add_option("--scorer-url", rm_url);
  rmbr->add_flag("--symmetric-cache", rm_sym, "Fill one triangle when the utility is symmetric");
  rmbr->add_option("--out", rm_out)->capture_default_str();
  rmbr->add_option("--text", rm_text);

  // ---- pipeline ----
  auto* pipe = app.add_subcommand("pipeline", "Run filter/mle/rl/nrr/mbr stages end to end");
  std::string p_stages, p_config, p_out = "run", p_url;
  uint64_t p_seed = 0;
  size_t p_size = 0;
  double p_noise = -1.0;
  int p_count = 0;
  pipe->add_option("--stages", p_stages, "Comma-separated subset of filter,mle,rl,nrr,mbr,eval")->required();
  pipe->add_option("--config", p_config, "JSON overrides of the default configuration");
  pipe->add_option("--out-dir", p_out)->capture_default_str();
  pipe->add_option("--seed", p_seed);
  pipe->add_option("--corpus-size", p_size);
  pipe->add_option("--noise", p_noise)->check(CLI::Range(0.0, 1.0));
  pipe->add_option("--candidates", p_count, "Samples per source for nrr/mbr")->check(CLI::PositiveNumber);
  pipe->add_option("--scorer-url", p_url);
  auto* pdefaults = app.add_subcommand("defaults", "Print the default pipeline configuration");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "Score outputs against references");
  std::string e_hyps, e_corpus, e_task, e_out;
  eval->add_option("--hyps", e_hyps, "One hypothesis per line")->required();
  eval->add_option("--corpus", e_corpus, "Corpus JSONL with the references")->required();
  eval->add_option("--task", e_task, "Task definition JSON (adds the mock-QE column)");
  eval->add_option("--out", e_out, "Report JSON");

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "Wall-clock table for training and inference methods");
  std::string b_run, b_out = "bench", b_config;
  bench->add_option("--run-dir", b_run, "Pipeline run directory with data/ and mle/policy.bin")->required();
  bench->add_option("--out-dir", b_out)->capture_default_str();
  bench->add_option("--config", b_config, "JSON overrides (sources, candidates, scaling_n, work_per_item, ...)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  pmt_set_max_threads(threads);
  if (!quiet) pmt_set_logger(stderr_logger, nullptr);

  try {
    if (*gen) {
      pmt_gen_options g;
      pmt_gen_options_init(&g);
      g.vocab_size = vocab;
      g.min_len = min_len;
      g.max_len = max_len;
      g.swap_rate = swap_rate;
      g.noise_rate = noise;
      g.zipf_exponent = zipf;
      g.seed = gen_seed;
      g.size = gen_size;
      const std::string ledger = gen_ledger.empty() ? gen_out + ".ledger.tsv" : gen_ledger;
      check(pmt_gen_corpus(&g, gen_out.c_str(), gen_task.c_str(), ledger.c_str()));
      write_snapshot(app, *gen, gen_out + ".config.json");
      std::cout << "wrote " << gen_size << " pairs to " << gen_out << "\n";
    } else if (*split) {
      check(pmt_split_corpus(split_in.c_str(), train_frac, dev_frac, split_seed, split_train.c_str(),
                             split_dev.c_str(), split_test.c_str()));
      write_snapshot(app, *split, split_train + ".config.json");
    } else if (*fscore) {
      auto qe = make_backend(fs_qe, fs_task, fs_url);
      size_t n = 0;
      check(pmt_filter_score(qe.get(), fs_corpus.c_str(), fs_batch, fs_out.c_str(), &n));
      write_snapshot(app, *fscore, fs_out + ".config.json");
      std::cout << "scored " << n << " pairs into " << fs_out << "\n";
    } else if (*fselect) {
      if (topk_opt->count() == 0 && thr_opt->count() == 0) usage_error("filter select needs --top-k or --threshold");
      size_t kept = 0;
      check(pmt_filter_select(sel_corpus.c_str(), sel_scores.c_str(), topk_opt->count() ? top_k : 0, threshold,
                              sel_out.c_str(), &kept));
      write_snapshot(app, *fselect, sel_out + ".config.json");
      std::cout << "kept " << kept << " pairs in " << sel_out << "\n";
    } else if (*fsweep) {
      json cfg = sw_config.empty() ? json::object() : read_json_file(sw_config);
      cfg["train"] = sw_train;
      cfg["dev"] = sw_dev;
      cfg["task"] = sw_task;
      cfg["sizes"] = sw_sizes;
      cfg["qe"] = sw_qe;
      if (!sw_scores.empty()) cfg["scores"] = sw_scores;
      const std::string endpoint = endpoint_from(sw_url);
      if (!endpoint.empty()) cfg["endpoint"] = endpoint;
      char* report = nullptr;
      check(pmt_filter_sweep(cfg.dump().c_str(), sw_out.c_str(), &report));
      StringHandle hold(report);
      write_snapshot(app, *fsweep, sw_out + ".config.json");
      std::cout << report << "\n";
    } else if (*tmle) {
      PolicyHandle policy;
      if (!m_init.empty()) {
        policy = load_policy(m_init);
      } else {
        pmt_policy* p = nullptr;
        pol_opts.seed = mle_opts.seed;
        check(pmt_policy_create(m_task.c_str(), &pol_opts, &p));
        policy.reset(p);
      }
      const std::string history = m_history.empty() ? m_out + ".history.csv" : m_history;
      double best = 0.0;
      check(pmt_train_mle(policy.get(), m_train.c_str(), or_null(m_dev), &mle_opts, history.c_str(), &best));
      check(pmt_policy_save(policy.get(), m_out.c_str()));
      write_snapshot(app, *tmle, m_out + ".config.json");
      std::cout << "best dev nll " << best << ", checkpoint " << m_out << "\n";
    } else if (*trl) {
      auto policy = load_policy(r_policy);
      auto reward = make_backend(r_reward, r_task, r_url);
      rl_opts.baseline = r_baseline == "per-position" ? PMT_BASELINE_PER_POSITION
                         : r_baseline == "none"       ? PMT_BASELINE_NONE
                                                      : PMT_BASELINE_BATCH_MEAN;
      const std::string stats = r_stats.empty() ? r_out + ".stats.csv" : r_stats;
      double start = 0.0, best = 0.0;
      check(pmt_train_rl(policy.get(), r_train.c_str(), r_dev.c_str(), reward.get(), &rl_opts, stats.c_str(), &start,
                         &best));
      check(pmt_policy_save(policy.get(), r_out.c_str()));
      write_snapshot(app, *trl, r_out + ".config.json");
      std::cout << "dev reward " << start << " -> " << best << ", checkpoint " << r_out << "\n";
    } else if (*dbeam) {
      auto policy = load_policy(db_policy);
      check(pmt_decode_beam(policy.get(), db_corpus.c_str(), db_beam, db_out.c_str(), or_null(db_nbest)));
      write_snapshot(app, *dbeam, db_out + ".config.json");
    } else if (*dsample) {
      auto policy = load_policy(ds_policy);
      check(pmt_decode_sample(policy.get(), ds_corpus.c_str(), &so, ds_out.c_str()));
      write_snapshot(app, *dsample, ds_out + ".config.json");
    } else if (*rnbest) {
      auto qe = make_backend(rn_qe, rn_task, rn_url);
      check(pmt_rerank_nbest(qe.get(), rn_cands.c_str(), rn_out.c_str(), or_null(rn_text)));
      write_snapshot(app, *rnbest, rn_out + ".config.json");
    } else if (*rmbr) {
      auto utility = make_backend(rm_utility, rm_task, rm_url);
      check(pmt_rerank_mbr(utility.get(), rm_sym ? 1 : 0, rm_cands.c_str(), rm_out.c_str(), or_null(rm_text)));
      write_snapshot(app, *rmbr, rm_out + ".config.json");
    } else if (*pipe) {
      check(pmt_pipeline_check_stages(p_stages.c_str()));
      json cfg = p_config.empty() ? json::object() : read_json_file(p_config);
      cfg["stages"] = p_stages;
      if (pipe->count("--seed")) cfg["seed"] = p_seed;
      if (p_size > 0) cfg["corpus_size"] = p_size;
      if (p_noise >= 0.0) cfg["task"]["noise_rate"] = p_noise;
      if (p_count > 0) cfg["sampling"]["count"] = p_count;
      const std::string endpoint = endpoint_from(p_url);
      if (!endpoint.empty()) cfg["endpoint"] = endpoint;
      pmt_eval_result r{};
      check(pmt_pipeline_run(cfg.dump().c_str(), p_out.c_str(), &r));
      std::ifstream md(p_out + "/report.md");
      std::cout << md.rdbuf();
    } else if (*pdefaults) {
      char* text = nullptr;
      check(pmt_pipeline_defaults(&text));
      StringHandle hold(text);
      std::cout << text << "\n";
    } else if (*eval) {
      pmt_eval_result r{};
      check(pmt_eval(e_hyps.c_str(), e_corpus.c_str(), or_null(e_task), or_null(e_out), &r));
      std::printf("| BLEU | chrF | mock-QE | sentences |\n|---:|---:|---:|---:|\n");
      if (r.has_mock_qe) {
        std::printf("| %.2f | %.2f | %.2f | %zu |\n", 100.0 * r.bleu, 100.0 * r.chrf, 100.0 * r.mock_qe, r.sentences);
      } else {
        std::printf("| %.2f | %.2f | - | %zu |\n", 100.0 * r.bleu, 100.0 * r.chrf, r.sentences);
      }
    } else if (*bench) {
      json cfg = b_config.empty() ? json::object() : read_json_file(b_config);
      cfg["run_dir"] = b_run;
      char* md = nullptr;
      check(pmt_bench_run(cfg.dump().c_str(), b_out.c_str(), &md));
      StringHandle hold(md);
      write_snapshot(app, *bench, b_out + "/bench.config.json");
      std::cout << md;
    }
  } catch (const CommandFailed& f) {
    return f.code;
  }
  return kExitOk;
}
