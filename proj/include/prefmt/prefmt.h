/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The prefmt Authors */

/*
 * C interface to the prefmt library.
 *
 * Every function returns a pmt_status. On failure, pmt_last_error() returns a
 * message describing the most recent error on the calling thread; it stays
 * valid until the next call into the library from that thread.
 *
 * Objects are opaque handles created by *_create / *_load and released by the
 * matching *_free. Strings returned through char** are owned by the caller and
 * released with pmt_string_free.
 */

#ifndef PREFMT_PREFMT_H_
#define PREFMT_PREFMT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(PREFMT_BUILDING_LIBRARY)
#define PMT_API __attribute__((visibility("default")))
#else
#define PMT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pmt_status {
  PMT_OK = 0,
  PMT_ERR_INVALID_INPUT = 1,
  PMT_ERR_INVALID_CONFIG = 2,
  PMT_ERR_TRANSPORT = 3,
  PMT_ERR_MALFORMED_RESPONSE = 4,
  PMT_ERR_HTTP_STATUS = 5,
  PMT_ERR_DIVERGENCE = 6,
  PMT_ERR_MISSING_ARTIFACT = 7,
  PMT_ERR_INVALID_ARTIFACT = 8,
  PMT_ERR_IO = 9,
  PMT_ERR_INTERNAL = 10
} pmt_status;

PMT_API const char* pmt_version(void);
PMT_API const char* pmt_last_error(void);
PMT_API const char* pmt_status_name(pmt_status status);
PMT_API void pmt_string_free(char* s);

/* Caps worker threads for every parallel operation. 0 = hardware default. */
PMT_API void pmt_set_max_threads(int threads);

/* Optional sink for progress messages. NULL disables logging. */
typedef void (*pmt_log_fn)(const char* message, void* user);
PMT_API void pmt_set_logger(pmt_log_fn fn, void* user);

/* ---- Metrics ----------------------------------------------------------- */

PMT_API pmt_status pmt_sentence_bleu(const char* hyp, const char* ref, double* out);
PMT_API pmt_status pmt_chrf(const char* hyp, const char* ref, double* out);
PMT_API pmt_status pmt_corpus_bleu(const char* const* hyps, const char* const* refs, size_t n, double* out);

/* ---- Scoring backends -------------------------------------------------- */

typedef struct pmt_backend pmt_backend;

/*
 * spec: bleu | chrf | exact | mock-qe | constant:<v> | constant-ref:<v> |
 *       remote:<metric>
 * task_path: task definition JSON, required by mock-qe. May be NULL.
 * endpoint: base URL of the scoring service, required by remote:. May be NULL.
 */
PMT_API pmt_status pmt_backend_create(const char* spec, const char* task_path, const char* endpoint,
                                      pmt_backend** out);
PMT_API void pmt_backend_free(pmt_backend* backend);
PMT_API int pmt_backend_uses_reference(const pmt_backend* backend);
PMT_API uint64_t pmt_backend_cost(const pmt_backend* backend);

/* refs may be NULL for reference-free backends. */
PMT_API pmt_status pmt_backend_score(pmt_backend* backend, const char* const* srcs, const char* const* mts,
                                     const char* const* refs, size_t n, double* out);

/* ---- Synthetic data ---------------------------------------------------- */

typedef struct pmt_gen_options {
  int vocab_size;
  int min_len;
  int max_len;
  double swap_rate;
  double noise_rate;
  double zipf_exponent;
  uint64_t seed;
  size_t size;
} pmt_gen_options;

PMT_API void pmt_gen_options_init(pmt_gen_options* options);

/* Writes the corpus JSONL, the task JSON and, if ledger_path is not NULL, the
 * noise ledger TSV. */
PMT_API pmt_status pmt_gen_corpus(const pmt_gen_options* options, const char* corpus_path, const char* task_path,
                                  const char* ledger_path);

/* Shuffled train/dev/test split of a corpus file. */
PMT_API pmt_status pmt_split_corpus(const char* corpus_path, double train_frac, double dev_frac, uint64_t seed,
                                    const char* train_path, const char* dev_path, const char* test_path);

/* ---- Filtering --------------------------------------------------------- */

/* Scores every (src, ref) pair with a reference-free backend; writes the
 * scores TSV. Streams the corpus. */
PMT_API pmt_status pmt_filter_score(pmt_backend* qe, const char* corpus_path, size_t batch_size,
                                    const char* scores_path, size_t* scored);

/* Keeps the top_k pairs (threshold ignored) when top_k > 0, otherwise every
 * pair scoring >= threshold. Writes the subset JSONL in corpus order. */
PMT_API pmt_status pmt_filter_select(const char* corpus_path, const char* scores_path, size_t top_k,
                                     double threshold, const char* out_path, size_t* kept);

/* config_json: see the README. Writes the sweep report JSON to report_path
 * and returns it through report_json if not NULL. */
PMT_API pmt_status pmt_filter_sweep(const char* config_json, const char* report_path, char** report_json);

/* ---- Policy ------------------------------------------------------------ */

typedef struct pmt_policy pmt_policy;

typedef struct pmt_policy_options {
  int embed_dim;
  int hidden;
  int src_radius;
  int prev_window;
  double init_scale;
  uint64_t seed;
} pmt_policy_options;

PMT_API void pmt_policy_options_init(pmt_policy_options* options);
PMT_API pmt_status pmt_policy_create(const char* task_path, const pmt_policy_options* options, pmt_policy** out);
PMT_API pmt_status pmt_policy_load(const char* path, pmt_policy** out);
PMT_API pmt_status pmt_policy_save(const pmt_policy* policy, const char* path);
PMT_API void pmt_policy_free(pmt_policy* policy);
PMT_API size_t pmt_policy_num_params(const pmt_policy* policy);

/* Log-probability of `tgt` given `src` (whitespace-separated words). */
PMT_API pmt_status pmt_policy_logprob(const pmt_policy* policy, const char* src, const char* tgt, double* out);

/* ---- Training ---------------------------------------------------------- */

typedef struct pmt_mle_options {
  int epochs;
  double learning_rate;
  int batch_size;
  int early_stop_patience;
  double lr_decay;
  size_t max_updates;
  uint64_t seed;
} pmt_mle_options;

PMT_API void pmt_mle_options_init(pmt_mle_options* options);

/* history_csv_path may be NULL. dev_path may be NULL (train doubles as dev). */
PMT_API pmt_status pmt_train_mle(pmt_policy* policy, const char* train_path, const char* dev_path,
                                 const pmt_mle_options* options, const char* history_csv_path, double* best_dev_nll);

typedef enum pmt_baseline {
  PMT_BASELINE_BATCH_MEAN = 0,
  PMT_BASELINE_PER_POSITION = 1,
  PMT_BASELINE_NONE = 2
} pmt_baseline;

typedef struct pmt_rl_options {
  double learning_rate;
  double gamma;
  size_t trajectory_limit;
  int rollout_beam_size;
  size_t batch_size;
  int ppo_epochs;
  double clip_epsilon;
  double kl_coef;
  pmt_baseline baseline;
  size_t rollouts_per_iter;
  size_t dev_limit;
  uint64_t seed;
} pmt_rl_options;

PMT_API void pmt_rl_options_init(pmt_rl_options* options);

/* stats_csv_path may be NULL. */
PMT_API pmt_status pmt_train_rl(pmt_policy* policy, const char* train_path, const char* dev_path, pmt_backend* reward,
                                const pmt_rl_options* options, const char* stats_csv_path, double* start_dev_reward,
                                double* best_dev_reward);

/* ---- Decoding ---------------------------------------------------------- */

/* Reads sources from a corpus JSONL. Writes the top hypothesis per line to
 * text_path and, if candidates_path is not NULL, every beam entry as
 * candidate JSONL. */
PMT_API pmt_status pmt_decode_beam(const pmt_policy* policy, const char* corpus_path, int beam_size,
                                   const char* text_path, const char* candidates_path);

typedef struct pmt_sample_options {
  int count;
  int top_k;
  double top_p;
  double temperature;
  uint64_t seed;
} pmt_sample_options;

PMT_API void pmt_sample_options_init(pmt_sample_options* options);
PMT_API pmt_status pmt_decode_sample(const pmt_policy* policy, const char* corpus_path,
                                     const pmt_sample_options* options, const char* candidates_path);

/* ---- Reranking --------------------------------------------------------- */

/* Selection JSONL goes to selection_path; text_path (may be NULL) gets one
 * selected hypothesis per line. */
PMT_API pmt_status pmt_rerank_nbest(pmt_backend* qe, const char* candidates_path, const char* selection_path,
                                    const char* text_path);
PMT_API pmt_status pmt_rerank_mbr(pmt_backend* utility, int symmetric_cache, const char* candidates_path,
                                  const char* selection_path, const char* text_path);

/* ---- Evaluation, pipeline, benchmark ----------------------------------- */

typedef struct pmt_eval_result {
  size_t sentences;
  double bleu;
  double chrf;
  double mock_qe;
  int has_mock_qe;
} pmt_eval_result;

/* hyps_path: one hypothesis per line, aligned with corpus_path. task_path may
 * be NULL (no mock QE column). report_path may be NULL. */
PMT_API pmt_status pmt_eval(const char* hyps_path, const char* corpus_path, const char* task_path,
                            const char* report_path, pmt_eval_result* out);

/* Default pipeline configuration as JSON. */
PMT_API pmt_status pmt_pipeline_defaults(char** config_json);

/* Checks a comma-separated stage list. */
PMT_API pmt_status pmt_pipeline_check_stages(const char* stages);

PMT_API pmt_status pmt_pipeline_run(const char* config_json, const char* out_dir, pmt_eval_result* out);

/* Writes bench.csv, bench.md and bench.json into out_dir. markdown may be
 * NULL. */
PMT_API pmt_status pmt_bench_run(const char* config_json, const char* out_dir, char** markdown);

#ifdef __cplusplus
}
#endif

#endif /* PREFMT_PREFMT_H_ */
