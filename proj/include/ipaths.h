/* C interface to the influence-path analysis library.
 *
 * All functions return ipaths_status; out-parameters are written only on
 * IPATHS_OK. Objects created by *_build / *_load / ipaths_train are owned
 * by the caller and released with the matching *_free. Handles are opaque;
 * NULL is never a valid handle argument. The last failure message for the
 * calling thread is available via ipaths_last_error().
 */
#ifndef IPATHS_H
#define IPATHS_H

#include <stdint.h>

#if defined(_WIN32)
#if defined(IPATHS_BUILD_SHARED)
#define IPATHS_API __declspec(dllexport)
#else
#define IPATHS_API __declspec(dllimport)
#endif
#else
#define IPATHS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ipaths_status {
  IPATHS_OK = 0,
  IPATHS_ERR_INVALID_ARGUMENT = 1,
  IPATHS_ERR_IO = 2,
  IPATHS_ERR_PARSE = 3,
  IPATHS_ERR_TRAINING = 4,
  IPATHS_ERR_LIMIT = 5,
  IPATHS_ERR_INTERNAL = 6
} ipaths_status;

IPATHS_API const char* ipaths_version(void);
IPATHS_API const char* ipaths_status_string(ipaths_status s);
IPATHS_API const char* ipaths_last_error(void);

typedef struct ipaths_lexicon ipaths_lexicon;
typedef struct ipaths_model ipaths_model;
typedef struct ipaths_dataset ipaths_dataset;
typedef struct ipaths_config ipaths_config;

/* Called with one complete line (no trailing newline) per progress event. */
typedef void (*ipaths_log_fn)(const char* line, void* user);

/* ---- run configuration ----
 *
 * Sectioned key-value file; keys are addressed as "section.key"
 * (e.g. "train.epochs"). Values are passed and returned as their textual
 * form. The hash identifies the full resolved configuration and is embedded
 * in generated artifacts. */

IPATHS_API ipaths_status ipaths_config_default(ipaths_config** out);
IPATHS_API ipaths_status ipaths_config_load(const char* path, ipaths_config** out);
IPATHS_API ipaths_status ipaths_config_set(ipaths_config* c, const char* key,
                                           const char* value);
IPATHS_API ipaths_status ipaths_config_get(const ipaths_config* c, const char* key,
                                           char* buf, int32_t buflen);
IPATHS_API ipaths_status ipaths_config_hash(const ipaths_config* c, char* buf,
                                            int32_t buflen);
IPATHS_API ipaths_status ipaths_config_save(const ipaths_config* c, const char* path);
IPATHS_API void ipaths_config_free(ipaths_config* c);

/* ---- lexicon ---- */

typedef struct ipaths_lexicon_params {
  int32_t determiners;
  int32_t noun_pairs;
  int32_t verb_pairs;
  int32_t prepositions;
  int32_t adverbs;
  int32_t fillers;
  uint64_t seed;
} ipaths_lexicon_params;

IPATHS_API void ipaths_lexicon_params_init(ipaths_lexicon_params* p);
IPATHS_API ipaths_status ipaths_lexicon_build(const ipaths_lexicon_params* p,
                                              ipaths_lexicon** out);
/* config_hash may be NULL ("none"). */
IPATHS_API ipaths_status ipaths_lexicon_save(const ipaths_lexicon* lex,
                                             const char* config_hash,
                                             const char* path);
IPATHS_API ipaths_status ipaths_lexicon_load(const char* path,
                                             ipaths_lexicon** out);
IPATHS_API int32_t ipaths_lexicon_size(const ipaths_lexicon* lex);
IPATHS_API void ipaths_lexicon_free(ipaths_lexicon* lex);

/* ---- data generation ---- */

IPATHS_API ipaths_status ipaths_corpus_generate(const ipaths_lexicon* lex,
                                                int64_t sentences,
                                                uint64_t seed,
                                                const char* path);

/* task: "simple" | "nounpp" | "nounppadv"; condition: "S","P","SS","SP","PS","PP". */
IPATHS_API ipaths_status ipaths_tasks_generate(const ipaths_lexicon* lex,
                                               const char* task,
                                               const char* condition,
                                               int32_t count, uint64_t seed,
                                               const char* path);

IPATHS_API ipaths_status ipaths_dataset_load(const char* path,
                                             ipaths_dataset** out);
IPATHS_API int32_t ipaths_dataset_size(const ipaths_dataset* d);
IPATHS_API void ipaths_dataset_free(ipaths_dataset* d);

/* ---- model ---- */

typedef struct ipaths_train_params {
  int32_t embedding_dim;
  int32_t hidden_size;
  int32_t epochs;
  int32_t batch_size;
  double learning_rate;
  uint64_t seed;
  int32_t dev_count;
  double simple_gate;  /* dev accuracy needed on the short template */
  double nounpp_gate;  /* dev accuracy needed with an attractor in between */
} ipaths_train_params;

IPATHS_API void ipaths_train_params_init(ipaths_train_params* p);
IPATHS_API ipaths_status ipaths_train(const ipaths_lexicon* lex,
                                      const char* corpus_path,
                                      const ipaths_train_params* p,
                                      ipaths_log_fn log, void* user,
                                      ipaths_model** out);
IPATHS_API ipaths_status ipaths_model_save(const ipaths_model* m,
                                           const char* config_hash,
                                           const char* path);
IPATHS_API ipaths_status ipaths_model_load(const char* path,
                                           ipaths_model** out);

/* Randomly initialized, untrained model over the lexicon's vocabulary. */
IPATHS_API ipaths_status ipaths_model_init(const ipaths_lexicon* lex,
                                           int32_t embedding_dim,
                                           int32_t hidden_size, uint64_t seed,
                                           ipaths_model** out);
IPATHS_API void ipaths_model_free(ipaths_model* m);

/* Fraction of instances where the correct verb form outscores the wrong one. */
IPATHS_API ipaths_status ipaths_na_accuracy(const ipaths_model* m,
                                            const ipaths_dataset* d,
                                            double* out);

/* ---- path graph ---- */

/* focus: "subject" | "intervening" (the latter only for tasks that have one). */
IPATHS_API ipaths_status ipaths_path_count(const char* task, const char* focus,
                                           int64_t* out);
/* config_hash may be NULL ("none"). */
IPATHS_API ipaths_status ipaths_paths_dump(const char* task, const char* focus,
                                           const char* config_hash,
                                           const char* out_path);

/* ---- analysis ---- */

typedef struct ipaths_analyze_params {
  const char* focus; /* "subject", "intervening", or "both" */
  int32_t k_steps;
  int32_t max_sentences; /* 0 = all */
  int64_t mc_samples;
  uint64_t metrics_seed;
  int32_t threads;
  int32_t dump_attributions; /* 0/1 */
  const char* config_hash;   /* NULL -> "none" */
} ipaths_analyze_params;

IPATHS_API void ipaths_analyze_params_init(ipaths_analyze_params* p);

/* Each dataset file contributes one (task, condition) cell; outputs are
 * written under out_dir (summary.csv, per-sentence CSVs, charts, report.md). */
IPATHS_API ipaths_status ipaths_analyze(const ipaths_model* m,
                                        const ipaths_lexicon* lex,
                                        const char* const* dataset_paths,
                                        int32_t num_datasets,
                                        const ipaths_analyze_params* p,
                                        const char* out_dir);

/* ---- ablation by gate averaging ---- */

typedef struct ipaths_compress_params {
  int32_t strict_span;   /* 0/1: start the replaced span after the subject */
  int32_t pool_per_task; /* 0/1: pool gate averages across conditions */
  int32_t threads;
  const char* config_hash;
} ipaths_compress_params;

IPATHS_API void ipaths_compress_params_init(ipaths_compress_params* p);
IPATHS_API ipaths_status ipaths_compress(const ipaths_model* m,
                                         const ipaths_lexicon* lex,
                                         const char* const* dataset_paths,
                                         int32_t num_datasets,
                                         const ipaths_compress_params* p,
                                         const char* out_dir);

/* ---- self checks / reporting ---- */

IPATHS_API ipaths_status ipaths_verify(const ipaths_model* m,
                                       const ipaths_lexicon* lex,
                                       int32_t k_steps,
                                       int32_t sentences_per_task,
                                       uint64_t seed, ipaths_log_fn log,
                                       void* user, int32_t* failures);

/* Rebuilds report.md and charts from the CSVs already present in dir. */
IPATHS_API ipaths_status ipaths_report(const char* dir);

#ifdef __cplusplus
}
#endif

#endif /* IPATHS_H */
