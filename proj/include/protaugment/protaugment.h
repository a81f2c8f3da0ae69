/* C interface to the protaugment library. All functions return a pa_status;
 * on failure pa_last_error() describes what went wrong (per thread).
 * Strings handed out by the library are released with pa_string_free. */
#ifndef PROTAUGMENT_PROTAUGMENT_H
#define PROTAUGMENT_PROTAUGMENT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PA_API __declspec(dllexport)
#else
#define PA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pa_status {
  PA_OK = 0,
  PA_ERR_INVALID_ARGUMENT = 1,
  PA_ERR_IO = 2,
  PA_ERR_DATA = 3,
  PA_ERR_RUNTIME = 4
} pa_status;

typedef struct pa_config pa_config;
typedef struct pa_report pa_report;

/* Receives one training log line (no trailing newline). */
typedef void (*pa_log_fn)(const char* line, void* user);

PA_API const char* pa_last_error(void);
PA_API const char* pa_status_name(pa_status status);
PA_API void pa_string_free(char* s);

PA_API pa_status pa_config_new(pa_config** out);
PA_API pa_status pa_config_load(pa_config** out, const char* path);
PA_API pa_status pa_config_set(pa_config* config, const char* key, const char* value);
PA_API pa_status pa_config_validate(const pa_config* config);
PA_API pa_status pa_config_to_text(const pa_config* config, char** out);
PA_API void pa_config_free(pa_config* config);

/* Runs every configured seed. When checkpoint_dir is non-null the
 * best-validation parameters of each seed are written there as
 * seed_<n>.ckpt. */
PA_API pa_status pa_train(const pa_config* config, pa_log_fn log, void* user, const char* checkpoint_dir,
                          pa_report** out);
PA_API pa_status pa_report_write(const pa_report* report, const char* dir);
PA_API pa_status pa_report_to_json(const pa_report* report, char** out);
PA_API double pa_report_mean(const pa_report* report);
PA_API double pa_report_std(const pa_report* report);
PA_API size_t pa_report_seed_count(const pa_report* report);
PA_API pa_status pa_report_seed_accuracy(const pa_report* report, size_t index, double* out);
PA_API void pa_report_free(pa_report* report);

/* part is "train", "valid" or "test". */
PA_API pa_status pa_evaluate_checkpoint(const pa_config* config, const char* checkpoint, uint64_t seed,
                                        const char* part, double* mean_accuracy, size_t* episodes);

/* Reads one sentence per line and writes JSON lines
 * {"source": ..., "paraphrases": [...]}. A null output_path means stdout. */
PA_API pa_status pa_paraphrase_file(const pa_config* config, const char* input_path, const char* output_path);

/* strategies is a comma list such as "stub_bt,dbs"; JSON keyed by strategy. */
PA_API pa_status pa_diversity(const pa_config* config, const char* strategies, size_t n_sentences, char** json_out);

/* synonyms_path may be null. */
PA_API pa_status pa_synth_data(size_t n_classes, size_t sentences_per_class, uint64_t seed, const char* path,
                               const char* synonyms_path);

/* Runs the unigram-masked strategy for p_mask = 0.0, 0.1, ..., 1.0 and writes
 * the series as CSV. */
PA_API pa_status pa_pmask_sweep(const pa_config* config, pa_log_fn log, void* user, const char* csv_path);

/* Renders a results.csv as an aligned text table. */
PA_API pa_status pa_results_summary(const char* results_csv, char** out);

#ifdef __cplusplus
}
#endif

#endif
