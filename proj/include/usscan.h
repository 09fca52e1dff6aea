/* C interface to the ultrasound scanning-skill workbench.
 *
 * All entry points return us_status (except the accessors documented
 * otherwise); on failure us_last_error() describes the problem. Handles
 * are opaque and must be released with their matching _free call.
 */
#ifndef USSCAN_H
#define USSCAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define USSCAN_API __declspec(dllexport)
#else
#define USSCAN_API __attribute__((visibility("default")))
#endif

typedef enum us_status {
    US_OK = 0,
    US_ERR_VALIDATION = 1, /* bad config / bad input / contract violation */
    US_ERR_DIVERGED = 2,   /* runtime divergence during training or rollout */
    US_ERR_IO = 3          /* file missing, unreadable, or corrupted */
} us_status;

typedef struct us_config us_config;

typedef struct us_gen_summary {
    uint64_t records;
    uint64_t label1_records;
    uint64_t episodes;
} us_gen_summary;

typedef struct us_train_summary {
    double final_train_loss;
    double final_val_loss;
    double final_train_acc; /* quality training only, else -1 */
    double final_val_acc;   /* quality training only, else -1 */
} us_train_summary;

typedef struct us_eval_summary {
    double success_rate;
    double overshoot_rate;
    double mean_terminal_offset;
    int episodes;
} us_eval_summary;

/* Thread-local message for the most recent failure in this thread. */
USSCAN_API const char* us_last_error(void);

/* ---- configuration ---- */

USSCAN_API us_config* us_config_default(void);
USSCAN_API us_config* us_config_load(const char* path);
USSCAN_API us_status us_config_save(const us_config* cfg, const char* path);
/* Keys are the flat "section.field" names of the config text format. */
USSCAN_API us_status us_config_set(us_config* cfg, const char* key, const char* value);
USSCAN_API us_status us_config_get(const us_config* cfg, const char* key,
                                   char* buf, size_t buflen);
USSCAN_API void us_config_free(us_config* cfg);

/* ---- pipeline commands ---- */

USSCAN_API us_status us_gen_data(const us_config* cfg, const char* out_path,
                                 us_gen_summary* summary /* nullable */);

USSCAN_API us_status us_train_bc(const us_config* cfg, const char* data_path,
                                 const char* out_ckpt, const char* report_csv,
                                 us_train_summary* summary /* nullable */);

USSCAN_API us_status us_train_quality(const us_config* cfg, const char* data_path,
                                      const char* in_ckpt, const char* out_ckpt,
                                      const char* report_csv,
                                      us_train_summary* summary /* nullable */);

USSCAN_API us_status us_post_opt(const us_config* cfg, const char* in_ckpt,
                                 const char* out_ckpt, const char* report_csv);

USSCAN_API us_status us_eval(const us_config* cfg, const char* ckpt_path,
                             int n_episodes, const char* out_csv /* nullable */,
                             int use_oracle,
                             us_eval_summary* summary /* nullable */);

/* Dumps a dataset file to CSV for external plotting. */
USSCAN_API us_status us_plot_data(const char* data_path, const char* out_csv);

/* Finite-difference gradient validation over every layer kind and the
 * policy composites. Writes a per-check text report into buf (truncating
 * if needed) and sets *all_pass. inject_fault != 0 corrupts one analytic
 * gradient on purpose. */
USSCAN_API us_status us_gradcheck(int inject_fault, char* buf, size_t buflen,
                                  int* all_pass);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* USSCAN_H */
