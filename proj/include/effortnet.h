/* effortnet — EEG listening-effort classification pipeline, C interface.
 *
 * All functions are synchronous. A context carries the active run
 * configuration, the master seed and the last error message; contexts are not
 * thread-safe, use one per thread. Every command writes its artifacts under
 * the given output directory (config.echo, checkpoints/, reports/) and stores
 * the primary artifact path, retrievable via efn_last_artifact().
 */
#ifndef EFFORTNET_H
#define EFFORTNET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum efn_status {
    EFN_OK = 0,
    EFN_ERR_INVALID_ARG = 1, /* null pointer or out-of-range value */
    EFN_ERR_CONFIG = 2,      /* unknown key, bad value, invalid combination */
    EFN_ERR_IO = 3,          /* missing or unreadable/unwritable file */
    EFN_ERR_FORMAT = 4,      /* corrupt or mismatched EEGE/EFNT payload */
    EFN_ERR_RUNTIME = 5      /* divergence or other internal failure */
} efn_status;

typedef struct efn_ctx efn_ctx;

/* context holds defaults until a config is loaded */
efn_ctx* efn_ctx_create(void);
void efn_ctx_destroy(efn_ctx* ctx);

/* message of the last failing call on this context; empty string if none */
const char* efn_last_error(const efn_ctx* ctx);

/* primary artifact path written by the last successful command */
const char* efn_last_artifact(const efn_ctx* ctx);

const char* efn_version(void);

/* ---- configuration ---------------------------------------------------- */

efn_status efn_config_load(efn_ctx* ctx, const char* path);
efn_status efn_config_from_text(efn_ctx* ctx, const char* text);
efn_status efn_set_seed(efn_ctx* ctx, uint64_t seed);

/* canonical echo of the effective config; valid until the next call */
const char* efn_config_echo(efn_ctx* ctx);

/* ---- commands ----------------------------------------------------------- */

/* seeded synthetic corpus: source_raw.eege + target_raw.eege */
efn_status efn_cmd_synth(efn_ctx* ctx, const char* out_dir);

/* raw EEGE -> band-passed, decimated, z-normalized DWT input maps */
efn_status efn_cmd_preprocess(efn_ctx* ctx, const char* in_path, const char* out_dir);

/* phase 1, masked self-supervised pretraining -> checkpoints/phase1.efnt */
efn_status efn_cmd_pretrain(efn_ctx* ctx, const char* maps_path, const char* out_dir);

/* phase 2, replay-based incremental learning; init_ckpt may be NULL for a
 * random encoder start -> checkpoints/phase2.efnt */
efn_status efn_cmd_train_il(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                            const char* out_dir);

/* phase 3 per subject -> checkpoints/finetune_s<ID>.efnt; subjects NULL (with
 * n_subjects 0) selects every subject in the file */
efn_status efn_cmd_finetune(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                            double ratio, const int* subjects, size_t n_subjects,
                            const char* out_dir);

/* fine-tune at one ratio and score held-out epochs -> reports/evaluate.csv */
efn_status efn_cmd_evaluate(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                            double ratio, const char* out_dir);

/* accuracy over the configured ratio grid -> reports/sweep.csv */
efn_status efn_cmd_sweep(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                         const char* out_dir);

/* phase-contribution arms; phases is "3", "23", "123" or NULL for all three
 * -> reports/ablation.csv */
efn_status efn_cmd_ablate(efn_ctx* ctx, const char* source_maps_path,
                          const char* target_maps_path, const char* phases,
                          const char* out_dir);

/* per-condition low-effort probabilities -> reports/lle.csv */
efn_status efn_cmd_lle(efn_ctx* ctx, const char* maps_path, const char* init_ckpt,
                       const char* out_dir);

/* alpha-power dataset validation on a raw EEGE file -> reports/stats.csv */
efn_status efn_cmd_stats(efn_ctx* ctx, const char* raw_path, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* EFFORTNET_H */
