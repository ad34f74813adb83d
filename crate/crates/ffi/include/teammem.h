#ifndef TEAMMEM_H
#define TEAMMEM_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call.
 */
typedef enum tm_status_t {
  TM_OK = 0,
  TM_NULL_POINTER = 1,
  TM_INVALID_UTF8 = 2,
  TM_INVALID_JSON = 3,
  TM_INVALID_ARGUMENT = 4,
  TM_NOT_FOUND = 5,
  TM_CONFLICT = 6,
  TM_IO = 7,
  TM_LOAD = 8,
  TM_CONFIG = 9,
  TM_GENERATOR = 10,
  TM_PANIC = 11,
} tm_status_t;

/**
 * Opaque store handle.
 */
typedef struct tm_store_t tm_store_t;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tm_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The returned
 * string is owned by the caller.
 */
char *tm_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library and not yet freed.
 */
void tm_string_free(char *s);

/**
 * Opens or creates a store. `agents_json` is a JSON array of agent ids;
 * `topology` is `local`, `shared` or `hybrid`.
 *
 * # Safety
 * String arguments must be valid NUL-terminated strings; `out` must be a
 * valid pointer. The handle must be released with [`tm_store_free`].
 */
enum tm_status_t tm_store_open(const char *root,
                               const char *topology,
                               const char *agents_json,
                               struct tm_store_t **out);

/**
 * Opens a store created earlier, reading topology and agents from disk.
 *
 * # Safety
 * As for [`tm_store_open`].
 */
enum tm_status_t tm_store_open_existing(const char *root, struct tm_store_t **out);

/**
 * # Safety
 * `h` must be NULL or a handle from [`tm_store_open`] not yet freed.
 */
void tm_store_free(struct tm_store_t *h);

/**
 * Appends an episode (JSON) through `agent_id`'s view.
 *
 * # Safety
 * `h` must be a live handle; strings must be valid NUL-terminated strings.
 */
enum tm_status_t tm_store_append_episode(struct tm_store_t *h,
                                         const char *agent_id,
                                         const char *episode_json);

/**
 * Records a finished task with the built-in lesson generator.
 * `task_json` holds task_index, description, team, actions, outcome and
 * optionally env_context and role; `procedures_json` is a JSON array of the
 * procedure ids used (NULL for none). The stored episode is written to
 * `out_episode` as JSON.
 *
 * # Safety
 * `h` must be a live handle; strings must be valid; `out_episode` must be
 * a valid pointer.
 */
enum tm_status_t tm_post_task(struct tm_store_t *h,
                              const char *agent_id,
                              const char *task_json,
                              const char *procedures_json,
                              const char *task_type,
                              char **out_episode);

/**
 * Retrieves the top `k` memories for `query`. The full result is written
 * to `out_json` and the prompt-ready block to `out_block` (either may be
 * NULL to skip it).
 *
 * # Safety
 * `h` must be a live handle; strings must be valid.
 */
enum tm_status_t tm_retrieve(struct tm_store_t *h,
                             const char *agent_id,
                             const char *query,
                             size_t k,
                             double proc_threshold,
                             char **out_json,
                             char **out_block);

/**
 * Consolidates `agent_id`'s visible episodes when `interval_n` new ones
 * have arrived. The number of procedures created goes to `out_created`.
 *
 * # Safety
 * `h` must be a live handle; `agent_id` valid; `out_created` NULL or valid.
 */
enum tm_status_t tm_maybe_consolidate(struct tm_store_t *h,
                                      const char *agent_id,
                                      uint64_t interval_n,
                                      double cluster_threshold,
                                      size_t *out_created);

/**
 * Writes any pending changes to disk.
 *
 * # Safety
 * `h` must be a live handle.
 */
enum tm_status_t tm_store_persist(struct tm_store_t *h);

/**
 * Computes S, AS, AAS (and CMA when `baseline_jsonl` is not NULL) from run
 * logs given as JSONL text. The series is written to `out_json`.
 *
 * # Safety
 * Strings must be valid; `out_json` must be a valid pointer.
 */
enum tm_status_t tm_metrics_series(const char *log_jsonl,
                                   const char *baseline_jsonl,
                                   char **out_json);

/**
 * Renders the agent action prompt. Any text argument may be NULL, which
 * is treated as empty.
 *
 * # Safety
 * Non-NULL strings must be valid; `out` must be a valid pointer.
 */
enum tm_status_t tm_render_action_prompt(const char *agent_id,
                                         const char *agent_profile,
                                         const char *reasoning_prompt,
                                         const char *memory_block,
                                         const char *task,
                                         const char *agent_descriptions,
                                         char **out);

/**
 * Runs (or resumes) a simulation configured by `config_json` in `out_dir`.
 * The resulting run log is written to `out_jsonl` when it is not NULL.
 *
 * # Safety
 * Strings must be valid; `out_jsonl` NULL or a valid pointer.
 */
enum tm_status_t tm_run_sim(const char *config_json, const char *out_dir, char **out_jsonl);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEAMMEM_H */
