#ifndef ROLLER_H
#define ROLLER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RollerAlgorithm {
  ROLLER_ALGORITHM_DF_POLICY = 0,
  ROLLER_ALGORITHM_LOOKAHEAD_BFS = 1,
  ROLLER_ALGORITHM_LOOKAHEAD_BFS_HA = 2,
} RollerAlgorithm;

typedef enum RollerDckSource {
  ROLLER_DCK_SOURCE_TREES = 0,
  ROLLER_DCK_SOURCE_FF_ORDER = 1,
  ROLLER_DCK_SOURCE_NONE = 2,
} RollerDckSource;

typedef enum RollerStatus {
  ROLLER_STATUS_OK = 0,
  ROLLER_STATUS_NULL_ARGUMENT = 1,
  ROLLER_STATUS_INVALID_UTF8 = 2,
  ROLLER_STATUS_PARSE = 3,
  ROLLER_STATUS_IO = 4,
  ROLLER_STATUS_INVALID_ARGUMENT = 5,
  ROLLER_STATUS_NO_PLAN = 6,
  ROLLER_STATUS_PANIC = 7,
} RollerStatus;

/**
 * Learned trees; may be empty.
 */
typedef struct RollerDck RollerDck;

/**
 * Search outcome: plan in IPC syntax plus counters.
 */
typedef struct RollerPlan RollerPlan;

/**
 * Grounded planning task.
 */
typedef struct RollerTask RollerTask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *roller_last_error(void);

/**
 * Parses and grounds a domain and problem given as PDDL text.
 *
 * # Safety
 * `domain` and `problem` must be NUL-terminated strings; `out` must be writable.
 */
enum RollerStatus roller_task_new(const char *domain, const char *problem, struct RollerTask **out);

/**
 * # Safety
 * `task` must come from [`roller_task_new`] or be null.
 */
void roller_task_free(struct RollerTask *task);

/**
 * Number of ground actions, 0 for a null handle.
 *
 * # Safety
 * `task` must be a live handle or null.
 */
size_t roller_task_num_actions(const struct RollerTask *task);

/**
 * Number of ground facts, 0 for a null handle.
 *
 * # Safety
 * `task` must be a live handle or null.
 */
size_t roller_task_num_facts(const struct RollerTask *task);

/**
 * A bundle with no trees.
 *
 * # Safety
 * `out` must be writable.
 */
enum RollerStatus roller_dck_empty(struct RollerDck **out);

/**
 * Loads `<domain>-ops.tree` and `<domain>-<op>.tree` files from `dir`, using
 * the domain name and operators of `task`.
 *
 * # Safety
 * `task` must be a live handle, `dir` a NUL-terminated string, `out` writable.
 */
enum RollerStatus roller_dck_load(const struct RollerTask *task,
                                  const char *dir,
                                  struct RollerDck **out);

/**
 * Whether the bundle has no operator tree; true for null.
 *
 * # Safety
 * `dck` must be a live handle or null.
 */
bool roller_dck_is_empty(const struct RollerDck *dck);

/**
 * # Safety
 * `dck` must come from a `roller_dck_*` constructor or be null.
 */
void roller_dck_free(struct RollerDck *dck);

/**
 * Runs one search. `dck` may be null for no trees. A non-positive
 * `time_bound` means unbounded. Returns [`RollerStatus::NoPlan`] and leaves
 * `*out` null when no plan is found.
 *
 * # Safety
 * `task` must be a live handle, `dck` live or null, `out` writable.
 */
enum RollerStatus roller_plan(const struct RollerTask *task,
                              const struct RollerDck *dck,
                              enum RollerAlgorithm algorithm,
                              enum RollerDckSource source,
                              uint32_t horizon,
                              double time_bound,
                              struct RollerPlan **out);

/**
 * Plan length, 0 for null.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
size_t roller_plan_len(const struct RollerPlan *plan);

/**
 * The `i`-th action as `(name arg ...)`, or null when out of range. The
 * string lives as long as the plan.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
const char *roller_plan_action(const struct RollerPlan *plan, size_t i);

/**
 * Heuristic evaluations spent by the search.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
uint64_t roller_plan_evaluations(const struct RollerPlan *plan);

/**
 * Nodes expanded by the search.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
uint64_t roller_plan_expanded(const struct RollerPlan *plan);

/**
 * Wall time of the search in seconds.
 *
 * # Safety
 * `plan` must be a live handle or null.
 */
double roller_plan_seconds(const struct RollerPlan *plan);

/**
 * # Safety
 * `plan` must come from [`roller_plan`] or be null.
 */
void roller_plan_free(struct RollerPlan *plan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROLLER_H */
