#ifndef WHEELDRONE_H
#define WHEELDRONE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WdStatus {
  WD_STATUS_OK = 0,
  WD_STATUS_NULL_POINTER = 1,
  WD_STATUS_INVALID_ARGUMENT = 2,
  WD_STATUS_CONFIG = 3,
  WD_STATUS_IO = 4,
  WD_STATUS_JSON = 5,
  WD_STATUS_SINGULAR_ATTITUDE = 6,
  WD_STATUS_PANIC = 7,
} WdStatus;

typedef enum WdMode {
  WD_MODE_O_GROUND = 0,
  WD_MODE_N_GROUND = 1,
  WD_MODE_FLIGHT = 2,
} WdMode;

/**
 * A validated run configuration.
 */
typedef struct WdConfig WdConfig;

/**
 * A stateful planner bound to one configuration.
 */
typedef struct WdPlanner WdPlanner;

/**
 * Trajectory and summary of a finished closed-loop run.
 */
typedef struct WdRun WdRun;

/**
 * Position, ZYX Euler angles (ψ, θ, φ) and their rates, SI units.
 */
typedef struct WdState {
  double xi[3];
  double eta[3];
  double xi_dot[3];
  double eta_dot[3];
} WdState;

/**
 * One planner output: thrust, reference attitude and the attitude-law torque.
 */
typedef struct WdControl {
  double thrust;
  /**
   * (ψ_d, θ_d, φ_d).
   */
  double eta_d[3];
  double torque[3];
  enum WdMode mode;
  double min_cost;
  double ess;
  bool degenerate;
} WdControl;

/**
 * One logged control step.
 */
typedef struct WdRecord {
  double time;
  struct WdState state;
  enum WdMode mode;
  double thrust;
  double eta_d[3];
  double torque[3];
  bool collision;
  double min_cost;
  double ess;
} WdRecord;

/**
 * Run summary; absent optional values are NaN.
 */
typedef struct WdSummary {
  uint64_t seed;
  bool success;
  bool goal_reached;
  double time_to_goal;
  size_t collision_steps;
  double first_collision_x;
  double max_altitude;
  double tracking_rmse;
  double final_goal_distance;
  double fraction_o_ground;
  double fraction_n_ground;
  double fraction_flight;
  size_t steps;
  size_t degenerate_steps;
  bool aborted;
} WdSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or null.
 */
const char *wd_last_error(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer obtained from this library and not yet freed.
 */
void wd_string_free(char *s);

/**
 * Built-in defaults of the drive-and-fly experiment.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WdStatus wd_config_default(struct WdConfig **out);

/**
 * Parse a configuration from a JSON string; scenario paths are relative to
 * the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WdStatus wd_config_from_json(const char *json, struct WdConfig **out);

/**
 * Load a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WdStatus wd_config_load(const char *path, struct WdConfig **out);

/**
 * Fully resolved configuration as JSON; free with `wd_string_free`.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_config_to_json(const struct WdConfig *config, char **out);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum WdStatus wd_config_set_seed(struct WdConfig *config, uint64_t seed);

/**
 * Run without the auxiliary prior (K_aux = 0) when `disable` is true.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum WdStatus wd_config_set_disable_aux(struct WdConfig *config, bool disable);

/**
 * Flight threshold α·ξ_z,sw of the configuration [m].
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_config_switch_threshold(const struct WdConfig *config, double *out);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void wd_config_free(struct WdConfig *config);

/**
 * Minimum altitude at which no wheel can touch the ground at any roll [m].
 */
double wd_switch_altitude(double wheel_diameter, double axle_length);

/**
 * Mode of an altitude `z` for the threshold `alpha · switch_altitude(d, l)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WdStatus wd_select_mode(double z,
                             double alpha,
                             double wheel_diameter,
                             double axle_length,
                             enum WdMode *out);

/**
 * Ground-impact map: roll zeroed, body-lateral velocity removed, normal
 * velocity reflected with restitution `e`.
 *
 * # Safety
 * `state` and `out` must be valid pointers.
 */
enum WdStatus wd_contact_impulse(const struct WdState *state,
                                 double restitution,
                                 struct WdState *out);

/**
 * Advance the full plant by `dt` with thrust and torque held constant.
 *
 * # Safety
 * `config`, `state`, `torque` (3 doubles) and `out` must be valid pointers.
 */
enum WdStatus wd_plant_step(const struct WdConfig *config,
                            const struct WdState *state,
                            double thrust,
                            const double *torque,
                            double dt,
                            struct WdState *out);

/**
 * New planner with an all-zero warm start, seeded from the configuration.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_planner_new(const struct WdConfig *config, struct WdPlanner **out);

/**
 * One control step from `state` at time `t`: mode selection, auxiliary
 * rollout, MPPI update and attitude torque.
 *
 * # Safety
 * `planner` must be a live handle; `state` and `out` valid pointers.
 */
enum WdStatus wd_planner_step(struct WdPlanner *planner,
                              const struct WdState *state,
                              double t,
                              struct WdControl *out);

/**
 * # Safety
 * `planner` must be null or a handle not yet freed.
 */
void wd_planner_free(struct WdPlanner *planner);

/**
 * Run the closed loop to completion.
 *
 * # Safety
 * `config` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_run(const struct WdConfig *config, struct WdRun **out);

/**
 * Number of logged control steps; 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t wd_run_len(const struct WdRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_run_record(const struct WdRun *run, size_t index, struct WdRecord *out);

/**
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_run_summary(const struct WdRun *run, struct WdSummary *out);

/**
 * Summary as JSON; free with `wd_string_free`.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum WdStatus wd_run_summary_json(const struct WdRun *run, char **out);

/**
 * Write the trajectory CSV.
 *
 * # Safety
 * `run` must be a live handle and `path` a NUL-terminated string.
 */
enum WdStatus wd_run_write_csv(const struct WdRun *run, const char *path);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void wd_run_free(struct WdRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WHEELDRONE_H */
