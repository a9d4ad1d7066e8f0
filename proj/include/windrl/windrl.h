/* C interface to the windrl shared library.
 *
 * Every fallible call returns a wrl_status; on failure the message is kept
 * per thread and read with wrl_last_error(). Handles are opaque and owned by
 * the caller, who releases them with the matching *_free (NULL is ignored).
 * Output pointers are left untouched on failure. */
#ifndef WINDRL_H
#define WINDRL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define WRL_API __declspec(dllexport)
#else
#define WRL_API __attribute__((visibility("default")))
#endif

typedef enum wrl_status {
    WRL_OK = 0,
    WRL_INVALID_ARGUMENT = 1,
    WRL_OUT_OF_POLAR_RANGE = 2,
    WRL_DEGENERATE_INFLOW = 3,
    WRL_NON_CONVERGENCE = 4,
    WRL_SHAPE_MISMATCH = 5,
    WRL_PARSE_ERROR = 6,
    WRL_EMPTY_SERIES = 7,
    WRL_BUFFER_TOO_SMALL = 8,
    WRL_INDEX_OUT_OF_RANGE = 9,
    WRL_EMPTY_LOG = 10,
    WRL_IO = 11,
    WRL_STALE_CACHE = 12,
    WRL_INTERNAL = 99
} wrl_status;

WRL_API const char* wrl_last_error(void);
WRL_API const char* wrl_status_name(wrl_status s);
WRL_API const char* wrl_version(void);

/* ---- rotor and aerodynamics ---------------------------------------------- */

typedef struct wrl_rotor wrl_rotor;

WRL_API wrl_status wrl_rotor_reference(wrl_rotor** out);
WRL_API wrl_status wrl_rotor_load(const char* json_path, wrl_rotor** out);
WRL_API wrl_status wrl_rotor_save(const wrl_rotor* r, const char* json_path);
WRL_API void wrl_rotor_free(wrl_rotor* r);
/* Best Cp over TSR x pitch at zero yaw; any output may be NULL. */
WRL_API wrl_status wrl_rotor_nominal(const wrl_rotor* r, double* cp, double* tsr, double* pitch_deg);

typedef struct wrl_aero {
    double cp, cp_raw, ct, power_w, tsr;
    double aoa_min_deg, aoa_max_deg;
    int converged;
} wrl_aero;

WRL_API wrl_status wrl_solve(const wrl_rotor* r, double wind_mps, double misalignment_deg, double pitch_deg,
                             double rpm, wrl_aero* out);

/* Axis names: "tsr", "pitch", "yaw". fixed_rpm <= 0 keeps the TSR sweep at
 * constant wind; otherwise rotor speed is held and wind speed varies. */
typedef struct wrl_surface_spec {
    const char* row_axis;
    double row_lo, row_hi;
    size_t row_n;
    const char* col_axis;
    double col_lo, col_hi;
    size_t col_n;
    double tsr, pitch_deg, yaw_deg, wind_mps, fixed_rpm;
} wrl_surface_spec;

/* Writes the grid as CSV; `values` (row-major, NaN where unsolved) may be
 * NULL, otherwise it needs row_n * col_n slots. */
WRL_API wrl_status wrl_surface(const wrl_rotor* r, const wrl_surface_spec* spec, const char* csv_path,
                               double* values, size_t capacity);

/* ---- wind ---------------------------------------------------------------- */

typedef struct wrl_wind wrl_wind;

/* ids: steady, narrow, wide, gusty, gusty-long; n_steps 0 = scenario default. */
WRL_API wrl_status wrl_wind_scenario(const char* id, uint64_t seed, size_t n_steps, wrl_wind** out);
/* `timestamp,speed_mps,direction_deg`, gaps interpolated, then regularized. */
WRL_API wrl_status wrl_wind_load_measured(const char* csv_path, wrl_wind** out);
/* `step,speed_mps,direction_deg`. */
WRL_API wrl_status wrl_wind_read(const char* csv_path, wrl_wind** out);
WRL_API wrl_status wrl_wind_write(const wrl_wind* w, const char* csv_path);
WRL_API size_t wrl_wind_size(const wrl_wind* w);
WRL_API wrl_status wrl_wind_at(const wrl_wind* w, size_t i, double* speed_mps, double* direction_deg);
WRL_API void wrl_wind_free(wrl_wind* w);

/* ---- environment --------------------------------------------------------- */

typedef struct wrl_state {
    double yaw_deg, pitch_deg, rpm, wind_mps, wind_dir_deg;
} wrl_state;

typedef struct wrl_step {
    wrl_state next;
    double reward, cp, tsr;
    int revoked, forbidden, won, terminal, truncated;
    unsigned violations;
} wrl_step;

typedef enum wrl_rule { WRL_RULE_LITERAL = 0, WRL_RULE_NO_WORSENING = 1, WRL_RULE_OFF = 2 } wrl_rule;

typedef struct wrl_env wrl_env;

WRL_API wrl_status wrl_env_create(const wrl_rotor* r, wrl_rule rule, wrl_env** out);
WRL_API void wrl_env_free(wrl_env* e);
WRL_API wrl_status wrl_env_reset(wrl_env* e, double wind_mps, double wind_dir_deg, uint64_t seed, wrl_state* out);
WRL_API wrl_status wrl_env_set_state(wrl_env* e, const wrl_state* s);
WRL_API wrl_status wrl_env_state(const wrl_env* e, wrl_state* out);
/* action 0..6: yaw+, yaw-, pitch+, pitch-, rpm+, rpm-, hold. */
WRL_API wrl_status wrl_env_step(wrl_env* e, int action, double next_wind_mps, double next_dir_deg, wrl_step* out);
WRL_API wrl_status wrl_env_step_increments(wrl_env* e, int dyaw, int dpitch, int drpm, double next_wind_mps,
                                           double next_dir_deg, wrl_step* out);

/* ---- controllers --------------------------------------------------------- */

typedef struct wrl_agent wrl_agent;

typedef struct wrl_train_summary {
    int episodes;
    int wins;
    int wins_last20;
    size_t steps;
    double cumulative_reward;
    /* Cumulative reward gained over the final third of training. */
    double final_third_gain;
    double seconds;
} wrl_train_summary;

/* hp: "optimized", "arbitrary" or a JSON path. episodes < 0 keeps the set's
 * value. log_csv may be NULL. */
WRL_API wrl_status wrl_ddqn_train(const wrl_rotor* r, const char* hp, uint64_t seed, int episodes,
                                  const char* log_csv, wrl_agent** out, wrl_train_summary* summary);
WRL_API wrl_status wrl_ddqn_load(const char* checkpoint, wrl_agent** out);

/* Grid steps in deg / deg / rpm; 1/1/1 is the full lattice. */
WRL_API wrl_status wrl_vi_solve(const wrl_rotor* r, double yaw_step, double pitch_step, double rpm_step,
                                wrl_agent** out);
WRL_API wrl_status wrl_vi_load(const char* policy, const wrl_rotor* r, wrl_agent** out);

/* Random-search tuning on the narrow scenario. setpoints_csv may be NULL to
 * derive them. */
WRL_API wrl_status wrl_pid_tune(const wrl_rotor* r, const char* setpoints_csv, int budget, uint64_t seed,
                                size_t steps, wrl_agent** out, double* best_ccf);
WRL_API wrl_status wrl_pid_load(const char* gains_json, const char* setpoints_csv, const wrl_rotor* r,
                                wrl_agent** out);
WRL_API wrl_status wrl_uncontrolled(wrl_agent** out);

/* Checkpoint, policy or gains file; uncontrolled agents have none. */
WRL_API wrl_status wrl_agent_save(const wrl_agent* a, const char* path);
/* Returns the action index (0..6) in *action; PID agents are not supported. */
WRL_API wrl_status wrl_agent_act(wrl_agent* a, const wrl_state* s, int* action);
WRL_API const char* wrl_agent_kind(const wrl_agent* a);
WRL_API void wrl_agent_free(wrl_agent* a);

WRL_API wrl_status wrl_setpoints_write(const wrl_rotor* r, double lo, double hi, double step, const char* csv_path);

/* ---- bench --------------------------------------------------------------- */

typedef struct wrl_metrics {
    double ccf, cf, energy_wh, yearly_wh;
    double mean_abs_misalignment_deg, tsr_violation_rate, sub_cutin_rate, revoked_rate;
} wrl_metrics;

/* Greedy rollout over the whole series; log_csv may be NULL. */
WRL_API wrl_status wrl_validate(wrl_agent* a, const wrl_rotor* r, const wrl_wind* w, double dt_s,
                                const char* log_csv, wrl_metrics* out);
/* Runs a comparison config. Writes compare.csv, compare.svg and per-run logs
 * to the configured directory; fails only when the config itself is bad. */
WRL_API wrl_status wrl_compare(const char* config_json, size_t* cells, size_t* failed_cells);
/* Reads one cell of the last wrl_compare on this thread. */
WRL_API wrl_status wrl_compare_cell(size_t i, const char** agent, const char** scenario, wrl_metrics* m,
                                    const char** error);

#ifdef __cplusplus
}
#endif

#endif
