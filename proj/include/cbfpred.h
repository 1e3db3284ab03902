/* Public C interface to the barrier-field library.
 *
 * Every object is an opaque handle created by a cbfp_*_load/parse/build call
 * and released by the matching cbfp_*_free. Functions return CBFP_OK or an
 * error code; cbfp_last_error() describes the most recent failure on the
 * calling thread. Output parameters are written only on CBFP_OK.
 */
#ifndef CBFPRED_H
#define CBFPRED_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(CBFP_BUILD_SHARED)
#    define CBFP_API __declspec(dllexport)
#  else
#    define CBFP_API __declspec(dllimport)
#  endif
#else
#  define CBFP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cbfp_status {
    CBFP_OK = 0,
    CBFP_ERR_INVALID_ARG = 1, /* null handle / out pointer, bad enum value */
    CBFP_ERR_IO = 2,          /* file could not be read or written */
    CBFP_ERR_CONFIG = 3,      /* scenario invalid or inconsistent */
    CBFP_ERR_FORMAT = 4,      /* malformed field file or CSV */
    CBFP_ERR_VERSION = 5,     /* unknown field-file magic or version */
    CBFP_ERR_PROVENANCE = 6,  /* field/scenario hash mismatch */
    CBFP_ERR_DOMAIN = 7,      /* query outside the defined domain */
    CBFP_ERR_INFEASIBLE = 8,  /* no admissible solution at the query */
    CBFP_ERR_INTERNAL = 9
} cbfp_status;

typedef struct cbfp_scenario cbfp_scenario;
typedef struct cbfp_field cbfp_field;
typedef struct cbfp_runlog cbfp_runlog;
typedef struct cbfp_report cbfp_report;

CBFP_API const char* cbfp_version(void);

/* Message for the last failing call on this thread; empty string if none. */
CBFP_API const char* cbfp_last_error(void);

/* Frees strings returned through char** output parameters. */
CBFP_API void cbfp_string_free(char* s);

/* ---- scenario ---- */

CBFP_API cbfp_status cbfp_scenario_load(const char* path, cbfp_scenario** out);
CBFP_API cbfp_status cbfp_scenario_parse(const char* json_text, cbfp_scenario** out);
CBFP_API void cbfp_scenario_free(cbfp_scenario* s);

/* 16 hex digits + NUL of the provenance hash over the resolved scenario. */
CBFP_API cbfp_status cbfp_scenario_hash_hex(const cbfp_scenario* s, char out[17]);

/* Resolved scenario as pretty JSON; free with cbfp_string_free. */
CBFP_API cbfp_status cbfp_scenario_json(const cbfp_scenario* s, char** out);

CBFP_API cbfp_status cbfp_scenario_name(const cbfp_scenario* s, char** out);
CBFP_API cbfp_status cbfp_scenario_turn_radius(const cbfp_scenario* s, double* out);

/* Analytic upper bound on the time to reach the target set from anywhere in
 * the constraint set. */
CBFP_API cbfp_status cbfp_scenario_tau_bound(const cbfp_scenario* s, double* out);

/* ---- barrier field ---- */

/* Membership-mode selector shared by build and point solves. */
enum {
    CBFP_MODE_SCENARIO = 0, /* whatever the scenario file declares */
    CBFP_MODE_SOME_TIME = 1,
    CBFP_MODE_TERMINAL = 2
};

typedef struct cbfp_sweep_stats {
    uint64_t computed;
    uint64_t outside_mask;
    uint64_t infeasible_h;      /* nodes with h < 0, never solved */
    uint64_t solver_infeasible; /* h >= 0 nodes with no feasible schedule */
} cbfp_sweep_stats;

/* threads <= 0 selects single-threaded execution. stats may be NULL. */
CBFP_API cbfp_status cbfp_field_build(const cbfp_scenario* s, int membership_mode, int threads,
                                      cbfp_sweep_stats* stats, cbfp_field** out);
CBFP_API cbfp_status cbfp_field_save(const cbfp_field* f, const char* path);
CBFP_API cbfp_status cbfp_field_load(const char* path, cbfp_field** out);
CBFP_API void cbfp_field_free(cbfp_field* f);

typedef struct cbfp_field_info {
    int nx, ny, npsi;
    uint64_t computed;
    uint64_t outside_mask;
    uint64_t infeasible;
    double mask_threshold;
    double delta;
    double horizon_T;
    int membership_mode; /* CBFP_MODE_SOME_TIME or CBFP_MODE_TERMINAL */
    int has_provenance;
    double lipschitz_x, lipschitz_y, lipschitz_psi, lipschitz_overall;
} cbfp_field_info;

CBFP_API cbfp_status cbfp_field_info_get(const cbfp_field* f, cbfp_field_info* out);

/* Interpolated barrier value. in_mask (optional) is 1 when every contributing
 * node was computed. Returns CBFP_ERR_DOMAIN outside the defined domain. */
CBFP_API cbfp_status cbfp_field_value(const cbfp_field* f, double x, double y, double psi,
                                      double* value, int* in_mask);
CBFP_API cbfp_status cbfp_field_gradient(const cbfp_field* f, double x, double y, double psi,
                                         double* gx, double* gy, double* gpsi,
                                         int* near_boundary);

/* Field lowered by delta_prime in [0, delta); a new handle. */
CBFP_API cbfp_status cbfp_field_offset(const cbfp_field* f, double delta_prime,
                                       cbfp_field** out);

/* CBFP_OK when the field carries provenance matching the scenario hash. */
CBFP_API cbfp_status cbfp_field_check_provenance(const cbfp_field* f, const cbfp_scenario* s);

/* ---- point solve ---- */

typedef struct cbfp_solve_result {
    double value;    /* achieved worst-case clearance [m] */
    double t_star;   /* time attaining it [s] */
    double vartheta; /* first target-set membership time [s] */
    int feasible;
    int infeasible_start; /* h < 0 at the query state */
} cbfp_solve_result;

CBFP_API cbfp_status cbfp_solve_point(const cbfp_scenario* s, int membership_mode, double x,
                                      double y, double psi, cbfp_solve_result* out);

/* ---- closed-loop runs ---- */

CBFP_API cbfp_status cbfp_run_filtered(const cbfp_scenario* s, const cbfp_field* f,
                                       cbfp_runlog** out);

/* Same loop filtering on the raw clearance h instead of the field. */
CBFP_API cbfp_status cbfp_run_baseline(const cbfp_scenario* s, cbfp_runlog** out);

enum { CBFP_MPC_MAXMIN = 0, CBFP_MPC_COST = 1 };

/* field may be NULL (skips barrier logging); steps <= 0 uses the scenario
 * default. When a field is given its provenance must match the scenario. */
CBFP_API cbfp_status cbfp_run_mpc(const cbfp_scenario* s, int mpc_mode, const cbfp_field* f,
                                  int steps, cbfp_runlog** out);

CBFP_API void cbfp_runlog_free(cbfp_runlog* l);

typedef struct cbfp_run_summary {
    uint64_t steps;
    uint64_t nominal_steps;
    uint64_t filtered_steps;
    uint64_t infeasible_steps;
    double min_h;       /* over every integration node */
    double min_barrier; /* over logged steps; NaN entries ignored */
    double deviation_energy;
    int collision;
    int aborted;
    double final_t;
    double final_x, final_y, final_psi;
    double mean_solve_seconds;
} cbfp_run_summary;

CBFP_API cbfp_status cbfp_runlog_summary(const cbfp_runlog* l, cbfp_run_summary* out);
CBFP_API cbfp_status cbfp_runlog_write_csv(const cbfp_runlog* l, const char* path);
CBFP_API cbfp_status cbfp_runlog_read_csv(const char* path, cbfp_runlog** out);

/* ---- rendering ---- */

/* overlay may be NULL. */
CBFP_API cbfp_status cbfp_write_svg(const cbfp_scenario* s, const cbfp_runlog* main_log,
                                    const cbfp_runlog* overlay, const char* path);

/* ---- diagnostics ---- */

typedef struct cbfp_probe_report {
    int samples;
    int violations;
    double worst_margin; /* min over samples of sup_u quotient + alpha */
    double eps;
    double tol;
} cbfp_probe_report;

/* eps <= 0 and tol <= 0 select the defaults (1e-3, 0.05). */
CBFP_API cbfp_status cbfp_probe(const cbfp_scenario* s, const cbfp_field* f, int samples,
                                uint64_t seed, double eps, double tol, cbfp_probe_report* out);

CBFP_API cbfp_status cbfp_validate(const cbfp_scenario* s, const cbfp_field* f, int quick,
                                   uint64_t seed, cbfp_report** out);
CBFP_API void cbfp_report_free(cbfp_report* r);
CBFP_API int cbfp_report_count(const cbfp_report* r);
CBFP_API int cbfp_report_all_pass(const cbfp_report* r);

/* name/detail stay valid until the report is freed. */
CBFP_API cbfp_status cbfp_report_item(const cbfp_report* r, int index, const char** name,
                                      int* pass, const char** detail);

#ifdef __cplusplus
}
#endif

#endif /* CBFPRED_H */
