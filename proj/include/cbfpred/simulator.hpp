#pragma once

#include <string>
#include <vector>

#include "cbfpred/cbf_field.hpp"
#include "cbfpred/rng.hpp"
#include "cbfpred/safety_filter.hpp"

namespace cbfpred {

enum class StepStatus : std::uint8_t {
    NominalPassed = 0,
    Filtered = 1,
    Infeasible = 2,
    SolveFeasible = 3,   // receding-horizon step solved
    SolveInfeasible = 4  // receding-horizon step failed
};

const char* step_status_name(StepStatus s);

struct StepRecord {
    double t = 0.0;
    State state;
    Input u_nom;
    Input u;
    StepStatus status = StepStatus::NominalPassed;
    double h = 0.0;
    double barrier = 0.0;  // interpolated field value; NaN when unavailable
};

struct RunSummary {
    std::size_t steps = 0;
    std::size_t nominal_steps = 0;
    std::size_t filtered_steps = 0;
    std::size_t infeasible_steps = 0;
    double min_h = 0.0;        // over every integration node, not just logged steps
    double min_barrier = 0.0;  // over logged steps (NaN entries ignored)
    double deviation_energy = 0.0;
    bool collision = false;
    bool aborted = false;
    double final_t = 0.0;
    State final_state;
    double mean_solve_seconds = 0.0;
};

/// Time-ordered closed-loop record: one entry per control step. Identical
/// config and field give a bit-identical log.
struct RunLog {
    std::vector<StepRecord> records;
    double fine_min_h = std::numeric_limits<double>::infinity();
    double final_t = 0.0;
    State final_state;
    bool aborted = false;
    double mean_solve_seconds = 0.0;
    ScenarioConfig scenario;
    bool has_scenario = false;

    RunSummary summary() const;
    void write_csv(const std::string& path) const;
    static RunLog read_csv(const std::string& path);
};

/// Steers toward the reference line: a heading setpoint from the lateral
/// error (clamped to +-pi/3), steering from the heading error, full speed.
Input nominal_line_controller(const State& s, const NominalConfig& n, const InputBounds& b);

/// Closed loop with the field-backed safety filter. Requires matching
/// provenance between the field and the scenario.
RunLog run_filtered(const ScenarioConfig& cfg, const BarrierField& field);

/// Same loop with the raw clearance h as the barrier. Infeasible filter steps
/// hold the last applied input so the failure is observable, not fatal.
RunLog run_baseline_clearance(const ScenarioConfig& cfg);

struct ProbeReport {
    int samples = 0;
    int violations = 0;
    double worst_margin = 0.0;  // min over samples of sup_u quotient + alpha
    double eps = 0.0;
    double tol = 0.0;
};

/// Barrier-condition spot check: at random in-mask states with a nonnegative
/// field value, the best forward difference of the field over a coarse input
/// grid must not undercut -alpha(value) by more than tol.
ProbeReport probe_cbf_condition(const BarrierField& field, const ScenarioConfig& cfg,
                                int samples, std::uint64_t seed, double eps = 1e-3,
                                double tol = 0.05);

}  // namespace cbfpred
