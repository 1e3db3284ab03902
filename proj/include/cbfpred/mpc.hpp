#pragma once

#include "cbfpred/cbf_builder.hpp"
#include "cbfpred/simulator.hpp"

namespace cbfpred {

enum class MpcMode {
    MaxMin,      // maximize worst-case clearance, free-time membership
    GeneralCost  // minimize tracking+effort cost, clearance and terminal constraints
};

struct MpcStepRecord {
    double t_k = 0.0;
    State state;
    bool solve_feasible = false;
    bool candidate_feasible = false;  // shifted warm-start candidate, pre-optimization
    double objective = 0.0;           // solve value (MaxMin) or cost (GeneralCost)
    double barrier_at_state = 0.0;    // interpolated field value; NaN without a field
    Input first_input;
    double solve_seconds = 0.0;
};

struct MpcRunResult {
    RunLog log;  // one row per receding-horizon step
    std::vector<MpcStepRecord> steps;
    std::size_t infeasible_count = 0;
    bool aborted = false;
};

/// Receding-horizon loop: solve over the scenario horizon, apply the first
/// apply_dt of the maximizer/minimizer, warm-start the next step with the
/// shifted schedule extended by the F-keeping policy. An infeasible solve is
/// recorded and aborts the remainder of the run. `field` is optional and only
/// used for per-step barrier logging.
MpcRunResult run_mpc(const ScenarioConfig& scn, MpcMode mode, const BarrierField* field,
                     int override_steps = -1);

}  // namespace cbfpred
