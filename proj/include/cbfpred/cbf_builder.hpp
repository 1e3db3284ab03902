#pragma once

#include <vector>

#include "cbfpred/cbf_field.hpp"
#include "cbfpred/scenario.hpp"

namespace cbfpred {

/// Shifted p-norm under-approximation of min(values):
/// (sum (v_i + shift)^(-p) / n)^(-1/p) - shift. Exact on constant sequences,
/// approaches the hard min as p grows. Throws std::domain_error when any
/// shifted value is nonpositive.
double soft_min(const std::vector<double>& values, double p, double shift);

/// Exact trajectory assessment for one candidate schedule.
struct CandidateEval {
    double hard_min = 0.0;    // min of h over every integration node, t=0 included
    double t_star = 0.0;      // earliest time attaining the min
    bool membership_ok = false;
    double vartheta = 0.0;    // first in-F node time (free membership) or T
    double violation = 0.0;   // signed target-set gap; <= tol when membership_ok
};

struct OracleResult {
    bool feasible = false;
    double value = 0.0;
    ControlSchedule schedule;  // expanded to the full segment count
};

struct MaxMinResult {
    double value = 0.0;
    ControlSchedule schedule;
    double t_star = 0.0;
    double vartheta_star = 0.0;
    bool feasible = false;
    bool infeasible_start = false;  // h(x0) < 0 at the query state
    // diagnostics
    int starts_evaluated = 0;
    int starts_refined = 0;
    double penalty_weight_final = 0.0;
    double membership_residual = 0.0;  // positive part of the best violation
};

struct SolveOptions {
    int refine_top = 3;    // most promising starts refined by coordinate ascent
    int max_sweeps = 6;    // ascent sweeps per penalty round
    double tol = 1e-7;     // ascent improvement cutoff
    bool use_oracle = true;
    int oracle_segments = 4;

    static SolveOptions point();  // thorough: one-off queries
    static SolveOptions sweep();  // lean: grid nodes with warm starts
};

/// Solves the horizon max-min problem
///   max over admissible schedules of  min over t in [0,T] of h(x(t))
/// subject to the dynamics, the input box, and target-set membership at some
/// time (or at T). One instance is immutable and usable from many threads.
class MaxMinSolver {
public:
    MaxMinSolver(const ScenarioConfig& scn, MembershipMode mode);

    /// Exact evaluation of a given schedule; the enumeration path reproduces
    /// this bit-for-bit for the same expanded schedule.
    CandidateEval evaluate(const State& x0, const ControlSchedule& sched) const;

    /// Brute force over constant-per-coarse-segment schedules drawn from
    /// {v_min, v_max} x {-zeta_max, 0, +zeta_max}. Independent lower bound.
    OracleResult enumerate_oracle(const State& x0, int coarse_segments = 4) const;

    /// Multi-start solve: geometric primitives, an F-keeping policy rollout,
    /// the oracle best, and caller seeds; the most promising starts are refined
    /// by projected coordinate ascent on the soft-min objective with exact
    /// membership penalties. The reported value is always an achieved hard min.
    MaxMinResult solve(const State& x0, const std::vector<ControlSchedule>& seeds = {},
                       const SolveOptions& opt = SolveOptions::point()) const;

    /// Segment-wise rollout of the F-keeping policy from x0.
    ControlSchedule keep_policy_rollout(const State& x0) const;

    /// Replays `partial` from x0 and appends F-keeping inputs until the
    /// schedule has `total` segments (truncating if it is already longer).
    /// This is the shifted-candidate construction used for warm starts across
    /// horizons and receding-horizon steps.
    ControlSchedule extend_with_keep_policy(const ControlSchedule& partial, const State& x0,
                                            int total) const;

    const HorizonSpec& horizon() const { return hs_; }
    MembershipMode mode() const { return mode_; }

private:
    ObstacleField obstacles_;
    FSetSpec f_set_;
    InputBounds bounds_;
    BicycleParams bike_;
    HorizonSpec hs_;
    MembershipMode mode_;

    struct Accum;  // shared node-visit accumulator (see .cpp)
    template <bool WithSoft>
    void eval_theta(const State& x0, const double* v, const double* z, int n, Accum& acc) const;
    std::vector<ControlSchedule> primitive_starts(const State& x0) const;
};

struct SweepStats {
    std::size_t computed = 0;
    std::size_t outside_mask = 0;
    std::size_t infeasible_h = 0;       // nodes with h < 0, never solved
    std::size_t solver_infeasible = 0;  // h >= 0 nodes with no feasible schedule
    double feasible_fraction() const {
        const std::size_t tried = computed + solver_infeasible;
        return tried == 0 ? 1.0 : static_cast<double>(computed) / static_cast<double>(tried);
    }
};

/// Evaluates the solver over the scenario grid. Nodes with h >= mask_threshold
/// store the surrogate value and are skipped; nodes with h < 0 store h itself.
/// Parallel over psi slices; warm starts stay within a slice, so the result is
/// identical for any thread count.
BarrierField sweep_grid(const ScenarioConfig& scn, MembershipMode mode, int threads,
                        SweepStats* stats = nullptr,
                        const SolveOptions& opt = SolveOptions::sweep());

}  // namespace cbfpred
