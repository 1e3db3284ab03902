#include "cbfpred/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "cbfpred/ascent.hpp"
#include "cbfpred/errors.hpp"

namespace cbfpred {

namespace {

/// General-cost evaluation of one schedule: tracking + effort cost over the
/// horizon, worst node clearance, and the terminal-set gap.
struct CostEval {
    double cost = 0.0;
    double min_h = 0.0;
    double terminal_viol = 0.0;
    bool feasible = false;
};

class CostSolver {
public:
    CostSolver(const ScenarioConfig& scn)
        : scn_(scn), hs_(scn.horizon), dt_(scn.horizon.dt_segment()) {}

    CostEval evaluate(const State& x0, const double* v, const double* z, int n) const {
        CostEval out;
        out.min_h = std::numeric_limits<double>::infinity();
        const double sub_dt = dt_ / static_cast<double>(hs_.substeps);
        Pose q{x0.x, x0.y, x0.psi, 0.0};
        out.min_h = scn_.obstacles.h(q.x, q.y);
        double track = (x0.y - scn_.nominal.y_ref) * (x0.y - scn_.nominal.y_ref);
        double tracking_sum = 0.5 * track;  // trapezoid endpoints weighted half
        double effort_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            const Input u{v[i], z[i]};
            const double dv = u.v - scn_.mpc.v_nom;
            effort_sum += (dv * dv + u.zeta * u.zeta) * dt_;
            integrate_segment(q, u, scn_.bicycle, hs_.substeps, dt_, [&](const Pose& qq) {
                out.min_h = std::min(out.min_h, scn_.obstacles.h(qq.x, qq.y));
                const double e = qq.y - scn_.nominal.y_ref;
                tracking_sum += e * e;
            });
        }
        // Remove the half weight double-counted on the final node.
        const double e_end = q.y - scn_.nominal.y_ref;
        tracking_sum -= 0.5 * e_end * e_end;
        out.cost = scn_.mpc.w_track * tracking_sum * sub_dt + scn_.mpc.w_eff * effort_sum;
        out.terminal_viol = scn_.f_set.violation(scn_.obstacles, State(q.x, q.y, q.psi));
        out.feasible = out.min_h >= -1e-6 && out.terminal_viol <= 1e-9;
        return out;
    }

    CostEval evaluate(const State& x0, const ControlSchedule& sched) const {
        const int n = sched.segment_count();
        std::vector<double> v(n), z(n);
        for (int i = 0; i < n; ++i) {
            v[i] = sched.inputs[i].v;
            z[i] = sched.inputs[i].zeta;
        }
        return evaluate(x0, v.data(), z.data(), n);
    }

    /// Minimizes the cost subject to node clearance >= 0 and terminal
    /// membership, both as exact penalties inside the shared ascent engine.
    std::pair<ControlSchedule, CostEval> solve(const State& x0,
                                               const std::vector<ControlSchedule>& starts) const {
        const int N = hs_.segment_count;
        detail::AscentBox box;
        box.lo.resize(2 * N);
        box.hi.resize(2 * N);
        for (int i = 0; i < N; ++i) {
            box.lo[i] = scn_.bounds.v_min;
            box.hi[i] = scn_.bounds.v_max;
            box.lo[N + i] = -scn_.bounds.zeta_max;
            box.hi[N + i] = scn_.bounds.zeta_max;
        }

        struct Cand {
            ControlSchedule sched;
            CostEval ev;
        };
        std::vector<Cand> pool;
        for (const ControlSchedule& s : starts)
            if (s.segment_count() == N) pool.push_back({s, evaluate(x0, s)});
        if (pool.empty()) throw ConfigError("mpc: no valid start schedule");

        auto better = [](const Cand& a, const Cand& b) {
            if (a.ev.feasible != b.ev.feasible) return a.ev.feasible;
            return a.ev.cost < b.ev.cost;
        };
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return better(pool[a], pool[b]); });

        std::vector<double> theta(2 * N);
        const int refine = std::min<std::size_t>(2, order.size());
        for (int k = 0; k < refine; ++k) {
            const ControlSchedule& src = pool[order[k]].sched;
            for (int i = 0; i < N; ++i) {
                theta[i] = src.inputs[i].v;
                theta[N + i] = src.inputs[i].zeta;
            }
            double mu = 10.0;
            for (;;) {
                auto obj = [&](const double* th) {
                    const CostEval e = evaluate(x0, th, th + N, N);
                    const double pen = std::max(0.0, -e.min_h) +
                                       std::max(0.0, e.terminal_viol);
                    return -e.cost - mu * pen;
                };
                detail::coordinate_ascent(theta, box, obj, 4, 1e-7);
                ControlSchedule cs;
                cs.dt_segment = dt_;
                cs.inputs.resize(N);
                for (int i = 0; i < N; ++i) cs.inputs[i] = Input{theta[i], theta[N + i]};
                const CostEval ev = evaluate(x0, cs);
                if (ev.feasible || mu >= 1e6) {
                    pool.push_back({std::move(cs), ev});
                    break;
                }
                mu *= 2.0;
            }
        }

        std::size_t bi = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (better(pool[i], pool[bi])) bi = i;
        return {pool[bi].sched, pool[bi].ev};
    }

private:
    const ScenarioConfig& scn_;
    HorizonSpec hs_;
    double dt_;
};

}  // namespace

MpcRunResult run_mpc(const ScenarioConfig& scn, MpcMode mode, const BarrierField* field,
                     int override_steps) {
    const HorizonSpec& hs = scn.horizon;
    const int N = hs.segment_count;
    const double dt = hs.dt_segment();
    const int apply_segments =
        std::max(1, static_cast<int>(std::round(scn.mpc.apply_dt / dt)));
    const int steps = override_steps > 0 ? override_steps : scn.mpc.steps;

    // Free-time membership for the max-min program, terminal membership for
    // the general-cost program.
    const MaxMinSolver maxmin(scn, MembershipMode::SomeTime);
    const CostSolver cost(scn);

    SolveOptions mm_opt;
    mm_opt.refine_top = 2;
    mm_opt.max_sweeps = 4;

    MpcRunResult result;
    result.log.scenario = scn;
    result.log.has_scenario = true;
    result.log.records.reserve(static_cast<std::size_t>(steps));

    State s = scn.sim.initial;
    double t = 0.0;
    ControlSchedule prev;
    bool have_prev = false;
    double total_solve_s = 0.0;

    for (int k = 0; k < steps; ++k) {
        MpcStepRecord step;
        step.t_k = t;
        step.state = s;
        step.barrier_at_state = std::numeric_limits<double>::quiet_NaN();
        if (field) {
            try {
                step.barrier_at_state = field->interpolate(s).value;
            } catch (const OutOfDomainError&) {
            }
        }

        // Shifted warm-start candidate (previous tail + F-keeping policy).
        ControlSchedule candidate;
        if (have_prev) {
            ControlSchedule tail = prev;
            tail.inputs.erase(tail.inputs.begin(), tail.inputs.begin() + apply_segments);
            candidate = maxmin.extend_with_keep_policy(tail, s, N);
        } else {
            candidate = maxmin.keep_policy_rollout(s);
        }
        if (mode == MpcMode::MaxMin)
            step.candidate_feasible = maxmin.evaluate(s, candidate).membership_ok;
        else
            step.candidate_feasible = cost.evaluate(s, candidate).feasible;

        const auto t0 = std::chrono::steady_clock::now();
        ControlSchedule sched;
        if (mode == MpcMode::MaxMin) {
            const MaxMinResult r = maxmin.solve(s, {candidate}, mm_opt);
            step.solve_feasible = r.feasible;
            step.objective = r.value;
            sched = r.schedule;
        } else {
            std::vector<ControlSchedule> starts{candidate};
            ControlSchedule straight;
            straight.dt_segment = dt;
            straight.inputs.assign(N, Input{scn.mpc.v_nom, 0.0});
            starts.push_back(straight);
            straight.inputs.assign(N, Input{scn.bounds.v_min, 0.0});
            starts.push_back(straight);
            const auto [best, ev] = cost.solve(s, starts);
            step.solve_feasible = ev.feasible;
            step.objective = ev.cost;
            sched = best;
        }
        step.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        total_solve_s += step.solve_seconds;
        step.first_input = sched.inputs.empty() ? Input{} : sched.inputs.front();

        StepRecord rec;
        rec.t = t;
        rec.state = s;
        rec.u = step.first_input;
        rec.u_nom = step.first_input;
        rec.status = step.solve_feasible ? StepStatus::SolveFeasible : StepStatus::SolveInfeasible;
        rec.h = scn.obstacles.h(s);
        rec.barrier = step.barrier_at_state;
        result.log.records.push_back(rec);
        result.log.fine_min_h = std::min(result.log.fine_min_h, rec.h);
        result.steps.push_back(step);

        if (!step.solve_feasible) {
            ++result.infeasible_count;
            result.aborted = true;
            break;
        }

        Pose q{s.x, s.y, s.psi, t};
        for (int i = 0; i < apply_segments; ++i)
            integrate_segment(q, sched.inputs[i], scn.bicycle, hs.substeps, dt,
                              [&](const Pose& qq) {
                                  result.log.fine_min_h = std::min(
                                      result.log.fine_min_h, scn.obstacles.h(qq.x, qq.y));
                              });
        s = State(q.x, q.y, q.psi);
        t = scn.mpc.apply_dt * static_cast<double>(k + 1);
        prev = sched;
        have_prev = true;
    }

    result.log.final_t = t;
    result.log.final_state = s;
    result.log.aborted = result.aborted;
    if (!result.steps.empty())
        result.log.mean_solve_seconds = total_solve_s / static_cast<double>(result.steps.size());
    return result;
}

}  // namespace cbfpred
