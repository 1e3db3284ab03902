#include "cbfpred/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbfpred/cbf_builder.hpp"
#include "cbfpred/rng.hpp"
#include "cbfpred/simulator.hpp"

namespace cbfpred {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

State node_state(const GridSpec& g, std::size_t idx) {
    const std::size_t plane = static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny);
    const std::size_t ipsi = idx / plane;
    const std::size_t rem = idx % plane;
    return State(g.x_node(static_cast<int>(rem % static_cast<std::size_t>(g.nx))),
                 g.y_node(static_cast<int>(rem / static_cast<std::size_t>(g.nx))),
                 g.psi_node(static_cast<int>(ipsi)));
}

std::vector<std::size_t> computed_indices(const BarrierField& field) {
    std::vector<std::size_t> out;
    out.reserve(field.flags.size());
    for (std::size_t i = 0; i < field.flags.size(); ++i)
        if (field.flag_at(i) == NodeFlag::Computed) out.push_back(i);
    return out;
}

CheckResult check_upper_bound(const ScenarioConfig& scn, const BarrierField& field) {
    CheckResult c{"upper_bound_h", true, ""};
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t bad = 0, total = 0;
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        if (field.flag_at(i) != NodeFlag::Computed) continue;
        ++total;
        const State s = node_state(field.grid, i);
        const double slack = field.values[i] - scn.obstacles.h(s.x, s.y);
        worst = std::max(worst, slack);
        if (slack > 1e-12) ++bad;
    }
    c.pass = bad == 0;
    c.detail = fmt(static_cast<double>(total)) + " nodes, max slack " + fmt(worst) + " m, " +
               fmt(static_cast<double>(bad)) + " above h";
    return c;
}

CheckResult check_oracle_dominance(const ScenarioConfig& scn, const BarrierField& field,
                                   Rng& rng) {
    CheckResult c{"oracle_dominance", true, ""};
    const std::vector<std::size_t> nodes = computed_indices(field);
    if (nodes.empty()) {
        c.detail = "no computed nodes";
        return c;
    }
    const MaxMinSolver solver(scn, field.built_mode);
    const int samples = 20;
    int checked = 0, failures = 0;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const State s = node_state(field.grid, nodes[rng.uniform_index(nodes.size())]);
        const OracleResult oracle = solver.enumerate_oracle(s);
        if (!oracle.feasible) continue;
        const MaxMinResult r = solver.solve(s);
        ++checked;
        const double gap = (r.feasible ? r.value : -std::numeric_limits<double>::infinity()) -
                           oracle.value;
        worst_gap = std::min(worst_gap, gap);
        if (gap < -1e-9) ++failures;
    }
    c.pass = failures == 0;
    c.detail = fmt(static_cast<double>(checked)) + " checked, min(solve - oracle) " +
               (checked ? fmt(worst_gap) : std::string("n/a")) + " m, " +
               fmt(static_cast<double>(failures)) + " below";
    return c;
}

CheckResult check_horizon_monotonicity(const ScenarioConfig& scn, const BarrierField& field,
                                       bool quick, Rng& rng) {
    CheckResult c{"horizon_monotonicity", true, ""};
    if (quick) {
        c.detail = "skipped (--quick)";
        return c;
    }
    const double dt = scn.horizon.dt_segment();
    const int n_full = scn.horizon.segment_count;
    const int n_floor = static_cast<int>(std::ceil(scn.horizon.tau_bar / dt - 1e-9));
    const int n_short = std::max(n_floor, (2 * n_full) / 3);
    if (n_short >= n_full) {
        c.detail = "skipped: horizon already at its lower bound";
        return c;
    }
    ScenarioConfig short_scn = scn;
    short_scn.horizon.segment_count = n_short;
    short_scn.horizon.T = dt * static_cast<double>(n_short);

    const MaxMinSolver solver_short(short_scn, field.built_mode);
    const MaxMinSolver solver_full(scn, field.built_mode);
    const std::vector<std::size_t> nodes = computed_indices(field);
    if (nodes.empty()) {
        c.detail = "no computed nodes";
        return c;
    }

    const int wanted = 50;
    int kept = 0, failures = 0;
    double worst_gap = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < wanted * 8 && kept < wanted; ++attempt) {
        const State s = node_state(field.grid, nodes[rng.uniform_index(nodes.size())]);
        const MaxMinResult r1 = solver_short.solve(s);
        if (!r1.feasible || r1.value >= scn.f_set.delta) continue;
        const ControlSchedule seed =
            solver_full.extend_with_keep_policy(r1.schedule, s, n_full);
        const MaxMinResult r2 = solver_full.solve(s, {seed});
        ++kept;
        const double gap = (r2.feasible ? r2.value : -std::numeric_limits<double>::infinity()) -
                           r1.value;
        worst_gap = std::min(worst_gap, gap);
        if (gap < -1e-9) ++failures;
    }
    c.pass = failures == 0;
    c.detail = "T " + fmt(short_scn.horizon.T) + " -> " + fmt(scn.horizon.T) + ", " +
               fmt(static_cast<double>(kept)) + " states, min gain " +
               (kept ? fmt(worst_gap) : std::string("n/a")) + " m, " +
               fmt(static_cast<double>(failures)) + " decreasing";
    return c;
}

CheckResult check_probe(const ScenarioConfig& scn, const BarrierField& field,
                        std::uint64_t seed) {
    CheckResult c{"cbf_condition_probe", true, ""};
    const ProbeReport rep = probe_cbf_condition(field, scn, 200, seed);
    c.pass = rep.violations == 0;
    c.detail = fmt(static_cast<double>(rep.samples)) + " samples, worst margin " +
               fmt(rep.worst_margin) + " m/s, " + fmt(static_cast<double>(rep.violations)) +
               " violations";
    return c;
}

CheckResult check_lipschitz(const ScenarioConfig& scn, const BarrierField& field) {
    CheckResult c{"lipschitz_bound", true, ""};
    const LipschitzReport rep = field.lipschitz();
    c.pass = rep.overall <= scn.grid.lipschitz_bound;
    c.detail = "observed " + fmt(rep.overall) + " (x " + fmt(rep.slope_x) + ", y " +
               fmt(rep.slope_y) + ", psi " + fmt(rep.slope_psi) + ") vs bound " +
               fmt(scn.grid.lipschitz_bound);
    return c;
}

}  // namespace

ValidationReport validate_field(const ScenarioConfig& scn, const BarrierField& field, bool quick,
                                std::uint64_t seed) {
    ValidationReport rep;
    Rng rng(seed);
    rep.checks.push_back(check_upper_bound(scn, field));
    rep.checks.push_back(check_oracle_dominance(scn, field, rng));
    rep.checks.push_back(check_horizon_monotonicity(scn, field, quick, rng));
    rep.checks.push_back(check_probe(scn, field, seed + 1));
    rep.checks.push_back(check_lipschitz(scn, field));
    return rep;
}

}  // namespace cbfpred
