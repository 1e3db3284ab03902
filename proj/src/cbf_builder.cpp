#include "cbfpred/cbf_builder.hpp"

#include <atomic>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "cbfpred/ascent.hpp"

namespace cbfpred {

double soft_min(const std::vector<double>& values, double p, double shift) {
    if (values.empty()) throw std::invalid_argument("soft_min: empty sequence");
    double sum = 0.0;
    for (const double v : values) {
        const double s = v + shift;
        if (!(s > 0.0)) throw std::domain_error("soft_min: shifted value must be > 0");
        sum += std::pow(s, -p);
    }
    return std::pow(sum / static_cast<double>(values.size()), -1.0 / p) - shift;
}

SolveOptions SolveOptions::point() { return SolveOptions{}; }

SolveOptions SolveOptions::sweep() {
    SolveOptions o;
    o.refine_top = 2;
    o.max_sweeps = 3;
    o.tol = 1e-6;
    return o;
}

/// Node-visit accumulator shared by every evaluation path, so that the
/// enumeration oracle reproduces evaluate() bit-for-bit on the same schedule.
struct MaxMinSolver::Accum {
    const ObstacleField* obs = nullptr;
    const FSetSpec* fs = nullptr;
    MembershipMode mode = MembershipMode::Terminal;
    double tol = 1e-9;
    bool with_soft = false;
    double p = 8.0, shift = 10.0;

    double hard_min = std::numeric_limits<double>::infinity();
    double t_star = 0.0;
    bool found = false;
    double vartheta = 0.0;
    double min_viol = std::numeric_limits<double>::infinity();
    double power_sum = 0.0;
    std::size_t n_nodes = 0;

    void visit(const Pose& q) {
        const double hq = obs->h(q.x, q.y);
        if (hq < hard_min) {
            hard_min = hq;
            t_star = q.t;
        }
        if (with_soft) {
            const double s = std::max(hq + shift, 1e-12);
            power_sum += std::pow(s, -p);
            ++n_nodes;
        }
        if (mode == MembershipMode::SomeTime && !found) {
            const double viol = fs->violation(*obs, State(q.x, q.y, q.psi));
            if (viol < min_viol) min_viol = viol;
            if (viol <= tol) {
                found = true;
                vartheta = q.t;
            }
        }
    }

    void finish_terminal(const Pose& q) {
        const double viol = fs->violation(*obs, State(q.x, q.y, q.psi));
        min_viol = viol;
        found = viol <= tol;
        vartheta = q.t;
    }

    double softmin() const {
        return std::pow(power_sum / static_cast<double>(n_nodes), -1.0 / p) - shift;
    }
};

MaxMinSolver::MaxMinSolver(const ScenarioConfig& scn, MembershipMode mode)
    : obstacles_(scn.obstacles),
      f_set_(scn.f_set),
      bounds_(scn.bounds),
      bike_(scn.bicycle),
      hs_(scn.horizon),
      mode_(mode) {
    hs_.mode = mode;
}

template <bool WithSoft>
void MaxMinSolver::eval_theta(const State& x0, const double* v, const double* z, int n,
                              Accum& acc) const {
    acc = Accum{};
    acc.obs = &obstacles_;
    acc.fs = &f_set_;
    acc.mode = mode_;
    acc.with_soft = WithSoft;
    acc.p = hs_.softmin_p;
    acc.shift = hs_.softmin_shift;
    Pose q{x0.x, x0.y, x0.psi, 0.0};
    acc.visit(q);
    const double dt = hs_.dt_segment();
    for (int i = 0; i < n; ++i) {
        const Input u{v[i], z[i]};
        integrate_segment(q, u, bike_, hs_.substeps, dt, [&](const Pose& qq) { acc.visit(qq); });
    }
    if (mode_ == MembershipMode::Terminal) acc.finish_terminal(q);
}

CandidateEval MaxMinSolver::evaluate(const State& x0, const ControlSchedule& sched) const {
    Accum acc{};
    acc.obs = &obstacles_;
    acc.fs = &f_set_;
    acc.mode = mode_;
    Pose q{x0.x, x0.y, x0.psi, 0.0};
    acc.visit(q);
    for (const Input& u : sched.inputs)
        integrate_segment(q, u, bike_, hs_.substeps, sched.dt_segment,
                          [&](const Pose& qq) { acc.visit(qq); });
    if (mode_ == MembershipMode::Terminal) acc.finish_terminal(q);
    CandidateEval ev;
    ev.hard_min = acc.hard_min;
    ev.t_star = acc.t_star;
    ev.membership_ok = acc.found;
    ev.vartheta = acc.found || mode_ == MembershipMode::Terminal ? acc.vartheta : 0.0;
    ev.violation = acc.min_viol;
    return ev;
}

OracleResult MaxMinSolver::enumerate_oracle(const State& x0, int coarse_segments) const {
    const int N = hs_.segment_count;
    int L = std::clamp(coarse_segments, 1, N);
    std::vector<int> counts(L, N / L);
    for (int i = 0; i < N % L; ++i) ++counts[i];

    const Input levels[6] = {{bounds_.v_min, -bounds_.zeta_max}, {bounds_.v_min, 0.0},
                             {bounds_.v_min, bounds_.zeta_max},  {bounds_.v_max, -bounds_.zeta_max},
                             {bounds_.v_max, 0.0},               {bounds_.v_max, bounds_.zeta_max}};

    Accum root{};
    root.obs = &obstacles_;
    root.fs = &f_set_;
    root.mode = mode_;
    Pose q0{x0.x, x0.y, x0.psi, 0.0};
    root.visit(q0);

    struct Best {
        bool any = false;
        bool feasible = false;
        double value = -std::numeric_limits<double>::infinity();
        std::vector<int> path;
    } best;
    std::vector<int> path(L, 0);
    const double dt = hs_.dt_segment();

    auto dfs = [&](auto&& self, int level, const Pose& q, const Accum& acc) -> void {
        if (level == L) {
            Accum leaf = acc;
            if (mode_ == MembershipMode::Terminal) leaf.finish_terminal(q);
            const bool better = !best.any || (leaf.found && !best.feasible) ||
                                (leaf.found == best.feasible && leaf.hard_min > best.value);
            if (better) {
                best.any = true;
                best.feasible = leaf.found;
                best.value = leaf.hard_min;
                best.path = path;
            }
            return;
        }
        for (int c = 0; c < 6; ++c) {
            Pose q2 = q;
            Accum a2 = acc;
            for (int k = 0; k < counts[level]; ++k)
                integrate_segment(q2, levels[c], bike_, hs_.substeps, dt,
                                  [&](const Pose& qq) { a2.visit(qq); });
            path[level] = c;
            self(self, level + 1, q2, a2);
        }
    };
    dfs(dfs, 0, q0, root);

    OracleResult out;
    out.feasible = best.feasible;
    out.value = best.value;
    out.schedule.dt_segment = dt;
    out.schedule.inputs.reserve(N);
    for (int level = 0; level < L; ++level)
        for (int k = 0; k < counts[level]; ++k)
            out.schedule.inputs.push_back(levels[best.path[level]]);
    return out;
}

ControlSchedule MaxMinSolver::keep_policy_rollout(const State& x0) const {
    const int N = hs_.segment_count;
    const double dt = hs_.dt_segment();
    ControlSchedule s;
    s.dt_segment = dt;
    s.inputs.reserve(N);
    Pose q{x0.x, x0.y, x0.psi, 0.0};
    for (int i = 0; i < N; ++i) {
        const Input u =
            f_keeping_input(State(q.x, q.y, q.psi), obstacles_, f_set_, bounds_);
        s.inputs.push_back(u);
        integrate_segment(q, u, bike_, hs_.substeps, dt, [](const Pose&) {});
    }
    return s;
}

ControlSchedule MaxMinSolver::extend_with_keep_policy(const ControlSchedule& partial,
                                                      const State& x0, int total) const {
    const double dt = hs_.dt_segment();
    ControlSchedule s;
    s.dt_segment = dt;
    s.inputs.reserve(total);
    Pose q{x0.x, x0.y, x0.psi, 0.0};
    for (const Input& u : partial.inputs) {
        if (static_cast<int>(s.inputs.size()) >= total) break;
        const Input cu = bounds_.clamp(u);
        s.inputs.push_back(cu);
        integrate_segment(q, cu, bike_, hs_.substeps, dt, [](const Pose&) {});
    }
    while (static_cast<int>(s.inputs.size()) < total) {
        const Input u =
            f_keeping_input(State(q.x, q.y, q.psi), obstacles_, f_set_, bounds_);
        s.inputs.push_back(u);
        integrate_segment(q, u, bike_, hs_.substeps, dt, [](const Pose&) {});
    }
    return s;
}

std::vector<ControlSchedule> MaxMinSolver::primitive_starts(const State& x0) const {
    const int N = hs_.segment_count;
    const double dt = hs_.dt_segment();
    std::vector<ControlSchedule> out;
    out.reserve(11);
    auto constant = [&](double v, double z) {
        ControlSchedule s;
        s.dt_segment = dt;
        s.inputs.assign(N, Input{v, z});
        return s;
    };
    for (const double v : {bounds_.v_min, bounds_.v_max})
        for (const double z : {-bounds_.zeta_max, 0.0, bounds_.zeta_max})
            out.push_back(constant(v, z));
    for (const double v : {bounds_.v_min, bounds_.v_max})
        for (const double z : {-bounds_.zeta_max, bounds_.zeta_max}) {
            ControlSchedule s = constant(v, z);
            for (int i = N / 2; i < N; ++i) s.inputs[i].zeta = 0.0;
            out.push_back(s);
        }
    out.push_back(keep_policy_rollout(x0));
    return out;
}

MaxMinResult MaxMinSolver::solve(const State& x0, const std::vector<ControlSchedule>& seeds,
                                 const SolveOptions& opt) const {
    const int N = hs_.segment_count;
    const double dt = hs_.dt_segment();
    const double h0 = obstacles_.h(x0);

    MaxMinResult res;
    res.infeasible_start = h0 < 0.0;

    std::vector<ControlSchedule> starts = primitive_starts(x0);
    for (const ControlSchedule& sd : seeds) {
        if (sd.segment_count() != N || std::abs(sd.dt_segment - dt) > 1e-12) continue;
        ControlSchedule c = sd;
        for (Input& u : c.inputs) u = bounds_.clamp(u);
        starts.push_back(std::move(c));
    }

    struct Cand {
        ControlSchedule sched;
        CandidateEval ev;
    };
    std::vector<Cand> pool;
    pool.reserve(starts.size() + 1 + opt.refine_top);
    for (ControlSchedule& s : starts) {
        CandidateEval ev = evaluate(x0, s);
        pool.push_back({std::move(s), ev});
    }

    auto better = [](const Cand& a, const Cand& b) {
        if (a.ev.membership_ok != b.ev.membership_ok) return a.ev.membership_ok;
        return a.ev.hard_min > b.ev.hard_min;
    };
    auto best_index = [&]() {
        std::size_t bi = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (better(pool[i], pool[bi])) bi = i;
        return bi;
    };

    // The t=0 node caps every candidate at h(x0); reaching the cap with
    // membership means the solve is already exact. The enumeration pass is
    // skipped in that case — its value is subject to the same cap.
    std::size_t bi = best_index();
    bool optimal = pool[bi].ev.membership_ok && pool[bi].ev.hard_min >= h0 - 1e-12;
    if (!optimal && opt.use_oracle) {
        ControlSchedule os = enumerate_oracle(x0, opt.oracle_segments).schedule;
        CandidateEval ev = evaluate(x0, os);
        pool.push_back({std::move(os), ev});
        bi = best_index();
        optimal = pool[bi].ev.membership_ok && pool[bi].ev.hard_min >= h0 - 1e-12;
    }
    res.starts_evaluated = static_cast<int>(pool.size());

    if (!optimal && opt.refine_top > 0) {
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return better(pool[a], pool[b]); });

        detail::AscentBox box;
        box.lo.resize(2 * N);
        box.hi.resize(2 * N);
        for (int i = 0; i < N; ++i) {
            box.lo[i] = bounds_.v_min;
            box.hi[i] = bounds_.v_max;
            box.lo[N + i] = -bounds_.zeta_max;
            box.hi[N + i] = bounds_.zeta_max;
        }
        std::vector<double> theta(2 * N);

        const int k_refine = std::min<int>(opt.refine_top, static_cast<int>(order.size()));
        for (int k = 0; k < k_refine; ++k) {
            const ControlSchedule& src = pool[order[k]].sched;
            for (int i = 0; i < N; ++i) {
                theta[i] = src.inputs[i].v;
                theta[N + i] = src.inputs[i].zeta;
            }
            double mu = 10.0;
            CandidateEval ev;
            ControlSchedule cs;
            for (;;) {
                auto obj = [&](const double* th) {
                    Accum a;
                    eval_theta<true>(x0, th, th + N, N, a);
                    const double viol =
                        std::max(0.0, mode_ == MembershipMode::Terminal || !a.found
                                          ? a.min_viol
                                          : 0.0);
                    return a.softmin() - mu * viol;
                };
                detail::coordinate_ascent(theta, box, obj, opt.max_sweeps, opt.tol);
                cs.dt_segment = dt;
                cs.inputs.resize(N);
                for (int i = 0; i < N; ++i) cs.inputs[i] = Input{theta[i], theta[N + i]};
                ev = evaluate(x0, cs);
                if (ev.membership_ok || mu >= 1e6) break;
                mu *= 2.0;
            }
            res.penalty_weight_final = std::max(res.penalty_weight_final, mu);
            ++res.starts_refined;
            pool.push_back({std::move(cs), ev});
            if (ev.membership_ok && ev.hard_min >= h0 - 1e-12) break;
        }
    }

    bi = best_index();
    const Cand& b = pool[bi];
    res.value = b.ev.hard_min;
    res.schedule = b.sched;
    res.t_star = b.ev.t_star;
    res.vartheta_star = b.ev.vartheta;
    res.feasible = b.ev.membership_ok;
    res.membership_residual = std::max(0.0, b.ev.violation);
    return res;
}

BarrierField sweep_grid(const ScenarioConfig& scn, MembershipMode mode, int threads,
                        SweepStats* stats, const SolveOptions& opt) {
    BarrierField f;
    f.grid = scn.grid;
    f.horizon = scn.horizon;
    f.horizon.mode = mode;
    f.delta = scn.f_set.delta;
    f.scenario = scn;
    f.has_scenario = true;
    f.built_mode = mode;

    const GridSpec& g = f.grid;
    constexpr std::uint8_t kPending = 255;
    f.values.assign(g.total(), 0.0);
    f.flags.assign(g.total(), kPending);

    std::vector<double> hxy(static_cast<std::size_t>(g.nx) * g.ny);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            hxy[static_cast<std::size_t>(iy) * g.nx + ix] =
                scn.obstacles.h(g.x_node(ix), g.y_node(iy));

    SweepStats local;
    for (int ip = 0; ip < g.npsi; ++ip)
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                const std::size_t idx = g.index(ix, iy, ip);
                const double h = hxy[static_cast<std::size_t>(iy) * g.nx + ix];
                if (h >= g.mask_threshold) {
                    f.flags[idx] = static_cast<std::uint8_t>(NodeFlag::OutsideMask);
                    f.values[idx] = scn.f_set.delta + (h - g.mask_threshold);
                    ++local.outside_mask;
                } else if (h < 0.0) {
                    f.flags[idx] = static_cast<std::uint8_t>(NodeFlag::Infeasible);
                    f.values[idx] = h;
                    ++local.infeasible_h;
                }
            }

    const MaxMinSolver solver(scn, mode);
    if (threads < 1) threads = 1;
    std::atomic<int> next_slice{0};
    std::atomic<std::size_t> n_computed{0}, n_solver_infeasible{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        try {
            std::vector<ControlSchedule> seeds;
            for (;;) {
                const int ip = next_slice.fetch_add(1);
                if (ip >= g.npsi) return;
                const double psi = g.psi_node(ip);
                ControlSchedule warm;
                bool have_warm = false;
                for (int iy = 0; iy < g.ny; ++iy)
                    for (int ix = 0; ix < g.nx; ++ix) {
                        const std::size_t idx = g.index(ix, iy, ip);
                        if (f.flags[idx] != kPending) continue;
                        const State s(g.x_node(ix), g.y_node(iy), psi);
                        seeds.clear();
                        if (have_warm) seeds.push_back(warm);
                        const MaxMinResult r = solver.solve(s, seeds, opt);
                        if (r.feasible) {
                            f.values[idx] = r.value;
                            f.flags[idx] = static_cast<std::uint8_t>(NodeFlag::Computed);
                            warm = r.schedule;
                            have_warm = true;
                            n_computed.fetch_add(1);
                        } else {
                            f.values[idx] = hxy[static_cast<std::size_t>(iy) * g.nx + ix];
                            f.flags[idx] = static_cast<std::uint8_t>(NodeFlag::Infeasible);
                            n_solver_infeasible.fetch_add(1);
                        }
                    }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(err_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    local.computed = n_computed.load();
    local.solver_infeasible = n_solver_infeasible.load();
    if (stats) *stats = local;
    return f;
}

}  // namespace cbfpred
