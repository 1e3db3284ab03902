#include "cbfpred/safety_filter.hpp"

namespace cbfpred {

BarrierSample FieldBarrier::sample(const State& s) const {
    const InterpResult v = field_->interpolate(s);
    const FieldGradient g = field_->gradient(s);
    return {v.value, g.gx, g.gy, g.gpsi, !v.in_mask || g.near_mask_boundary};
}

BarrierSample ClearanceBarrier::sample(const State& s) const {
    BarrierSample out;
    out.value = obs_->h(s);
    const Circle& c = obs_->circles[obs_->nearest_index(s.x, s.y)];
    const double dx = s.x - c.cx, dy = s.y - c.cy;
    const double d = std::hypot(dx, dy);
    if (d >= 1e-12) {
        out.gx = dx / d;
        out.gy = dy / d;
    }
    return out;
}

FilterOutcome filter_input(const State& x, const Input& u_nom, const BarrierOracle& b,
                           const FilterConfig& cfg, const InputBounds& bounds,
                           const BicycleParams& bike) {
    const Input un = bounds.clamp(u_nom);
    const BarrierSample s0 = b.sample(x);

    auto constraint = [&](const Input& u, const BarrierSample& sm) {
        const Derivative d = vector_field(x, u, bike);
        return sm.gx * d.dx + sm.gy * d.dy + sm.gpsi * d.dpsi + cfg.alpha(sm.value);
    };
    auto objective = [&](const Input& u) {
        const double dv = u.v - un.v, dz = u.zeta - un.zeta;
        return dv * dv + dz * dz;
    };
    const double tol = cfg.constraint_tol;

    if (constraint(un, s0) >= -tol)
        return {un, FilterStatus::NominalPassed, constraint(un, b.sample(x)), 0.0};

    // Coarse scan of the input box.
    Input best{};
    double best_obj = std::numeric_limits<double>::infinity();
    bool any_feasible = false;
    Input least_violating{};
    double best_cv = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < cfg.coarse_nv; ++i) {
        const double v = bounds.v_min + (bounds.v_max - bounds.v_min) * i /
                                            static_cast<double>(cfg.coarse_nv - 1);
        for (int j = 0; j < cfg.coarse_nzeta; ++j) {
            const double z = -bounds.zeta_max + 2.0 * bounds.zeta_max * j /
                                                    static_cast<double>(cfg.coarse_nzeta - 1);
            const Input u{v, z};
            const double cv = constraint(u, s0);
            if (cv > best_cv) {
                best_cv = cv;
                least_violating = u;
            }
            if (cv >= -tol) {
                const double obj = objective(u);
                // Ties resolve toward smaller v, then smaller zeta.
                if (obj < best_obj ||
                    (obj == best_obj && (u.v < best.v || (u.v == best.v && u.zeta < best.zeta)))) {
                    best_obj = obj;
                    best = u;
                    any_feasible = true;
                }
            }
        }
    }
    if (!any_feasible)
        return {least_violating, FilterStatus::Infeasible, best_cv, objective(least_violating)};

    // Pull each axis toward the nominal value while holding feasibility.
    Input u = best;
    auto pull_axis = [&](double current, double target, auto with_value) {
        Input probe = with_value(target);
        if (constraint(probe, s0) >= -tol) return target;
        double lo = current, hi = target;  // lo feasible, hi not
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (constraint(with_value(mid), s0) >= -tol)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    };
    for (int it = 0; it < cfg.refine_iters; ++it) {
        const Input before = u;
        u.v = pull_axis(u.v, un.v, [&](double v) { return Input{v, u.zeta}; });
        u.zeta = pull_axis(u.zeta, un.zeta, [&](double z) { return Input{u.v, z}; });
        if (std::abs(u.v - before.v) < 1e-12 && std::abs(u.zeta - before.zeta) < 1e-12) break;
    }

    // Certify with a fresh sample; fall back to the coarse winner if the
    // refined point fails the recheck.
    const double cv = constraint(u, b.sample(x));
    if (cv < -tol) return {best, FilterStatus::Filtered, constraint(best, b.sample(x)), best_obj};
    return {u, FilterStatus::Filtered, cv, objective(u)};
}

}  // namespace cbfpred
