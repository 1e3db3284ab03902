#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cbfpred {

/// Wraps an angle into [-pi, pi).
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    double w = std::fmod(a + M_PI, two_pi);
    if (w < 0.0) w += two_pi;
    return w - M_PI;
}

/// Vehicle configuration (planar position + heading). The heading is kept in
/// the canonical range [-pi, pi); construction wraps it.
struct State {
    double x = 0.0;    // [m]
    double y = 0.0;    // [m]
    double psi = 0.0;  // [rad], in [-pi, pi)

    State() = default;
    State(double x_, double y_, double psi_) : x(x_), y(y_), psi(wrap_angle(psi_)) {}
};

/// Control input: forward speed and steering angle.
struct Input {
    double v = 0.0;     // [m/s]
    double zeta = 0.0;  // [rad]
};

/// Input box constraints: 0 < v_min <= v <= v_max, |zeta| <= zeta_max.
struct InputBounds {
    double v_min = 1.0;
    double v_max = 5.0;
    double zeta_max = M_PI / 9.0;

    void validate() const {
        if (!(v_min > 0.0) || !(v_min <= v_max))
            throw std::invalid_argument("input_bounds: require 0 < v_min <= v_max");
        if (!(zeta_max > 0.0) || !(zeta_max < M_PI / 2.0))
            throw std::invalid_argument("input_bounds: require 0 < zeta_max < pi/2");
    }

    bool contains(const Input& u, double tol = 0.0) const {
        return u.v >= v_min - tol && u.v <= v_max + tol && std::abs(u.zeta) <= zeta_max + tol;
    }

    Input clamp(const Input& u) const {
        return {std::clamp(u.v, v_min, v_max), std::clamp(u.zeta, -zeta_max, zeta_max)};
    }
};

struct BicycleParams {
    double wheelbase = 1.0;  // [m]

    void validate() const {
        if (!(wheelbase > 0.0)) throw std::invalid_argument("bicycle: wheelbase must be > 0");
    }
};

/// Piecewise-constant input trajectory: inputs[i] is held on
/// [i*dt_segment, (i+1)*dt_segment).
struct ControlSchedule {
    double dt_segment = 0.25;   // [s]
    std::vector<Input> inputs;

    int segment_count() const { return static_cast<int>(inputs.size()); }
    double duration() const { return dt_segment * static_cast<double>(inputs.size()); }
};

struct SampledTrajectory {
    std::vector<double> times;
    std::vector<State> states;
};

struct Derivative {
    double dx = 0.0;
    double dy = 0.0;
    double dpsi = 0.0;
};

/// Kinematic slip angle beta(zeta) = atan(tan(zeta)/2).
inline double slip_angle(double zeta) {
    if (!(std::abs(zeta) < M_PI / 2.0))
        throw std::domain_error("slip_angle: |zeta| must be < pi/2");
    return std::atan(0.5 * std::tan(zeta));
}

/// Bicycle vector field: xdot = v cos(psi+beta), ydot = v sin(psi+beta),
/// psidot = v cos(beta) tan(zeta) / L.
inline Derivative vector_field(const State& s, const Input& u, const BicycleParams& p) {
    const double beta = slip_angle(u.zeta);
    const double heading = s.psi + beta;
    return {u.v * std::cos(heading), u.v * std::sin(heading),
            u.v * std::cos(beta) * std::tan(u.zeta) / p.wheelbase};
}

/// Minimal turning radius r = L / (cos(beta(zeta_max)) tan(zeta_max)).
inline double min_turn_radius(const BicycleParams& p, const InputBounds& b) {
    const double beta = slip_angle(b.zeta_max);
    return p.wheelbase / (std::cos(beta) * std::tan(b.zeta_max));
}

/// Upper bound on ||f(x,u)|| over the input box. The planar speed equals v,
/// so ||f||^2 = v^2 + psidot^2 <= v_max^2 (1 + 1/r^2).
inline double velocity_norm_bound(const BicycleParams& p, const InputBounds& b) {
    const double r = min_turn_radius(p, b);
    return b.v_max * std::sqrt(1.0 + 1.0 / (r * r));
}

/// Raw pose used inside integrators: psi accumulates without wrapping so the
/// heading stays continuous across long maneuvers.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double psi = 0.0;
    double t = 0.0;
};

/// Advances one constant-input segment of length dt_segment with classical
/// fixed-step RK4 split into `substeps`, invoking the visitor after every
/// substep. Shared by every integration path in the project so that two
/// callers integrating the same schedule agree bit-for-bit.
template <class Visitor>
inline void integrate_segment(Pose& q, const Input& u, const BicycleParams& p, int substeps,
                              double dt_segment, Visitor&& visit) {
    const double beta = slip_angle(u.zeta);
    const double v = u.v;
    const double omega = v * std::cos(beta) * std::tan(u.zeta) / p.wheelbase;
    const double dt = dt_segment / static_cast<double>(substeps);
    for (int k = 0; k < substeps; ++k) {
        // psidot is input-only, so the four stage headings are explicit.
        const double a0 = q.psi + beta;
        const double ah = q.psi + beta + 0.5 * dt * omega;
        const double a1 = q.psi + beta + dt * omega;
        const double k1x = v * std::cos(a0), k1y = v * std::sin(a0);
        const double k2x = v * std::cos(ah), k2y = v * std::sin(ah);
        const double k4x = v * std::cos(a1), k4y = v * std::sin(a1);
        q.x += dt / 6.0 * (k1x + 4.0 * k2x + k4x);  // k3 == k2 here
        q.y += dt / 6.0 * (k1y + 4.0 * k2y + k4y);
        q.psi += dt * omega;
        q.t += dt;
        visit(q);
    }
}

/// Integrates the bicycle under a piecewise-constant schedule, invoking the
/// visitor at every substep node including t=0.
template <class Visitor>
void propagate(const State& s0, const ControlSchedule& sched, const BicycleParams& p,
               int substeps, Visitor&& visit) {
    if (substeps < 1) throw std::invalid_argument("propagate: substeps must be >= 1");
    Pose q{s0.x, s0.y, s0.psi, 0.0};
    visit(q);
    for (const Input& u : sched.inputs)
        integrate_segment(q, u, p, substeps, sched.dt_segment, visit);
}

/// RK4 trajectory with every substep node materialized; headings re-wrapped.
inline SampledTrajectory integrate_rk4(const State& s0, const ControlSchedule& sched,
                                       const BicycleParams& p, int substeps = 5) {
    SampledTrajectory traj;
    const std::size_t n = static_cast<std::size_t>(sched.segment_count()) * substeps + 1;
    traj.times.reserve(n);
    traj.states.reserve(n);
    propagate(s0, sched, p, substeps, [&](const Pose& q) {
        traj.times.push_back(q.t);
        traj.states.emplace_back(q.x, q.y, q.psi);
    });
    return traj;
}

/// Closed-form solution under a constant input: the heading rate
/// omega = v cos(beta) tan(zeta) / L is constant, so the position traces a
/// circular arc of radius v/|omega| (a straight line when omega ~ 0).
inline State constant_input_arc(const State& s0, const Input& u, const BicycleParams& p,
                                double t) {
    const double beta = slip_angle(u.zeta);
    const double omega = u.v * std::cos(beta) * std::tan(u.zeta) / p.wheelbase;
    const double a0 = s0.psi + beta;
    if (std::abs(omega) < 1e-12) {
        return {s0.x + u.v * t * std::cos(a0), s0.y + u.v * t * std::sin(a0), s0.psi};
    }
    const double a1 = a0 + omega * t;
    return {s0.x + u.v / omega * (std::sin(a1) - std::sin(a0)),
            s0.y - u.v / omega * (std::cos(a1) - std::cos(a0)), s0.psi + omega * t};
}

}  // namespace cbfpred
