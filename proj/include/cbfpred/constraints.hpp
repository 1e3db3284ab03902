#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cbfpred/dynamics.hpp"

namespace cbfpred {

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 1.0;  // [m]

    void validate() const {
        if (!(radius > 0.0)) throw std::invalid_argument("circle: radius must be > 0");
    }
};

struct GradientResult {
    double gx = 0.0;
    double gy = 0.0;
    bool tie = false;  // equidistant between nearest circles; lowest index used
};

/// Union of circular keep-out disks. The clearance h is the distance to the
/// nearest disk boundary: min_i(||p - c_i|| - R_i). Negative inside a disk.
struct ObstacleField {
    std::vector<Circle> circles;

    void validate() const {
        if (circles.empty()) throw std::invalid_argument("obstacles: need at least one circle");
        for (const Circle& c : circles) c.validate();
        for (std::size_t i = 0; i < circles.size(); ++i)
            for (std::size_t j = i + 1; j < circles.size(); ++j)
                if (circles[i].cx == circles[j].cx && circles[i].cy == circles[j].cy)
                    throw std::invalid_argument("obstacles: circle centers must be distinct");
    }

    double h(double x, double y) const {
        double best = std::numeric_limits<double>::infinity();
        for (const Circle& c : circles) {
            const double d = std::hypot(x - c.cx, y - c.cy) - c.radius;
            best = std::min(best, d);
        }
        return best;
    }

    double h(const State& s) const { return h(s.x, s.y); }

    std::size_t nearest_index(double x, double y, bool* tie = nullptr) const {
        std::size_t best_i = 0;
        double best = std::numeric_limits<double>::infinity();
        bool tied = false;
        for (std::size_t i = 0; i < circles.size(); ++i) {
            const double d = std::hypot(x - circles[i].cx, y - circles[i].cy) - circles[i].radius;
            if (d < best) {
                best = d;
                best_i = i;
                tied = false;
            } else if (d == best) {
                tied = true;
            }
        }
        if (tie) *tie = tied;
        return best_i;
    }

    /// Unit radial direction away from the nearest circle's center.
    GradientResult h_gradient(double x, double y) const {
        GradientResult g;
        const std::size_t i = nearest_index(x, y, &g.tie);
        const Circle& c = circles[i];
        const double dx = x - c.cx, dy = y - c.cy;
        const double d = std::hypot(dx, dy);
        if (d < 1e-12) throw std::domain_error("h_gradient: query at a circle center");
        g.gx = dx / d;
        g.gy = dy / d;
        return g;
    }

    /// grad h . (cos psi, sin psi): positive when the heading points away from
    /// the nearest obstacle.
    double outward_alignment(const State& s) const {
        const GradientResult g = h_gradient(s.x, s.y);
        return g.gx * std::cos(s.psi) + g.gy * std::sin(s.psi);
    }

    /// Non-throwing variant for trajectory scans that may cross a center.
    double outward_alignment_or(const State& s, double fallback) const {
        const Circle& c = circles[nearest_index(s.x, s.y)];
        const double dx = s.x - c.cx, dy = s.y - c.cy;
        const double d = std::hypot(dx, dy);
        if (d < 1e-12) return fallback;
        return (dx * std::cos(s.psi) + dy * std::sin(s.psi)) / d;
    }
};

enum class FSetKind { MarginOnly, MarginAndOutward };

/// Target-set description for the horizon problem. MarginOnly accepts any
/// state with h >= delta + extra_margin. MarginAndOutward accepts states with
/// h >= delta whose heading additionally satisfies outward_alignment >= 0, so
/// that coasting straight ahead cannot decrease h.
struct FSetSpec {
    FSetKind kind = FSetKind::MarginAndOutward;
    double delta = 1.0;         // [m]
    double extra_margin = 0.0;  // [m], MarginOnly only

    void validate() const {
        if (!(delta > 0.0)) throw std::invalid_argument("f_set: delta must be > 0");
        if (extra_margin < 0.0) throw std::invalid_argument("f_set: extra_margin must be >= 0");
    }

    bool contains(const ObstacleField& field, const State& s, double tol = 0.0) const {
        const double hv = field.h(s);
        if (kind == FSetKind::MarginOnly) return hv >= delta + extra_margin - tol;
        return hv >= delta - tol && field.outward_alignment(s) >= -tol;
    }

    /// Signed violation: <= 0 inside F, positive outside (max constraint gap).
    double violation(const ObstacleField& field, const State& s) const {
        const double hv = field.h(s);
        if (kind == FSetKind::MarginOnly) return delta + extra_margin - hv;
        return std::max(delta - hv, -field.outward_alignment_or(s, -1.0));
    }
};

/// Piecewise-linear class-K function: slope k1 up to the knee, k2 above.
/// A large k2 switches the filter constraint off once the barrier clears the
/// knee. Negative arguments extend linearly with slope k1.
struct ClassK {
    double k1 = 0.5;   // [1/s]
    double knee = 1.0; // [m]
    double k2 = 50.0;  // [1/s]

    void validate() const {
        if (!(k1 > 0.0) || !(k2 > 0.0) || !(knee > 0.0))
            throw std::invalid_argument("class_k: k1, k2, knee must be > 0");
    }

    double operator()(double v) const {
        if (v <= knee) return k1 * v;
        return k1 * knee + k2 * (v - knee);
    }
};

/// Analytic upper bound on the time needed to reach F from anywhere in
/// {h >= 0}, for one circle. MarginOnly: min(2(R+r+delta), (2+pi)r+delta)/v_max
/// (cross the disk's far side, or quarter-turn + half-circumference escape).
/// MarginAndOutward: min(2(R+delta), pi r + delta)/v_max.
inline double tau_bound(const Circle& c, FSetKind kind, double r, double delta,
                        const InputBounds& b) {
    if (kind == FSetKind::MarginOnly) {
        const double a = 2.0 * (c.radius + r + delta) / b.v_max;
        const double bb = ((2.0 + M_PI) * r + delta) / b.v_max;
        return std::min(a, bb);
    }
    const double a = 2.0 * (c.radius + delta) / b.v_max;
    const double bb = (M_PI * r + delta) / b.v_max;
    return std::min(a, bb);
}

/// Multi-circle bound: worst case over circles.
inline double tau_bound(const ObstacleField& field, FSetKind kind, double r, double delta,
                        const InputBounds& b) {
    double worst = 0.0;
    for (const Circle& c : field.circles) worst = std::max(worst, tau_bound(c, kind, r, delta, b));
    return worst;
}

/// Input that keeps (or regains) membership in F: coast straight at v_min
/// while the heading is outward with enough clearance, otherwise turn at the
/// steering limit toward the outward direction at full speed. Coasting
/// straight from a state with h >= delta and outward heading never leaves
/// that set, so this realizes the control-invariance of F.
inline Input f_keeping_input(const State& s, const ObstacleField& field, const FSetSpec& spec,
                             const InputBounds& b) {
    const double hv = field.h(s);
    const double align = field.outward_alignment_or(s, -1.0);
    const bool settled = spec.kind == FSetKind::MarginOnly
                             ? hv >= spec.delta + spec.extra_margin && align >= 0.0
                             : hv >= spec.delta && align >= 0.0;
    if (settled) return {b.v_min, 0.0};
    const Circle& c = field.circles[field.nearest_index(s.x, s.y)];
    const double dx = s.x - c.cx, dy = s.y - c.cy;
    const double outward = (std::hypot(dx, dy) < 1e-12) ? s.psi : std::atan2(dy, dx);
    const double err = wrap_angle(outward - s.psi);
    const double zeta = std::clamp(3.0 * err, -b.zeta_max, b.zeta_max);
    return {b.v_max, zeta};
}

}  // namespace cbfpred
