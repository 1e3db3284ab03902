#pragma once

#include "cbfpred/cbf_field.hpp"

namespace cbfpred {

struct BarrierSample {
    double value = 0.0;
    double gx = 0.0, gy = 0.0, gpsi = 0.0;
    bool near_boundary = false;
};

/// Value-and-gradient source for the filter constraint
///   grad b(x) . f(x, u) + alpha(b(x)) >= 0.
class BarrierOracle {
public:
    virtual ~BarrierOracle() = default;
    virtual BarrierSample sample(const State& s) const = 0;
};

/// Interpolated barrier field with its finite-difference gradient.
class FieldBarrier final : public BarrierOracle {
public:
    explicit FieldBarrier(const BarrierField& f) : field_(&f) {}
    BarrierSample sample(const State& s) const override;

private:
    const BarrierField* field_;
};

/// Raw clearance b = h with the analytic radial gradient (psi component 0).
/// The comparison baseline: h is not a valid barrier for this system.
class ClearanceBarrier final : public BarrierOracle {
public:
    explicit ClearanceBarrier(const ObstacleField& obs) : obs_(&obs) {}
    BarrierSample sample(const State& s) const override;

private:
    const ObstacleField* obs_;
};

enum class FilterStatus : std::uint8_t { NominalPassed = 0, Filtered = 1, Infeasible = 2 };

struct FilterOutcome {
    Input u;
    FilterStatus status = FilterStatus::NominalPassed;
    double constraint_value = 0.0;  // grad b . f + alpha(b) at the returned input
    double objective = 0.0;         // ||u - u_nom||^2
};

/// Returns the admissible input closest to u_nom that satisfies the barrier
/// constraint. The steering enters the dynamics through tan and the slip
/// angle, so the constraint is not affine in u; the box is scanned on a
/// coarse grid and the best sample is pulled toward u_nom by alternating
/// per-axis bisection that keeps feasibility. If no sample is feasible the
/// least-violating one is returned with status Infeasible.
FilterOutcome filter_input(const State& x, const Input& u_nom, const BarrierOracle& b,
                           const FilterConfig& cfg, const InputBounds& bounds,
                           const BicycleParams& bike);

}  // namespace cbfpred
