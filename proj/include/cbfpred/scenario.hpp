#pragma once

#include <cstdint>
#include <string>

#include "cbfpred/constraints.hpp"
#include "cbfpred/dynamics.hpp"
#include "cbfpred/errors.hpp"

namespace cbfpred {

/// Where the target-set membership constraint of the horizon problem applies:
/// at some free time in [0, T], or at the final time only.
enum class MembershipMode { SomeTime, Terminal };

struct HorizonSpec {
    double T = 6.0;                                   // [s]
    int segment_count = 24;                           // piecewise-constant input segments
    MembershipMode mode = MembershipMode::Terminal;
    double softmin_p = 8.0;
    double softmin_shift = 10.0;                      // [m]
    double tau_bar = 4.0;   // declared reach-time bound; horizon must cover it
    int substeps = 5;       // RK4 substeps per segment

    double dt_segment() const { return T / static_cast<double>(segment_count); }

    void validate() const {
        if (!(T > 0.0)) throw ConfigError("horizon.T_s: must be > 0");
        if (segment_count < 2) throw ConfigError("horizon.segment_count: must be >= 2");
        if (!(T >= tau_bar - 1e-12))
            throw ConfigError("horizon.T_s: must be >= declared tau_bar_s");
        if (!(softmin_p >= 4.0)) throw ConfigError("horizon.softmin_p: must be >= 4");
        if (!(softmin_shift > 0.0)) throw ConfigError("horizon.softmin_shift_m: must be > 0");
        if (substeps < 1) throw ConfigError("horizon.substeps_per_segment: must be >= 1");
    }
};

/// Sampling grid over (x, y, psi). x and y include both endpoints; the psi
/// axis is periodic with node i at -pi + 2*pi*i/npsi and no duplicated seam.
struct GridSpec {
    double x_min = -14.0, x_max = 14.0;
    double y_min = -14.0, y_max = 14.0;
    int nx = 57, ny = 57, npsi = 24;
    double mask_threshold = 0.0;    // compute nodes only where h < this
    double lipschitz_bound = 5.0;   // accepted max finite-difference slope

    double dx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
    double dy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
    double dpsi() const { return 2.0 * M_PI / static_cast<double>(npsi); }
    double x_node(int i) const { return x_min + dx() * static_cast<double>(i); }
    double y_node(int i) const { return y_min + dy() * static_cast<double>(i); }
    double psi_node(int i) const { return -M_PI + dpsi() * static_cast<double>(i); }
    std::size_t index(int ix, int iy, int ipsi) const {
        return (static_cast<std::size_t>(ipsi) * ny + iy) * nx + ix;
    }
    std::size_t total() const { return static_cast<std::size_t>(nx) * ny * npsi; }

    void validate(const ObstacleField& obstacles) const {
        if (nx < 4 || ny < 4) throw ConfigError("grid.nx/grid.ny: must be >= 4");
        if (npsi < 8) throw ConfigError("grid.npsi: must be >= 8");
        if (!(x_max > x_min) || !(y_max > y_min))
            throw ConfigError("grid.x_range_m/y_range_m: max must exceed min");
        if (!(mask_threshold > 0.0)) throw ConfigError("grid.mask_threshold_m: must be > 0");
        if (!(lipschitz_bound > 0.0)) throw ConfigError("grid.lipschitz_bound: must be > 0");
        for (const Circle& c : obstacles.circles) {
            const double band = c.radius + mask_threshold;
            if (c.cx - band < x_min || c.cx + band > x_max || c.cy - band < y_min ||
                c.cy + band > y_max)
                throw ConfigError(
                    "grid.x_range_m/y_range_m: must cover the h<mask_threshold band of "
                    "every obstacle");
        }
    }
};

struct FilterConfig {
    ClassK alpha;
    int coarse_nv = 41;
    int coarse_nzeta = 41;
    int refine_iters = 20;
    double constraint_tol = 1e-9;

    void validate() const {
        alpha.validate();
        if (coarse_nv < 3 || coarse_nzeta < 3)
            throw ConfigError("filter.coarse_nv/coarse_nzeta: must be >= 3");
        if (refine_iters < 0) throw ConfigError("filter.refine_iters: must be >= 0");
        if (!(constraint_tol >= 0.0)) throw ConfigError("filter.constraint_tol: must be >= 0");
    }
};

/// Line-following nominal controller gains.
struct NominalConfig {
    double y_ref = 0.0;  // [m]
    double k_y = 0.5;
    double k_psi = 2.0;

    void validate() const {
        if (!(k_y > 0.0) || !(k_psi > 0.0))
            throw ConfigError("nominal.k_y/k_psi: gains must be > 0");
    }
};

struct SimConfig {
    double duration = 40.0;        // [s]
    double control_period = 0.05;  // [s]
    double substep = 0.01;         // integration substep [s]
    State initial{-15.0, 0.5, 0.0};

    void validate() const {
        if (!(duration > 0.0)) throw ConfigError("sim.duration_s: must be > 0");
        if (!(control_period > 0.0)) throw ConfigError("sim.control_period_s: must be > 0");
        if (!(substep > 0.0) || control_period < substep)
            throw ConfigError("sim.control_period_s: must be >= integration_substep_s > 0");
    }
};

struct MpcRunConfig {
    double apply_dt = 0.25;  // [s], portion of each solution applied
    double w_track = 1.0;
    double w_eff = 0.1;
    double v_nom = 5.0;      // [m/s]
    int steps = 160;

    void validate(const HorizonSpec& hs) const {
        if (!(apply_dt > 0.0) || apply_dt > hs.T + 1e-12)
            throw ConfigError("mpc.apply_dt_s: must satisfy 0 < apply_dt <= T");
        const double ratio = apply_dt / hs.dt_segment();
        if (std::abs(ratio - std::round(ratio)) > 1e-9)
            throw ConfigError("mpc.apply_dt_s: must be an integer multiple of T/segment_count");
        if (steps < 1) throw ConfigError("mpc.steps: must be >= 1");
        if (w_track < 0.0 || w_eff < 0.0)
            throw ConfigError("mpc.w_track/w_eff: must be >= 0");
    }
};

/// Complete scenario description; the unit of provenance. Loaded from JSON
/// with explicit units in key names, then resolved (defaults filled in) and
/// validated. The provenance hash covers the resolved form.
struct ScenarioConfig {
    std::string name;
    ObstacleField obstacles;
    InputBounds bounds;
    BicycleParams bicycle;
    FSetSpec f_set;
    HorizonSpec horizon;
    GridSpec grid;
    FilterConfig filter;
    NominalConfig nominal;
    SimConfig sim;
    MpcRunConfig mpc;

    double turn_radius() const { return min_turn_radius(bicycle, bounds); }

    void validate() const;
};

/// Parses, resolves defaults, validates. Throws ConfigError / FormatError.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

/// Canonical JSON of the resolved config (sorted keys). pretty=2-space indent.
std::string scenario_to_json(const ScenarioConfig& cfg, bool pretty = false);

/// FNV-1a (64-bit) over the canonical compact JSON.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t scenario_hash(const ScenarioConfig& cfg);
std::string scenario_hash_hex(const ScenarioConfig& cfg);

}  // namespace cbfpred
