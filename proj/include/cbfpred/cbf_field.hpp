#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbfpred/scenario.hpp"

namespace cbfpred {

enum class NodeFlag : std::uint8_t {
    Computed = 0,
    OutsideMask = 1,   // h >= mask_threshold; stored value is the node surrogate
    Infeasible = 2,    // h < 0 or solver found no membership-feasible schedule
};

struct InterpResult {
    double value = 0.0;
    bool in_mask = false;  // true iff no OutsideMask node contributed
};

struct FieldGradient {
    double gx = 0.0, gy = 0.0, gpsi = 0.0;
    bool near_mask_boundary = false;  // stencil touched non-computed data
};

struct LipschitzReport {
    double slope_x = 0.0, slope_y = 0.0, slope_psi = 0.0;
    double overall = 0.0;
};

/// Sampled barrier values over an (x, y, psi) grid, immutable once built.
/// Values are meters of worst-case clearance; the zero-superlevel set is the
/// certified-safe region. Queries outside the computed mask fall back to the
/// surrogate delta + (h(s) - mask_threshold), which is >= delta exactly where
/// the mask guarantees the true value is.
class BarrierField {
public:
    GridSpec grid;
    HorizonSpec horizon;
    double delta = 1.0;  // margin carried by the surrogate; reduced by offset()
    std::vector<double> values;       // layout: index = (ipsi*ny + iy)*nx + ix
    std::vector<std::uint8_t> flags;

    bool has_scenario = false;      // sidecar provenance available
    ScenarioConfig scenario;        // valid when has_scenario
    MembershipMode built_mode = MembershipMode::Terminal;

    NodeFlag flag_at(std::size_t i) const { return static_cast<NodeFlag>(flags[i]); }
    std::size_t count(NodeFlag f) const;

    /// Trilinear interpolation with periodic psi wrap. Throws OutOfDomainError
    /// for (x, y) outside the grid unless the surrogate applies there.
    InterpResult interpolate(const State& s) const;

    /// Central finite differences of interpolate() at half grid spacing,
    /// falling back to one-sided differences at domain edges.
    FieldGradient gradient(const State& s) const;

    /// Field shifted down by delta_prime in [0, delta); commutes with
    /// interpolation including the surrogate.
    BarrierField offset(double delta_prime) const;

    /// Max |adjacent difference| / spacing over computed-computed node pairs.
    LipschitzReport lipschitz() const;

    /// Writes the binary field plus a provenance sidecar (<base>.meta.json).
    void save(const std::string& path) const;
    static BarrierField load(const std::string& path);

    static std::string meta_path_for(const std::string& field_path);
};

}  // namespace cbfpred
