#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbfpred/cbf_field.hpp"

namespace cbfpred {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const CheckResult& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Runs the field invariant suite: structural upper bound at every computed
/// node, oracle dominance at sampled nodes, horizon monotonicity via seeded
/// re-solves (skipped when quick), the barrier-condition probe, and the
/// gradient bound. Randomness is fully determined by `seed`.
ValidationReport validate_field(const ScenarioConfig& scn, const BarrierField& field, bool quick,
                                std::uint64_t seed);

}  // namespace cbfpred
