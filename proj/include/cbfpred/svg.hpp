#pragma once

#include <string>

#include "cbfpred/simulator.hpp"

namespace cbfpred {

/// Scene rendering: obstacles, the computed-region boundary around each one,
/// the reference line, the main trajectory with heading ticks, and an optional
/// comparison trajectory in gray. Pure geometry, deterministic bytes.
void write_trajectory_svg(const std::string& path, const ScenarioConfig& scn,
                          const RunLog* main_log, const RunLog* overlay_log);

}  // namespace cbfpred
