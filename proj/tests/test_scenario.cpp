#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "cbfpred/scenario.hpp"

using namespace cbfpred;

namespace {

const char* kMinimal = R"({"obstacles":[{"center_m":[0,0],"radius_m":5}]})";

std::string with_sections(const std::string& extra) {
    return std::string(R"({"obstacles":[{"center_m":[0,0],"radius_m":5}],)") + extra + "}";
}

}  // namespace

TEST_CASE("minimal scenario resolves documented defaults") {
    const ScenarioConfig cfg = parse_scenario(kMinimal);
    const double r = cfg.turn_radius();
    CHECK(r == doctest::Approx(2.7926031172390093).epsilon(1e-15));
    CHECK(cfg.bounds.v_min == 1.0);
    CHECK(cfg.bounds.v_max == 5.0);
    CHECK(cfg.f_set.kind == FSetKind::MarginAndOutward);
    CHECK(cfg.f_set.delta == doctest::Approx(r).epsilon(1e-15));
    CHECK(cfg.f_set.extra_margin == 0.0);
    // absent tau_bar: analytic reach bound for this scene
    CHECK(cfg.horizon.tau_bar == doctest::Approx(2.3131649109498076).epsilon(1e-15));
    CHECK(cfg.grid.mask_threshold == doctest::Approx(3.0 * r).epsilon(1e-15));
    CHECK(cfg.filter.alpha.knee == doctest::Approx(cfg.f_set.delta).epsilon(1e-15));
    CHECK(cfg.mpc.v_nom == cfg.bounds.v_max);
    CHECK(cfg.mpc.steps == 160);  // duration 40 / apply_dt 0.25
    CHECK(cfg.horizon.dt_segment() == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("margin_only pads the membership margin by two turn radii by default") {
    const ScenarioConfig cfg =
        parse_scenario(with_sections(R"("f_set":{"kind":"margin_only"})"));
    CHECK(cfg.f_set.kind == FSetKind::MarginOnly);
    CHECK(cfg.f_set.extra_margin ==
          doctest::Approx(2.0 * cfg.turn_radius()).epsilon(1e-15));
    CHECK(cfg.horizon.tau_bar == doctest::Approx(3.4302061578454115).epsilon(1e-15));
}

TEST_CASE("overrides win over defaults") {
    const ScenarioConfig cfg = parse_scenario(with_sections(
        R"("f_set":{"delta_m":1.5},"mpc":{"steps":7},"sim":{"duration_s":10})"));
    CHECK(cfg.f_set.delta == 1.5);
    CHECK(cfg.filter.alpha.knee == 1.5);  // knee follows delta unless set
    CHECK(cfg.mpc.steps == 7);
    const ScenarioConfig cfg2 =
        parse_scenario(with_sections(R"("sim":{"duration_s":10})"));
    CHECK(cfg2.mpc.steps == 40);  // recomputed from duration
}

TEST_CASE("scenario hash ignores formatting and key order") {
    const std::string a =
        R"({"obstacles":[{"center_m":[0,0],"radius_m":5}],"bicycle":{"wheelbase_m":1.0}})";
    const std::string b = R"({
        "bicycle": {"wheelbase_m": 1.0},
        "obstacles": [ {"radius_m": 5, "center_m": [0, 0]} ]
    })";
    CHECK(scenario_hash(parse_scenario(a)) == scenario_hash(parse_scenario(b)));
    const std::string c =
        R"({"obstacles":[{"center_m":[0,0],"radius_m":5.5}],"bicycle":{"wheelbase_m":1.0}})";
    CHECK(scenario_hash(parse_scenario(a)) != scenario_hash(parse_scenario(c)));
    const std::string hexdigits = scenario_hash_hex(parse_scenario(a));
    CHECK(hexdigits.size() == 16);
    CHECK(hexdigits.find_first_not_of("0123456789abcdef") == std::string::npos);
}

TEST_CASE("canonical JSON round-trips through the parser") {
    const ScenarioConfig cfg = parse_scenario(with_sections(
        R"("horizon":{"T_s":6,"segment_count":24,"tau_bar_s":4.0},"name":"roundtrip")"));
    const std::string dumped = scenario_to_json(cfg, false);
    const ScenarioConfig again = parse_scenario(dumped);
    CHECK(scenario_hash(cfg) == scenario_hash(again));
    CHECK(again.name == "roundtrip");
    CHECK(scenario_to_json(again, true).find('\n') != std::string::npos);
}

TEST_CASE("config errors name the offending field") {
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("input_bounds":{"v_min_mps":0})")),
        doctest::Contains("v_min_mps"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("grid":{"frobnicate":1})")),
        doctest::Contains("unknown key 'frobnicate' in section 'grid'"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("horizon":{"T_s":2,"tau_bar_s":3})")),
        doctest::Contains("tau_bar"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("horizon":{"membership_mode":"whenever"})")),
        doctest::Contains("membership_mode"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("mpc":{"apply_dt_s":0.3})")),
        doctest::Contains("integer multiple"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("sim":{"initial_state":[1,0,0]})")),
        doctest::Contains("initial_state"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_scenario(with_sections(R"("grid":{"x_range_m":[-10,10]})")),
        doctest::Contains("band"), ConfigError);
    CHECK_THROWS_AS(parse_scenario(with_sections(R"("horizon":{"segment_count":1.5})")),
                    ConfigError);
}

TEST_CASE("structurally invalid input is a format error") {
    CHECK_THROWS_AS(parse_scenario("{"), FormatError);
    CHECK_THROWS_AS(parse_scenario("[1,2,3]"), ConfigError);  // parses, wrong shape
    CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), FormatError);
}

TEST_CASE("scenario without obstacles is rejected") {
    CHECK_THROWS_AS(parse_scenario("{}"), std::invalid_argument);
}

TEST_CASE("grid node helpers agree with the spacing") {
    const ScenarioConfig cfg = parse_scenario(kMinimal);
    const GridSpec& g = cfg.grid;
    CHECK(g.x_node(0) == g.x_min);
    CHECK(g.x_node(g.nx - 1) == doctest::Approx(g.x_max).epsilon(1e-15));
    CHECK(g.psi_node(0) == doctest::Approx(-M_PI).epsilon(1e-15));
    CHECK(g.psi_node(g.npsi - 1) ==
          doctest::Approx(M_PI - g.dpsi()).epsilon(1e-12));
    CHECK(g.index(0, 0, 0) == 0);
    CHECK(g.index(g.nx - 1, g.ny - 1, g.npsi - 1) == g.total() - 1);
    CHECK(g.total() == static_cast<std::size_t>(g.nx) * g.ny * g.npsi);
}
