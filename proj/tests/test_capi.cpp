#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "cbfpred.h"

namespace {

const char* kScenarioJson = R"({
    "name": "capi_coarse",
    "obstacles": [{"center_m": [0, 0], "radius_m": 5}],
    "horizon": {"T_s": 6, "segment_count": 12, "membership_mode": "terminal",
                "tau_bar_s": 4.0},
    "grid": {"x_range_m": [-14, 14], "y_range_m": [-14, 14],
             "nx": 15, "ny": 15, "npsi": 8},
    "mpc": {"apply_dt_s": 0.5}
})";

struct ScenarioHandle {
    cbfp_scenario* s = nullptr;
    ScenarioHandle() { REQUIRE(cbfp_scenario_parse(kScenarioJson, &s) == CBFP_OK); }
    ~ScenarioHandle() { cbfp_scenario_free(s); }
};

cbfp_field* build_field(const cbfp_scenario* s, cbfp_sweep_stats* stats = nullptr) {
    cbfp_field* f = nullptr;
    REQUIRE(cbfp_field_build(s, CBFP_MODE_SCENARIO, 2, stats, &f) == CBFP_OK);
    return f;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("version string and null-argument handling") {
    REQUIRE(cbfp_version() != nullptr);
    CHECK(std::strlen(cbfp_version()) > 0);
    CHECK(cbfp_scenario_load(nullptr, nullptr) == CBFP_ERR_INVALID_ARG);
    CHECK(std::strlen(cbfp_last_error()) > 0);
    cbfp_scenario* s = nullptr;
    CHECK(cbfp_scenario_parse(nullptr, &s) == CBFP_ERR_INVALID_ARG);
    double d = 0.0;
    CHECK(cbfp_scenario_turn_radius(nullptr, &d) == CBFP_ERR_INVALID_ARG);
    CHECK(cbfp_field_build(nullptr, 0, 1, nullptr, nullptr) == CBFP_ERR_INVALID_ARG);
}

TEST_CASE("scenario parse errors map to distinct status codes") {
    cbfp_scenario* s = nullptr;
    CHECK(cbfp_scenario_parse("{ not json", &s) == CBFP_ERR_FORMAT);
    CHECK(cbfp_scenario_parse(R"({"obstacles":[]})", &s) == CBFP_ERR_CONFIG);
    CHECK(cbfp_scenario_parse(
              R"({"obstacles":[{"center_m":[0,0],"radius_m":5}],"grid":{"zzz":1}})", &s) ==
          CBFP_ERR_CONFIG);
    CHECK(std::string(cbfp_last_error()).find("zzz") != std::string::npos);
    CHECK(cbfp_scenario_load("/definitely/not/here.json", &s) == CBFP_ERR_FORMAT);
}

TEST_CASE("scenario accessors") {
    ScenarioHandle h;
    char hex[17] = {0};
    REQUIRE(cbfp_scenario_hash_hex(h.s, hex) == CBFP_OK);
    CHECK(std::strlen(hex) == 16);
    CHECK(std::string(hex).find_first_not_of("0123456789abcdef") == std::string::npos);

    char* name = nullptr;
    REQUIRE(cbfp_scenario_name(h.s, &name) == CBFP_OK);
    CHECK(std::string(name) == "capi_coarse");
    cbfp_string_free(name);

    char* json = nullptr;
    REQUIRE(cbfp_scenario_json(h.s, &json) == CBFP_OK);
    CHECK(std::string(json).find("\"radius_m\"") != std::string::npos);
    cbfp_string_free(json);

    double r = 0.0, tau = 0.0;
    REQUIRE(cbfp_scenario_turn_radius(h.s, &r) == CBFP_OK);
    CHECK(r == doctest::Approx(2.7926031172390093).epsilon(1e-14));
    REQUIRE(cbfp_scenario_tau_bound(h.s, &tau) == CBFP_OK);
    CHECK(tau == doctest::Approx(2.3131649109498076).epsilon(1e-14));
}

TEST_CASE("field build, info, queries, offset, provenance") {
    ScenarioHandle h;
    cbfp_sweep_stats stats{};
    cbfp_field* f = build_field(h.s, &stats);
    CHECK(stats.computed > 0);
    CHECK(stats.solver_infeasible == 0);

    cbfp_field_info info{};
    REQUIRE(cbfp_field_info_get(f, &info) == CBFP_OK);
    CHECK(info.nx == 15);
    CHECK(info.ny == 15);
    CHECK(info.npsi == 8);
    CHECK(info.computed == stats.computed);
    CHECK(info.outside_mask == stats.outside_mask);
    CHECK(info.infeasible == stats.infeasible_h + stats.solver_infeasible);
    CHECK(info.membership_mode == CBFP_MODE_TERMINAL);
    CHECK(info.has_provenance == 1);
    CHECK(info.delta == doctest::Approx(2.7926031172390093).epsilon(1e-14));
    CHECK(info.mask_threshold == doctest::Approx(3 * 2.7926031172390093).epsilon(1e-14));
    CHECK(info.horizon_T == 6.0);
    CHECK(info.lipschitz_overall > 0.0);
    CHECK(info.lipschitz_overall <= 5.0);

    double value = 0.0;
    int in_mask = -1;
    REQUIRE(cbfp_field_value(f, 20.0, 20.0, 0.0, &value, &in_mask) == CBFP_OK);
    CHECK(in_mask == 0);  // surrogate region
    const double hc = std::hypot(20.0, 20.0) - 5.0;
    CHECK(value == doctest::Approx(info.delta + hc - info.mask_threshold).epsilon(1e-12));

    double gx = 0, gy = 0, gpsi = 0;
    int nb = -1;
    REQUIRE(cbfp_field_gradient(f, 10.0, 0.0, 0.0, &gx, &gy, &gpsi, &nb) == CBFP_OK);
    CHECK(std::isfinite(gx));
    CHECK(std::isfinite(gy));
    CHECK(std::isfinite(gpsi));

    cbfp_field* off = nullptr;
    REQUIRE(cbfp_field_offset(f, 0.5, &off) == CBFP_OK);
    double v2 = 0.0;
    REQUIRE(cbfp_field_value(off, 20.0, 20.0, 0.0, &v2, nullptr) == CBFP_OK);
    CHECK(v2 == doctest::Approx(value - 0.5).epsilon(1e-12));
    cbfp_field_free(off);
    CHECK(cbfp_field_offset(f, 100.0, &off) == CBFP_ERR_DOMAIN);

    CHECK(cbfp_field_check_provenance(f, h.s) == CBFP_OK);
    cbfp_scenario* other = nullptr;
    REQUIRE(cbfp_scenario_parse(
                R"({"obstacles":[{"center_m":[0,0],"radius_m":4}]})", &other) == CBFP_OK);
    CHECK(cbfp_field_check_provenance(f, other) == CBFP_ERR_PROVENANCE);
    cbfp_scenario_free(other);

    // save/load round trip via the C surface
    REQUIRE(cbfp_field_save(f, "capi_field.cbf") == CBFP_OK);
    cbfp_field* loaded = nullptr;
    REQUIRE(cbfp_field_load("capi_field.cbf", &loaded) == CBFP_OK);
    cbfp_field_info info2{};
    REQUIRE(cbfp_field_info_get(loaded, &info2) == CBFP_OK);
    CHECK(info2.computed == info.computed);
    CHECK(info2.has_provenance == 1);
    cbfp_field_free(loaded);
    CHECK(cbfp_field_load("missing.cbf", &loaded) == CBFP_ERR_FORMAT);

    cbfp_field_free(f);
}

TEST_CASE("point solve through the C surface") {
    ScenarioHandle h;
    cbfp_solve_result r{};
    REQUIRE(cbfp_solve_point(h.s, CBFP_MODE_TERMINAL, 10.0, 0.0, 0.0, &r) == CBFP_OK);
    CHECK(r.feasible == 1);
    CHECK(r.infeasible_start == 0);
    CHECK(r.value == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(r.t_star == 0.0);

    REQUIRE(cbfp_solve_point(h.s, CBFP_MODE_SCENARIO, 0.0, 2.0, 0.0, &r) == CBFP_OK);
    CHECK(r.infeasible_start == 1);
    CHECK(r.feasible == 1);
    CHECK(r.value == doctest::Approx(-3.0).epsilon(1e-9));

    CHECK(cbfp_solve_point(h.s, 42, 10.0, 0.0, 0.0, &r) == CBFP_ERR_INVALID_ARG);
}

TEST_CASE("closed-loop runs, summaries, CSV, SVG") {
    ScenarioHandle h;
    cbfp_runlog* log = nullptr;
    REQUIRE(cbfp_run_baseline(h.s, &log) == CBFP_OK);
    cbfp_run_summary s{};
    REQUIRE(cbfp_runlog_summary(log, &s) == CBFP_OK);
    CHECK(s.steps == 800);
    CHECK(s.nominal_steps + s.filtered_steps + s.infeasible_steps <= s.steps);
    CHECK(std::isfinite(s.min_h));

    REQUIRE(cbfp_runlog_write_csv(log, "capi_run.csv") == CBFP_OK);
    cbfp_runlog* back = nullptr;
    REQUIRE(cbfp_runlog_read_csv("capi_run.csv", &back) == CBFP_OK);
    cbfp_run_summary s2{};
    REQUIRE(cbfp_runlog_summary(back, &s2) == CBFP_OK);
    CHECK(s2.steps == s.steps);
    CHECK(s2.deviation_energy == doctest::Approx(s.deviation_energy).epsilon(1e-12));
    CHECK(cbfp_runlog_read_csv("missing.csv", &back) == CBFP_ERR_FORMAT);

    REQUIRE(cbfp_write_svg(h.s, log, nullptr, "capi_run.svg") == CBFP_OK);
    const std::string svg = slurp("capi_run.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    cbfp_runlog_free(back);
    cbfp_runlog_free(log);
}

TEST_CASE("receding-horizon run through the C surface") {
    ScenarioHandle h;
    cbfp_runlog* log = nullptr;
    REQUIRE(cbfp_run_mpc(h.s, CBFP_MPC_MAXMIN, nullptr, 5, &log) == CBFP_OK);
    cbfp_run_summary s{};
    REQUIRE(cbfp_runlog_summary(log, &s) == CBFP_OK);
    CHECK(s.steps == 5);
    CHECK(s.infeasible_steps == 0);
    CHECK(s.aborted == 0);
    CHECK(s.mean_solve_seconds > 0.0);
    cbfp_runlog_free(log);
    CHECK(cbfp_run_mpc(h.s, 9, nullptr, 5, &log) == CBFP_ERR_INVALID_ARG);
}

TEST_CASE("probe and validation reports through the C surface") {
    ScenarioHandle h;
    cbfp_field* f = build_field(h.s);

    cbfp_probe_report pr{};
    REQUIRE(cbfp_probe(h.s, f, 40, 7, -1.0, -1.0, &pr) == CBFP_OK);
    CHECK(pr.samples == 40);
    CHECK(pr.eps == 1e-3);
    CHECK(pr.tol == 0.05);
    CHECK(cbfp_probe(h.s, f, 0, 7, -1.0, -1.0, &pr) == CBFP_ERR_INVALID_ARG);

    cbfp_report* rep = nullptr;
    REQUIRE(cbfp_validate(h.s, f, 1, 1, &rep) == CBFP_OK);
    const int n = cbfp_report_count(rep);
    CHECK(n >= 5);
    int passes = 0;
    for (int i = 0; i < n; ++i) {
        const char* name = nullptr;
        const char* detail = nullptr;
        int pass = -1;
        REQUIRE(cbfp_report_item(rep, i, &name, &pass, &detail) == CBFP_OK);
        CHECK(name != nullptr);
        CHECK(detail != nullptr);
        CHECK((pass == 0 || pass == 1));
        passes += pass;
    }
    const char* nm = nullptr;
    const char* dt = nullptr;
    int p = 0;
    CHECK(cbfp_report_item(rep, n, &nm, &p, &dt) == CBFP_ERR_INVALID_ARG);
    CHECK(cbfp_report_all_pass(rep) == (passes == n ? 1 : 0));
    cbfp_report_free(rep);
    cbfp_field_free(f);
}
