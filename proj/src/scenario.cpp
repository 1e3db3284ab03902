#include "cbfpred/scenario.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace cbfpred {

using nlohmann::json;

void ScenarioConfig::validate() const {
    obstacles.validate();
    bounds.validate();
    bicycle.validate();
    f_set.validate();
    horizon.validate();
    grid.validate(obstacles);
    filter.validate();
    nominal.validate();
    sim.validate();
    mpc.validate(horizon);
    if (obstacles.h(sim.initial) < 0.0)
        throw ConfigError("sim.initial_state: must start outside every obstacle (h >= 0)");
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

void check_keys(const json& obj, const std::string& section,
                const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            bad("unknown key '" + it.key() + "' in section '" + section + "'");
}

double num(const json& obj, const std::string& section, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) bad(section + "." + key + ": must be a number");
    return v.get<double>();
}

int integer(const json& obj, const std::string& section, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) bad(section + "." + key + ": must be an integer");
    return v.get<int>();
}

std::pair<double, double> range2(const json& obj, const std::string& section, const char* key,
                                 std::pair<double, double> fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        bad(section + "." + key + ": must be [min, max]");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) bad("scenario: top level must be a JSON object");
    check_keys(root, "scenario",
               {"name", "obstacles", "input_bounds", "bicycle", "f_set", "horizon", "grid",
                "filter", "nominal", "sim", "mpc"});

    ScenarioConfig cfg;
    if (root.contains("name")) {
        if (!root["name"].is_string()) bad("name: must be a string");
        cfg.name = root["name"].get<std::string>();
    }

    if (root.contains("obstacles")) {
        const json& arr = root["obstacles"];
        if (!arr.is_array() || arr.empty()) bad("obstacles: must be a nonempty array");
        cfg.obstacles.circles.clear();
        for (const json& o : arr) {
            check_keys(o, "obstacles[]", {"center_m", "radius_m"});
            if (!o.contains("center_m") || !o.contains("radius_m"))
                bad("obstacles[]: need center_m and radius_m");
            auto [cx, cy] = range2(o, "obstacles[]", "center_m", {0.0, 0.0});
            Circle c{cx, cy, num(o, "obstacles[]", "radius_m", 1.0)};
            cfg.obstacles.circles.push_back(c);
        }
    }

    if (root.contains("input_bounds")) {
        const json& b = root["input_bounds"];
        check_keys(b, "input_bounds", {"v_min_mps", "v_max_mps", "zeta_max_rad"});
        cfg.bounds.v_min = num(b, "input_bounds", "v_min_mps", cfg.bounds.v_min);
        cfg.bounds.v_max = num(b, "input_bounds", "v_max_mps", cfg.bounds.v_max);
        cfg.bounds.zeta_max = num(b, "input_bounds", "zeta_max_rad", cfg.bounds.zeta_max);
    }
    if (!(cfg.bounds.v_min > 0.0)) bad("input_bounds.v_min_mps: must be > 0");
    if (!(cfg.bounds.v_min <= cfg.bounds.v_max))
        bad("input_bounds.v_max_mps: must be >= v_min_mps");
    if (!(cfg.bounds.zeta_max > 0.0 && cfg.bounds.zeta_max < M_PI / 2.0))
        bad("input_bounds.zeta_max_rad: must be in (0, pi/2)");

    if (root.contains("bicycle")) {
        const json& b = root["bicycle"];
        check_keys(b, "bicycle", {"wheelbase_m"});
        cfg.bicycle.wheelbase = num(b, "bicycle", "wheelbase_m", cfg.bicycle.wheelbase);
    }
    if (!(cfg.bicycle.wheelbase > 0.0)) bad("bicycle.wheelbase_m: must be > 0");

    const double r = cfg.turn_radius();

    cfg.f_set.delta = r;  // resolved defaults below may be overridden per file
    cfg.f_set.extra_margin = 0.0;
    if (root.contains("f_set")) {
        const json& f = root["f_set"];
        check_keys(f, "f_set", {"kind", "delta_m", "extra_margin_m"});
        if (f.contains("kind")) {
            const std::string k = f["kind"].get<std::string>();
            if (k == "margin_only")
                cfg.f_set.kind = FSetKind::MarginOnly;
            else if (k == "margin_and_outward")
                cfg.f_set.kind = FSetKind::MarginAndOutward;
            else
                bad("f_set.kind: must be 'margin_only' or 'margin_and_outward'");
        }
        cfg.f_set.delta = num(f, "f_set", "delta_m", cfg.f_set.delta);
        cfg.f_set.extra_margin = num(f, "f_set", "extra_margin_m",
                                     cfg.f_set.kind == FSetKind::MarginOnly ? 2.0 * r : 0.0);
    } else if (cfg.f_set.kind == FSetKind::MarginOnly) {
        cfg.f_set.extra_margin = 2.0 * r;
    }

    if (root.contains("horizon")) {
        const json& h = root["horizon"];
        check_keys(h, "horizon",
                   {"T_s", "segment_count", "membership_mode", "softmin_p", "softmin_shift_m",
                    "tau_bar_s", "substeps_per_segment"});
        cfg.horizon.T = num(h, "horizon", "T_s", cfg.horizon.T);
        cfg.horizon.segment_count = integer(h, "horizon", "segment_count",
                                            cfg.horizon.segment_count);
        if (h.contains("membership_mode")) {
            const std::string m = h["membership_mode"].get<std::string>();
            if (m == "some_time")
                cfg.horizon.mode = MembershipMode::SomeTime;
            else if (m == "terminal")
                cfg.horizon.mode = MembershipMode::Terminal;
            else
                bad("horizon.membership_mode: must be 'some_time' or 'terminal'");
        }
        cfg.horizon.softmin_p = num(h, "horizon", "softmin_p", cfg.horizon.softmin_p);
        cfg.horizon.softmin_shift =
            num(h, "horizon", "softmin_shift_m", cfg.horizon.softmin_shift);
        cfg.horizon.tau_bar = num(h, "horizon", "tau_bar_s", -1.0);
        cfg.horizon.substeps = integer(h, "horizon", "substeps_per_segment",
                                       cfg.horizon.substeps);
    } else {
        cfg.horizon.tau_bar = -1.0;
    }
    if (cfg.horizon.tau_bar < 0.0)  // default: analytic reach bound for this scene
        cfg.horizon.tau_bar =
            tau_bound(cfg.obstacles, cfg.f_set.kind, r, cfg.f_set.delta, cfg.bounds);

    cfg.grid.mask_threshold = 3.0 * r;
    if (root.contains("grid")) {
        const json& g = root["grid"];
        check_keys(g, "grid",
                   {"x_range_m", "y_range_m", "nx", "ny", "npsi", "mask_threshold_m",
                    "lipschitz_bound"});
        std::tie(cfg.grid.x_min, cfg.grid.x_max) =
            range2(g, "grid", "x_range_m", {cfg.grid.x_min, cfg.grid.x_max});
        std::tie(cfg.grid.y_min, cfg.grid.y_max) =
            range2(g, "grid", "y_range_m", {cfg.grid.y_min, cfg.grid.y_max});
        cfg.grid.nx = integer(g, "grid", "nx", cfg.grid.nx);
        cfg.grid.ny = integer(g, "grid", "ny", cfg.grid.ny);
        cfg.grid.npsi = integer(g, "grid", "npsi", cfg.grid.npsi);
        cfg.grid.mask_threshold = num(g, "grid", "mask_threshold_m", cfg.grid.mask_threshold);
        cfg.grid.lipschitz_bound = num(g, "grid", "lipschitz_bound", cfg.grid.lipschitz_bound);
    }

    cfg.filter.alpha.knee = cfg.f_set.delta;
    if (root.contains("filter")) {
        const json& f = root["filter"];
        check_keys(f, "filter",
                   {"k1_per_s", "knee_m", "k2_per_s", "coarse_nv", "coarse_nzeta",
                    "refine_iters", "constraint_tol"});
        cfg.filter.alpha.k1 = num(f, "filter", "k1_per_s", cfg.filter.alpha.k1);
        cfg.filter.alpha.knee = num(f, "filter", "knee_m", cfg.filter.alpha.knee);
        cfg.filter.alpha.k2 = num(f, "filter", "k2_per_s", cfg.filter.alpha.k2);
        cfg.filter.coarse_nv = integer(f, "filter", "coarse_nv", cfg.filter.coarse_nv);
        cfg.filter.coarse_nzeta = integer(f, "filter", "coarse_nzeta", cfg.filter.coarse_nzeta);
        cfg.filter.refine_iters = integer(f, "filter", "refine_iters", cfg.filter.refine_iters);
        cfg.filter.constraint_tol = num(f, "filter", "constraint_tol",
                                        cfg.filter.constraint_tol);
    }

    if (root.contains("nominal")) {
        const json& n = root["nominal"];
        check_keys(n, "nominal", {"y_ref_m", "k_y", "k_psi"});
        cfg.nominal.y_ref = num(n, "nominal", "y_ref_m", cfg.nominal.y_ref);
        cfg.nominal.k_y = num(n, "nominal", "k_y", cfg.nominal.k_y);
        cfg.nominal.k_psi = num(n, "nominal", "k_psi", cfg.nominal.k_psi);
    }

    if (root.contains("sim")) {
        const json& s = root["sim"];
        check_keys(s, "sim",
                   {"duration_s", "control_period_s", "integration_substep_s", "initial_state"});
        cfg.sim.duration = num(s, "sim", "duration_s", cfg.sim.duration);
        cfg.sim.control_period = num(s, "sim", "control_period_s", cfg.sim.control_period);
        cfg.sim.substep = num(s, "sim", "integration_substep_s", cfg.sim.substep);
        if (s.contains("initial_state")) {
            const json& st = s["initial_state"];
            if (!st.is_array() || st.size() != 3)
                bad("sim.initial_state: must be [x, y, psi]");
            cfg.sim.initial = State(st[0].get<double>(), st[1].get<double>(),
                                    st[2].get<double>());
        }
    }

    cfg.mpc.v_nom = cfg.bounds.v_max;
    cfg.mpc.steps = static_cast<int>(std::round(cfg.sim.duration / cfg.mpc.apply_dt));
    if (root.contains("mpc")) {
        const json& m = root["mpc"];
        check_keys(m, "mpc", {"apply_dt_s", "w_track", "w_eff", "v_nom_mps", "steps"});
        cfg.mpc.apply_dt = num(m, "mpc", "apply_dt_s", cfg.mpc.apply_dt);
        cfg.mpc.w_track = num(m, "mpc", "w_track", cfg.mpc.w_track);
        cfg.mpc.w_eff = num(m, "mpc", "w_eff", cfg.mpc.w_eff);
        cfg.mpc.v_nom = num(m, "mpc", "v_nom_mps", cfg.mpc.v_nom);
        cfg.mpc.steps = integer(m, "mpc", "steps",
                                static_cast<int>(std::round(cfg.sim.duration / cfg.mpc.apply_dt)));
    }

    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("scenario: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg, bool pretty) {
    json root;
    root["name"] = cfg.name;
    json obst = json::array();
    for (const Circle& c : cfg.obstacles.circles)
        obst.push_back({{"center_m", {c.cx, c.cy}}, {"radius_m", c.radius}});
    root["obstacles"] = obst;
    root["input_bounds"] = {{"v_min_mps", cfg.bounds.v_min},
                            {"v_max_mps", cfg.bounds.v_max},
                            {"zeta_max_rad", cfg.bounds.zeta_max}};
    root["bicycle"] = {{"wheelbase_m", cfg.bicycle.wheelbase}};
    root["f_set"] = {
        {"kind", cfg.f_set.kind == FSetKind::MarginOnly ? "margin_only" : "margin_and_outward"},
        {"delta_m", cfg.f_set.delta},
        {"extra_margin_m", cfg.f_set.extra_margin}};
    root["horizon"] = {
        {"T_s", cfg.horizon.T},
        {"segment_count", cfg.horizon.segment_count},
        {"membership_mode",
         cfg.horizon.mode == MembershipMode::SomeTime ? "some_time" : "terminal"},
        {"softmin_p", cfg.horizon.softmin_p},
        {"softmin_shift_m", cfg.horizon.softmin_shift},
        {"tau_bar_s", cfg.horizon.tau_bar},
        {"substeps_per_segment", cfg.horizon.substeps}};
    root["grid"] = {{"x_range_m", {cfg.grid.x_min, cfg.grid.x_max}},
                    {"y_range_m", {cfg.grid.y_min, cfg.grid.y_max}},
                    {"nx", cfg.grid.nx},
                    {"ny", cfg.grid.ny},
                    {"npsi", cfg.grid.npsi},
                    {"mask_threshold_m", cfg.grid.mask_threshold},
                    {"lipschitz_bound", cfg.grid.lipschitz_bound}};
    root["filter"] = {{"k1_per_s", cfg.filter.alpha.k1},
                      {"knee_m", cfg.filter.alpha.knee},
                      {"k2_per_s", cfg.filter.alpha.k2},
                      {"coarse_nv", cfg.filter.coarse_nv},
                      {"coarse_nzeta", cfg.filter.coarse_nzeta},
                      {"refine_iters", cfg.filter.refine_iters},
                      {"constraint_tol", cfg.filter.constraint_tol}};
    root["nominal"] = {{"y_ref_m", cfg.nominal.y_ref},
                       {"k_y", cfg.nominal.k_y},
                       {"k_psi", cfg.nominal.k_psi}};
    root["sim"] = {{"duration_s", cfg.sim.duration},
                   {"control_period_s", cfg.sim.control_period},
                   {"integration_substep_s", cfg.sim.substep},
                   {"initial_state", {cfg.sim.initial.x, cfg.sim.initial.y, cfg.sim.initial.psi}}};
    root["mpc"] = {{"apply_dt_s", cfg.mpc.apply_dt},
                   {"w_track", cfg.mpc.w_track},
                   {"w_eff", cfg.mpc.w_eff},
                   {"v_nom_mps", cfg.mpc.v_nom},
                   {"steps", cfg.mpc.steps}};
    return pretty ? root.dump(2) : root.dump();
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t scenario_hash(const ScenarioConfig& cfg) {
    const std::string s = scenario_to_json(cfg, false);
    return fnv1a64(s.data(), s.size());
}

std::string scenario_hash_hex(const ScenarioConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(scenario_hash(cfg)));
    return std::string(buf);
}

}  // namespace cbfpred
