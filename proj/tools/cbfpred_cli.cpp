// Command-line front end. Talks to the library exclusively through the C API
// so it doubles as a smoke test of the shared-library surface.
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "cbfpred.h"

namespace {

// Exit-code contract: 0 ok, 1 validation fail, 2 config/usage, 3 internal,
// 4 provenance.
int exit_code_for(cbfp_status st) {
    switch (st) {
        case CBFP_OK: return 0;
        case CBFP_ERR_PROVENANCE: return 4;
        case CBFP_ERR_DOMAIN:
        case CBFP_ERR_INFEASIBLE:
        case CBFP_ERR_INTERNAL: return 3;
        default: return 2;
    }
}

void check(cbfp_status st) {
    if (st == CBFP_OK) return;
    std::fprintf(stderr, "error: %s\n", cbfp_last_error());
    std::exit(exit_code_for(st));
}

cbfp_scenario* load_scenario_or_die(const std::string& path) {
    cbfp_scenario* s = nullptr;
    check(cbfp_scenario_load(path.c_str(), &s));
    return s;
}

cbfp_field* load_field_or_die(const std::string& path) {
    cbfp_field* f = nullptr;
    check(cbfp_field_load(path.c_str(), &f));
    return f;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("CBF_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

int parse_mode(std::string text) {
    std::string norm;
    for (char c : text)
        if (c != '-' && c != '_') norm.push_back(static_cast<char>(std::tolower(c)));
    if (norm == "scenario") return CBFP_MODE_SCENARIO;
    if (norm == "sometime" || norm == "freetime") return CBFP_MODE_SOME_TIME;
    if (norm == "terminal") return CBFP_MODE_TERMINAL;
    std::fprintf(stderr, "error: --mode must be scenario, some-time, or terminal\n");
    std::exit(2);
}

const char* bool_name(int v) { return v ? "true" : "false"; }

void print_run_summary(const cbfp_runlog* log) {
    cbfp_run_summary s;
    check(cbfp_runlog_summary(log, &s));
    std::printf(
        "steps=%llu min_h=%.9g min_H=%.9g nominal_steps=%llu filtered_steps=%llu "
        "infeasible_steps=%llu deviation_energy=%.9g collision=%s aborted=%s "
        "final_t=%.9g final_x=%.9g final_y=%.9g mean_solve_s=%.4g\n",
        static_cast<unsigned long long>(s.steps), s.min_h, s.min_barrier,
        static_cast<unsigned long long>(s.nominal_steps),
        static_cast<unsigned long long>(s.filtered_steps),
        static_cast<unsigned long long>(s.infeasible_steps), s.deviation_energy,
        bool_name(s.collision), bool_name(s.aborted), s.final_t, s.final_x, s.final_y,
        s.mean_solve_seconds);
}

int cmd_build(const std::string& scenario_path, const std::string& out_path, int threads,
              const std::string& mode_text) {
    cbfp_scenario* scn = load_scenario_or_die(scenario_path);
    char hash[17];
    check(cbfp_scenario_hash_hex(scn, hash));
    char* name = nullptr;
    check(cbfp_scenario_name(scn, &name));
    std::printf("scenario %s hash %s\n", name, hash);
    cbfp_string_free(name);

    const int mode = parse_mode(mode_text);
    const int n_threads = resolve_threads(threads);
    cbfp_sweep_stats stats;
    cbfp_field* field = nullptr;
    const auto t0 = std::chrono::steady_clock::now();
    check(cbfp_field_build(scn, mode, n_threads, &stats, &field));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    cbfp_field_info info;
    check(cbfp_field_info_get(field, &info));
    const unsigned long long tried = stats.computed + stats.solver_infeasible;
    std::printf("grid %dx%dx%d threads %d\n", info.nx, info.ny, info.npsi, n_threads);
    std::printf("computed %llu outside_mask %llu infeasible_h %llu solver_infeasible %llu\n",
                static_cast<unsigned long long>(stats.computed),
                static_cast<unsigned long long>(stats.outside_mask),
                static_cast<unsigned long long>(stats.infeasible_h),
                static_cast<unsigned long long>(stats.solver_infeasible));
    std::printf("feasible_fraction %.9g\n",
                tried == 0 ? 1.0 : static_cast<double>(stats.computed) / static_cast<double>(tried));
    std::printf("lipschitz x %.6g y %.6g psi %.6g overall %.6g\n", info.lipschitz_x,
                info.lipschitz_y, info.lipschitz_psi, info.lipschitz_overall);
    std::printf("wall_s %.3f\n", wall);

    check(cbfp_field_save(field, out_path.c_str()));
    std::printf("wrote %s\n", out_path.c_str());
    cbfp_field_free(field);
    cbfp_scenario_free(scn);
    return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& field_path,
                 const std::string& out_csv, const std::string& svg_path, bool baseline_h) {
    cbfp_scenario* scn = load_scenario_or_die(scenario_path);
    cbfp_runlog* log = nullptr;
    if (baseline_h) {
        check(cbfp_run_baseline(scn, &log));
    } else {
        if (field_path.empty()) {
            std::fprintf(stderr, "error: --field is required unless --baseline-h is given\n");
            std::exit(2);
        }
        cbfp_field* field = load_field_or_die(field_path);
        check(cbfp_run_filtered(scn, field, &log));
        cbfp_field_free(field);
    }
    check(cbfp_runlog_write_csv(log, out_csv.c_str()));
    if (!svg_path.empty()) check(cbfp_write_svg(scn, log, nullptr, svg_path.c_str()));
    print_run_summary(log);
    cbfp_runlog_free(log);
    cbfp_scenario_free(scn);
    return 0;
}

int cmd_mpc(const std::string& scenario_path, const std::string& field_path,
            const std::string& mode_text, const std::string& out_csv, int steps,
            const std::string& svg_path) {
    cbfp_scenario* scn = load_scenario_or_die(scenario_path);
    cbfp_field* field = field_path.empty() ? nullptr : load_field_or_die(field_path);
    int mode;
    if (mode_text == "maxmin") {
        mode = CBFP_MPC_MAXMIN;
    } else if (mode_text == "cost") {
        mode = CBFP_MPC_COST;
    } else {
        std::fprintf(stderr, "error: --mode must be maxmin or cost\n");
        std::exit(2);
    }
    cbfp_runlog* log = nullptr;
    check(cbfp_run_mpc(scn, mode, field, steps, &log));
    check(cbfp_runlog_write_csv(log, out_csv.c_str()));
    if (!svg_path.empty()) check(cbfp_write_svg(scn, log, nullptr, svg_path.c_str()));
    print_run_summary(log);
    cbfp_runlog_free(log);
    if (field) cbfp_field_free(field);
    cbfp_scenario_free(scn);
    return 0;
}

int cmd_validate(const std::string& scenario_path, const std::string& field_path, bool quick,
                 std::uint64_t seed) {
    cbfp_scenario* scn = load_scenario_or_die(scenario_path);
    cbfp_field* field = load_field_or_die(field_path);
    cbfp_report* report = nullptr;
    check(cbfp_validate(scn, field, quick ? 1 : 0, seed, &report));
    const int n = cbfp_report_count(report);
    for (int i = 0; i < n; ++i) {
        const char* name = nullptr;
        const char* detail = nullptr;
        int pass = 0;
        check(cbfp_report_item(report, i, &name, &pass, &detail));
        std::printf("%s %-24s %s\n", pass ? "PASS" : "FAIL", name, detail);
    }
    const int all = cbfp_report_all_pass(report);
    cbfp_report_free(report);
    cbfp_field_free(field);
    cbfp_scenario_free(scn);
    return all ? 0 : 1;
}

int cmd_probe(const std::string& scenario_path, const std::string& field_path, int samples,
              std::uint64_t seed, double eps, double tol) {
    cbfp_scenario* scn = load_scenario_or_die(scenario_path);
    cbfp_field* field = load_field_or_die(field_path);
    cbfp_probe_report rep;
    check(cbfp_probe(scn, field, samples, seed, eps, tol, &rep));
    std::printf("samples=%d violations=%d worst_margin=%.9g eps=%.9g tol=%.9g\n", rep.samples,
                rep.violations, rep.worst_margin, rep.eps, rep.tol);
    cbfp_field_free(field);
    cbfp_scenario_free(scn);
    return rep.violations == 0 ? 0 : 1;
}

int cmd_plot(const std::string& scenario_path, const std::string& csv_path,
             const std::string& overlay_csv, const std::string& out_path) {
    cbfp_scenario* scn = load_scenario_or_die(scenario_path);
    cbfp_runlog* main_log = nullptr;
    check(cbfp_runlog_read_csv(csv_path.c_str(), &main_log));
    cbfp_runlog* overlay = nullptr;
    if (!overlay_csv.empty()) check(cbfp_runlog_read_csv(overlay_csv.c_str(), &overlay));
    check(cbfp_write_svg(scn, main_log, overlay, out_path.c_str()));
    std::printf("wrote %s\n", out_path.c_str());
    if (overlay) cbfp_runlog_free(overlay);
    cbfp_runlog_free(main_log);
    cbfp_scenario_free(scn);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barrier-field toolkit: build, simulate, validate, plot"};
    app.require_subcommand(1);

    std::string scenario_path, field_path, out_path, svg_path, mode_text, csv_path, overlay_csv;
    int threads = 0;
    int steps = 0;
    int samples = 200;
    std::uint64_t seed = 0;
    double eps = 1e-3, tol = 0.05;
    bool quick = false, baseline_h = false;

    CLI::App* build = app.add_subcommand("build", "Solve the horizon problem over the grid");
    build->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    build->add_option("--out", out_path, "Output field file")->required();
    build->add_option("--threads", threads, "Worker threads (default: CBF_THREADS or all cores)");
    build->add_option("--mode", mode_text, "Membership mode: scenario|some-time|terminal")
        ->default_val("scenario");

    CLI::App* simulate = app.add_subcommand("simulate", "Closed loop with the safety filter");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    simulate->add_option("--field", field_path, "Barrier field file");
    simulate->add_option("--out", out_path, "Output CSV")->required();
    simulate->add_option("--svg", svg_path, "Also render the trajectory");
    simulate->add_flag("--baseline-h", baseline_h, "Filter on raw clearance instead of the field");

    CLI::App* mpc = app.add_subcommand("mpc", "Receding-horizon control");
    mpc->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    mpc->add_option("--field", field_path, "Barrier field file (optional, for logging)");
    mpc->add_option("--mode", mode_text, "maxmin|cost")->required();
    mpc->add_option("--out", out_path, "Output CSV")->required();
    mpc->add_option("--steps", steps, "Override step count");
    mpc->add_option("--svg", svg_path, "Also render the trajectory");

    CLI::App* validate = app.add_subcommand("validate", "Field invariant suite");
    validate->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    validate->add_option("--field", field_path, "Barrier field file")->required();
    validate->add_flag("--quick", quick, "Skip the re-solve-heavy checks");
    validate->add_option("--seed", seed, "Sampling seed")->default_val(0);

    CLI::App* probe = app.add_subcommand("probe", "Barrier-condition spot check");
    probe->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    probe->add_option("--field", field_path, "Barrier field file")->required();
    probe->add_option("--samples", samples, "Sample count")->default_val(200);
    probe->add_option("--seed", seed, "Sampling seed")->default_val(0);
    probe->add_option("--eps", eps, "Forward-difference step [s]")->default_val(1e-3);
    probe->add_option("--tol", tol, "Allowed undershoot [m/s]")->default_val(0.05);

    CLI::App* plot = app.add_subcommand("plot", "Render a logged run as SVG");
    plot->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    plot->add_option("--csv", csv_path, "Run CSV")->required();
    plot->add_option("--overlay-csv", overlay_csv, "Comparison run CSV (drawn in gray)");
    plot->add_option("--out", out_path, "Output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (build->parsed()) return cmd_build(scenario_path, out_path, threads, mode_text);
    if (simulate->parsed())
        return cmd_simulate(scenario_path, field_path, out_path, svg_path, baseline_h);
    if (mpc->parsed()) return cmd_mpc(scenario_path, field_path, mode_text, out_path, steps, svg_path);
    if (validate->parsed()) return cmd_validate(scenario_path, field_path, quick, seed);
    if (probe->parsed()) return cmd_probe(scenario_path, field_path, samples, seed, eps, tol);
    if (plot->parsed()) return cmd_plot(scenario_path, csv_path, overlay_csv, out_path);
    return 2;
}
