#include "cbfpred/simulator.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cbfpred {

const char* step_status_name(StepStatus s) {
    switch (s) {
        case StepStatus::NominalPassed: return "nominal";
        case StepStatus::Filtered: return "filtered";
        case StepStatus::Infeasible: return "infeasible";
        case StepStatus::SolveFeasible: return "feasible";
        case StepStatus::SolveInfeasible: return "infeasible_solve";
    }
    return "?";
}

namespace {

StepStatus status_from_name(const std::string& s) {
    if (s == "nominal") return StepStatus::NominalPassed;
    if (s == "filtered") return StepStatus::Filtered;
    if (s == "infeasible") return StepStatus::Infeasible;
    if (s == "feasible") return StepStatus::SolveFeasible;
    if (s == "infeasible_solve") return StepStatus::SolveInfeasible;
    throw FormatError("run log: unknown status '" + s + "'");
}

void append_double(std::string& out, double v) {
    if (std::isnan(v)) {
        out += "nan";
        return;
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

double parse_double(const std::string& tok) {
    if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw FormatError("run log: bad number '" + tok + "'");
    return v;
}

constexpr const char* kCsvHeader = "t,x,y,psi,v,zeta,v_nom,zeta_nom,status,h,H_T";

}  // namespace

RunSummary RunLog::summary() const {
    RunSummary s;
    s.steps = records.size();
    s.min_h = fine_min_h;
    s.min_barrier = std::numeric_limits<double>::infinity();
    for (const StepRecord& r : records) {
        switch (r.status) {
            case StepStatus::NominalPassed: ++s.nominal_steps; break;
            case StepStatus::Filtered: ++s.filtered_steps; break;
            case StepStatus::Infeasible:
            case StepStatus::SolveInfeasible: ++s.infeasible_steps; break;
            case StepStatus::SolveFeasible: break;
        }
        s.min_h = std::min(s.min_h, r.h);
        if (!std::isnan(r.barrier)) s.min_barrier = std::min(s.min_barrier, r.barrier);
        const double dv = r.u.v - r.u_nom.v, dz = r.u.zeta - r.u_nom.zeta;
        s.deviation_energy += dv * dv + dz * dz;
    }
    s.collision = s.min_h < 0.0;
    s.aborted = aborted;
    s.final_t = final_t;
    s.final_state = final_state;
    s.mean_solve_seconds = mean_solve_seconds;
    return s;
}

void RunLog::write_csv(const std::string& path) const {
    std::string out;
    out.reserve(records.size() * 96 + 64);
    out += kCsvHeader;
    out += '\n';
    for (const StepRecord& r : records) {
        append_double(out, r.t);
        out += ',';
        append_double(out, r.state.x);
        out += ',';
        append_double(out, r.state.y);
        out += ',';
        append_double(out, r.state.psi);
        out += ',';
        append_double(out, r.u.v);
        out += ',';
        append_double(out, r.u.zeta);
        out += ',';
        append_double(out, r.u_nom.v);
        out += ',';
        append_double(out, r.u_nom.zeta);
        out += ',';
        out += step_status_name(r.status);
        out += ',';
        append_double(out, r.h);
        out += ',';
        append_double(out, r.barrier);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("run log: cannot open '" + path + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("run log: write failed for '" + path + "'");
}

RunLog RunLog::read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("run log: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw FormatError("run log: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw FormatError("run log: unexpected CSV header");
    RunLog log;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                tok.push_back(line.substr(start));
                break;
            }
            tok.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (tok.size() != 11) throw FormatError("run log: wrong column count");
        StepRecord r;
        r.t = parse_double(tok[0]);
        r.state = State(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]));
        r.u = {parse_double(tok[4]), parse_double(tok[5])};
        r.u_nom = {parse_double(tok[6]), parse_double(tok[7])};
        r.status = status_from_name(tok[8]);
        r.h = parse_double(tok[9]);
        r.barrier = parse_double(tok[10]);
        log.records.push_back(r);
    }
    log.fine_min_h = std::numeric_limits<double>::infinity();
    for (const StepRecord& r : log.records) log.fine_min_h = std::min(log.fine_min_h, r.h);
    if (!log.records.empty()) {
        log.final_t = log.records.back().t;
        log.final_state = log.records.back().state;
    }
    return log;
}

Input nominal_line_controller(const State& s, const NominalConfig& n, const InputBounds& b) {
    const double psi_des =
        std::clamp(-std::atan(n.k_y * (s.y - n.y_ref)), -M_PI / 3.0, M_PI / 3.0);
    const double zeta =
        std::clamp(-n.k_psi * wrap_angle(s.psi - psi_des), -b.zeta_max, b.zeta_max);
    return {b.v_max, zeta};
}

namespace {

RunLog run_loop(const ScenarioConfig& cfg, const BarrierOracle& barrier,
                const BarrierField* field, bool hold_last_on_infeasible) {
    RunLog log;
    log.scenario = cfg;
    log.has_scenario = true;

    const int steps = static_cast<int>(std::round(cfg.sim.duration / cfg.sim.control_period));
    const int subs = std::max(1, static_cast<int>(std::round(cfg.sim.control_period /
                                                             cfg.sim.substep)));
    log.records.reserve(static_cast<std::size_t>(steps));

    State s = cfg.sim.initial;
    double t = 0.0;
    Input last_applied{};
    bool have_last = false;

    for (int k = 0; k < steps; ++k) {
        const Input u_nom = nominal_line_controller(s, cfg.nominal, cfg.bounds);
        const FilterOutcome out =
            filter_input(s, u_nom, barrier, cfg.filter, cfg.bounds, cfg.bicycle);
        Input u = out.u;
        StepStatus status = static_cast<StepStatus>(out.status);
        if (out.status == FilterStatus::Infeasible && hold_last_on_infeasible && have_last)
            u = last_applied;

        StepRecord rec;
        rec.t = t;
        rec.state = s;
        rec.u_nom = u_nom;
        rec.u = u;
        rec.status = status;
        rec.h = cfg.obstacles.h(s);
        rec.barrier = std::numeric_limits<double>::quiet_NaN();
        if (field) {
            try {
                rec.barrier = field->interpolate(s).value;
            } catch (const OutOfDomainError&) {
            }
        }
        log.records.push_back(rec);
        log.fine_min_h = std::min(log.fine_min_h, rec.h);

        Pose q{s.x, s.y, s.psi, t};
        integrate_segment(q, u, cfg.bicycle, subs, cfg.sim.control_period, [&](const Pose& qq) {
            log.fine_min_h = std::min(log.fine_min_h, cfg.obstacles.h(qq.x, qq.y));
        });
        s = State(q.x, q.y, q.psi);
        t = cfg.sim.control_period * static_cast<double>(k + 1);
        last_applied = u;
        have_last = true;
    }
    log.final_t = t;
    log.final_state = s;
    return log;
}

}  // namespace

RunLog run_filtered(const ScenarioConfig& cfg, const BarrierField& field) {
    if (!field.has_scenario)
        throw ProvenanceError("run: field has no provenance sidecar; cannot pair with scenario");
    if (scenario_hash(field.scenario) != scenario_hash(cfg))
        throw ProvenanceError("run: field was built from a different scenario (hash mismatch)");
    const FieldBarrier barrier(field);
    return run_loop(cfg, barrier, &field, false);
}

RunLog run_baseline_clearance(const ScenarioConfig& cfg) {
    const ClearanceBarrier barrier(cfg.obstacles);
    return run_loop(cfg, barrier, nullptr, true);
}

ProbeReport probe_cbf_condition(const BarrierField& field, const ScenarioConfig& cfg,
                                int samples, std::uint64_t seed, double eps, double tol) {
    ProbeReport rep;
    rep.eps = eps;
    rep.tol = tol;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    Rng rng(seed);
    const GridSpec& g = field.grid;
    const int max_attempts = samples * 10000;
    int attempts = 0;
    while (rep.samples < samples && attempts < max_attempts) {
        ++attempts;
        const State s(rng.uniform(g.x_min, g.x_max), rng.uniform(g.y_min, g.y_max),
                      rng.uniform(-M_PI, M_PI));
        InterpResult at;
        try {
            at = field.interpolate(s);
        } catch (const OutOfDomainError&) {
            continue;
        }
        if (!at.in_mask || at.value < 0.0) continue;
        ++rep.samples;

        double best_quotient = -std::numeric_limits<double>::infinity();
        for (int iv = 0; iv < 9; ++iv) {
            const double v = cfg.bounds.v_min +
                             (cfg.bounds.v_max - cfg.bounds.v_min) * iv / 8.0;
            for (int iz = 0; iz < 9; ++iz) {
                const double z = -cfg.bounds.zeta_max + 2.0 * cfg.bounds.zeta_max * iz / 8.0;
                const State next = constant_input_arc(s, Input{v, z}, cfg.bicycle, eps);
                double value;
                try {
                    value = field.interpolate(next).value;
                } catch (const OutOfDomainError&) {
                    continue;
                }
                best_quotient = std::max(best_quotient, (value - at.value) / eps);
            }
        }
        const double margin = best_quotient + cfg.filter.alpha(at.value);
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < -tol) ++rep.violations;
    }
    return rep;
}

}  // namespace cbfpred
