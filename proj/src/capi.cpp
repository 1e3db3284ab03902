#include "cbfpred.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "cbfpred/cbf_builder.hpp"
#include "cbfpred/errors.hpp"
#include "cbfpred/mpc.hpp"
#include "cbfpred/simulator.hpp"
#include "cbfpred/svg.hpp"
#include "cbfpred/validate.hpp"

using namespace cbfpred;

struct cbfp_scenario {
    ScenarioConfig cfg;
};
struct cbfp_field {
    BarrierField field;
};
struct cbfp_runlog {
    RunLog log;
};
struct cbfp_report {
    ValidationReport report;
};

namespace {

thread_local std::string g_last_error;

cbfp_status fail(cbfp_status st, const char* what) {
    g_last_error = what ? what : "";
    return st;
}

/// Single exception-to-status mapping used by every entry point.
cbfp_status translate() {
    try {
        throw;
    } catch (const ProvenanceError& e) {
        return fail(CBFP_ERR_PROVENANCE, e.what());
    } catch (const VersionError& e) {
        return fail(CBFP_ERR_VERSION, e.what());
    } catch (const FormatError& e) {
        return fail(CBFP_ERR_FORMAT, e.what());
    } catch (const ConfigError& e) {
        return fail(CBFP_ERR_CONFIG, e.what());
    } catch (const OutOfDomainError& e) {
        return fail(CBFP_ERR_DOMAIN, e.what());
    } catch (const std::domain_error& e) {
        return fail(CBFP_ERR_DOMAIN, e.what());
    } catch (const std::out_of_range& e) {
        return fail(CBFP_ERR_DOMAIN, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(CBFP_ERR_CONFIG, e.what());
    } catch (const std::bad_alloc& e) {
        return fail(CBFP_ERR_INTERNAL, e.what());
    } catch (const std::exception& e) {
        return fail(CBFP_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(CBFP_ERR_INTERNAL, "unknown exception");
    }
}

template <class Fn>
cbfp_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (...) {
        return translate();
    }
}

cbfp_status ok() {
    g_last_error.clear();
    return CBFP_OK;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

bool mode_from_int(int membership_mode, MembershipMode scenario_default, MembershipMode* out) {
    switch (membership_mode) {
        case CBFP_MODE_SCENARIO: *out = scenario_default; return true;
        case CBFP_MODE_SOME_TIME: *out = MembershipMode::SomeTime; return true;
        case CBFP_MODE_TERMINAL: *out = MembershipMode::Terminal; return true;
        default: return false;
    }
}

}  // namespace

extern "C" {

const char* cbfp_version(void) { return "1.0.0"; }

const char* cbfp_last_error(void) { return g_last_error.c_str(); }

void cbfp_string_free(char* s) { delete[] s; }

/* ---- scenario ---- */

cbfp_status cbfp_scenario_load(const char* path, cbfp_scenario** out) {
    if (!path || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_scenario{load_scenario(path)};
        *out = h;
        return ok();
    });
}

cbfp_status cbfp_scenario_parse(const char* json_text, cbfp_scenario** out) {
    if (!json_text || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_scenario{parse_scenario(json_text)};
        *out = h;
        return ok();
    });
}

void cbfp_scenario_free(cbfp_scenario* s) { delete s; }

cbfp_status cbfp_scenario_hash_hex(const cbfp_scenario* s, char out[17]) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        const std::string hex = scenario_hash_hex(s->cfg);
        std::memcpy(out, hex.c_str(), hex.size() + 1);
        return ok();
    });
}

cbfp_status cbfp_scenario_json(const cbfp_scenario* s, char** out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out = dup_string(scenario_to_json(s->cfg, true));
        return ok();
    });
}

cbfp_status cbfp_scenario_name(const cbfp_scenario* s, char** out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out = dup_string(s->cfg.name);
        return ok();
    });
}

cbfp_status cbfp_scenario_turn_radius(const cbfp_scenario* s, double* out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out = s->cfg.turn_radius();
        return ok();
    });
}

cbfp_status cbfp_scenario_tau_bound(const cbfp_scenario* s, double* out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        *out = tau_bound(s->cfg.obstacles, s->cfg.f_set.kind, s->cfg.turn_radius(),
                         s->cfg.f_set.delta, s->cfg.bounds);
        return ok();
    });
}

/* ---- barrier field ---- */

cbfp_status cbfp_field_build(const cbfp_scenario* s, int membership_mode, int threads,
                             cbfp_sweep_stats* stats, cbfp_field** out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    MembershipMode mode;
    if (!mode_from_int(membership_mode, s->cfg.horizon.mode, &mode))
        return fail(CBFP_ERR_INVALID_ARG, "membership_mode must be 0, 1, or 2");
    return guarded([&] {
        SweepStats st;
        auto* h = new cbfp_field{sweep_grid(s->cfg, mode, threads, &st)};
        if (stats) {
            stats->computed = st.computed;
            stats->outside_mask = st.outside_mask;
            stats->infeasible_h = st.infeasible_h;
            stats->solver_infeasible = st.solver_infeasible;
        }
        *out = h;
        return ok();
    });
}

cbfp_status cbfp_field_save(const cbfp_field* f, const char* path) {
    if (!f || !path) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        f->field.save(path);
        return ok();
    });
}

cbfp_status cbfp_field_load(const char* path, cbfp_field** out) {
    if (!path || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_field{BarrierField::load(path)};
        *out = h;
        return ok();
    });
}

void cbfp_field_free(cbfp_field* f) { delete f; }

cbfp_status cbfp_field_info_get(const cbfp_field* f, cbfp_field_info* out) {
    if (!f || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        const BarrierField& b = f->field;
        out->nx = b.grid.nx;
        out->ny = b.grid.ny;
        out->npsi = b.grid.npsi;
        out->computed = b.count(NodeFlag::Computed);
        out->outside_mask = b.count(NodeFlag::OutsideMask);
        out->infeasible = b.count(NodeFlag::Infeasible);
        out->mask_threshold = b.grid.mask_threshold;
        out->delta = b.delta;
        out->horizon_T = b.horizon.T;
        out->membership_mode =
            b.built_mode == MembershipMode::SomeTime ? CBFP_MODE_SOME_TIME : CBFP_MODE_TERMINAL;
        out->has_provenance = b.has_scenario ? 1 : 0;
        const LipschitzReport lip = b.lipschitz();
        out->lipschitz_x = lip.slope_x;
        out->lipschitz_y = lip.slope_y;
        out->lipschitz_psi = lip.slope_psi;
        out->lipschitz_overall = lip.overall;
        return ok();
    });
}

cbfp_status cbfp_field_value(const cbfp_field* f, double x, double y, double psi, double* value,
                             int* in_mask) {
    if (!f || !value) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        const InterpResult r = f->field.interpolate(State(x, y, psi));
        *value = r.value;
        if (in_mask) *in_mask = r.in_mask ? 1 : 0;
        return ok();
    });
}

cbfp_status cbfp_field_gradient(const cbfp_field* f, double x, double y, double psi, double* gx,
                                double* gy, double* gpsi, int* near_boundary) {
    if (!f || !gx || !gy || !gpsi) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        const FieldGradient g = f->field.gradient(State(x, y, psi));
        *gx = g.gx;
        *gy = g.gy;
        *gpsi = g.gpsi;
        if (near_boundary) *near_boundary = g.near_mask_boundary ? 1 : 0;
        return ok();
    });
}

cbfp_status cbfp_field_offset(const cbfp_field* f, double delta_prime, cbfp_field** out) {
    if (!f || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_field{f->field.offset(delta_prime)};
        *out = h;
        return ok();
    });
}

cbfp_status cbfp_field_check_provenance(const cbfp_field* f, const cbfp_scenario* s) {
    if (!f || !s) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&]() -> cbfp_status {
        if (!f->field.has_scenario)
            return fail(CBFP_ERR_PROVENANCE, "field has no provenance sidecar");
        if (scenario_hash(f->field.scenario) != scenario_hash(s->cfg))
            return fail(CBFP_ERR_PROVENANCE,
                        "field was built from a different scenario (hash mismatch)");
        return ok();
    });
}

/* ---- point solve ---- */

cbfp_status cbfp_solve_point(const cbfp_scenario* s, int membership_mode, double x, double y,
                             double psi, cbfp_solve_result* out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    MembershipMode mode;
    if (!mode_from_int(membership_mode, s->cfg.horizon.mode, &mode))
        return fail(CBFP_ERR_INVALID_ARG, "membership_mode must be 0, 1, or 2");
    return guarded([&] {
        const MaxMinSolver solver(s->cfg, mode);
        const MaxMinResult r = solver.solve(State(x, y, psi));
        out->value = r.value;
        out->t_star = r.t_star;
        out->vartheta = r.vartheta_star;
        out->feasible = r.feasible ? 1 : 0;
        out->infeasible_start = r.infeasible_start ? 1 : 0;
        return ok();
    });
}

/* ---- closed-loop runs ---- */

cbfp_status cbfp_run_filtered(const cbfp_scenario* s, const cbfp_field* f, cbfp_runlog** out) {
    if (!s || !f || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_runlog{run_filtered(s->cfg, f->field)};
        *out = h;
        return ok();
    });
}

cbfp_status cbfp_run_baseline(const cbfp_scenario* s, cbfp_runlog** out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_runlog{run_baseline_clearance(s->cfg)};
        *out = h;
        return ok();
    });
}

cbfp_status cbfp_run_mpc(const cbfp_scenario* s, int mpc_mode, const cbfp_field* f, int steps,
                         cbfp_runlog** out) {
    if (!s || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    if (mpc_mode != CBFP_MPC_MAXMIN && mpc_mode != CBFP_MPC_COST)
        return fail(CBFP_ERR_INVALID_ARG, "mpc_mode must be 0 or 1");
    return guarded([&]() -> cbfp_status {
        if (f) {
            const cbfp_status st = cbfp_field_check_provenance(f, s);
            if (st != CBFP_OK) return st;
        }
        const MpcMode mode = mpc_mode == CBFP_MPC_MAXMIN ? MpcMode::MaxMin : MpcMode::GeneralCost;
        MpcRunResult r = run_mpc(s->cfg, mode, f ? &f->field : nullptr, steps);
        auto* h = new cbfp_runlog{std::move(r.log)};
        *out = h;
        return ok();
    });
}

void cbfp_runlog_free(cbfp_runlog* l) { delete l; }

cbfp_status cbfp_runlog_summary(const cbfp_runlog* l, cbfp_run_summary* out) {
    if (!l || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        const RunSummary s = l->log.summary();
        out->steps = s.steps;
        out->nominal_steps = s.nominal_steps;
        out->filtered_steps = s.filtered_steps;
        out->infeasible_steps = s.infeasible_steps;
        out->min_h = s.min_h;
        out->min_barrier = s.min_barrier;
        out->deviation_energy = s.deviation_energy;
        out->collision = s.collision ? 1 : 0;
        out->aborted = s.aborted ? 1 : 0;
        out->final_t = s.final_t;
        out->final_x = s.final_state.x;
        out->final_y = s.final_state.y;
        out->final_psi = s.final_state.psi;
        out->mean_solve_seconds = s.mean_solve_seconds;
        return ok();
    });
}

cbfp_status cbfp_runlog_write_csv(const cbfp_runlog* l, const char* path) {
    if (!l || !path) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        l->log.write_csv(path);
        return ok();
    });
}

cbfp_status cbfp_runlog_read_csv(const char* path, cbfp_runlog** out) {
    if (!path || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_runlog{RunLog::read_csv(path)};
        *out = h;
        return ok();
    });
}

/* ---- rendering ---- */

cbfp_status cbfp_write_svg(const cbfp_scenario* s, const cbfp_runlog* main_log,
                           const cbfp_runlog* overlay, const char* path) {
    if (!s || !path) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        write_trajectory_svg(path, s->cfg, main_log ? &main_log->log : nullptr,
                             overlay ? &overlay->log : nullptr);
        return ok();
    });
}

/* ---- diagnostics ---- */

cbfp_status cbfp_probe(const cbfp_scenario* s, const cbfp_field* f, int samples, uint64_t seed,
                       double eps, double tol, cbfp_probe_report* out) {
    if (!s || !f || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    if (samples < 1) return fail(CBFP_ERR_INVALID_ARG, "samples must be >= 1");
    return guarded([&] {
        const ProbeReport r = probe_cbf_condition(f->field, s->cfg, samples, seed,
                                                  eps > 0.0 ? eps : 1e-3,
                                                  tol > 0.0 ? tol : 0.05);
        out->samples = r.samples;
        out->violations = r.violations;
        out->worst_margin = r.worst_margin;
        out->eps = r.eps;
        out->tol = r.tol;
        return ok();
    });
}

cbfp_status cbfp_validate(const cbfp_scenario* s, const cbfp_field* f, int quick, uint64_t seed,
                          cbfp_report** out) {
    if (!s || !f || !out) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    return guarded([&] {
        auto* h = new cbfp_report{validate_field(s->cfg, f->field, quick != 0, seed)};
        *out = h;
        return ok();
    });
}

void cbfp_report_free(cbfp_report* r) { delete r; }

int cbfp_report_count(const cbfp_report* r) {
    return r ? static_cast<int>(r->report.checks.size()) : 0;
}

int cbfp_report_all_pass(const cbfp_report* r) {
    return r && r->report.all_pass() ? 1 : 0;
}

cbfp_status cbfp_report_item(const cbfp_report* r, int index, const char** name, int* pass,
                             const char** detail) {
    if (!r) return fail(CBFP_ERR_INVALID_ARG, "null argument");
    if (index < 0 || index >= static_cast<int>(r->report.checks.size()))
        return fail(CBFP_ERR_INVALID_ARG, "report index out of range");
    const CheckResult& c = r->report.checks[static_cast<std::size_t>(index)];
    if (name) *name = c.name.c_str();
    if (pass) *pass = c.pass ? 1 : 0;
    if (detail) *detail = c.detail.c_str();
    return ok();
}

}  // extern "C"
