#include "gexlab/gexlab.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "gexlab/bsde.hpp"
#include "gexlab/conjugate.hpp"
#include "gexlab/dualrep.hpp"
#include "gexlab/penalty.hpp"
#include "gexlab/spec.hpp"

#ifndef GEXLAB_VERSION
#define GEXLAB_VERSION "0.0.0"
#endif

using namespace gexlab;

struct gx_grid {
    GridPtr grid;
};

struct gx_driver {
    Driver g;
    std::optional<PenaltyIntegrand> f;  // conjugate_of(g), when it can be formed
    std::string conjugate_error;
};

struct gx_claim {
    AdaptedField xi;
};

struct gx_control {
    PredictableControl q;
};

struct gx_report {
    Report report;
    std::string csv;
    std::string summary;
};

namespace {

thread_local std::string last_error;

gx_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return GX_INVALID_ARGUMENT;
        case ErrorCode::Domain: return GX_DOMAIN;
        case ErrorCode::NotRepresentable: return GX_NOT_REPRESENTABLE;
        case ErrorCode::NotConverged: return GX_NOT_CONVERGED;
    }
    return GX_INTERNAL;
}

template <class Fn>
gx_status guard(Fn&& fn) {
    try {
        fn();
        return GX_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return GX_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return GX_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return GX_INTERNAL;
    }
}

template <class T>
const T& deref(const T* p, const char* what) {
    if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " is NULL");
    return *p;
}

template <class T>
void check_out(T* p) {
    if (!p) fail(ErrorCode::InvalidArgument, "output pointer is NULL");
}

const PenaltyIntegrand& integrand(const gx_driver& d) {
    if (!d.f) fail(ErrorCode::InvalidArgument, "driver '" + d.g.name + "' has no usable conjugate: " + d.conjugate_error);
    return *d.f;
}

SuiteOptions suite_options(const gx_suite_options* o) {
    gx_suite_options d;
    gx_suite_defaults(&d);
    if (!o) o = &d;
    SuiteOptions s;
    s.trials = o->trials;
    s.seed = o->seed;
    s.threads = o->threads;
    s.tolerance = o->tolerance;
    s.stop_density = o->stop_density;
    return s;
}

void emit(Report report, gx_report** out) {
    auto* r = new gx_report;
    r->report = std::move(report);
    *out = r;
}

void add_probe(Report& report, const char* check, const std::string& fixture, const ProbeReport& p) {
    report.add({check, fixture, p.worst, NAN, 0.0, p.pass, p.detail});
}

}  // namespace

extern "C" {

const char* gx_version(void) { return GEXLAB_VERSION; }

const char* gx_last_error(void) { return last_error.c_str(); }

const char* gx_status_name(gx_status status) {
    switch (status) {
        case GX_OK: return "ok";
        case GX_INVALID_ARGUMENT: return "invalid argument";
        case GX_DOMAIN: return "domain error";
        case GX_NOT_REPRESENTABLE: return "not representable";
        case GX_NOT_CONVERGED: return "not converged";
        case GX_INTERNAL: return "internal error";
    }
    return "unknown status";
}

size_t gx_format_real(double value, char* buf, size_t size) {
    const std::string s = format_real(value);
    if (buf && size > 0) {
        const std::size_t n = std::min(s.size(), size - 1);
        std::memcpy(buf, s.data(), n);
        buf[n] = '\0';
    }
    return s.size();
}

// --- grids -----------------------------------------------------------------

gx_status gx_grid_create(double horizon, int steps, int full_binary, gx_grid** out) {
    return guard([&] {
        check_out(out);
        auto grid = TimeGrid::build(horizon, steps, full_binary ? Topology::FullBinary : Topology::Recombining);
        *out = new gx_grid{std::move(grid)};
    });
}

void gx_grid_destroy(gx_grid* grid) { delete grid; }

int gx_grid_steps(const gx_grid* grid) { return grid ? grid->grid->steps() : -1; }

double gx_grid_horizon(const gx_grid* grid) { return grid ? grid->grid->horizon() : NAN; }

int gx_grid_full_binary(const gx_grid* grid) { return grid && grid->grid->full_binary() ? 1 : 0; }

double gx_grid_time(const gx_grid* grid, int step) {
    if (!grid || step < 0 || step > grid->grid->steps()) return NAN;
    return grid->grid->time(step);
}

size_t gx_grid_node_count(const gx_grid* grid, int step) {
    if (!grid || step < 0 || step > grid->grid->steps()) return 0;
    return grid->grid->node_count(step);
}

gx_status gx_grid_level(const gx_grid* grid, int step, size_t index, double* out) {
    return guard([&] {
        check_out(out);
        *out = deref(grid, "grid").grid->brownian_level({step, index});
    });
}

// --- drivers ---------------------------------------------------------------

gx_status gx_driver_parse(const char* spec, gx_driver** out) {
    return guard([&] {
        check_out(out);
        if (!spec) fail(ErrorCode::InvalidArgument, "driver spec is NULL");
        auto d = std::make_unique<gx_driver>();
        d->g = parse_driver(spec);
        try {
            d->f = conjugate_of(d->g);
        } catch (const Error& e) {
            d->conjugate_error = e.what();
        }
        *out = d.release();
    });
}

void gx_driver_destroy(gx_driver* driver) { delete driver; }

const char* gx_driver_name(const gx_driver* driver) { return driver ? driver->g.name.c_str() : ""; }

gx_status gx_driver_eval(const gx_driver* driver, double t, double z, double* out) {
    return guard([&] {
        check_out(out);
        *out = deref(driver, "driver").g(t, z);
    });
}

gx_status gx_driver_set_integrand(gx_driver* driver, const char* spec) {
    return guard([&] {
        if (!driver) fail(ErrorCode::InvalidArgument, "driver is NULL");
        if (!spec) fail(ErrorCode::InvalidArgument, "integrand spec is NULL");
        const std::string_view text(spec);
        const auto colon = text.find(':');
        const std::string_view kind = text.substr(0, colon);
        const std::vector<double> args = colon == std::string_view::npos
                                             ? std::vector<double>{}
                                             : parse_spec_numbers(text.substr(colon + 1), text);
        auto arity = [&](std::size_t n) {
            if (args.size() != n)
                fail(ErrorCode::InvalidArgument, "integrand spec '" + std::string(text) + "': expected " +
                                                     std::to_string(n) + " parameter(s)");
        };
        PenaltyIntegrand f;
        if (kind == "conjugate") { arity(0); f = conjugate_of(driver->g); }
        else if (kind == "fenchel") { arity(0); f = fenchel(driver->g); }
        else if (kind == "ball") { arity(1); f = ball_indicator(args[0]); }
        else if (kind == "quadratic") { arity(1); f = quadratic_integrand(args[0]); }
        else if (kind == "truncated") { arity(1); f = truncate_integrand(conjugate_of(driver->g), args[0]); }
        else fail(ErrorCode::InvalidArgument, "unknown integrand spec '" + std::string(text) + "'");
        driver->f = std::move(f);
        driver->conjugate_error.clear();
    });
}

const char* gx_driver_integrand_name(const gx_driver* driver) {
    return driver && driver->f ? driver->f->name.c_str() : "";
}

gx_status gx_driver_probe(const gx_driver* driver, uint64_t seed, gx_report** out) {
    return guard([&] {
        check_out(out);
        const Driver& g = deref(driver, "driver").g;
        const double radius = g.validity_radius.value_or(3.0);
        const double times[] = {0.0, 0.5, 1.0};
        Report report;
        add_probe(report, "driver_zero", g.name, probe_zero(g, times));
        if (g.lipschitz)
            add_probe(report, "driver_lipschitz", g.name, probe_lipschitz(g, radius, 2000, seed));
        add_probe(report, "driver_convex", g.name, probe_convex(g, radius, 2000, seed));
        emit(std::move(report), out);
    });
}

// --- claims ----------------------------------------------------------------

gx_status gx_claim_from_values(const gx_grid* grid, const double* values, size_t count, gx_claim** out) {
    return guard([&] {
        check_out(out);
        const GridPtr& g = deref(grid, "grid").grid;
        if (!values && count > 0) fail(ErrorCode::InvalidArgument, "values is NULL");
        *out = new gx_claim{terminal_field(g, std::span<const double>(values, count))};
    });
}

gx_status gx_claim_from_payoff(const gx_grid* grid, const char* spec, gx_claim** out) {
    return guard([&] {
        check_out(out);
        const GridPtr& g = deref(grid, "grid").grid;
        if (!spec) fail(ErrorCode::InvalidArgument, "payoff spec is NULL");
        *out = new gx_claim{terminal_field(g, parse_payoff(spec))};
    });
}

void gx_claim_destroy(gx_claim* claim) { delete claim; }

// --- controls --------------------------------------------------------------

gx_status gx_control_constant(const gx_grid* grid, double q, gx_control** out) {
    return guard([&] {
        check_out(out);
        *out = new gx_control{PredictableControl::constant(deref(grid, "grid").grid, q)};
    });
}

gx_status gx_control_from_values(const gx_grid* grid, const double* values, size_t count, gx_control** out) {
    return guard([&] {
        check_out(out);
        const GridPtr& g = deref(grid, "grid").grid;
        NodeMap<double> map(g, 0, g->steps() - 1);
        std::size_t expected = 0;
        for (int k = 0; k < g->steps(); ++k) expected += g->node_count(k);
        if (count != expected)
            fail(ErrorCode::InvalidArgument, "control needs " + std::to_string(expected) + " values, got " +
                                                 std::to_string(count));
        if (!values && count > 0) fail(ErrorCode::InvalidArgument, "values is NULL");
        std::size_t at = 0;
        for (int k = 0; k < g->steps(); ++k)
            for (double& v : map.at(k)) v = values[at++];
        *out = new gx_control{PredictableControl(std::move(map))};
    });
}

void gx_control_destroy(gx_control* control) { delete control; }

gx_status gx_control_values(const gx_control* control, double* out, size_t count) {
    return guard([&] {
        const PredictableControl& q = deref(control, "control").q;
        std::size_t expected = 0;
        for (int k = 0; k < q.grid().steps(); ++k) expected += q.grid().node_count(k);
        if (count != expected)
            fail(ErrorCode::InvalidArgument, "control holds " + std::to_string(expected) + " values");
        check_out(out);
        std::size_t at = 0;
        for (int k = 0; k < q.grid().steps(); ++k)
            for (double v : q.at(k)) out[at++] = v;
    });
}

gx_status gx_control_range(const gx_control* control, double* min, double* max) {
    return guard([&] {
        check_out(min);
        check_out(max);
        const PredictableControl& q = deref(control, "control").q;
        double lo = HUGE_VAL, hi = -HUGE_VAL;
        for (int k = 0; k < q.grid().steps(); ++k)
            for (double v : q.at(k)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        *min = lo;
        *max = hi;
    });
}

// --- utilities -------------------------------------------------------------

gx_status gx_utility(const gx_driver* driver, const gx_claim* claim, double* u0) {
    return guard([&] {
        check_out(u0);
        *u0 = utility(deref(driver, "driver").g, deref(claim, "claim").xi)(0, 0);
    });
}

gx_status gx_dual_utility(const gx_driver* driver, const gx_claim* claim, double* u0, gx_control** argmin,
                          int* any_clamped) {
    return guard([&] {
        check_out(u0);
        DualSolution sol = dual_utility(integrand(deref(driver, "driver")), deref(claim, "claim").xi);
        *u0 = sol.u(0, 0);
        if (any_clamped) *any_clamped = sol.any_clamped ? 1 : 0;
        if (argmin) *argmin = new gx_control{std::move(sol.argmin_control)};
    });
}

gx_status gx_duality_gap(const gx_driver* driver, const gx_claim* claim, double* gap) {
    return guard([&] {
        check_out(gap);
        const gx_driver& d = deref(driver, "driver");
        integrand(d);
        *gap = duality_gap(d.g, deref(claim, "claim").xi);
    });
}

// --- penalty ---------------------------------------------------------------

gx_status gx_penalty_formula(const gx_driver* driver, const gx_control* control, int s, int t, size_t index,
                             double* value, int* infinite) {
    return guard([&] {
        check_out(value);
        check_out(infinite);
        const MeasureChange q = MeasureChange::from_control(deref(control, "control").q);
        const ExtendedField c = penalty_formula(integrand(deref(driver, "driver")), q, s, t);
        if (index >= q.grid().node_count(s)) fail(ErrorCode::InvalidArgument, "node index out of range");
        const Extended v = c(s, index);
        *value = v.to_double();
        *infinite = v.is_infinite() ? 1 : 0;
    });
}

gx_status gx_primal_oracle(const gx_driver* driver, const gx_control* control, uint64_t seed, double* value,
                           int* converged) {
    return guard([&] {
        check_out(value);
        PrimalOracleOptions o;
        o.seed = seed;
        const PrimalOracleResult r = penalty_primal_oracle(
            deref(driver, "driver").g, MeasureChange::from_control(deref(control, "control").q), o);
        *value = r.value;
        if (converged) *converged = r.converged ? 1 : 0;
    });
}

// --- conjugates ------------------------------------------------------------

gx_status gx_conjugate_eval(const gx_driver* driver, int numeric, double t, double q, double* value,
                            int* infinite) {
    return guard([&] {
        check_out(value);
        check_out(infinite);
        const gx_driver& d = deref(driver, "driver");
        const Extended v = numeric ? fenchel(d.g)(t, q) : integrand(d)(t, q);
        *value = v.to_double();
        *infinite = v.is_infinite() ? 1 : 0;
    });
}

gx_status gx_conjugate_report(const gx_driver* driver, double tolerance, gx_report** out) {
    return guard([&] {
        check_out(out);
        emit(conjugate_report(deref(driver, "driver").g, tolerance), out);
    });
}

gx_status gx_family_check(const gx_driver* driver, const double* levels, size_t count, gx_report** out) {
    return guard([&] {
        check_out(out);
        const gx_driver& d = deref(driver, "driver");
        const PenaltyIntegrand& f = integrand(d);
        if (!levels || count == 0) fail(ErrorCode::InvalidArgument, "no levels");
        const std::span<const double> lv(levels, count);
        double reach = lv.back();
        if (f.domain_radius.is_finite()) reach = std::max(reach, f.domain_radius.value());
        std::vector<double> q_grid, z_grid;
        for (int i = -37; i <= 37; ++i) q_grid.push_back(1.25 * reach * i / 37.0);
        for (double n : lv) {
            q_grid.push_back(n);
            q_grid.push_back(-n);
        }
        const double z_reach = d.g.validity_radius.value_or(3.0);
        for (int i = -19; i <= 19; ++i) z_grid.push_back(z_reach * i / 19.0);
        const FamilyReport fr = monotone_family_check(f, lv, q_grid, z_grid);
        const std::string note = fr.counterexamples.empty() ? "" : fr.counterexamples.front();
        const std::string fixture = d.g.name + " levels=" + std::to_string(count);
        Report report;
        report.add({"family_f_decreasing", fixture, NAN, NAN, 0.0, fr.f_decreasing, fr.f_decreasing ? "" : note});
        report.add({"family_g_increasing", fixture, NAN, NAN, 0.0, fr.g_increasing, fr.g_increasing ? "" : note});
        report.add({"family_inf_matches", fixture, NAN, NAN, 0.0, fr.inf_matches, fr.inf_matches ? "" : note});
        emit(std::move(report), out);
    });
}

// --- suites ----------------------------------------------------------------

void gx_suite_defaults(gx_suite_options* options) {
    if (!options) return;
    options->trials = 1000;
    options->seed = 1;
    options->threads = 1;
    options->tolerance = 1e-10;
    options->identity_tolerance = 1e-12;
    options->stop_density = 0.1;
}

gx_status gx_axiom_suite(const gx_driver* driver, int steps, const gx_suite_options* options, gx_report** out) {
    return guard([&] {
        check_out(out);
        const SuiteOptions s = suite_options(options);
        AxiomOptions o;
        o.steps = steps;
        o.trials = s.trials;
        o.seed = s.seed;
        o.threads = s.threads;
        o.tolerance = s.tolerance;
        if (options) o.identity_tolerance = options->identity_tolerance;
        emit(axiom_suite(deref(driver, "driver").g, o), out);
    });
}

gx_status gx_supermartingale_suite(const gx_driver* driver, const gx_control* control,
                                   const gx_suite_options* options, gx_report** out) {
    return guard([&] {
        check_out(out);
        SuiteOptions s = suite_options(options);
        if (options) s.tolerance = options->identity_tolerance;
        emit(supermartingale_suite(integrand(deref(driver, "driver")),
                                   MeasureChange::from_control(deref(control, "control").q), s),
             out);
    });
}

gx_status gx_decomposition_suite(const gx_driver* driver, const gx_control* control,
                                 const gx_suite_options* options, gx_report** out) {
    return guard([&] {
        check_out(out);
        const SuiteOptions s = suite_options(options);
        const double identity = options ? options->identity_tolerance : 1e-12;
        emit(decomposition_suite(deref(driver, "driver").g, MeasureChange::from_control(deref(control, "control").q),
                                 s, identity),
             out);
    });
}

gx_status gx_cocycle_suite(const gx_driver* driver, const gx_control* control, const gx_suite_options* options,
                           gx_report** out) {
    return guard([&] {
        check_out(out);
        SuiteOptions s = suite_options(options);
        if (options) s.tolerance = options->identity_tolerance;
        emit(cocycle_suite(integrand(deref(driver, "driver")), MeasureChange::from_control(deref(control, "control").q),
                           s),
             out);
    });
}

gx_status gx_doob_check(const gx_driver* driver, const gx_control* control, double tolerance, gx_report** out) {
    return guard([&] {
        check_out(out);
        emit(doob_report(integrand(deref(driver, "driver")), MeasureChange::from_control(deref(control, "control").q),
                         tolerance),
             out);
    });
}

gx_status gx_pasting_suite(const gx_driver* driver, const gx_grid* grid, double bound, const gx_suite_options* options,
                           gx_report** out) {
    return guard([&] {
        check_out(out);
        const GridPtr& g = deref(grid, "grid").grid;
        require(bound >= 0.0 && bound * g->sqrt_dt() < 1.0, "pasting bound must keep |q| sqrt(dt) < 1");
        emit(pasting_suite(integrand(deref(driver, "driver")), g, bound, suite_options(options)), out);
    });
}

gx_status gx_truncation_check(const gx_driver* driver, const gx_control* control, const double* levels,
                              size_t level_count, const double* stop_levels, size_t stop_count, gx_report** out) {
    return guard([&] {
        check_out(out);
        if ((!levels && level_count) || (!stop_levels && stop_count))
            fail(ErrorCode::InvalidArgument, "level array is NULL");
        emit(truncation_convergence(integrand(deref(driver, "driver")), deref(control, "control").q,
                                    std::span<const double>(levels, level_count),
                                    std::span<const double>(stop_levels, stop_count)),
             out);
    });
}

gx_status gx_monotone_utility_check(const gx_driver* driver, const gx_claim* claim, const double* levels, size_t count,
                                    double tolerance, gx_report** out) {
    return guard([&] {
        check_out(out);
        if (!levels && count) fail(ErrorCode::InvalidArgument, "level array is NULL");
        emit(monotone_utility_check(integrand(deref(driver, "driver")), deref(claim, "claim").xi,
                                    std::span<const double>(levels, count), tolerance),
             out);
    });
}

gx_status gx_dual_properties(const gx_driver* driver, const gx_claim* claim, int split, double tolerance,
                             gx_report** out) {
    return guard([&] {
        check_out(out);
        emit(dual_properties(integrand(deref(driver, "driver")), deref(claim, "claim").xi, split, 1e-4, tolerance),
             out);
    });
}

gx_status gx_upper_bound_check(const gx_driver* driver, const gx_control* control, double tolerance,
                               gx_report** out) {
    return guard([&] {
        check_out(out);
        emit(upper_bound_check(deref(driver, "driver").g, MeasureChange::from_control(deref(control, "control").q),
                               tolerance),
             out);
    });
}

// --- reports ---------------------------------------------------------------

gx_status gx_report_create(gx_report** out) {
    return guard([&] {
        check_out(out);
        *out = new gx_report;
    });
}

void gx_report_destroy(gx_report* report) { delete report; }

gx_status gx_report_add(gx_report* report, const gx_row* row) {
    return guard([&] {
        if (!report) fail(ErrorCode::InvalidArgument, "report is NULL");
        const gx_row& r = deref(row, "row");
        if (!r.check || !r.fixture) fail(ErrorCode::InvalidArgument, "row needs check and fixture names");
        report->report.add({r.check, r.fixture, r.value, r.reference, r.tolerance, r.pass != 0, r.note ? r.note : ""});
    });
}

gx_status gx_report_merge(gx_report* into, const gx_report* from) {
    return guard([&] {
        if (!into) fail(ErrorCode::InvalidArgument, "report is NULL");
        into->report.merge(deref(from, "report").report);
    });
}

size_t gx_report_size(const gx_report* report) { return report ? report->report.rows().size() : 0; }

gx_status gx_report_row(const gx_report* report, size_t index, gx_row* out) {
    return guard([&] {
        check_out(out);
        const auto& rows = deref(report, "report").report.rows();
        if (index >= rows.size()) fail(ErrorCode::InvalidArgument, "row index out of range");
        const CheckRow& r = rows[index];
        *out = {r.check.c_str(), r.fixture.c_str(), r.value, r.reference, r.tolerance, r.pass ? 1 : 0, r.note.c_str()};
    });
}

int gx_report_passed(const gx_report* report) { return report && report->report.passed() ? 1 : 0; }

const char* gx_report_csv(gx_report* report) {
    if (!report) return "";
    report->csv = report->report.to_csv();
    return report->csv.c_str();
}

const char* gx_report_summary(gx_report* report) {
    if (!report) return "";
    report->summary = report->report.summary();
    return report->summary.c_str();
}

}  // extern "C"
