// gexlab: batch runner for pricing, penalty, convergence and property checks.
//
//   gexlab price --config run.json [--out report.csv] [--seed S] [--threads K]
//
// Exit status: 0 when every check passes, 1 when one fails or a computation
// errors out, 2 on a bad command line or configuration.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gexlab/gexlab.h"

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- handles ---------------------------------------------------------------

struct Deleter {
    void operator()(gx_grid* p) const { gx_grid_destroy(p); }
    void operator()(gx_driver* p) const { gx_driver_destroy(p); }
    void operator()(gx_claim* p) const { gx_claim_destroy(p); }
    void operator()(gx_control* p) const { gx_control_destroy(p); }
    void operator()(gx_report* p) const { gx_report_destroy(p); }
};
using Grid = std::unique_ptr<gx_grid, Deleter>;
using DriverHandle = std::unique_ptr<gx_driver, Deleter>;
using Claim = std::unique_ptr<gx_claim, Deleter>;
using Control = std::unique_ptr<gx_control, Deleter>;
using ReportHandle = std::unique_ptr<gx_report, Deleter>;

std::string describe(gx_status s, const std::string& context) {
    return context + ": " + gx_status_name(s) + ": " + gx_last_error();
}

// Failures while building inputs are configuration errors; later ones are not.
void input(gx_status s, const std::string& context) {
    if (s != GX_OK) throw ConfigError(describe(s, context));
}
void run(gx_status s, const std::string& context) {
    if (s != GX_OK) throw RunError(describe(s, context));
}

std::string real(double v) {
    char buf[64];
    gx_format_real(v, buf, sizeof buf);
    return buf;
}

// ---- configuration ---------------------------------------------------------

struct GridSpec {
    double horizon = 1.0;
    int steps = 64;
    bool full_binary = false;
};

struct ControlSpec {
    std::string type = "constant";
    double q = 0.0;
    std::vector<double> times, levels, values;
};

struct Tolerances {
    double duality_gap = 1e-10;
    double oracle = 1e-6;
    double converge = 5e-3;
    double identity = 1e-12;
    double inequality = 1e-10;
};

struct Config {
    std::string driver = "entropic:1";
    std::optional<std::string> integrand;
    GridSpec grid;
    std::optional<std::string> payoff;
    std::vector<double> claim_values;
    std::optional<ControlSpec> control;
    std::vector<std::string> suites;
    std::vector<int> steps_list;
    std::optional<double> reference;
    Tolerances tol;
    std::uint64_t seed = 1;
    int trials = 1000;
    int threads = 1;
    std::vector<double> levels{0.0, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> stop_levels{0.01, 0.02, 0.04, 0.08};
    int axiom_steps = 8;
    int desk_steps = 3;
    int cocycle_trials = 200;
    int pasting_fixtures = 50;
    double pasting_bound = 1.0;
    std::vector<double> conjugate_q;
    std::string output;
};

const std::vector<std::string> kSuites = {"probe",        "axioms",   "conjugate",   "family",
                                          "supermartingale", "cocycle", "doob",        "decomposition",
                                          "upper_bound",  "pasting",  "truncation",  "monotone_utility",
                                          "dual"};

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& item : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
            std::string allowed;
            for (const char* k : keys) allowed += std::string(allowed.empty() ? "" : ", ") + k;
            throw ConfigError("config: unknown key '" + (where.empty() ? "" : where + ".") + item.key() +
                              "' (allowed: " + allowed + ")");
        }
    }
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& key, int min) {
    if (!v.is_number_integer()) throw ConfigError("config: '" + key + "' must be an integer");
    const auto i = v.get<long long>();
    if (i < min || i > std::numeric_limits<int>::max())
        throw ConfigError("config: '" + key + "' must be an integer >= " + std::to_string(min));
    return static_cast<int>(i);
}

std::string text(const json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError("config: '" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], key + "[" + std::to_string(i) + "]"));
    return out;
}

std::uint64_t seed_value(const json& v) {
    if (!v.is_number_unsigned()) throw ConfigError("config: 'seed' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string position(const std::string& source, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < source.size(); ++i) {
        if (source[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string source = buffer.str();

    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        std::string what = e.what();
        const auto colon = what.rfind(": ");
        throw ConfigError(path + ": " + position(source, e.byte) + ": " +
                          (colon == std::string::npos ? what : what.substr(colon + 2)));
    }

    allow_keys(doc, "",
               {"driver", "integrand", "grid", "claim", "control", "suites", "steps_list", "reference", "tolerances",
                "seed", "trials", "threads", "levels", "stop_levels", "axiom_steps", "desk_steps", "cocycle_trials",
                "pasting_fixtures", "pasting_bound", "conjugate", "output"});
    Config c;

    if (doc.contains("driver")) c.driver = text(doc["driver"], "driver");
    if (doc.contains("integrand")) c.integrand = text(doc["integrand"], "integrand");
    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        allow_keys(g, "grid", {"horizon", "steps", "topology"});
        if (g.contains("horizon")) c.grid.horizon = number(g["horizon"], "grid.horizon");
        if (g.contains("steps")) c.grid.steps = integer(g["steps"], "grid.steps", 1);
        if (g.contains("topology")) {
            const std::string t = text(g["topology"], "grid.topology");
            if (t != "recombining" && t != "full_binary")
                throw ConfigError("config: 'grid.topology' must be \"recombining\" or \"full_binary\"");
            c.grid.full_binary = t == "full_binary";
        }
    }
    if (doc.contains("claim")) {
        const json& cl = doc["claim"];
        allow_keys(cl, "claim", {"payoff", "values"});
        if (cl.contains("payoff") == cl.contains("values"))
            throw ConfigError("config: 'claim' needs exactly one of 'payoff' and 'values'");
        if (cl.contains("payoff")) c.payoff = text(cl["payoff"], "claim.payoff");
        else c.claim_values = numbers(cl["values"], "claim.values");
    }
    if (doc.contains("control")) {
        const json& q = doc["control"];
        allow_keys(q, "control", {"type", "q", "times", "levels", "values"});
        ControlSpec spec;
        if (q.contains("type")) spec.type = text(q["type"], "control.type");
        auto need = [&](const char* key) -> const json& {
            if (!q.contains(key))
                throw ConfigError("config: control type '" + spec.type + "' needs 'control." + key + "'");
            return q[key];
        };
        auto forbid = [&](std::initializer_list<const char*> keys) {
            for (const char* k : keys)
                if (q.contains(k))
                    throw ConfigError("config: 'control." + std::string(k) + "' does not apply to type '" +
                                      spec.type + "'");
        };
        if (spec.type == "constant") {
            forbid({"times", "levels", "values"});
            spec.q = number(need("q"), "control.q");
        } else if (spec.type == "piecewise") {
            forbid({"q", "levels"});
            spec.times = numbers(need("times"), "control.times");
            spec.values = numbers(need("values"), "control.values");
            if (spec.times.empty() || spec.times.size() != spec.values.size())
                throw ConfigError("config: 'control.times' and 'control.values' must be non-empty and equally long");
            if (!std::is_sorted(spec.times.begin(), spec.times.end()) ||
                std::adjacent_find(spec.times.begin(), spec.times.end()) != spec.times.end())
                throw ConfigError("config: 'control.times' must be strictly increasing");
        } else if (spec.type == "feedback") {
            forbid({"q", "times"});
            spec.levels = numbers(need("levels"), "control.levels");
            spec.values = numbers(need("values"), "control.values");
            if (spec.levels.empty() || spec.levels.size() != spec.values.size())
                throw ConfigError("config: 'control.levels' and 'control.values' must be non-empty and equally long");
            if (!std::is_sorted(spec.levels.begin(), spec.levels.end()) ||
                std::adjacent_find(spec.levels.begin(), spec.levels.end()) != spec.levels.end())
                throw ConfigError("config: 'control.levels' must be strictly increasing");
        } else if (spec.type == "values") {
            forbid({"q", "times", "levels"});
            spec.values = numbers(need("values"), "control.values");
        } else {
            throw ConfigError("config: 'control.type' must be constant, piecewise, feedback or values");
        }
        c.control = spec;
    }
    if (doc.contains("suites")) {
        const json& s = doc["suites"];
        if (!s.is_array()) throw ConfigError("config: 'suites' must be an array of strings");
        for (std::size_t i = 0; i < s.size(); ++i) {
            const std::string name = text(s[i], "suites[" + std::to_string(i) + "]");
            if (std::find(kSuites.begin(), kSuites.end(), name) == kSuites.end())
                throw ConfigError("config: unknown suite '" + name + "'");
            if (std::find(c.suites.begin(), c.suites.end(), name) != c.suites.end())
                throw ConfigError("config: suite '" + name + "' listed twice");
            c.suites.push_back(name);
        }
    }
    if (doc.contains("steps_list")) {
        const json& s = doc["steps_list"];
        if (!s.is_array()) throw ConfigError("config: 'steps_list' must be an array of integers");
        for (std::size_t i = 0; i < s.size(); ++i)
            c.steps_list.push_back(integer(s[i], "steps_list[" + std::to_string(i) + "]", 1));
    }
    if (doc.contains("reference")) c.reference = number(doc["reference"], "reference");
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        allow_keys(t, "tolerances", {"duality_gap", "oracle", "converge", "identity", "inequality"});
        auto read = [&](const char* key, double& into) {
            if (!t.contains(key)) return;
            into = number(t[key], std::string("tolerances.") + key);
            if (!(into >= 0.0)) throw ConfigError(std::string("config: 'tolerances.") + key + "' must be >= 0");
        };
        read("duality_gap", c.tol.duality_gap);
        read("oracle", c.tol.oracle);
        read("converge", c.tol.converge);
        read("identity", c.tol.identity);
        read("inequality", c.tol.inequality);
    }
    if (doc.contains("seed")) c.seed = seed_value(doc["seed"]);
    if (doc.contains("trials")) c.trials = integer(doc["trials"], "trials", 1);
    if (doc.contains("threads")) c.threads = integer(doc["threads"], "threads", 1);
    if (doc.contains("levels")) c.levels = numbers(doc["levels"], "levels");
    if (doc.contains("stop_levels")) c.stop_levels = numbers(doc["stop_levels"], "stop_levels");
    if (doc.contains("axiom_steps")) c.axiom_steps = integer(doc["axiom_steps"], "axiom_steps", 1);
    if (doc.contains("desk_steps")) c.desk_steps = integer(doc["desk_steps"], "desk_steps", 1);
    if (doc.contains("cocycle_trials")) c.cocycle_trials = integer(doc["cocycle_trials"], "cocycle_trials", 1);
    if (doc.contains("pasting_fixtures"))
        c.pasting_fixtures = integer(doc["pasting_fixtures"], "pasting_fixtures", 1);
    if (doc.contains("pasting_bound")) c.pasting_bound = number(doc["pasting_bound"], "pasting_bound");
    if (doc.contains("conjugate")) {
        const json& q = doc["conjugate"];
        allow_keys(q, "conjugate", {"q"});
        if (q.contains("q")) c.conjugate_q = numbers(q["q"], "conjugate.q");
    }
    if (doc.contains("output")) c.output = text(doc["output"], "output");
    return c;
}

// ---- building inputs -------------------------------------------------------

DriverHandle make_driver(const Config& c) {
    gx_driver* d = nullptr;
    input(gx_driver_parse(c.driver.c_str(), &d), "driver '" + c.driver + "'");
    DriverHandle h(d);
    if (c.integrand) input(gx_driver_set_integrand(d, c.integrand->c_str()), "integrand '" + *c.integrand + "'");
    return h;
}

Grid make_grid(double horizon, int steps, bool full_binary) {
    gx_grid* g = nullptr;
    input(gx_grid_create(horizon, steps, full_binary ? 1 : 0, &g),
          "grid (horizon " + real(horizon) + ", " + std::to_string(steps) + " steps)");
    return Grid(g);
}

Grid main_grid(const Config& c) { return make_grid(c.grid.horizon, c.grid.steps, c.grid.full_binary); }

std::string topology(const gx_grid* g) { return gx_grid_full_binary(g) ? "full_binary" : "recombining"; }

std::string grid_label(const gx_grid* g) {
    return "N=" + std::to_string(gx_grid_steps(g)) + " T=" + real(gx_grid_horizon(g)) + " " + topology(g);
}

Claim make_claim(const Config& c, const gx_grid* grid) {
    gx_claim* h = nullptr;
    if (c.payoff) {
        input(gx_claim_from_payoff(grid, c.payoff->c_str(), &h), "claim payoff '" + *c.payoff + "'");
    } else if (!c.claim_values.empty()) {
        input(gx_claim_from_values(grid, c.claim_values.data(), c.claim_values.size(), &h), "claim values");
    } else {
        input(gx_claim_from_payoff(grid, "bt", &h), "claim payoff 'bt'");
    }
    return Claim(h);
}

std::string claim_label(const Config& c) {
    if (c.payoff) return *c.payoff;
    if (!c.claim_values.empty()) return "values";
    return "bt";
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), at) - x.begin());
    const double w = (at - x[hi - 1]) / (x[hi] - x[hi - 1]);
    return (1.0 - w) * y[hi - 1] + w * y[hi];
}

ControlSpec control_spec(const Config& c) {
    if (c.control) return *c.control;
    ControlSpec fallback;
    fallback.q = 0.4;
    return fallback;
}

Control make_control(const Config& c, const gx_grid* grid) {
    const ControlSpec spec = control_spec(c);
    gx_control* h = nullptr;
    if (spec.type == "constant") {
        input(gx_control_constant(grid, spec.q, &h), "constant control");
        return Control(h);
    }
    if (spec.type == "values") {
        input(gx_control_from_values(grid, spec.values.data(), spec.values.size(), &h),
              "control values on " + grid_label(grid));
        return Control(h);
    }
    std::vector<double> values;
    for (int k = 0; k < gx_grid_steps(grid); ++k) {
        const double t = gx_grid_time(grid, k);
        for (std::size_t i = 0; i < gx_grid_node_count(grid, k); ++i) {
            if (spec.type == "piecewise") {
                const auto j = std::upper_bound(spec.times.begin(), spec.times.end(), t) - spec.times.begin();
                values.push_back(spec.values[j == 0 ? 0 : static_cast<std::size_t>(j - 1)]);
            } else {
                double b = 0.0;
                input(gx_grid_level(grid, k, i, &b), "grid level");
                values.push_back(interpolate(spec.levels, spec.values, b));
            }
        }
    }
    input(gx_control_from_values(grid, values.data(), values.size(), &h), spec.type + " control");
    return Control(h);
}

std::string control_label(const Config& c) {
    const ControlSpec spec = control_spec(c);
    if (spec.type == "constant") return "q=" + real(spec.q);
    return spec.type + " control";
}

gx_suite_options suite_options(const Config& c) {
    gx_suite_options o;
    gx_suite_defaults(&o);
    o.trials = c.trials;
    o.seed = c.seed;
    o.threads = c.threads;
    o.tolerance = c.tol.inequality;
    o.identity_tolerance = c.tol.identity;
    return o;
}

// ---- reports ---------------------------------------------------------------

class Rows {
public:
    Rows() {
        gx_report* r = nullptr;
        run(gx_report_create(&r), "report");
        report_.reset(r);
    }

    void add(const std::string& check, const std::string& fixture, double value, double reference,
             double tolerance, bool pass, const std::string& note = "") {
        const gx_row row{check.c_str(), fixture.c_str(), value, reference, tolerance, pass ? 1 : 0, note.c_str()};
        run(gx_report_add(report_.get(), &row), "report");
    }

    // Takes a report produced by a suite call; a failing call becomes a
    // failing row so one broken suite does not hide the others.
    // `produced` is read only after the call that fills it has run.
    void take(gx_status s, gx_report*& produced, const std::string& suite, const std::string& fixture) {
        ReportHandle owned(produced);
        produced = nullptr;
        if (s != GX_OK) {
            add(suite + "_error", fixture, kNaN, kNaN, 0.0, false, describe(s, suite));
            std::cerr << "error: " << describe(s, suite + " [" + fixture + "]") << '\n';
            return;
        }
        run(gx_report_merge(report_.get(), owned.get()), "report");
    }

    gx_report* get() const { return report_.get(); }

private:
    ReportHandle report_;
};

json json_number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

void write_output(const std::string& path, gx_report* report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunError("cannot write '" + path + "'");
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        json rows = json::array();
        for (std::size_t i = 0; i < gx_report_size(report); ++i) {
            gx_row r;
            run(gx_report_row(report, i, &r), "report");
            rows.push_back({{"check", r.check},
                            {"fixture", r.fixture},
                            {"value", json_number(r.value)},
                            {"reference", json_number(r.reference)},
                            {"tolerance", json_number(r.tolerance)},
                            {"pass", r.pass != 0},
                            {"note", r.note}});
        }
        json doc = {{"rows", rows}, {"pass", gx_report_passed(report) != 0}};
        out << doc.dump(2) << '\n';
    } else {
        out << gx_report_csv(report);
    }
    if (!out) throw RunError("cannot write '" + path + "'");
}

// ---- commands --------------------------------------------------------------

void cmd_price(const Config& c, gx_driver* d, Rows& rows) {
    const Grid grid = main_grid(c);
    const Claim claim = make_claim(c, grid.get());
    const std::string fixture = std::string(gx_driver_name(d)) + " " + claim_label(c) + " " + grid_label(grid.get());
    const bool conjugate = !c.integrand || *c.integrand == "conjugate";

    std::cout << "driver " << gx_driver_name(d) << ", claim " << claim_label(c) << ", " << grid_label(grid.get())
              << '\n';

    double u0 = 0.0;
    run(gx_utility(d, claim.get(), &u0), "utility [" + fixture + "]");
    std::cout << "  u_0 (backward scheme) = " << real(u0) << '\n';
    const bool near = !c.reference || std::abs(u0 - *c.reference) <= c.tol.converge;
    rows.add("utility_u0", fixture, u0, c.reference.value_or(kNaN), c.reference ? c.tol.converge : 0.0, near,
             "backward scheme");

    double dual = 0.0;
    int clamped = 0;
    gx_control* argmin = nullptr;
    run(gx_dual_utility(d, claim.get(), &dual, &argmin, &clamped), "dual utility [" + fixture + "]");
    const Control worst(argmin);
    std::cout << "  u_0 (dual recursion)  = " << real(dual) << '\n';
    if (conjugate) {
        rows.add("dual_u0", fixture, dual, u0, c.tol.duality_gap, std::abs(dual - u0) <= c.tol.duality_gap,
                 "dual recursion");
        double gap = 0.0;
        run(gx_duality_gap(d, claim.get(), &gap), "duality gap [" + fixture + "]");
        std::cout << "  duality gap = " << real(gap) << '\n';
        rows.add("duality_gap", fixture, gap, 0.0, c.tol.duality_gap, gap <= c.tol.duality_gap,
                 "max nodewise |primal - dual|");
    } else {
        rows.add("dual_u0", fixture + " integrand=" + gx_driver_integrand_name(d), dual, kNaN, 0.0, true,
                 "dual recursion with an overridden integrand");
    }

    std::size_t total = 0;
    for (int k = 0; k < gx_grid_steps(grid.get()); ++k) total += gx_grid_node_count(grid.get(), k);
    std::vector<double> q(total);
    run(gx_control_values(worst.get(), q.data(), q.size()), "worst-case control");
    double lo = 0.0, hi = 0.0;
    run(gx_control_range(worst.get(), &lo, &hi), "worst-case control");
    rows.add("worst_case_control", fixture, q[0], kNaN, 0.0, true,
             "root q; range [" + real(lo) + ", " + real(hi) + "]" + (clamped ? "; admissibility bound active" : ""));

    std::cout << "  worst-case control: q at root = " << real(q[0]) << ", range [" << real(lo) << ", " << real(hi)
              << "]" << (clamped ? ", admissibility bound active" : "") << '\n';
}

void cmd_penalty(const Config& c, gx_driver* d, Rows& rows) {
    if (!c.control) throw ConfigError("config: 'penalty' needs a 'control'");
    const Grid grid = main_grid(c);
    const Control control = make_control(c, grid.get());
    const int n = gx_grid_steps(grid.get());
    const std::string fixture = std::string(gx_driver_name(d)) + " " + control_label(c) + " " + grid_label(grid.get());

    double c0 = 0.0;
    int infinite = 0;
    run(gx_penalty_formula(d, control.get(), 0, n, 0, &c0, &infinite), "penalty formula [" + fixture + "]");
    if (c.reference) {
        const bool pass = infinite ? std::isinf(*c.reference) : std::abs(c0 - *c.reference) <= c.tol.identity;
        rows.add("penalty_formula", fixture, c0, *c.reference, c.tol.identity, pass);
    } else {
        rows.add("penalty_formula", fixture, c0, kNaN, 0.0, true, infinite ? "control leaves the domain" : "");
    }
    std::cout << "c_{0," << n << "}(Q) = " << real(c0) << "  [" << fixture << "]\n";

    if (gx_grid_full_binary(grid.get()) && n <= 4) {
        double primal = 0.0;
        int converged = 0;
        run(gx_primal_oracle(d, control.get(), c.seed, &primal, &converged), "primal oracle [" + fixture + "]");
        const bool pass = infinite ? true : std::abs(primal - c0) <= c.tol.oracle;
        rows.add("primal_oracle", fixture, primal, c0, c.tol.oracle, pass,
                 std::string(converged ? "converged" : "not converged") +
                     (infinite ? "; formula infinite, oracle only bounds it below" : ""));
        std::cout << "primal oracle  = " << real(primal) << (converged ? "" : " (not converged)") << '\n';
    }

    gx_suite_options o = suite_options(c);
    o.trials = c.cocycle_trials;
    gx_report* r = nullptr;
    rows.take(gx_cocycle_suite(d, control.get(), &o, &r), r, "cocycle", fixture);

    const gx_status s = gx_doob_check(d, control.get(), c.tol.identity, &r);
    if (s == GX_DOMAIN || s == GX_NOT_REPRESENTABLE) {
        std::cout << "Doob decomposition skipped: " << gx_last_error() << '\n';
    } else {
        rows.take(s, r, "doob", fixture);
    }
}

void cmd_converge(const Config& c, gx_driver* d, Rows& rows) {
    if (c.steps_list.empty()) throw ConfigError("config: 'converge' needs a non-empty 'steps_list'");
    if (!c.reference) throw ConfigError("config: 'converge' needs a 'reference' value");
    if (!c.claim_values.empty()) throw ConfigError("config: 'converge' needs a named payoff, not claim values");
    for (std::size_t i = 1; i < c.steps_list.size(); ++i)
        if (c.steps_list[i] <= c.steps_list[i - 1]) throw ConfigError("config: 'steps_list' must increase");

    std::vector<double> errors;
    std::cout << std::setw(8) << "N" << std::setw(26) << "u_0" << std::setw(26) << "error" << '\n';
    for (std::size_t i = 0; i < c.steps_list.size(); ++i) {
        const int n = c.steps_list[i];
        const Grid grid = make_grid(c.grid.horizon, n, c.grid.full_binary);
        const Claim claim = make_claim(c, grid.get());
        const std::string fixture =
            std::string(gx_driver_name(d)) + " " + claim_label(c) + " " + grid_label(grid.get());
        double u0 = 0.0;
        run(gx_utility(d, claim.get(), &u0), "utility [" + fixture + "]");
        const double error = std::abs(u0 - *c.reference);
        errors.push_back(error);
        const bool last = i + 1 == c.steps_list.size();
        rows.add("converge_error", fixture, error, 0.0, last ? c.tol.converge : 0.0, !last || error <= c.tol.converge,
                 last ? "final N" : "");
        std::cout << std::setw(8) << n << std::setw(26) << real(u0) << std::setw(26) << real(error) << '\n';
    }

    // Errors at the rounding floor wobble; only a rise beyond it counts.
    constexpr double kFloor = 1e-12;
    int inversions = 0;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        if (errors[i] > errors[i - 1] + kFloor) {
            ++inversions;
            std::cerr << "warning: error rose from N=" << c.steps_list[i - 1] << " to N=" << c.steps_list[i] << '\n';
        }
    }
    rows.add("converge_monotone", std::string(gx_driver_name(d)) + " " + claim_label(c),
             static_cast<double>(inversions), 0.0, 1.0, inversions <= 1, "inversions in the error sequence");
}

void cmd_props(const Config& c, gx_driver* d, Rows& rows) {
    const std::vector<std::string> suites = c.suites.empty() ? kSuites : c.suites;
    const gx_suite_options o = suite_options(c);
    const std::string name = gx_driver_name(d);
    const bool needs_control = std::any_of(suites.begin(), suites.end(), [](const std::string& s) {
        return s == "supermartingale" || s == "cocycle" || s == "doob" || s == "decomposition" ||
               s == "upper_bound" || s == "truncation";
    });
    const ControlSpec spec = control_spec(c);
    if (needs_control && spec.type == "values" && c.suites.empty())
        throw ConfigError("config: a 'values' control is bound to one grid; select suites explicitly");

    const Grid grid = main_grid(c);
    const Grid tree = make_grid(c.grid.horizon, c.axiom_steps, true);
    const Grid desk = make_grid(c.grid.horizon, c.desk_steps, true);

    for (const std::string& suite : suites) {
        gx_report* r = nullptr;
        gx_status s = GX_OK;
        std::string fixture = name;
        if (suite == "probe") {
            s = gx_driver_probe(d, c.seed, &r);
        } else if (suite == "axioms") {
            fixture += " " + grid_label(tree.get());
            s = gx_axiom_suite(d, c.axiom_steps, &o, &r);
        } else if (suite == "conjugate") {
            s = gx_conjugate_report(d, c.tol.oracle, &r);
        } else if (suite == "family") {
            s = gx_family_check(d, c.levels.data(), c.levels.size(), &r);
        } else if (suite == "supermartingale" || suite == "cocycle" || suite == "pasting") {
            fixture += " " + grid_label(grid.get());
            const Control q = make_control(c, grid.get());
            if (suite == "supermartingale") {
                s = gx_supermartingale_suite(d, q.get(), &o, &r);
            } else if (suite == "cocycle") {
                gx_suite_options co = o;
                co.trials = c.cocycle_trials;
                s = gx_cocycle_suite(d, q.get(), &co, &r);
            } else {
                gx_suite_options po = o;
                po.trials = c.pasting_fixtures;
                s = gx_pasting_suite(d, grid.get(), c.pasting_bound, &po, &r);
            }
        } else if (suite == "doob" || suite == "truncation") {
            fixture += " " + grid_label(tree.get());
            const Control q = make_control(c, tree.get());
            if (suite == "doob") {
                s = gx_doob_check(d, q.get(), c.tol.identity, &r);
            } else {
                s = gx_truncation_check(d, q.get(), c.levels.data(), c.levels.size(), c.stop_levels.data(),
                                        c.stop_levels.size(), &r);
            }
        } else if (suite == "decomposition" || suite == "upper_bound") {
            fixture += " " + grid_label(desk.get());
            const Control q = make_control(c, desk.get());
            if (suite == "decomposition") s = gx_decomposition_suite(d, q.get(), &o, &r);
            else s = gx_upper_bound_check(d, q.get(), c.tol.oracle, &r);
        } else if (suite == "monotone_utility" || suite == "dual") {
            fixture += " " + grid_label(grid.get());
            const Claim claim = make_claim(c, grid.get());
            if (suite == "monotone_utility") {
                s = gx_monotone_utility_check(d, claim.get(), c.levels.data(), c.levels.size(), c.tol.identity, &r);
            } else {
                s = gx_dual_properties(d, claim.get(), gx_grid_steps(grid.get()) / 2, c.tol.inequality, &r);
            }
        }
        rows.take(s, r, suite, fixture);
    }
}

void cmd_conjugate(const Config& c, gx_driver* d, Rows& rows) {
    std::vector<double> qs = c.conjugate_q;
    if (qs.empty())
        for (int i = -8; i <= 8; ++i) qs.push_back(0.25 * i);
    const std::string name = gx_driver_name(d);
    std::cout << std::setw(12) << "q" << std::setw(26) << "f(q)" << std::setw(26) << "grid search" << '\n';
    for (double q : qs) {
        double closed = 0.0, numeric = 0.0;
        int closed_inf = 0, numeric_inf = 0;
        run(gx_conjugate_eval(d, 0, 0.0, q, &closed, &closed_inf), "conjugate of " + name);
        run(gx_conjugate_eval(d, 1, 0.0, q, &numeric, &numeric_inf), "grid conjugate of " + name);
        const bool pass = closed_inf || numeric_inf ? closed_inf == numeric_inf
                                                    : std::abs(closed - numeric) <= c.tol.oracle;
        rows.add("conjugate_value", name + " q=" + real(q), numeric, closed, c.tol.oracle, pass);
        std::cout << std::setw(12) << real(q) << std::setw(26) << real(closed) << std::setw(26) << real(numeric)
                  << '\n';
    }
    gx_report* r = nullptr;
    rows.take(gx_conjugate_report(d, c.tol.oracle, &r), r, "conjugate", name);
    rows.take(gx_family_check(d, c.levels.data(), c.levels.size(), &r), r, "family", name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gexlab: g-expectation lattice experiments"};
    app.require_subcommand(1);
    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "JSON experiment configuration")->required();
    app.add_option("--out", out_path, "report file (.csv, or .json)");
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    app.fallthrough();

    using Command = void (*)(const Config&, gx_driver*, Rows&);
    const std::vector<std::pair<std::string, Command>> commands = {
        {"price", cmd_price},     {"penalty", cmd_penalty}, {"converge", cmd_converge},
        {"props", cmd_props},     {"conjugate", cmd_conjugate}};
    const std::map<std::string, std::string> help = {
        {"price", "u_0 by the backward scheme and the dual recursion, worst-case control, duality gap"},
        {"penalty", "penalty formula, primal oracle, cocycle identity and Doob decomposition"},
        {"converge", "error against a reference value over a list of step counts"},
        {"props", "axiom, penalty, truncation and conjugate property suites"},
        {"conjugate", "penalty integrand values, biconjugate and truncated family checks"}};
    for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string command;
    Command fn = nullptr;
    for (const auto& [name, f] : commands)
        if (app.got_subcommand(name)) {
            command = name;
            fn = f;
        }

    try {
        Config config = load_config(config_path);
        if (seed) config.seed = *seed;
        if (threads) config.threads = *threads;
        const DriverHandle driver = make_driver(config);

        Rows rows;
        // Threads are left out so reports stay byte-identical across -j.
        rows.add("environment",
                 "gexlab " + std::string(gx_version()) + " command=" + command + " seed=" + std::to_string(config.seed),
                 kNaN, kNaN, 0.0, true);
        fn(config, driver.get(), rows);

        std::cout << '\n' << gx_report_summary(rows.get());
        const std::string path = out_path.empty() ? config.output : out_path;
        if (!path.empty()) write_output(path, rows.get());
        return gx_report_passed(rows.get()) ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const RunError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
