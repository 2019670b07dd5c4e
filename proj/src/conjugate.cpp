#include "gexlab/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace gexlab {

namespace {

using Objective = std::function<double(std::span<const double>)>;

struct Resolved {
    int coarse;
    int refine;
    int passes;
};

Resolved fenchel_defaults(int dim, const GridSearchOptions& o) {
    static constexpr Resolved table[] = {{1025, 65, 6}, {257, 17, 6}, {41, 9, 10}};
    const Resolved d = table[dim - 1];
    return {o.coarse_points.value_or(d.coarse), o.refine_points.value_or(d.refine),
            o.refine_passes.value_or(d.passes)};
}

Resolved inverse_defaults(int dim, const GridSearchOptions& o) {
    static constexpr Resolved table[] = {{1025, 33, 8}, {129, 9, 12}, {33, 5, 20}};
    const Resolved d = table[dim - 1];
    return {o.coarse_points.value_or(d.coarse), o.refine_points.value_or(d.refine),
            o.refine_passes.value_or(d.passes)};
}

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Symmetric interpolation so the centre of a symmetric box is exactly 0.
double coordinate(double lo, double hi, int i, int points) {
    if (points == 1) return 0.5 * (lo + hi);
    const int m = points - 1;
    return (lo * (m - i) + hi * i) / m;
}

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct ScanResult {
    double value = -HUGE_VAL;
    std::vector<int> index;
    std::vector<double> arg;
};

// Visits the tensor grid in lexicographic order; ties keep the first point.
template <class Eval>
ScanResult scan(const Box& box, int points, Eval&& eval) {
    const std::size_t dim = box.lo.size();
    ScanResult best;
    std::vector<int> idx(dim, 0);
    std::vector<double> x(dim);
    std::size_t flat = 0;
    while (true) {
        for (std::size_t a = 0; a < dim; ++a) x[a] = coordinate(box.lo[a], box.hi[a], idx[a], points);
        const double v = eval(flat, std::span<const double>(x));
        if (v > best.value || best.index.empty()) {
            best.value = v;
            best.index = idx;
            best.arg = x;
        }
        ++flat;
        std::size_t a = dim;
        while (a > 0) {
            --a;
            if (++idx[a] < points) break;
            idx[a] = 0;
            if (a == 0) return best;
        }
        if (dim == 0) return best;
    }
}

// Whether the objective still increases when walking out of the box at the
// arg max: the sup is then not attained inside and is treated as unbounded.
bool edge_ascent(const Box& box, int points, const ScanResult& best, const Objective& obj) {
    if (points < 2) return false;
    for (std::size_t a = 0; a < box.lo.size(); ++a) {
        const int i = best.index[a];
        if (i != 0 && i != points - 1) continue;
        std::vector<double> inward = best.arg;
        inward[a] = coordinate(box.lo[a], box.hi[a], i == 0 ? 1 : points - 2, points);
        if (best.value > obj(inward)) return true;
    }
    return false;
}

Box zoom(const Box& box, int points, const ScanResult& best) {
    Box next = box;
    for (std::size_t a = 0; a < box.lo.size(); ++a) {
        const int i = best.index[a];
        next.lo[a] = coordinate(box.lo[a], box.hi[a], std::max(i - 1, 0), points);
        next.hi[a] = coordinate(box.lo[a], box.hi[a], std::min(i + 1, points - 1), points);
    }
    return next;
}

struct SearchOutcome {
    double value;
    bool unbounded;
};

SearchOutcome maximize(const Box& start, const Resolved& r, const Objective& obj, bool detect_edge,
                       const std::function<double(std::size_t, std::span<const double>)>& coarse_eval) {
    ScanResult best = coarse_eval
                          ? scan(start, r.coarse, coarse_eval)
                          : scan(start, r.coarse, [&](std::size_t, std::span<const double> x) { return obj(x); });
    if (detect_edge && edge_ascent(start, r.coarse, best, obj)) return {HUGE_VAL, true};
    Box box = zoom(start, r.coarse, best);
    double value = best.value;
    for (int pass = 0; pass < r.passes; ++pass) {
        ScanResult local = scan(box, r.refine, [&](std::size_t, std::span<const double> x) { return obj(x); });
        if (local.value > value) value = local.value;
        box = zoom(box, r.refine, local);
    }
    return {value, false};
}

Box centred_box(int dim, double radius) {
    return {std::vector<double>(static_cast<std::size_t>(dim), -radius),
            std::vector<double>(static_cast<std::size_t>(dim), radius)};
}

void require_arg_dim(int dim, std::span<const double> x, const char* who) {
    if (static_cast<int>(x.size()) != dim)
        fail(ErrorCode::InvalidArgument, std::string(who) + ": argument dimension mismatch");
}

Driver::StepMinimizer ball_minimizer(double r) {
    return [r](double, double z) { return z > 0.0 ? -r : (z < 0.0 ? r : 0.0); };
}

}  // namespace

PenaltyIntegrand fenchel(const Driver& g, const GridSearchOptions& options) {
    const Resolved r = fenchel_defaults(g.dim, options);
    require(r.coarse >= 3 && r.refine >= 3 && r.passes >= 0, "fenchel: grid too small");
    const std::optional<double> mu = g.lipschitz;
    const bool detected = mu.has_value() || static_cast<bool>(g.analytic_conjugate);
    const double scale = g.validity_radius.value_or(std::max(1.0, mu.value_or(1.0)));
    const double box_radius = options.box_radius.value_or(8.0 * scale);
    require(box_radius > 0.0, "fenchel: search box must be nonempty");

    PenaltyIntegrand f;
    f.name = "fenchel(" + g.name + ")";
    f.dim = g.dim;
    f.domain_radius = mu ? Extended(*mu) : Extended::infinity();
    f.domain_detected = detected;
    f.step_minimizer = g.step_minimizer;
    const Box box = centred_box(g.dim, box_radius);
    f.fn = [g, mu, detected, box, r](double t, std::span<const double> q) -> Extended {
        require_arg_dim(g.dim, q, "fenchel");
        if (mu && norm(q) > *mu) return Extended::infinity();
        const Objective obj = [&](std::span<const double> z) { return dot(q, z) - g(t, z); };
        const SearchOutcome out = maximize(box, r, obj, detected, nullptr);
        if (out.unbounded) return Extended::infinity();
        return Extended(out.value + 0.0);
    };
    const std::vector<double> origin(static_cast<std::size_t>(g.dim), 0.0);
    f.zero_at_origin = f(0.0, origin) == Extended(0.0);
    return f;
}

PenaltyIntegrand closed_form_conjugate(const Driver& g) {
    if (!g.analytic_conjugate)
        fail(ErrorCode::InvalidArgument, "closed_form_conjugate: driver '" + g.name + "' has none");
    PenaltyIntegrand f;
    f.name = "conj(" + g.name + ")";
    f.dim = g.dim;
    f.fn = g.analytic_conjugate;
    f.domain_radius = g.lipschitz ? Extended(*g.lipschitz) : Extended::infinity();
    f.step_minimizer = g.step_minimizer;
    const std::vector<double> origin(static_cast<std::size_t>(g.dim), 0.0);
    f.zero_at_origin = f(0.0, origin) == Extended(0.0);
    return f;
}

PenaltyIntegrand conjugate_of(const Driver& g) {
    return g.analytic_conjugate ? closed_form_conjugate(g) : fenchel(g);
}

PenaltyIntegrand ball_indicator(double radius, int dim) {
    require(radius >= 0.0 && std::isfinite(radius), "ball_indicator: radius must be finite and >= 0");
    PenaltyIntegrand f;
    f.name = radius == 0.0 ? "indicator{0}" : "indicator|q|<=" + format_real(radius);
    f.dim = dim;
    f.fn = [radius](double, std::span<const double> q) {
        return norm(q) <= radius ? Extended(0.0) : Extended::infinity();
    };
    f.domain_radius = radius;
    f.step_minimizer = ball_minimizer(radius);
    return f;
}

PenaltyIntegrand quadratic_integrand(double gamma, int dim) {
    require(gamma > 0.0, "quadratic_integrand: gamma must be > 0");
    PenaltyIntegrand f;
    f.name = "q^2/(2*" + format_real(gamma) + ")";
    f.dim = dim;
    f.fn = [gamma](double, std::span<const double> q) { return Extended(dot(q, q) / (2.0 * gamma)); };
    f.step_minimizer = [gamma](double, double z) { return -gamma * z; };
    return f;
}

Driver inverse_fenchel(const PenaltyIntegrand& f, const GridSearchOptions& options) {
    const Resolved r = inverse_defaults(f.dim, options);
    require(r.coarse >= 1 && r.refine >= 3 && r.passes >= 0, "inverse_fenchel: grid too small");
    double radius = 0.0;
    if (options.box_radius) {
        radius = *options.box_radius;
    } else if (f.domain_radius.is_finite()) {
        radius = f.domain_radius.value();
    } else {
        fail(ErrorCode::InvalidArgument,
             "inverse_fenchel: unbounded domain for '" + f.name + "' needs an explicit search box");
    }
    require(radius >= 0.0, "inverse_fenchel: negative search box");
    const Box box = centred_box(f.dim, radius);

    // Coarse table of f, reused for every z when f does not depend on t.
    auto table = std::make_shared<std::vector<double>>();
    {
        bool any_finite = false;
        scan(box, r.coarse, [&](std::size_t, std::span<const double> q) {
            const Extended v = f(0.0, q);
            any_finite = any_finite || v.is_finite();
            table->push_back(v.is_finite() ? v.value() : HUGE_VAL);
            return 0.0;
        });
        if (!any_finite) fail(ErrorCode::Domain, "inverse_fenchel: empty effective domain");
    }
    const bool use_table = f.time_homogeneous;

    Driver g;
    g.name = "inverse(" + f.name + ")";
    g.dim = f.dim;
    g.lipschitz = radius;
    g.convex = true;
    g.fn = [f, box, r, table, use_table](double t, std::span<const double> z) {
        require_arg_dim(f.dim, z, "inverse_fenchel");
        const Objective obj = [&](std::span<const double> q) {
            const Extended v = f(t, q);
            return v.is_finite() ? dot(z, q) - v.value() : -HUGE_VAL;
        };
        std::function<double(std::size_t, std::span<const double>)> coarse;
        if (use_table)
            coarse = [&](std::size_t flat, std::span<const double> q) {
                const double fv = (*table)[flat];
                return fv == HUGE_VAL ? -HUGE_VAL : dot(z, q) - fv;
            };
        return maximize(box, r, obj, false, coarse).value + 0.0;
    };
    return g;
}

PenaltyIntegrand truncate_integrand(const PenaltyIntegrand& f, double n) {
    require(n >= 0.0 && std::isfinite(n), "truncate_integrand: level must be finite and >= 0");
    PenaltyIntegrand out = f;
    out.name = f.name + "|" + format_real(n);
    auto base = f.fn;
    out.fn = [base, n](double t, std::span<const double> q) {
        return norm(q) <= n ? base(t, q) : Extended::infinity();
    };
    out.domain_radius = min(Extended(n), f.domain_radius);
    if (f.step_minimizer && f.dim == 1) {
        // A convex scalar objective restricted to [-n, n] is minimised at the
        // projection of its unconstrained minimiser.
        auto inner = f.step_minimizer;
        out.step_minimizer = [inner, n](double t, double z) { return std::clamp(inner(t, z), -n, n); };
    } else {
        out.step_minimizer = nullptr;
    }
    return out;
}

FamilyReport monotone_family_check(const PenaltyIntegrand& f, std::span<const double> levels,
                                   std::span<const double> q_grid, std::span<const double> z_grid,
                                   double t) {
    require(f.dim == 1, "monotone_family_check: scalar integrands only");
    require(!levels.empty(), "monotone_family_check: no levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        require(levels[i] > levels[i - 1], "monotone_family_check: levels must increase");
    FamilyReport report;
    auto note = [&](std::string text) {
        if (report.counterexamples.size() < 20) report.counterexamples.push_back(std::move(text));
    };

    std::vector<PenaltyIntegrand> family;
    for (double n : levels) family.push_back(truncate_integrand(f, n));

    for (double q : q_grid) {
        const Extended exact = f(t, q);
        Extended running = Extended::infinity();
        for (std::size_t i = 0; i < family.size(); ++i) {
            const Extended v = family[i](t, q);
            if (i > 0 && v > family[i - 1](t, q)) {
                report.f_decreasing = false;
                note("f_n increases at q=" + format_real(q) + " between levels " +
                     format_real(levels[i - 1]) + " and " + format_real(levels[i]));
            }
            if (levels[i] >= std::abs(q) && v != exact) {
                report.inf_matches = false;
                note("f_n != f at q=" + format_real(q) + ", n=" + format_real(levels[i]));
            }
            running = min(running, v);
        }
        if (levels.back() >= std::abs(q) && running != exact) {
            report.inf_matches = false;
            note("inf_n f_n != f at q=" + format_real(q));
        }
    }

    std::vector<Driver> gs;
    for (const auto& fn : family) gs.push_back(inverse_fenchel(fn));
    std::optional<Driver> full;
    if (f.domain_radius.is_finite()) full = inverse_fenchel(f);
    for (double z : z_grid) {
        for (std::size_t i = 1; i < gs.size(); ++i) {
            const double lo = gs[i - 1](t, z);
            const double hi = gs[i](t, z);
            if (lo > hi + 1e-12 * (1.0 + std::abs(hi))) {
                report.g_increasing = false;
                note("g_n decreases at z=" + format_real(z) + " between levels " +
                     format_real(levels[i - 1]) + " and " + format_real(levels[i]));
            }
        }
        if (full) {
            const double top = (*full)(t, z);
            const double last = gs.back()(t, z);
            if (last > top + 1e-12 * (1.0 + std::abs(top))) {
                report.g_increasing = false;
                note("g_n exceeds g at z=" + format_real(z));
            }
        }
    }
    return report;
}

double biconjugate_gap(const Driver& g, std::span<const double> z_points, double t) {
    require(z_points.size() % static_cast<std::size_t>(g.dim) == 0,
            "biconjugate_gap: points must be whole dim-tuples");
    const PenaltyIntegrand f = fenchel(g);
    GridSearchOptions inverse_options;
    if (!f.domain_radius.is_finite())
        inverse_options.box_radius = 8.0 * g.validity_radius.value_or(1.0);
    const Driver gg = inverse_fenchel(f, inverse_options);
    double gap = 0.0;
    const auto dim = static_cast<std::size_t>(g.dim);
    for (std::size_t i = 0; i < z_points.size(); i += dim) {
        const auto z = z_points.subspan(i, dim);
        gap = std::max(gap, std::abs(g(t, z) - gg(t, z)));
    }
    return gap;
}

IntegrandCheck check_integrand(const PenaltyIntegrand& f, std::span<const double> q_grid, double t) {
    require(f.dim == 1, "check_integrand: scalar integrands only");
    IntegrandCheck check;
    check.zero_at_origin = f(t, 0.0) == Extended(0.0);
    double lowest = HUGE_VAL;
    for (double q : q_grid) {
        const Extended v = f(t, q);
        if (v.is_finite()) lowest = std::min(lowest, v.value());
        if (v < Extended(0.0)) check.nonnegative = false;
    }
    check.min_value = lowest == HUGE_VAL ? 0.0 : lowest;
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        for (std::size_t j = i + 1; j < q_grid.size(); ++j) {
            const Extended a = f(t, q_grid[i]);
            const Extended b = f(t, q_grid[j]);
            if (a.is_infinite() || b.is_infinite()) continue;
            const Extended m = f(t, 0.5 * (q_grid[i] + q_grid[j]));
            if (m.is_infinite() || m.value() > 0.5 * (a.value() + b.value()) + 1e-12) check.convex = false;
        }
    }
    return check;
}

Report conjugate_report(const Driver& g, double tolerance) {
    require(g.dim == 1, "conjugate_report: scalar drivers only");
    Report report;
    const std::string fixture = g.name;
    PenaltyIntegrand f;
    try {
        f = fenchel(g);
    } catch (const Error& e) {
        report.add({"fenchel", fixture, NAN, NAN, tolerance, false, e.what()});
        return report;
    }
    const double radius = f.domain_radius.is_finite() ? f.domain_radius.value() : 3.0;
    const double reach = std::max(radius, 1.0);
    // 37 is odd on purpose: the points stay off the dyadic search grid.
    std::vector<double> q_grid;
    for (int i = -37; i <= 37; ++i) q_grid.push_back(1.25 * reach * i / 37.0);
    q_grid.push_back(-radius);
    q_grid.push_back(radius);
    // Minimizers sit on the boundary of the domain (e.g. the single point of
    // an indicator), which a regular grid can miss.
    if (g.step_minimizer)
        for (double z : {-1.0, 1.0}) q_grid.push_back(g.step_minimizer(0.0, z));
    std::sort(q_grid.begin(), q_grid.end());

    if (g.analytic_conjugate) {
        const PenaltyIntegrand exact = closed_form_conjugate(g);
        double worst = 0.0;
        for (double q : q_grid) {
            const Extended a = f(0.0, q), b = exact(0.0, q);
            if (a.is_infinite() || b.is_infinite())
                worst = std::max(worst, a.is_infinite() == b.is_infinite() ? 0.0 : HUGE_VAL);
            else
                worst = std::max(worst, std::abs(a.value() - b.value()));
        }
        report.add({"fenchel_vs_closed_form", fixture, worst, 0.0, tolerance, worst <= tolerance,
                    "q in [-" + format_real(1.25 * reach) + ", " + format_real(1.25 * reach) + "]"});
    }

    const double z_reach = g.validity_radius.value_or(3.0);
    std::vector<double> z_grid;
    for (int i = -19; i <= 19; ++i) z_grid.push_back(z_reach * i / 19.0);
    try {
        const double gap = biconjugate_gap(g, z_grid);
        report.add({"biconjugate_gap", fixture, gap, 0.0, tolerance, gap <= tolerance,
                    "|z| <= " + format_real(z_reach)});
    } catch (const Error& e) {
        report.add({"biconjugate_gap", fixture, NAN, 0.0, tolerance, false, e.what()});
    }

    const IntegrandCheck check = check_integrand(f, q_grid);
    report.add({"integrand_nonnegative", fixture, check.min_value, 0.0, 0.0, check.nonnegative,
                "smallest finite f on the q grid"});
    report.add({"integrand_zero_at_origin", fixture, f(0.0, 0.0).to_double(), 0.0, 0.0, check.zero_at_origin, ""});
    return report;
}

}  // namespace gexlab
