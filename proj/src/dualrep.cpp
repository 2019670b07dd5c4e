#include "gexlab/dualrep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gexlab/bsde.hpp"
#include "gexlab/measure.hpp"
#include "gexlab/penalty.hpp"

namespace gexlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// q Z + f(t, q): the one-step objective without the (fixed) mean term.
double tilt(const PenaltyIntegrand& f, double t, double q, double z) {
    const Extended v = f(t, q);
    return v.is_infinite() ? kInf : q * z + v.value();
}

// Golden section for the convex map q -> q Z + f(t, q) on [lo, hi]. Probes at
// +inf narrow towards 0, which always lies in the effective domain.
double golden_search(const PenaltyIntegrand& f, double t, double z, double lo, double hi, double tol) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - ratio * (b - a), d = a + ratio * (b - a);
    double fc = tilt(f, t, c, z), fd = tilt(f, t, d, z);
    while (b - a > tol) {
        bool keep_left;
        if (std::isinf(fc) && std::isinf(fd)) {
            if (c <= 0.0 && 0.0 <= d) {
                a = c;
                b = d;
                c = b - ratio * (b - a);
                d = a + ratio * (b - a);
                fc = tilt(f, t, c, z);
                fd = tilt(f, t, d, z);
                continue;
            }
            keep_left = 0.0 < c;
        } else {
            keep_left = fc <= fd;
        }
        if (keep_left) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = tilt(f, t, c, z);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = tilt(f, t, d, z);
        }
    }
    // The bracket's midpoint, the endpoints and 0 all compete.
    double best = 0.0, best_value = tilt(f, t, 0.0, z);
    for (double q : {0.5 * (a + b), lo, hi}) {
        const double v = tilt(f, t, q, z);
        if (v < best_value) {
            best = q;
            best_value = v;
        }
    }
    return best;
}

}  // namespace

DualSolution dual_utility(const PenaltyIntegrand& f, const AdaptedField& xi, const DualOptions& o) {
    require(f.dim == 1, "dual_utility: the lattice is one-dimensional; integrand '" + f.name + "' is not");
    require(!xi.empty(), "dual_utility: empty claim");
    require(o.admissibility_margin > 0.0 && o.admissibility_margin < 1.0, "dual_utility: bad admissibility margin");
    const GridPtr& grid = xi.grid_ptr();
    const int n = xi.last_step();
    for (double v : xi.at(n))
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "dual_utility: claim must be finite");

    const double q_max = (1.0 - o.admissibility_margin) / grid->sqrt_dt();
    const double radius = f.domain_radius.is_finite() ? std::min(f.domain_radius.value(), q_max) : q_max;
    if (f(0.0, 0.0).is_infinite())
        fail(ErrorCode::Domain, "dual_utility: 0 is outside the domain of '" + f.name + "'; no admissible control");

    DualSolution sol{AdaptedField(grid, 0, n), PredictableControl(grid, 0.0), PredictableEvent(grid, false), false};
    auto last = xi.at(n);
    std::copy(last.begin(), last.end(), sol.u.at(n).begin());
    for (int k = n - 1; k >= 0; --k) {
        const double t = grid->time(k);
        for (std::size_t i = 0; i < grid->node_count(k); ++i) {
            const double up = sol.u(k + 1, grid->up_child(k, i));
            const double down = sol.u(k + 1, grid->down_child(k, i));
            const double z = (up - down) / (2.0 * grid->sqrt_dt());
            double q;
            bool clamped = false;
            if (f.step_minimizer && !o.force_search) {
                const double free = f.step_minimizer(t, z);
                q = std::clamp(free, -q_max, q_max);
                clamped = q != free;
            } else {
                q = golden_search(f, t, z, -radius, radius, o.golden_tolerance);
                clamped = radius == q_max && q_max - std::abs(q) <= o.golden_tolerance;
            }
            const double value = tilt(f, t, q, z);
            if (!std::isfinite(value))
                fail(ErrorCode::Domain, "dual_utility: minimizer left the domain of '" + f.name + "' at node (" +
                                            std::to_string(k) + ", " + std::to_string(i) + ")");
            sol.u(k, i) = 0.5 * (up + down) + value * grid->dt();
            sol.argmin_control(k, i) = q;
            if (clamped) {
                sol.clamped.set(k, i, true);
                sol.any_clamped = true;
            }
        }
    }
    return sol;
}

double duality_gap(const Driver& g, const AdaptedField& xi, const DualOptions& o) {
    const AdaptedField primal = utility(g, xi);
    const DualSolution dual = dual_utility(conjugate_of(g), xi, o);
    const TimeGrid& grid = xi.grid();
    double worst = 0.0;
    for (int k = 0; k <= xi.last_step(); ++k)
        for (std::size_t i = 0; i < grid.node_count(k); ++i)
            worst = std::max(worst, std::abs(primal(k, i) - dual.u(k, i)));
    return worst;
}

DualSolution truncated_utility(const PenaltyIntegrand& f, const AdaptedField& xi, double n, const DualOptions& o) {
    return dual_utility(truncate_integrand(f, n), xi, o);
}

PredictableControl worst_case_control(const PenaltyIntegrand& f, const AdaptedField& xi, const DualOptions& o) {
    return dual_utility(f, xi, o).argmin_control;
}

Report monotone_utility_check(const PenaltyIntegrand& f, const AdaptedField& xi, std::span<const double> levels,
                              double tolerance, const DualOptions& o) {
    require(!levels.empty(), "monotone_utility_check: no levels");
    for (std::size_t l = 1; l < levels.size(); ++l)
        require(levels[l] > levels[l - 1], "monotone_utility_check: levels must increase");
    const TimeGrid& grid = xi.grid();
    const int n = xi.last_step();
    const AdaptedField mean = expectation_under(MeasureChange::reference(xi.grid_ptr()), xi, 0);
    const AdaptedField full = dual_utility(f, xi, o).u;

    double increase = 0.0, above_mean = 0.0, zero_gap = 0.0, saturation_gap = 0.0;
    bool has_zero = false, saturates = false;
    AdaptedField previous;
    for (double level : levels) {
        const AdaptedField u = truncated_utility(f, xi, level, o).u;
        const bool zero = level == 0.0;
        const bool saturated = f.domain_radius.is_finite() && level >= f.domain_radius.value();
        has_zero = has_zero || zero;
        saturates = saturates || saturated;
        for (int k = 0; k <= n; ++k)
            for (std::size_t i = 0; i < grid.node_count(k); ++i) {
                if (!previous.empty()) increase = std::max(increase, u(k, i) - previous(k, i));
                above_mean = std::max(above_mean, u(k, i) - mean(k, i));
                if (zero) zero_gap = std::max(zero_gap, std::abs(u(k, i) - mean(k, i)));
                if (saturated) saturation_gap = std::max(saturation_gap, std::abs(u(k, i) - full(k, i)));
            }
        previous = u;
    }

    Report report;
    const std::string fixture = f.name + " N=" + std::to_string(n);
    report.add({"truncated_utility_decreasing", fixture, increase, 0.0, tolerance, increase <= tolerance,
                "largest nodewise increase between consecutive levels"});
    report.add({"truncated_utility_below_mean", fixture, above_mean, 0.0, tolerance, above_mean <= tolerance,
                "largest u^n - E_P[xi | F_k]"});
    if (has_zero)
        report.add({"truncated_utility_zero_level", fixture, zero_gap, 0.0, tolerance, zero_gap <= tolerance, ""});
    if (saturates)
        report.add({"truncated_utility_saturation", fixture, saturation_gap, 0.0, tolerance,
                    saturation_gap <= tolerance, "levels reaching the domain radius"});
    return report;
}

Report dual_properties(const PenaltyIntegrand& f, const AdaptedField& xi, int split, double delta, double tolerance,
                       const DualOptions& o) {
    const GridPtr& grid = xi.grid_ptr();
    const int n = xi.last_step();
    require(n == grid->steps(), "dual_properties: claim must sit at the horizon");
    require(0 <= split && split <= n, "dual_properties: split step out of range");
    const DualSolution sol = dual_utility(f, xi, o);

    double improvement = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = grid->time(k);
        for (std::size_t i = 0; i < grid->node_count(k); ++i) {
            if (sol.clamped(k, i)) continue;
            const double z = (sol.u(k + 1, grid->up_child(k, i)) - sol.u(k + 1, grid->down_child(k, i))) /
                             (2.0 * grid->sqrt_dt());
            const double q = sol.argmin_control(k, i);
            const double at = tilt(f, t, q, z);
            for (double side : {-delta, delta}) {
                const double other = tilt(f, t, q + side, z);
                if (std::isfinite(other)) improvement = std::max(improvement, (at - other) * grid->dt());
            }
        }
    }

    const MeasureChange worst = MeasureChange::from_control(sol.argmin_control);
    const Extended c = penalty_formula(f, worst, 0, n)(0, 0);
    const double mean = expectation_under(worst, xi, 0)(0, 0);
    const double representation = c.is_finite() ? std::abs(mean + c.value() - sol.u(0, 0)) : kInf;

    AdaptedField middle(grid, split, split);
    std::copy(sol.u.at(split).begin(), sol.u.at(split).end(), middle.at(split).begin());
    const AdaptedField head = dual_utility(f, middle, o).u;
    double rerooted = 0.0;
    for (int k = 0; k <= split; ++k)
        for (std::size_t i = 0; i < grid->node_count(k); ++i)
            rerooted = std::max(rerooted, std::abs(head(k, i) - sol.u(k, i)));

    Report report;
    const std::string fixture = f.name + " N=" + std::to_string(n);
    report.add({"dual_first_order", fixture, improvement, 0.0, tolerance, improvement <= tolerance,
                "best gain from q* +- " + format_real(delta) + " on unclamped nodes"});
    report.add({"dual_representation", fixture, representation, 0.0, tolerance, representation <= tolerance,
                "|E_Q*[xi] + c(Q*) - u_0|"});
    report.add({"dual_time_consistency", fixture + " split=" + std::to_string(split), rerooted, 0.0, 0.0,
                rerooted == 0.0, ""});
    report.add({"dual_admissible", fixture, sol.any_clamped ? 1.0 : 0.0, 0.0, 0.0, true,
                sol.any_clamped ? "admissibility bound active somewhere" : "no clamping"});
    return report;
}

}  // namespace gexlab
