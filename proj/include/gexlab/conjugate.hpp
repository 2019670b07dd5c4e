#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gexlab/driver.hpp"
#include "gexlab/extended.hpp"
#include "gexlab/report.hpp"

namespace gexlab {

/// A penalty integrand f(t, q) in [0, +inf], e.g. f = g* or its truncations.
struct PenaltyIntegrand {
    using Fn = std::function<Extended(double t, std::span<const double> q)>;

    std::string name;
    int dim = 1;
    Fn fn;
    /// +inf outside the ball of this radius.
    Extended domain_radius = Extended::infinity();
    bool zero_at_origin = true;
    /// False when the effective domain could not be determined (the driver had
    /// neither a Lipschitz constant nor a closed-form conjugate).
    bool domain_detected = true;
    bool time_homogeneous = true;
    /// argmin_q { q Z + f(t, q) } when known in closed form (d = 1).
    Driver::StepMinimizer step_minimizer;

    Extended operator()(double t, std::span<const double> q) const { return fn(t, q); }
    Extended operator()(double t, double q) const { return fn(t, std::span<const double>(&q, 1)); }
};

/// Tensor-grid search for a concave objective: a coarse pass followed by
/// zoom passes onto the cells around the running arg max. Unset fields take
/// dimension-dependent defaults (d = 1: 1025 coarse points, then 6 passes of 65).
struct GridSearchOptions {
    std::optional<int> coarse_points;
    std::optional<int> refine_points;
    std::optional<int> refine_passes;
    /// Half-width of the search box; defaults depend on the caller.
    std::optional<double> box_radius;
};

/// f(t, q) = sup_z { q z - g(t, z) } by grid search over |z| <= box.
///
/// A mu-Lipschitz g has f = +inf outside the ball of radius mu; that rule is
/// applied exactly and the domain radius is set to mu. Inside the ball, a sup
/// that keeps increasing at the edge of the search box is reported as +inf.
/// Without a Lipschitz constant or closed form the domain is not detected and
/// grid values are returned as they are.
PenaltyIntegrand fenchel(const Driver& g, const GridSearchOptions& options = {});

/// The driver's closed-form conjugate; throws if it has none.
PenaltyIntegrand closed_form_conjugate(const Driver& g);

/// Closed form when available, grid otherwise.
PenaltyIntegrand conjugate_of(const Driver& g);

/// 0 on the ball of radius r, +inf outside (r = 0 gives the indicator of {0}).
PenaltyIntegrand ball_indicator(double radius, int dim = 1);
/// |q|^2 / (2 gamma) on all of R^d.
PenaltyIntegrand quadratic_integrand(double gamma, int dim = 1);

/// g(t, z) = sup_q { z q - f(t, q) } over the effective domain of f (or an
/// explicit search box when the domain is unbounded). The result is declared
/// Lipschitz with constant equal to the domain radius.
Driver inverse_fenchel(const PenaltyIntegrand& f, const GridSearchOptions& options = {});

/// f on |q| <= n, +inf outside.
PenaltyIntegrand truncate_integrand(const PenaltyIntegrand& f, double n);

struct FamilyReport {
    bool f_decreasing = true;
    bool g_increasing = true;
    bool inf_matches = true;
    bool pass() const { return f_decreasing && g_increasing && inf_matches; }
    std::vector<std::string> counterexamples;
};

/// Checks on scalar grids that f_n = truncate(f, n) decreases in n, that
/// g_n = (f_n)* increases in n (and stays below (f)* when f has a bounded
/// domain), and that inf_n f_n = f wherever some level covers |q|.
FamilyReport monotone_family_check(const PenaltyIntegrand& f, std::span<const double> levels,
                                   std::span<const double> q_grid, std::span<const double> z_grid,
                                   double t = 0.0);

/// max over z of |g(t, z) - g**(t, z)|, both conjugations done numerically.
/// `z_points` holds dim-tuples back to back.
double biconjugate_gap(const Driver& g, std::span<const double> z_points, double t = 0.0);

struct IntegrandCheck {
    bool nonnegative = true;
    bool zero_at_origin = true;
    bool convex = true;
    double min_value = 0.0;
};

/// Nonnegativity, f(t,0) = 0 and midpoint convexity on a scalar q grid.
IntegrandCheck check_integrand(const PenaltyIntegrand& f, std::span<const double> q_grid, double t = 0.0);

/// Rows for one scalar driver: numeric fenchel against the closed form (when
/// there is one) on a q grid covering the domain and beyond, the biconjugate
/// gap on the validity domain, f >= 0 and f(t, 0) = 0.
Report conjugate_report(const Driver& g, double tolerance = 1e-6);

}  // namespace gexlab
