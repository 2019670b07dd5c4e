#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gexlab/extended.hpp"

namespace gexlab {

/// A BSDE driver g(t, z), independent of y and of omega.
///
/// Metadata mirrors the standing assumptions: a declared Lipschitz constant
/// mu, a convexity flag, and for quadratic drivers a validity radius R on z
/// outside of which the declared constant no longer holds. Consumers that
/// evaluate g on lattice data check |z| <= R.
struct Driver {
    using Fn = std::function<double(double t, std::span<const double> z)>;
    using ConjugateFn = std::function<Extended(double t, std::span<const double> q)>;
    /// argmin over q of q Z + f(t, q) for scalar Z (d = 1).
    using StepMinimizer = std::function<double(double t, double z)>;

    std::string name;
    int dim = 1;
    Fn fn;
    std::optional<double> lipschitz;
    bool convex = true;
    bool positively_homogeneous = false;
    std::optional<double> validity_radius;
    ConjugateFn analytic_conjugate;
    StepMinimizer step_minimizer;

    double operator()(double t, std::span<const double> z) const { return fn(t, z); }
    double operator()(double t, double z) const { return fn(t, std::span<const double>(&z, 1)); }
};

namespace drivers {

Driver zero(int dim = 1);
/// mu |z|: the driver of E^mu.
Driver abs_scaled(double mu, int dim = 1);
/// gamma |z|^2 / 2, declared gamma R-Lipschitz on |z| <= R.
Driver entropic(double gamma, double radius = 10.0, int dim = 1);
Driver linear(double b);
/// max(a z, b z) with a <= 0 <= b: support function of [a, b].
Driver interval(double a, double b);

/// Deliberately malformed fixtures for negative tests.
Driver nonconvex(double gamma, double radius = 10.0);  // -gamma z^2 / 2
Driver shifted(double c);                               // z + c, breaks g(t,0) = 0

}  // namespace drivers

/// "zero", "abs:MU", "entropic:GAMMA[,R]", "linear:B", "interval:A,B", and the
/// fixture "nonconvex:GAMMA".
Driver parse_driver(std::string_view spec);

struct ProbeReport {
    bool pass = true;
    double worst = 0.0;        // largest violation or estimate, per probe
    std::string detail;
};

/// |g(t, 0)| <= 1e-14 at each sampled time.
ProbeReport probe_zero(const Driver& g, std::span<const double> times);

/// Largest sampled difference quotient on the ball of radius `domain_radius`;
/// passes iff it is <= mu (1 + 1e-9). `worst` carries the estimate.
ProbeReport probe_lipschitz(const Driver& g, double domain_radius, int samples, std::uint64_t seed);

/// Midpoint convexity on sampled pairs with slack 1e-12.
ProbeReport probe_convex(const Driver& g, double domain_radius, int samples, std::uint64_t seed);

}  // namespace gexlab
