#include "gexlab/driver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gexlab/spec.hpp"

namespace gexlab {

namespace {

double norm(std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return std::sqrt(s);
}

double norm_sq(std::span<const double> z) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
}

void require_dim(int dim) { require(dim >= 1 && dim <= 3, "driver: dimension must be 1, 2 or 3"); }

}  // namespace

namespace drivers {

Driver zero(int dim) {
    require_dim(dim);
    Driver g;
    g.name = "zero";
    g.dim = dim;
    g.fn = [](double, std::span<const double>) { return 0.0; };
    g.lipschitz = 0.0;
    g.positively_homogeneous = true;
    g.analytic_conjugate = [](double, std::span<const double> q) {
        return norm(q) == 0.0 ? Extended(0.0) : Extended::infinity();
    };
    g.step_minimizer = [](double, double) { return 0.0; };
    return g;
}

Driver abs_scaled(double mu, int dim) {
    require(std::isfinite(mu) && mu >= 0.0, "abs driver: mu must be >= 0");
    require_dim(dim);
    Driver g;
    g.name = "abs:" + format_real(mu);
    g.dim = dim;
    g.fn = [mu](double, std::span<const double> z) { return mu * norm(z); };
    g.lipschitz = mu;
    g.positively_homogeneous = true;
    g.analytic_conjugate = [mu](double, std::span<const double> q) {
        return norm(q) <= mu ? Extended(0.0) : Extended::infinity();
    };
    // min over |q| <= mu of q Z sits at the endpoint opposite to Z; Z = 0 keeps P.
    g.step_minimizer = [mu](double, double z) { return z > 0.0 ? -mu : (z < 0.0 ? mu : 0.0); };
    return g;
}

Driver entropic(double gamma, double radius, int dim) {
    require(std::isfinite(gamma) && gamma > 0.0, "entropic driver: gamma must be > 0");
    require(std::isfinite(radius) && radius > 0.0, "entropic driver: radius must be > 0");
    require_dim(dim);
    Driver g;
    g.name = "entropic:" + format_real(gamma) + (radius == 10.0 ? "" : "," + format_real(radius));
    g.dim = dim;
    g.fn = [gamma](double, std::span<const double> z) { return 0.5 * gamma * norm_sq(z); };
    g.lipschitz = gamma * radius;
    g.validity_radius = radius;
    const double q_max = gamma * radius;
    g.analytic_conjugate = [gamma, q_max](double, std::span<const double> q) {
        return norm(q) <= q_max ? Extended(norm_sq(q) / (2.0 * gamma)) : Extended::infinity();
    };
    g.step_minimizer = [gamma, q_max](double, double z) { return std::clamp(-gamma * z, -q_max, q_max); };
    return g;
}

Driver linear(double b) {
    require(std::isfinite(b), "linear driver: b must be finite");
    Driver g;
    g.name = "linear:" + format_real(b);
    g.fn = [b](double, std::span<const double> z) { return b * z[0]; };
    g.lipschitz = std::abs(b);
    g.positively_homogeneous = true;
    g.analytic_conjugate = [b](double, std::span<const double> q) {
        return q[0] == b ? Extended(0.0) : Extended::infinity();
    };
    g.step_minimizer = [b](double, double) { return b; };
    return g;
}

Driver interval(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b), "interval driver: endpoints must be finite");
    if (!(a <= 0.0 && 0.0 <= b))
        fail(ErrorCode::InvalidArgument, "interval driver: need a <= 0 <= b so that g(t,0) = 0");
    Driver g;
    g.name = "interval:" + format_real(a) + "," + format_real(b);
    g.fn = [a, b](double, std::span<const double> z) { return std::max(a * z[0], b * z[0]); };
    g.lipschitz = std::max(-a, b);
    g.positively_homogeneous = true;
    g.analytic_conjugate = [a, b](double, std::span<const double> q) {
        return (a <= q[0] && q[0] <= b) ? Extended(0.0) : Extended::infinity();
    };
    g.step_minimizer = [a, b](double, double z) { return z > 0.0 ? a : (z < 0.0 ? b : 0.0); };
    return g;
}

Driver nonconvex(double gamma, double radius) {
    require(gamma > 0.0 && radius > 0.0, "nonconvex fixture: gamma and radius must be > 0");
    Driver g;
    g.name = "nonconvex:" + format_real(gamma) + (radius == 10.0 ? "" : "," + format_real(radius));
    g.fn = [gamma](double, std::span<const double> z) { return -0.5 * gamma * z[0] * z[0]; };
    g.lipschitz = gamma * radius;
    g.validity_radius = radius;
    g.convex = false;
    return g;
}

Driver shifted(double c) {
    Driver g;
    g.name = "shifted:" + format_real(c);
    g.fn = [c](double, std::span<const double> z) { return z[0] + c; };
    g.lipschitz = 1.0;
    return g;
}

}  // namespace drivers

Driver parse_driver(std::string_view spec) {
    const auto colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    const std::vector<double> args =
        colon == std::string_view::npos ? std::vector<double>{} : parse_spec_numbers(spec.substr(colon + 1), spec);
    auto arity = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi)
            fail(ErrorCode::InvalidArgument, "driver spec '" + std::string(spec) + "': wrong number of parameters");
    };
    if (kind == "zero") { arity(0, 0); return drivers::zero(); }
    if (kind == "abs") { arity(1, 1); return drivers::abs_scaled(args[0]); }
    if (kind == "entropic") {
        arity(1, 2);
        return args.size() == 2 ? drivers::entropic(args[0], args[1]) : drivers::entropic(args[0]);
    }
    if (kind == "linear") { arity(1, 1); return drivers::linear(args[0]); }
    if (kind == "interval") { arity(2, 2); return drivers::interval(args[0], args[1]); }
    if (kind == "nonconvex") {
        arity(1, 2);
        return args.size() == 2 ? drivers::nonconvex(args[0], args[1]) : drivers::nonconvex(args[0]);
    }
    fail(ErrorCode::InvalidArgument, "unknown driver spec '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> random_point(std::mt19937_64& rng, int dim, double radius) {
    std::uniform_real_distribution<double> u(-radius, radius);
    std::vector<double> z(static_cast<std::size_t>(dim));
    for (double& v : z) v = u(rng);
    // Keep samples inside the ball so probes never leave a validity radius.
    const double n = norm(z);
    if (n > radius)
        for (double& v : z) v *= radius / n;
    return z;
}

}  // namespace

ProbeReport probe_zero(const Driver& g, std::span<const double> times) {
    ProbeReport report;
    const std::vector<double> origin(static_cast<std::size_t>(g.dim), 0.0);
    int failures = 0;
    for (double t : times) {
        const double v = std::abs(g(t, origin));
        report.worst = std::max(report.worst, v);
        if (!(v <= 1e-14)) ++failures;
    }
    report.pass = failures == 0;
    if (failures > 0) report.detail = std::to_string(failures) + " sampled times with g(t,0) != 0";
    return report;
}

ProbeReport probe_lipschitz(const Driver& g, double domain_radius, int samples, std::uint64_t seed) {
    require(domain_radius > 0.0, "probe_lipschitz: radius must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, 1.0);
    ProbeReport report;
    double estimate = 0.0;
    for (int s = 0; s < samples; ++s) {
        const auto z0 = random_point(rng, g.dim, domain_radius);
        const auto z1 = random_point(rng, g.dim, domain_radius);
        double d = 0.0;
        for (std::size_t i = 0; i < z0.size(); ++i) d += (z0[i] - z1[i]) * (z0[i] - z1[i]);
        d = std::sqrt(d);
        if (d == 0.0) continue;
        const double t = time(rng);
        estimate = std::max(estimate, std::abs(g(t, z0) - g(t, z1)) / d);
    }
    report.worst = estimate;
    if (!g.lipschitz) {
        report.pass = false;
        report.detail = "no declared Lipschitz constant";
    } else {
        report.pass = estimate <= *g.lipschitz * (1.0 + 1e-9);
        if (!report.pass)
            report.detail = "estimate " + format_real(estimate) + " exceeds declared " +
                            format_real(*g.lipschitz);
    }
    return report;
}

ProbeReport probe_convex(const Driver& g, double domain_radius, int samples, std::uint64_t seed) {
    require(domain_radius > 0.0, "probe_convex: radius must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, 1.0);
    ProbeReport report;
    int failures = 0;
    for (int s = 0; s < samples; ++s) {
        const auto z0 = random_point(rng, g.dim, domain_radius);
        const auto z1 = random_point(rng, g.dim, domain_radius);
        std::vector<double> mid(z0.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (z0[i] + z1[i]);
        const double t = time(rng);
        const double excess = g(t, mid) - 0.5 * (g(t, z0) + g(t, z1));
        report.worst = std::max(report.worst, excess);
        if (excess > 1e-12) ++failures;
    }
    report.pass = failures == 0;
    if (failures > 0) report.detail = std::to_string(failures) + " midpoint violations";
    return report;
}

}  // namespace gexlab
