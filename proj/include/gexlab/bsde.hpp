#pragma once

#include <cstdint>
#include <functional>

#include "gexlab/driver.hpp"
#include "gexlab/lattice.hpp"
#include "gexlab/report.hpp"

namespace gexlab {

/// Explicit backward scheme for -dY = g(t, Z) dt - Z dB:
///   z_k = (y^+ - y^-) / (2 sqrt(dt)),  y_k = (y^+ + y^-) / 2 + g(t_k, z_k) dt.
/// y covers [from, t] and z covers [from, t-1], where t is the terminal's step.
struct BsdeSolution {
    AdaptedField y;
    AdaptedField z;
};

/// Solves from the last layer of `terminal` back to `to_step`. Rejects
/// non-finite terminal values and any |z| beyond the driver's validity
/// radius (ErrorCode::Domain, with node and z in the message).
BsdeSolution solve(const Driver& g, const AdaptedField& terminal, int to_step = 0);

/// Same scheme, frozen where tau has stopped: y = claim there. `claim` must
/// cover steps 0..N; only its values on stopped nodes are read.
BsdeSolution solve_stopped(const Driver& g, const AdaptedField& claim, const StoppingTime& tau);

/// Largest violation of the one-step identity over the solution.
double one_step_residual(const Driver& g, const BsdeSolution& solution);

/// E_g(xi) = Y_0.
double g_expectation(const Driver& g, const AdaptedField& xi);
/// E_g(xi | F_k) for every k.
AdaptedField conditional_g_expectation(const Driver& g, const AdaptedField& xi);
/// u_k(xi) = -E_g(-xi | F_k) for every k.
AdaptedField utility(const Driver& g, const AdaptedField& xi);
/// u_{tau,.}: frozen at tau, i.e. -solve_stopped(g, -claim, tau).
AdaptedField utility_stopped(const Driver& g, const AdaptedField& claim, const StoppingTime& tau);

/// A utility seen as a black box: claim at step t -> values on [0, t].
using UtilityOperator = std::function<AdaptedField(const AdaptedField& claim)>;
UtilityOperator utility_operator(const Driver& g);

/// (1/dt) E_g(z dB_k) at `node`, where E_g(X) = -u(-X) and dB_k is the
/// increment out of that node; returns g(t_k, z) for u built from g.
double recover_driver(const UtilityOperator& u, const GridPtr& grid, double z, NodeId node);

struct AxiomOptions {
    int steps = 8;  // full binary tree
    double horizon = 1.0;
    int trials = 1000;
    std::uint64_t seed = 1;
    double claim_slope = 0.5;
    double tolerance = 1e-10;
    double identity_tolerance = 1e-12;
    int threads = 1;
};

/// Randomised checks of monotonicity (plain and strict), translation
/// invariance, concavity, u(0) = 0, E^mu domination with mu = the declared
/// Lipschitz constant, the local property, time-consistency and, for
/// positively homogeneous drivers, positive homogeneity. One row per axiom.
Report axiom_suite(const Driver& g, const AxiomOptions& options = {});

}  // namespace gexlab
