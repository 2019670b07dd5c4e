#pragma once

#include <cstdint>
#include <span>

#include "gexlab/conjugate.hpp"
#include "gexlab/driver.hpp"
#include "gexlab/lattice.hpp"
#include "gexlab/measure.hpp"
#include "gexlab/report.hpp"

namespace gexlab {

using ExtendedField = NodeMap<Extended>;

/// c_{k,t}(Q) = E_Q[sum_{j=k}^{t-1} f(t_j, q_j) dt | F_k] for k in [s, t].
/// Layer s is the requested penalty; layer t is identically zero. A node with
/// f = +inf makes every ancestor in the window +inf and nothing else.
ExtendedField penalty_formula(const PenaltyIntegrand& f, const MeasureChange& q, int s, int t);

/// Penalty between stopping times: the field W with W = 0 where tau has
/// stopped and W_k = 1{sigma <= k} f(t_k, q_k) dt + E_Q[W_{k+1}] elsewhere.
/// At a node where sigma has just stopped it is c_{sigma,tau}(Q); before
/// sigma it is E_Q[c_{sigma,tau}(Q) | F_k].
ExtendedField penalty_between(const PenaltyIntegrand& f, const MeasureChange& q,
                              const StoppingTime& sigma, const StoppingTime& tau);

struct PrimalOracleOptions {
    double box = 10.0;          // xi in [-box, box]^(2^N)
    double start_scale = 1.0;   // random starts drawn from [-start_scale, start_scale]
    int restarts = 5;           // in addition to the origin
    std::uint64_t seed = 1;
    double tolerance = 1e-9;    // stop once an accepted step improves by less
    int max_iterations = 20000;
};

struct PrimalOracleResult {
    double value = 0.0;
    AdaptedField claim;  // maximizer at step N
    bool converged = false;
    int iterations = 0;
};

/// sup over xi in the box of E_Q[-xi] + u_0(xi) by projected supergradient
/// ascent with step halving. Full binary grids with N <= 4 only. A restart
/// that never meets the tolerance leaves converged = false; the best value
/// found is still returned.
PrimalOracleResult penalty_primal_oracle(const Driver& g, const MeasureChange& q,
                                         const PrimalOracleOptions& options = {});

/// max |c_{sigma,upsilon} - c_{sigma,tau} - E_Q[c_{tau,upsilon} | F_sigma]| over
/// the nodes where sigma takes its value. +inf when one side is infinite and
/// the other is not.
double cocycle_residual(const PenaltyIntegrand& f, const MeasureChange& q, const StoppingTime& sigma,
                        const StoppingTime& tau, const StoppingTime& upsilon);

/// A_k = sum_{j<k} f(t_j, q_j) dt. `increments` holds dA over (k, k+1] at the
/// step-k node; `a` holds A at every node and is only available where A is
/// representable (full binary, or a node-independent control).
struct IncreasingProcess {
    ExtendedField increments;
    AdaptedField a;
};

IncreasingProcess increasing_process(const PenaltyIntegrand& f, const PredictableControl& q);

struct DoobDecomposition {
    IncreasingProcess process;
    /// max |c_k(Q) - E_Q[A_N - A_k | F_k]|.
    double residual = 0.0;
    bool starts_at_zero = true;
    bool nondecreasing = true;
};

/// Throws ErrorCode::Domain when the penalty is infinite somewhere and
/// ErrorCode::NotRepresentable when A is path dependent on a recombining grid.
DoobDecomposition doob_decomposition(const PenaltyIntegrand& f, const MeasureChange& q);

/// Increment-level checks for the pasted control (q1 outside ]]sigma, tau]],
/// q2 inside) and for the restriction q 1_H with H = {|q| <= n}.
Report pasting_check(const PenaltyIntegrand& f, const PredictableControl& q1, const PredictableControl& q2,
                     const StoppingTime& sigma, const StoppingTime& tau, double n);

/// c_{0,N}(Q^{H^n}) per level, its monotonicity in n and exact saturation once
/// n >= max|q|; then c_{0,N}(Q^{tau^n}) for tau^n = first time A >= n, its
/// monotonicity and the bound A_{tau^n} <= n + max increment.
Report truncation_convergence(const PenaltyIntegrand& f, const PredictableControl& q,
                              std::span<const double> levels, std::span<const double> stop_levels);

struct SuiteOptions {
    int trials = 1000;
    std::uint64_t seed = 1;
    double stop_density = 0.1;  // per-node probability in random stopping times
    double tolerance = 1e-12;
    int threads = 1;
};

/// Rows for the Doob decomposition: identity residual, A_0 = 0, monotone A.
Report doob_report(const PenaltyIntegrand& f, const MeasureChange& q, double tolerance = 1e-12);

/// Random triples sigma <= tau <= upsilon; one row with the worst residual.
Report cocycle_suite(const PenaltyIntegrand& f, const MeasureChange& q, const SuiteOptions& options = {});

/// pasting_check over random fixtures: controls uniform in [-bound, bound],
/// random sigma <= tau, restriction level drawn in [0, bound].
Report pasting_suite(const PenaltyIntegrand& f, const GridPtr& grid, double bound, const SuiteOptions& options = {});

/// Random pairs sigma <= tau: c_{sigma,N} >= E_Q[c_{tau,N} | F_sigma] nodewise,
/// and the stopped family {c_{tau,N}} stays bounded by sup c.
Report supermartingale_suite(const PenaltyIntegrand& f, const MeasureChange& q, const SuiteOptions& options = {});

/// On a full binary grid with N <= 4, takes the primal oracle's claim xi with
/// gap eps = c_{0,N} - (E_Q[-xi] + u_0(xi)) and checks over random sigma <= tau:
///   E_Q[c_{sigma,tau}] <= E_Q[u_sigma(xi) - u_tau(xi)] + eps,
///   u_{tau,N}(xi - u_tau(xi)) = 0 and u_{sigma,tau}(u_tau(xi) - u_sigma(xi)) = 0.
/// `tolerance` applies to the inequality, `identity_tolerance` to the two
/// identities.
Report decomposition_suite(const Driver& g, const MeasureChange& q, const SuiteOptions& options = {},
                           double identity_tolerance = 1e-12, const PrimalOracleOptions& oracle = {});

/// Primal oracle <= formula always; equality within `tolerance` when the
/// formula is finite. Full binary grids with N <= 4.
Report upper_bound_check(const Driver& g, const MeasureChange& q, double tolerance = 1e-6,
                         const PrimalOracleOptions& oracle = {});

}  // namespace gexlab
