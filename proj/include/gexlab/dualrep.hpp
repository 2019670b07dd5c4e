#pragma once

#include <span>

#include "gexlab/conjugate.hpp"
#include "gexlab/driver.hpp"
#include "gexlab/lattice.hpp"
#include "gexlab/report.hpp"

namespace gexlab {

struct DualOptions {
    /// Admissible controls satisfy |q| <= (1 - margin) / sqrt(dt).
    double admissibility_margin = 1e-6;
    /// Golden-section tolerance on q when the integrand has no minimizer.
    double golden_tolerance = 1e-10;
    /// Ignore the integrand's closed-form minimizer and always search.
    bool force_search = false;
};

struct DualSolution {
    AdaptedField u;
    PredictableControl argmin_control;
    /// Nodes where the admissibility bound cut the minimizer off.
    PredictableEvent clamped;
    bool any_clamped = false;
};

/// u_k = min over admissible q of { p_q u^+ + (1 - p_q) u^- + f(t_k, q) dt },
/// p_q = (1 + q sqrt(dt)) / 2, from the last layer of xi back to step 0.
DualSolution dual_utility(const PenaltyIntegrand& f, const AdaptedField& xi, const DualOptions& options = {});

/// max over all nodes of |utility(g, xi) - dual_utility(conjugate_of(g), xi).u|.
double duality_gap(const Driver& g, const AdaptedField& xi, const DualOptions& options = {});

/// dual_utility with truncate_integrand(f, n).
DualSolution truncated_utility(const PenaltyIntegrand& f, const AdaptedField& xi, double n,
                               const DualOptions& options = {});

/// Along increasing levels: u^n decreases in n nodewise, u^n <= E_P[xi | F_k],
/// u^0 = E_P[xi | F_k] when 0 is a level, and u^n = u once n reaches the
/// domain radius of f.
Report monotone_utility_check(const PenaltyIntegrand& f, const AdaptedField& xi, std::span<const double> levels,
                              double tolerance = 1e-12, const DualOptions& options = {});

/// The argmin control of the dual recursion.
PredictableControl worst_case_control(const PenaltyIntegrand& f, const AdaptedField& xi,
                                      const DualOptions& options = {});

/// Nodewise first-order optimality (q* +- delta never improves by more than
/// `tolerance`, clamped nodes skipped), E_{Q*}[xi] + c_{0,N}(Q*) = u_0, and
/// re-rooting at step `split` reproducing the full solution.
Report dual_properties(const PenaltyIntegrand& f, const AdaptedField& xi, int split, double delta = 1e-4,
                       double tolerance = 1e-10, const DualOptions& options = {});

}  // namespace gexlab
