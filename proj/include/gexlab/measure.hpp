#pragma once

#include "gexlab/lattice.hpp"

namespace gexlab {

/// Equivalent measure Q generated by a predictable control q through the
/// discrete Doleans-Dade exponential M_{k+1} = M_k (1 + q_k dB_k).
///
/// Under Q the step-k up move has probability (1 + q_k sqrt(dt)) / 2, so
/// E_Q[dB_k | F_k] = q_k dt holds exactly and M is an exact P-martingale.
class MeasureChange {
public:
    /// Throws ErrorCode::Domain naming the first node where |q| sqrt(dt) >= 1.
    static MeasureChange from_control(PredictableControl control);

    /// P itself (q = 0).
    static MeasureChange reference(GridPtr grid);

    const TimeGrid& grid() const { return control_.grid(); }
    const GridPtr& grid_ptr() const { return control_.grid_ptr(); }
    const PredictableControl& control() const { return control_; }
    double up_prob(int step, std::size_t index) const { return up_prob_(step, index); }

    /// dQ/dP on F_{t_k} at every node. Recombining trees need a
    /// node-independent control (otherwise the density is path dependent and
    /// ErrorCode::NotRepresentable is raised).
    AdaptedField density() const;

private:
    MeasureChange(PredictableControl control, NodeMap<double> up_prob)
        : control_(std::move(control)), up_prob_(std::move(up_prob)) {}

    PredictableControl control_;
    NodeMap<double> up_prob_;
};

/// Convenience for density_from_control.
inline MeasureChange density_from_control(PredictableControl q) {
    return MeasureChange::from_control(std::move(q));
}

/// Exponential-form density exp(sum q dB - q^2 dt / 2). Not a P-martingale on
/// the lattice: each step loses a factor cosh(q sqrt(dt)) exp(-q^2 dt / 2),
/// roughly 1 - q^4 dt^2 / 12, so E_P[M_N] - 1 = O(dt). For convergence
/// experiments only.
AdaptedField exponential_density(const PredictableControl& q);

/// E_Q[field_t | F_k] for every k in [from_step, t], where t is the field's
/// last step. Layer `from_step` is the requested conditional expectation.
AdaptedField expectation_under(const MeasureChange& measure, const AdaptedField& field,
                               int from_step);

/// E_Q[X_tau | F_k] for every node: X is read where tau has stopped and
/// averaged backward elsewhere. X must cover steps 0..N. Past tau on the
/// recombining lattice X_tau must be a function of the node.
AdaptedField expectation_at_stopping(const MeasureChange& measure, const AdaptedField& x,
                                     const StoppingTime& tau);

/// q1 outside ]]sigma, tau]], q2 inside; the step-k transition lies inside
/// iff sigma <= k < tau.
PredictableControl paste_controls(const PredictableControl& q1, const PredictableControl& q2,
                                  const StoppingTime& sigma, const StoppingTime& tau);

/// q 1_{|q| <= n}.
PredictableControl truncate_control(const PredictableControl& q, double n);

/// q on ]]0, tau]], zero afterwards.
PredictableControl stop_control(const PredictableControl& q, const StoppingTime& tau);

/// q 1_H.
PredictableControl restrict_control(const PredictableControl& q, const PredictableEvent& h);

}  // namespace gexlab
