#include "gexlab/measure.hpp"

#include <cmath>
#include <string>

namespace gexlab {

namespace {

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* where) {
    require(&a == &b, std::string(where) + ": objects live on different grids");
}

std::string node_text(int step, std::size_t index) {
    return "(" + std::to_string(step) + ", " + std::to_string(index) + ")";
}

}  // namespace

MeasureChange MeasureChange::from_control(PredictableControl control) {
    const TimeGrid& grid = control.grid();
    NodeMap<double> up(control.grid_ptr(), 0, grid.steps() - 1);
    for (int k = 0; k < grid.steps(); ++k) {
        auto q = control.at(k);
        auto p = up.at(k);
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double x = q[i] * grid.sqrt_dt();
            if (!(std::abs(x) < 1.0))
                fail(ErrorCode::Domain, "density_from_control: |q| sqrt(dt) = " +
                                            std::to_string(std::abs(x)) + " >= 1 at node " +
                                            node_text(k, i) + " (q = " + std::to_string(q[i]) +
                                            "); measure not equivalent to P");
            p[i] = 0.5 * (1.0 + x);
        }
    }
    return MeasureChange(std::move(control), std::move(up));
}

MeasureChange MeasureChange::reference(GridPtr grid) {
    return from_control(PredictableControl(std::move(grid), 0.0));
}

AdaptedField MeasureChange::density() const {
    const TimeGrid& g = grid();
    AdaptedField m(grid_ptr(), 0, g.steps());
    m(0, 0) = 1.0;
    if (g.full_binary()) {
        for (int k = 0; k < g.steps(); ++k) {
            for (std::size_t i = 0; i < g.node_count(k); ++i) {
                const double x = control_(k, i) * g.sqrt_dt();
                m(k + 1, g.up_child(k, i)) = m(k, i) * (1.0 + x);
                m(k + 1, g.down_child(k, i)) = m(k, i) * (1.0 - x);
            }
        }
        return m;
    }
    if (!control_.node_independent())
        fail(ErrorCode::NotRepresentable,
             "density: state-dependent control has a path-dependent density on a recombining tree");
    // Node (k, j) is reached by paths with j ups; with a step-only control all
    // of them share the same product, accumulated along the lowest path first.
    for (int k = 0; k < g.steps(); ++k) {
        const double x = control_(k, 0) * g.sqrt_dt();
        for (std::size_t j = 0; j <= static_cast<std::size_t>(k + 1); ++j) {
            m(k + 1, j) = j == 0 ? m(k, 0) * (1.0 - x) : m(k, j - 1) * (1.0 + x);
        }
    }
    return m;
}

AdaptedField exponential_density(const PredictableControl& q) {
    const TimeGrid& g = q.grid();
    AdaptedField m(q.grid_ptr(), 0, g.steps());
    m(0, 0) = 1.0;
    auto factor = [&](double qv, double sign) {
        return std::exp(qv * sign * g.sqrt_dt() - 0.5 * qv * qv * g.dt());
    };
    if (g.full_binary()) {
        for (int k = 0; k < g.steps(); ++k)
            for (std::size_t i = 0; i < g.node_count(k); ++i) {
                m(k + 1, g.up_child(k, i)) = m(k, i) * factor(q(k, i), 1.0);
                m(k + 1, g.down_child(k, i)) = m(k, i) * factor(q(k, i), -1.0);
            }
        return m;
    }
    if (!q.node_independent())
        fail(ErrorCode::NotRepresentable,
             "exponential_density: state-dependent control needs a full binary tree");
    for (int k = 0; k < g.steps(); ++k)
        for (std::size_t j = 0; j <= static_cast<std::size_t>(k + 1); ++j)
            m(k + 1, j) = j == 0 ? m(k, 0) * factor(q(k, 0), -1.0)
                                 : m(k, j - 1) * factor(q(k, 0), 1.0);
    return m;
}

AdaptedField expectation_under(const MeasureChange& measure, const AdaptedField& field,
                               int from_step) {
    require_same_grid(measure.grid(), field.grid(), "expectation_under");
    const int t = field.last_step();
    if (from_step > t)
        fail(ErrorCode::InvalidArgument, "expectation_under: from step " +
                                             std::to_string(from_step) + " after field step " +
                                             std::to_string(t));
    require(from_step >= 0, "expectation_under: negative step");
    const TimeGrid& g = measure.grid();
    AdaptedField out(field.grid_ptr(), from_step, t);
    auto last = field.at(t);
    std::copy(last.begin(), last.end(), out.at(t).begin());
    for (int k = t - 1; k >= from_step; --k) {
        auto layer = out.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const double p = measure.up_prob(k, i);
            layer[i] = p * out(k + 1, g.up_child(k, i)) + (1.0 - p) * out(k + 1, g.down_child(k, i));
        }
    }
    return out;
}

AdaptedField expectation_at_stopping(const MeasureChange& measure, const AdaptedField& x,
                                     const StoppingTime& tau) {
    require_same_grid(measure.grid(), x.grid(), "expectation_at_stopping");
    require_same_grid(measure.grid(), tau.grid(), "expectation_at_stopping");
    const TimeGrid& g = measure.grid();
    require(x.first_step() == 0 && x.last_step() == g.steps(),
            "expectation_at_stopping: field must cover steps 0..N");
    AdaptedField h(x.grid_ptr(), 0, g.steps());
    for (int k = g.steps(); k >= 0; --k) {
        auto layer = h.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            if (tau.stopped(k, i)) {
                layer[i] = x(k, i);
            } else {
                const double p = measure.up_prob(k, i);
                layer[i] = p * h(k + 1, g.up_child(k, i)) + (1.0 - p) * h(k + 1, g.down_child(k, i));
            }
        }
    }
    // past tau the value is X_tau itself, carried down from the stopping node
    for (int k = 0; k < g.steps(); ++k)
        for (std::size_t i = 0; i < g.node_count(k); ++i)
            if (tau.stopped(k, i)) h(k + 1, g.up_child(k, i)) = h(k + 1, g.down_child(k, i)) = h(k, i);
    return h;
}

PredictableControl paste_controls(const PredictableControl& q1, const PredictableControl& q2,
                                  const StoppingTime& sigma, const StoppingTime& tau) {
    require_same_grid(q1.grid(), q2.grid(), "paste_controls");
    require_same_grid(q1.grid(), sigma.grid(), "paste_controls");
    require_same_grid(q1.grid(), tau.grid(), "paste_controls");
    if (!sigma.precedes(tau))
        fail(ErrorCode::InvalidArgument, "paste_controls: sigma <= tau violated");
    PredictableControl out = q1;
    for (int k = 0; k < q1.grid().steps(); ++k) {
        auto layer = out.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i)
            if (sigma.stopped(k, i) && !tau.stopped(k, i)) layer[i] = q2(k, i);
    }
    return out;
}

PredictableControl truncate_control(const PredictableControl& q, double n) {
    require(n >= 0.0, "truncate_control: level must be nonnegative");
    PredictableControl out = q;
    for (int k = 0; k < q.grid().steps(); ++k)
        for (double& v : out.at(k))
            if (!(std::abs(v) <= n)) v = 0.0;
    return out;
}

PredictableControl stop_control(const PredictableControl& q, const StoppingTime& tau) {
    require_same_grid(q.grid(), tau.grid(), "stop_control");
    PredictableControl out = q;
    for (int k = 0; k < q.grid().steps(); ++k) {
        auto layer = out.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i)
            if (tau.stopped(k, i)) layer[i] = 0.0;
    }
    return out;
}

PredictableControl restrict_control(const PredictableControl& q, const PredictableEvent& h) {
    require_same_grid(q.grid(), h.grid(), "restrict_control");
    PredictableControl out = q;
    for (int k = 0; k < q.grid().steps(); ++k) {
        auto layer = out.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i)
            if (!h(k, i)) layer[i] = 0.0;
    }
    return out;
}

}  // namespace gexlab
