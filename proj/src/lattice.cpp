#include "gexlab/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace gexlab {

TimeGrid::TimeGrid(double horizon, int steps, Topology topology)
    : horizon_(horizon),
      steps_(steps),
      dt_(horizon / steps),
      sqrt_dt_(std::sqrt(horizon / steps)),
      topology_(topology) {}

GridPtr TimeGrid::build(double horizon, int steps, Topology topology) {
    require(std::isfinite(horizon) && horizon > 0.0, "build_grid: horizon must be positive");
    require(steps >= 1, "build_grid: steps must be >= 1");
    if (topology == Topology::FullBinary && steps > kMaxFullBinarySteps)
        fail(ErrorCode::InvalidArgument, "build_grid: full binary tree limited to " +
                                             std::to_string(kMaxFullBinarySteps) + " steps");
    return GridPtr(new TimeGrid(horizon, steps, topology));
}

std::size_t TimeGrid::node_count(int step) const {
    require(0 <= step && step <= steps_, "node_count: step outside grid");
    if (topology_ == Topology::FullBinary) return std::size_t{1} << step;
    return static_cast<std::size_t>(step) + 1;
}

std::size_t TimeGrid::up_child(int /*step*/, std::size_t index) const {
    return full_binary() ? 2 * index + 1 : index + 1;
}

std::size_t TimeGrid::down_child(int /*step*/, std::size_t index) const {
    return full_binary() ? 2 * index : index;
}

void TimeGrid::validate(NodeId node) const {
    if (node.step < 0 || node.step > steps_ || node.index >= node_count(node.step))
        fail(ErrorCode::InvalidArgument, "invalid node (" + std::to_string(node.step) + ", " +
                                             std::to_string(node.index) + ")");
}

int TimeGrid::up_count(NodeId node) const {
    validate(node);
    if (full_binary()) return std::popcount(static_cast<std::uint64_t>(node.index));
    return static_cast<int>(node.index);
}

double TimeGrid::brownian_level(NodeId node) const {
    const int ups = up_count(node);
    return (2 * ups - node.step) * sqrt_dt_;
}

std::size_t TimeGrid::ancestor(NodeId node, int ancestor_step) const {
    validate(node);
    if (!full_binary())
        fail(ErrorCode::NotRepresentable, "ancestor: recombining nodes have no unique ancestor");
    require(0 <= ancestor_step && ancestor_step <= node.step, "ancestor: step after node");
    return node.index >> (node.step - ancestor_step);
}

// ---------------------------------------------------------------------------

PredictableControl::PredictableControl(GridPtr grid, double fill)
    : values_(grid, 0, grid->steps() - 1, fill) {}

PredictableControl::PredictableControl(NodeMap<double> values) : values_(std::move(values)) {
    require(!values_.empty() && values_.first_step() == 0 &&
                values_.last_step() == values_.grid().steps() - 1,
            "PredictableControl: values must cover steps 0..N-1");
    for (int k = 0; k < values_.grid().steps(); ++k)
        for (double v : values_.at(k))
            require(std::isfinite(v), "PredictableControl: non-finite value");
}

PredictableControl PredictableControl::constant(GridPtr grid, double q) {
    require(std::isfinite(q), "PredictableControl: non-finite value");
    return PredictableControl(std::move(grid), q);
}

PredictableControl PredictableControl::feedback(GridPtr grid,
                                                const std::function<double(double, double)>& rule) {
    PredictableControl control(grid);
    for (int k = 0; k < grid->steps(); ++k) {
        auto layer = control.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            layer[i] = rule(grid->time(k), grid->brownian_level({k, i}));
            require(std::isfinite(layer[i]), "PredictableControl: feedback rule returned non-finite");
        }
    }
    return control;
}

double PredictableControl::max_abs() const {
    double m = 0.0;
    for (int k = 0; k < grid().steps(); ++k)
        for (double v : at(k)) m = std::max(m, std::abs(v));
    return m;
}

bool PredictableControl::node_independent() const {
    for (int k = 0; k < grid().steps(); ++k) {
        auto layer = at(k);
        if (std::adjacent_find(layer.begin(), layer.end(), std::not_equal_to<>()) != layer.end())
            return false;
    }
    return true;
}

bool operator==(const PredictableControl& a, const PredictableControl& b) {
    if (a.grid().steps() != b.grid().steps()) return false;
    for (int k = 0; k < a.grid().steps(); ++k) {
        auto x = a.at(k);
        auto y = b.at(k);
        if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    }
    return true;
}

PredictableEvent::PredictableEvent(GridPtr grid, bool fill)
    : flags_(grid, 0, grid->steps() - 1, fill ? 1 : 0) {}

PredictableEvent::PredictableEvent(NodeMap<std::uint8_t> flags) : flags_(std::move(flags)) {
    require(!flags_.empty() && flags_.first_step() == 0 &&
                flags_.last_step() == flags_.grid().steps() - 1,
            "PredictableEvent: indicator must cover exactly steps 0..N-1 (a step-N flag is not predictable)");
}

// ---------------------------------------------------------------------------

namespace {

void require_full_event(const AdaptedEvent& event) {
    require(!event.empty() && event.first_step() == 0 &&
                event.last_step() == event.grid().steps(),
            "stopping time: event must cover steps 0..N");
}

// Parents of (step+1, j) on either topology.
template <class Fn>
void for_each_parent(const TimeGrid& grid, int child_step, std::size_t j, Fn&& fn) {
    const int k = child_step - 1;
    if (grid.full_binary()) {
        fn(j >> 1);
        return;
    }
    if (j <= static_cast<std::size_t>(k)) fn(j);  // down move from (k, j)
    if (j >= 1) fn(j - 1);                         // up move from (k, j-1)
}

}  // namespace

StoppingTime StoppingTime::constant(GridPtr grid, int step) {
    require(0 <= step && step <= grid->steps(), "StoppingTime: constant outside [0, N]");
    AdaptedEvent flags(grid, 0, grid->steps());
    for (int k = step; k <= grid->steps(); ++k) std::ranges::fill(flags.at(k), 1);
    return StoppingTime(std::move(flags));
}

StoppingTime StoppingTime::closure_of(const AdaptedEvent& seed) {
    require_full_event(seed);
    const TimeGrid& grid = seed.grid();
    AdaptedEvent flags = seed;
    for (int k = 1; k <= grid.steps(); ++k) {
        auto layer = flags.at(k);
        for (std::size_t j = 0; j < layer.size(); ++j) {
            if (layer[j]) continue;
            for_each_parent(grid, k, j, [&](std::size_t p) {
                if (flags(k - 1, p)) layer[j] = 1;
            });
        }
    }
    std::ranges::fill(flags.at(grid.steps()), 1);
    return StoppingTime(std::move(flags));
}

StoppingTime StoppingTime::from_stop_set(AdaptedEvent stopped) {
    require_full_event(stopped);
    const TimeGrid& grid = stopped.grid();
    for (std::uint8_t f : stopped.at(grid.steps()))
        require(f != 0, "StoppingTime: every path must be stopped by step N");
    for (int k = 0; k < grid.steps(); ++k) {
        auto layer = stopped.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            if (!layer[i]) continue;
            if (!stopped(k + 1, grid.up_child(k, i)) || !stopped(k + 1, grid.down_child(k, i)))
                fail(ErrorCode::InvalidArgument,
                     "StoppingTime: stop set not closed under children at (" + std::to_string(k) +
                         ", " + std::to_string(i) + ")");
        }
    }
    return StoppingTime(std::move(stopped));
}

StoppingTime StoppingTime::from_path_values(GridPtr grid, std::span<const int> leaf_values) {
    require(grid->full_binary(), "StoppingTime: path values need a full binary tree");
    const int n = grid->steps();
    require(leaf_values.size() == grid->node_count(n), "StoppingTime: one value per leaf expected");
    for (int v : leaf_values) require(0 <= v && v <= n, "StoppingTime: value outside [0, N]");
    AdaptedEvent flags(grid, 0, n);
    for (int k = 0; k <= n; ++k) {
        auto layer = flags.at(k);
        const std::size_t width = std::size_t{1} << (n - k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            const bool first = leaf_values[i * width] <= k;
            for (std::size_t leaf = i * width; leaf < (i + 1) * width; ++leaf) {
                if ((leaf_values[leaf] <= k) != first)
                    fail(ErrorCode::InvalidArgument,
                         "StoppingTime: {tau <= " + std::to_string(k) +
                             "} is not determined by the step-" + std::to_string(k) +
                             " atom (flag depends on the future)");
            }
            layer[i] = first ? 1 : 0;
        }
    }
    return StoppingTime(std::move(flags));
}

int StoppingTime::value_on_path(std::size_t leaf) const {
    const TimeGrid& g = grid();
    for (int k = 0; k <= g.steps(); ++k)
        if (stopped(k, g.ancestor({g.steps(), leaf}, k))) return k;
    return g.steps();
}

bool StoppingTime::precedes(const StoppingTime& other) const {
    const TimeGrid& g = grid();
    for (int k = 0; k <= g.steps(); ++k) {
        auto mine = flags_.at(k);
        auto theirs = other.flags_.at(k);
        for (std::size_t i = 0; i < mine.size(); ++i)
            if (theirs[i] && !mine[i]) return false;
    }
    return true;
}

bool StoppingTime::is_deterministic() const {
    for (int k = 0; k <= grid().steps(); ++k) {
        auto layer = flags_.at(k);
        if (std::adjacent_find(layer.begin(), layer.end(), std::not_equal_to<>()) != layer.end())
            return false;
    }
    return true;
}

StoppingTime hitting_time(const AdaptedEvent& event) {
    require_full_event(event);
    StoppingTime tau = StoppingTime::closure_of(event);
    const TimeGrid& grid = event.grid();
    if (grid.full_binary()) return tau;
    // A node reached stopped from one parent and unstopped from another would
    // carry two different hitting times.
    for (int k = 1; k < grid.steps(); ++k) {
        for (std::size_t j = 0; j < grid.node_count(k); ++j) {
            if (event(k, j) || !tau.stopped(k, j)) continue;
            for_each_parent(grid, k, j, [&](std::size_t p) {
                if (!tau.stopped(k - 1, p))
                    fail(ErrorCode::NotRepresentable,
                         "hitting_time: hitting time at (" + std::to_string(k) + ", " +
                             std::to_string(j) +
                             ") depends on the path; use a full binary tree");
            });
        }
    }
    return tau;
}

// ---------------------------------------------------------------------------

AdaptedField terminal_field(const GridPtr& grid, const std::function<double(double)>& payoff) {
    const int n = grid->steps();
    AdaptedField field(grid, n, n);
    auto layer = field.at(n);
    for (std::size_t i = 0; i < layer.size(); ++i) {
        layer[i] = payoff(grid->brownian_level({n, i}));
        if (!std::isfinite(layer[i]))
            fail(ErrorCode::InvalidArgument,
                 "terminal_field: non-finite payoff at terminal node " + std::to_string(i));
    }
    return field;
}

AdaptedField terminal_field(const GridPtr& grid, std::span<const double> values) {
    const int n = grid->steps();
    if (values.size() != grid->node_count(n))
        fail(ErrorCode::InvalidArgument, "terminal_field: expected " +
                                             std::to_string(grid->node_count(n)) + " values, got " +
                                             std::to_string(values.size()));
    AdaptedField field(grid, n, n);
    auto layer = field.at(n);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            fail(ErrorCode::InvalidArgument,
                 "terminal_field: non-finite value at terminal node " + std::to_string(i));
        layer[i] = values[i];
    }
    return field;
}

AdaptedField level_field(const GridPtr& grid, int first_step, int last_step,
                         const std::function<double(double, double)>& fn) {
    AdaptedField field(grid, first_step, last_step);
    for (int k = first_step; k <= last_step; ++k) {
        auto layer = field.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i)
            layer[i] = fn(grid->time(k), grid->brownian_level({k, i}));
    }
    return field;
}

double sup_norm(std::span<const double> layer) {
    double m = 0.0;
    for (double v : layer) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace gexlab
