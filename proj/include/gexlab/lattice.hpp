#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gexlab/error.hpp"

namespace gexlab {

/// Recombining trees are Markov in the Brownian level; full binary trees keep
/// every atom of F_T and are needed for path-dependent objects.
enum class Topology { Recombining, FullBinary };

inline constexpr int kMaxFullBinarySteps = 20;

/// Atom of F_{t_k}. On a recombining tree `index` counts the up moves; on a
/// full binary tree its bits spell the path, first move in the most
/// significant position.
struct NodeId {
    int step = 0;
    std::size_t index = 0;
};

class TimeGrid;
using GridPtr = std::shared_ptr<const TimeGrid>;

/// Uniform partition of [0, horizon] together with the binomial skeleton of
/// the Brownian filtration (increments of +-sqrt(dt), each with P-probability 1/2).
class TimeGrid {
public:
    static GridPtr build(double horizon, int steps, Topology topology);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    double sqrt_dt() const { return sqrt_dt_; }
    Topology topology() const { return topology_; }
    bool full_binary() const { return topology_ == Topology::FullBinary; }

    double time(int step) const { return step * dt_; }
    std::size_t node_count(int step) const;

    std::size_t up_child(int step, std::size_t index) const;
    std::size_t down_child(int step, std::size_t index) const;
    int up_count(NodeId node) const;

    /// Random-walk approximation of B_{t_k}: (2 * ups - k) * sqrt(dt).
    double brownian_level(NodeId node) const;

    /// Ancestor of a node at an earlier step; full binary trees only.
    std::size_t ancestor(NodeId node, int ancestor_step) const;

    void validate(NodeId node) const;

private:
    TimeGrid(double horizon, int steps, Topology topology);

    double horizon_;
    int steps_;
    double dt_;
    double sqrt_dt_;
    Topology topology_;
};

/// One value per node for every step in [first_step, last_step].
template <class T>
class NodeMap {
public:
    NodeMap() = default;
    NodeMap(GridPtr grid, int first_step, int last_step, T fill = T{})
        : grid_(std::move(grid)), first_(first_step) {
        require(grid_ != nullptr, "NodeMap: null grid");
        require(0 <= first_step && first_step <= last_step && last_step <= grid_->steps(),
                "NodeMap: step range outside grid");
        layers_.reserve(static_cast<std::size_t>(last_step - first_step + 1));
        for (int k = first_step; k <= last_step; ++k)
            layers_.emplace_back(grid_->node_count(k), fill);
    }

    const TimeGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    bool empty() const { return layers_.empty(); }
    int first_step() const { return first_; }
    int last_step() const { return first_ + static_cast<int>(layers_.size()) - 1; }
    bool covers(int step) const { return !empty() && first_ <= step && step <= last_step(); }

    std::span<T> at(int step) { return layers_[layer_index(step)]; }
    std::span<const T> at(int step) const { return layers_[layer_index(step)]; }

    T& operator()(int step, std::size_t index) { return layers_[layer_index(step)][index]; }
    const T& operator()(int step, std::size_t index) const {
        return layers_[layer_index(step)][index];
    }

private:
    std::size_t layer_index(int step) const {
        if (!covers(step)) fail(ErrorCode::InvalidArgument, "NodeMap: step not covered");
        return static_cast<std::size_t>(step - first_);
    }

    GridPtr grid_;
    int first_ = 0;
    std::vector<std::vector<T>> layers_;
};

/// Houses Y, u, c, A and terminal claims.
using AdaptedField = NodeMap<double>;
/// Per-node indicator of an F_{t_k}-measurable event.
using AdaptedEvent = NodeMap<std::uint8_t>;

/// Value at a step-k node that governs the k -> k+1 transition. Steps 0..N-1.
class PredictableControl {
public:
    PredictableControl() = default;
    explicit PredictableControl(GridPtr grid, double fill = 0.0);
    explicit PredictableControl(NodeMap<double> values);

    static PredictableControl constant(GridPtr grid, double q);
    /// q(t_k, B_{t_k}) evaluated node by node.
    static PredictableControl feedback(GridPtr grid, const std::function<double(double, double)>& rule);

    const TimeGrid& grid() const { return values_.grid(); }
    const GridPtr& grid_ptr() const { return values_.grid_ptr(); }
    double operator()(int step, std::size_t index) const { return values_(step, index); }
    double& operator()(int step, std::size_t index) { return values_(step, index); }
    std::span<const double> at(int step) const { return values_.at(step); }
    std::span<double> at(int step) { return values_.at(step); }

    double max_abs() const;
    /// True when every step's values coincide across nodes.
    bool node_independent() const;

    friend bool operator==(const PredictableControl& a, const PredictableControl& b);

private:
    NodeMap<double> values_;
};

/// Same shape as a control, valued in {0,1}.
class PredictableEvent {
public:
    PredictableEvent() = default;
    explicit PredictableEvent(GridPtr grid, bool fill = false);
    explicit PredictableEvent(NodeMap<std::uint8_t> flags);

    bool operator()(int step, std::size_t index) const { return flags_(step, index) != 0; }
    void set(int step, std::size_t index, bool value) { flags_(step, index) = value ? 1 : 0; }
    const TimeGrid& grid() const { return flags_.grid(); }

private:
    NodeMap<std::uint8_t> flags_;
};

/// A stopping time tau with values in {0,...,N}, stored as the indicator of
/// {tau <= k} at every node. The stopped set is closed under taking children,
/// which is exactly what makes {tau <= k} a union of step-k atoms on either
/// topology.
class StoppingTime {
public:
    static StoppingTime constant(GridPtr grid, int step);
    /// Accepts a stop set; throws unless it is child-closed and stops at N.
    static StoppingTime from_stop_set(AdaptedEvent stopped);
    /// Smallest child-closed set containing `seed` (and step N).
    static StoppingTime closure_of(const AdaptedEvent& seed);
    /// Full binary only: one value per leaf path. Throws when two paths that
    /// share the step-k atom disagree about {tau <= k}.
    static StoppingTime from_path_values(GridPtr grid, std::span<const int> leaf_values);

    bool stopped(int step, std::size_t index) const { return flags_(step, index) != 0; }
    /// Node where the path through `leaf` is stopped; full binary only.
    int value_on_path(std::size_t leaf) const;
    /// tau <= other at every node.
    bool precedes(const StoppingTime& other) const;
    /// Some step k with every node stopped and none before.
    bool is_deterministic() const;

    const TimeGrid& grid() const { return flags_.grid(); }
    const GridPtr& grid_ptr() const { return flags_.grid_ptr(); }
    const AdaptedEvent& stop_set() const { return flags_; }

private:
    explicit StoppingTime(AdaptedEvent flags) : flags_(std::move(flags)) {}
    AdaptedEvent flags_;
};

/// First step whose ancestry satisfies `event` (N if never). On recombining
/// trees the hitting time must not depend on the path into a node; otherwise
/// ErrorCode::NotRepresentable.
StoppingTime hitting_time(const AdaptedEvent& event);

/// Terminal claim from a payoff of the terminal Brownian level.
AdaptedField terminal_field(const GridPtr& grid, const std::function<double(double)>& payoff);
/// Terminal claim from explicit node values (length must be node_count(N)).
AdaptedField terminal_field(const GridPtr& grid, std::span<const double> values);
/// Field at every step from a function of (t_k, B_{t_k}).
AdaptedField level_field(const GridPtr& grid, int first_step, int last_step,
                         const std::function<double(double, double)>& fn);

/// max |value| of a field layer, i.e. the boundedness certificate of a claim.
double sup_norm(std::span<const double> layer);

}  // namespace gexlab
