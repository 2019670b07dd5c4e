#include "gexlab/bsde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "gexlab/sampling.hpp"

namespace gexlab {

namespace {

std::string node_text(int step, std::size_t index) {
    return "(" + std::to_string(step) + ", " + std::to_string(index) + ")";
}

void require_scalar(const Driver& g) {
    require(g.dim == 1, "bsde: the lattice carries a one-dimensional Brownian motion; driver '" +
                            g.name + "' has dim " + std::to_string(g.dim));
}

// One backward step at a node; returns (y, z).
std::pair<double, double> backward_step(const Driver& g, const TimeGrid& grid, int k, std::size_t i,
                                        double up, double down) {
    const double z = (up - down) / (2.0 * grid.sqrt_dt());
    if (g.validity_radius && !(std::abs(z) <= *g.validity_radius))
        fail(ErrorCode::Domain, "bsde: |z| = " + format_real(std::abs(z)) + " exceeds validity radius " +
                                    format_real(*g.validity_radius) + " of driver '" + g.name +
                                    "' at node " + node_text(k, i));
    return {0.5 * (up + down) + g(grid.time(k), z) * grid.dt(), z};
}

AdaptedField negated(const AdaptedField& field) {
    AdaptedField out = field;
    for (int k = out.first_step(); k <= out.last_step(); ++k)
        for (double& v : out.at(k)) v = -v;
    return out;
}

}  // namespace

BsdeSolution solve(const Driver& g, const AdaptedField& terminal, int to_step) {
    require_scalar(g);
    require(!terminal.empty(), "bsde: empty terminal field");
    const TimeGrid& grid = terminal.grid();
    const int t = terminal.last_step();
    require(0 <= to_step && to_step <= t, "bsde: target step after terminal step");
    for (double v : terminal.at(t))
        if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "bsde: terminal claim must be finite");

    BsdeSolution sol{AdaptedField(terminal.grid_ptr(), to_step, t),
                     AdaptedField(terminal.grid_ptr(), to_step, std::max(to_step, t - 1))};
    auto last = terminal.at(t);
    std::copy(last.begin(), last.end(), sol.y.at(t).begin());
    for (int k = t - 1; k >= to_step; --k) {
        auto y = sol.y.at(k);
        auto z = sol.z.at(k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const auto [yk, zk] = backward_step(g, grid, k, i, sol.y(k + 1, grid.up_child(k, i)),
                                                sol.y(k + 1, grid.down_child(k, i)));
            y[i] = yk;
            z[i] = zk;
        }
    }
    return sol;
}

BsdeSolution solve_stopped(const Driver& g, const AdaptedField& claim, const StoppingTime& tau) {
    require_scalar(g);
    const TimeGrid& grid = claim.grid();
    require(&grid == &tau.grid(), "solve_stopped: claim and stopping time on different grids");
    require(claim.first_step() == 0 && claim.last_step() == grid.steps(),
            "solve_stopped: claim must cover steps 0..N");
    const int n = grid.steps();
    BsdeSolution sol{AdaptedField(claim.grid_ptr(), 0, n), AdaptedField(claim.grid_ptr(), 0, std::max(0, n - 1))};
    for (int k = n; k >= 0; --k) {
        auto y = sol.y.at(k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (tau.stopped(k, i)) {
                if (!std::isfinite(claim(k, i)))
                    fail(ErrorCode::InvalidArgument, "solve_stopped: claim must be finite where stopped");
                y[i] = claim(k, i);
                continue;
            }
            const auto [yk, zk] = backward_step(g, grid, k, i, sol.y(k + 1, grid.up_child(k, i)),
                                                sol.y(k + 1, grid.down_child(k, i)));
            y[i] = yk;
            sol.z(k, i) = zk;
        }
    }
    return sol;
}

double one_step_residual(const Driver& g, const BsdeSolution& s) {
    const TimeGrid& grid = s.y.grid();
    double worst = 0.0;
    for (int k = s.y.first_step(); k < s.y.last_step(); ++k) {
        for (std::size_t i = 0; i < grid.node_count(k); ++i) {
            const double up = s.y(k + 1, grid.up_child(k, i));
            const double down = s.y(k + 1, grid.down_child(k, i));
            const double z = (up - down) / (2.0 * grid.sqrt_dt());
            worst = std::max(worst, std::abs(z - s.z(k, i)));
            worst = std::max(worst, std::abs(s.y(k, i) - (0.5 * (up + down) + g(grid.time(k), z) * grid.dt())));
        }
    }
    return worst;
}

double g_expectation(const Driver& g, const AdaptedField& xi) { return solve(g, xi).y(0, 0); }

AdaptedField conditional_g_expectation(const Driver& g, const AdaptedField& xi) { return solve(g, xi).y; }

AdaptedField utility(const Driver& g, const AdaptedField& xi) {
    return negated(solve(g, negated(xi)).y);
}

AdaptedField utility_stopped(const Driver& g, const AdaptedField& claim, const StoppingTime& tau) {
    return negated(solve_stopped(g, negated(claim), tau).y);
}

UtilityOperator utility_operator(const Driver& g) {
    return [g](const AdaptedField& claim) { return utility(g, claim); };
}

double recover_driver(const UtilityOperator& u, const GridPtr& grid, double z, NodeId node) {
    grid->validate(node);
    const int k = node.step;
    require(k < grid->steps(), "recover_driver: node needs a one-step window");
    // Claim -z dB_k measured from `node`; on a full binary tree every step-k
    // atom gets its own increment.
    AdaptedField claim(grid, k + 1, k + 1);
    auto layer = claim.at(k + 1);
    for (std::size_t j = 0; j < layer.size(); ++j) {
        const std::size_t parent = grid->full_binary() ? (j >> 1) : node.index;
        layer[j] = -z * (grid->brownian_level({k + 1, j}) - grid->brownian_level({k, parent}));
    }
    const AdaptedField values = u(claim);
    return -values(k, node.index) / grid->dt();
}

// ---------------------------------------------------------------------------

namespace {

enum Axiom {
    kMonotone,
    kStrict,
    kTranslation,
    kConcavity,
    kNormalization,
    kDomination,
    kLocal,
    kTimeConsistency,
    kHomogeneity,
    kAxiomCount
};

constexpr std::array<const char*, kAxiomCount> kAxiomNames = {
    "monotonicity",      "strict_monotonicity", "translation_invariance",
    "concavity",         "normalization",       "emu_domination",
    "local_property",    "time_consistency",    "positive_homogeneity"};

struct Tally {
    double worst = 0.0;  // largest violation (or smallest gap for strictness)
    int violations = 0;
    bool seen = false;
};

struct TrialOutcome {
    std::array<Tally, kAxiomCount> tally{};
    std::string error;
};

AdaptedField combine(const AdaptedField& a, const AdaptedField& b, double wa, double wb) {
    AdaptedField out = a;
    const int n = a.last_step();
    auto x = out.at(n);
    auto y = b.at(n);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = wa * x[i] + wb * y[i];
    return out;
}

void record(Tally& t, double violation, double tol) {
    t.seen = true;
    t.worst = std::max(t.worst, violation);
    if (violation > tol) ++t.violations;
}

TrialOutcome run_trial(const Driver& g, const std::optional<Driver>& dominating, const GridPtr& grid,
                       const AxiomOptions& o, std::uint64_t seed) {
    TrialOutcome out;
    std::mt19937_64 rng(seed);
    const int n = grid->steps();
    std::uniform_int_distribution<int> step_pick(0, n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto& T = out.tally;
    try {
        const AdaptedField xi = random_claim(rng, grid, o.claim_slope);
        const AdaptedField eta = random_claim(rng, grid, o.claim_slope);
        const AdaptedField u_xi = utility(g, xi);
        const AdaptedField u_eta = utility(g, eta);
        auto leaves = [&](const AdaptedField& f) { return f.at(n); };

        // (a) monotonicity, plain and strict.
        {
            AdaptedField bigger = xi;
            std::bernoulli_distribution coin(0.5);
            for (double& v : bigger.at(n))
                if (coin(rng)) v += unit(rng) * o.claim_slope * grid->sqrt_dt();
            const AdaptedField u_big = utility(g, bigger);
            double worst = 0.0;
            for (int k = 0; k <= n; ++k)
                for (std::size_t i = 0; i < grid->node_count(k); ++i)
                    worst = std::max(worst, u_xi(k, i) - u_big(k, i));
            record(T[kMonotone], worst, o.tolerance);

            AdaptedField bumped = xi;
            std::uniform_int_distribution<std::size_t> leaf(0, grid->node_count(n) - 1);
            bumped(n, leaf(rng)) += 1e-3 + 9e-3 * unit(rng);
            const double gap = utility(g, bumped)(0, 0) - u_xi(0, 0);
            Tally& s = T[kStrict];
            s.worst = s.seen ? std::min(s.worst, gap) : gap;
            s.seen = true;
            if (!(gap > 0.0)) ++s.violations;
        }

        // (b) translation invariance for an F_k-measurable shift.
        {
            // Random walk up to step k: siblings differ by at most 2 slope sqrt(dt).
            const int k = step_pick(rng);
            std::vector<double> shift{2.0 * unit(rng) - 1.0};
            for (int j = 0; j < k; ++j) {
                std::vector<double> next(grid->node_count(j + 1));
                for (std::size_t i = 0; i < shift.size(); ++i) {
                    const double move = (2.0 * unit(rng) - 1.0) * o.claim_slope * grid->sqrt_dt();
                    next[grid->up_child(j, i)] = shift[i] + move;
                    next[grid->down_child(j, i)] = shift[i] - move;
                }
                shift = std::move(next);
            }
            AdaptedField moved = xi;
            auto m = moved.at(n);
            for (std::size_t j = 0; j < m.size(); ++j) m[j] += shift[grid->ancestor({n, j}, k)];
            const AdaptedField u_moved = utility(g, moved);
            double worst = 0.0;
            for (int j = k; j <= n; ++j)
                for (std::size_t i = 0; i < grid->node_count(j); ++i)
                    worst = std::max(worst, std::abs(u_moved(j, i) - u_xi(j, i) - shift[grid->ancestor({j, i}, k)]));
            record(T[kTranslation], worst, o.tolerance);
        }

        // (c) concavity.
        {
            const double alpha = unit(rng);
            const AdaptedField u_mix = utility(g, combine(xi, eta, alpha, 1.0 - alpha));
            double worst = 0.0;
            for (int k = 0; k <= n; ++k)
                for (std::size_t i = 0; i < grid->node_count(k); ++i)
                    worst = std::max(worst, alpha * u_xi(k, i) + (1.0 - alpha) * u_eta(k, i) - u_mix(k, i));
            record(T[kConcavity], worst, o.tolerance);
        }

        // (d) u(0) = 0.
        {
            const AdaptedField u0 = utility(g, combine(xi, xi, 0.0, 0.0));
            double worst = 0.0;
            for (int k = 0; k <= n; ++k)
                for (double v : u0.at(k)) worst = std::max(worst, std::abs(v));
            record(T[kNormalization], worst, o.identity_tolerance);
        }

        // E(xi + eta) - E(xi) <= E^mu(eta).
        if (dominating) {
            const AdaptedField e_sum = conditional_g_expectation(g, combine(xi, eta, 1.0, 1.0));
            const AdaptedField e_xi = conditional_g_expectation(g, xi);
            const AdaptedField e_mu = conditional_g_expectation(*dominating, eta);
            double worst = 0.0;
            for (int k = 0; k <= n; ++k)
                for (std::size_t i = 0; i < grid->node_count(k); ++i)
                    worst = std::max(worst, e_sum(k, i) - e_xi(k, i) - e_mu(k, i));
            record(T[kDomination], worst, o.tolerance);
        }

        // Local property on a random A in F_k.
        {
            const int k = step_pick(rng);
            std::bernoulli_distribution in_a(0.5);
            std::vector<std::uint8_t> a(grid->node_count(k));
            for (auto& v : a) v = in_a(rng) ? 1 : 0;
            // The alternative claim stays within O(sqrt(dt)) of xi so that
            // gluing the two keeps z bounded.
            const AdaptedField other = combine(xi, random_claim(rng, grid, o.claim_slope), 1.0, grid->sqrt_dt());
            const AdaptedField u_other = utility(g, other);
            AdaptedField mixed = xi;
            auto m = mixed.at(n);
            for (std::size_t j = 0; j < m.size(); ++j)
                if (!a[grid->ancestor({n, j}, k)]) m[j] = leaves(other)[j];
            const AdaptedField u_mixed = utility(g, mixed);
            double worst = 0.0;
            for (int j = k; j <= n; ++j)
                for (std::size_t i = 0; i < grid->node_count(j); ++i) {
                    const double expect = a[grid->ancestor({j, i}, k)] ? u_xi(j, i) : u_other(j, i);
                    worst = std::max(worst, std::abs(u_mixed(j, i) - expect));
                }
            record(T[kLocal], worst, o.identity_tolerance);
        }

        // Time-consistency: restart the recursion from an intermediate layer.
        {
            const int m = step_pick(rng);
            AdaptedField middle(grid, m, m);
            auto src = u_xi.at(m);
            std::copy(src.begin(), src.end(), middle.at(m).begin());
            const AdaptedField restarted = utility(g, middle);
            double worst = 0.0;
            for (int k = 0; k <= m; ++k)
                for (std::size_t i = 0; i < grid->node_count(k); ++i)
                    worst = std::max(worst, std::abs(restarted(k, i) - u_xi(k, i)));
            record(T[kTimeConsistency], worst, o.identity_tolerance);
        }

        if (g.positively_homogeneous) {
            const double lambda = 2.0 * unit(rng) + 1e-3;
            const AdaptedField u_scaled = utility(g, combine(xi, xi, lambda, 0.0));
            double worst = 0.0;
            for (int k = 0; k <= n; ++k)
                for (std::size_t i = 0; i < grid->node_count(k); ++i)
                    worst = std::max(worst, std::abs(u_scaled(k, i) - lambda * u_xi(k, i)));
            record(T[kHomogeneity], worst, o.tolerance);
        }
    } catch (const Error& e) {
        out.error = e.what();
    }
    return out;
}

}  // namespace

Report axiom_suite(const Driver& g, const AxiomOptions& o) {
    require(o.trials >= 1, "axiom_suite: need at least one trial");
    const GridPtr grid = TimeGrid::build(o.horizon, o.steps, Topology::FullBinary);
    std::optional<Driver> dominating;
    std::string domination_note;
    if (!g.lipschitz) {
        domination_note = "no declared Lipschitz constant";
    } else if (*g.lipschitz * grid->sqrt_dt() > 1.0) {
        domination_note = "mu sqrt(dt) > 1: the E^mu scheme is not monotone at this step size";
    } else {
        dominating = drivers::abs_scaled(*g.lipschitz);
    }

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(o.trials));
    parallel_for(outcomes.size(), o.threads, [&](std::size_t t) {
        outcomes[t] = run_trial(g, dominating, grid, o, trial_seed(o.seed, t));
    });

    std::array<Tally, kAxiomCount> total{};
    int errors = 0;
    std::string first_error;
    for (const auto& out : outcomes) {
        if (!out.error.empty()) {
            if (errors++ == 0) first_error = out.error;
            continue;
        }
        for (int a = 0; a < kAxiomCount; ++a) {
            const Tally& t = out.tally[static_cast<std::size_t>(a)];
            if (!t.seen) continue;
            Tally& acc = total[static_cast<std::size_t>(a)];
            if (a == kStrict)
                acc.worst = acc.seen ? std::min(acc.worst, t.worst) : t.worst;
            else
                acc.worst = std::max(acc.worst, t.worst);
            acc.violations += t.violations;
            acc.seen = true;
        }
    }

    Report report;
    const std::string fixture = g.name + " N=" + std::to_string(o.steps) + " T=" + format_real(o.horizon);
    for (int a = 0; a < kAxiomCount; ++a) {
        if (a == kHomogeneity && !g.positively_homogeneous) continue;
        const Tally& t = total[static_cast<std::size_t>(a)];
        CheckRow row;
        row.check = kAxiomNames[static_cast<std::size_t>(a)];
        row.fixture = fixture;
        row.value = t.worst;
        row.reference = 0.0;
        const bool identity = a == kNormalization || a == kLocal || a == kTimeConsistency;
        row.tolerance = a == kStrict ? 0.0 : (identity ? o.identity_tolerance : o.tolerance);
        row.pass = t.seen && t.violations == 0 && errors == 0;
        row.note = "trials=" + std::to_string(o.trials) + " violations=" + std::to_string(t.violations);
        if (a == kStrict) row.note += " (value = smallest u_0 gap, must be > 0)";
        if (a == kDomination && !dominating) {
            row.pass = false;
            row.note = domination_note;
        }
        if (errors > 0) row.note += " errors=" + std::to_string(errors) + ": " + first_error;
        report.add(std::move(row));
    }
    return report;
}

}  // namespace gexlab
