#include "gexlab/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gexlab/bsde.hpp"
#include "gexlab/sampling.hpp"

namespace gexlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void same_grid(const TimeGrid& a, const TimeGrid& b, const char* where) {
    require(&a == &b, std::string(where) + ": objects live on different grids");
}

Extended step_cost(const PenaltyIntegrand& f, const TimeGrid& grid, int k, double q) {
    return scale(grid.dt(), f(grid.time(k), q));
}

Extended q_average(const MeasureChange& q, const ExtendedField& w, int k, std::size_t i) {
    const TimeGrid& grid = q.grid();
    const double p = q.up_prob(k, i);
    return scale(p, w(k + 1, grid.up_child(k, i))) + scale(1.0 - p, w(k + 1, grid.down_child(k, i)));
}

double extended_gap(Extended a, Extended b) {
    if (a.is_infinite() || b.is_infinite()) return a.is_infinite() == b.is_infinite() ? 0.0 : kInf;
    return std::abs(a.value() - b.value());
}

std::string node_text(int step, std::size_t index) {
    return "(" + std::to_string(step) + ", " + std::to_string(index) + ")";
}

// Step at which tau stops the path through (k, i); full binary only.
int stop_step(const StoppingTime& tau, int k, std::size_t i) {
    const TimeGrid& grid = tau.grid();
    for (int j = 0; j <= k; ++j)
        if (tau.stopped(j, grid.ancestor({k, i}, j))) return j;
    return -1;
}

bool first_stopped(const StoppingTime& tau, int k, std::size_t i) {
    if (!tau.stopped(k, i)) return false;
    if (k == 0) return true;
    const TimeGrid& grid = tau.grid();
    if (grid.full_binary()) return !tau.stopped(k - 1, i >> 1);
    // Recombining: some parent is still running.
    return (i < grid.node_count(k - 1) && !tau.stopped(k - 1, i)) || (i > 0 && !tau.stopped(k - 1, i - 1));
}

std::vector<double> leaf_weights(const MeasureChange& q) {
    const TimeGrid& grid = q.grid();
    std::vector<double> w{1.0};
    for (int k = 0; k < grid.steps(); ++k) {
        std::vector<double> next(grid.node_count(k + 1));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double p = q.up_prob(k, i);
            next[grid.up_child(k, i)] = w[i] * p;
            next[grid.down_child(k, i)] = w[i] * (1.0 - p);
        }
        w = std::move(next);
    }
    return w;
}

}  // namespace

ExtendedField penalty_formula(const PenaltyIntegrand& f, const MeasureChange& q, int s, int t) {
    const TimeGrid& grid = q.grid();
    require(0 <= s && s <= t && t <= grid.steps(), "penalty_formula: need 0 <= s <= t <= N");
    ExtendedField w(q.grid_ptr(), s, t, Extended(0.0));
    for (int k = t - 1; k >= s; --k) {
        auto layer = w.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i)
            layer[i] = step_cost(f, grid, k, q.control()(k, i)) + q_average(q, w, k, i);
    }
    return w;
}

ExtendedField penalty_between(const PenaltyIntegrand& f, const MeasureChange& q, const StoppingTime& sigma,
                              const StoppingTime& tau) {
    same_grid(q.grid(), sigma.grid(), "penalty_between");
    same_grid(q.grid(), tau.grid(), "penalty_between");
    require(sigma.precedes(tau), "penalty_between: sigma <= tau violated");
    const TimeGrid& grid = q.grid();
    const int n = grid.steps();
    ExtendedField w(q.grid_ptr(), 0, n, Extended(0.0));
    for (int k = n - 1; k >= 0; --k) {
        auto layer = w.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            if (tau.stopped(k, i)) continue;
            Extended v = q_average(q, w, k, i);
            if (sigma.stopped(k, i)) v += step_cost(f, grid, k, q.control()(k, i));
            layer[i] = v;
        }
    }
    return w;
}

// ---------------------------------------------------------------------------

namespace {

struct Evaluation {
    double value = 0.0;
    std::vector<double> gradient;
};

// F(xi) = -E_Q[xi] + u_0(xi) and a supergradient Q*(leaf) - Q(leaf), where Q*
// moves up with probability (1 + g'(-Z) sqrt(dt)) / 2 at every node.
Evaluation evaluate(const Driver& g, const GridPtr& grid, const std::vector<double>& q_weight,
                    const std::vector<double>& xi) {
    const AdaptedField u = utility(g, terminal_field(grid, xi));
    Evaluation e;
    e.value = u(0, 0);
    for (std::size_t j = 0; j < xi.size(); ++j) e.value -= q_weight[j] * xi[j];

    std::vector<double> w{1.0};
    for (int k = 0; k < grid->steps(); ++k) {
        const double t = grid->time(k);
        std::vector<double> next(grid->node_count(k + 1));
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double up = u(k + 1, grid->up_child(k, i));
            const double down = u(k + 1, grid->down_child(k, i));
            const double z = -(up - down) / (2.0 * grid->sqrt_dt());
            const double h = 1e-7 * std::max(1.0, std::abs(z));
            const double slope = (g(t, z + h) - g(t, z - h)) / (2.0 * h);
            const double p = std::clamp(0.5 * (1.0 + slope * grid->sqrt_dt()), 0.0, 1.0);
            next[grid->up_child(k, i)] = w[i] * p;
            next[grid->down_child(k, i)] = w[i] * (1.0 - p);
        }
        w = std::move(next);
    }
    e.gradient.resize(xi.size());
    for (std::size_t j = 0; j < xi.size(); ++j) e.gradient[j] = w[j] - q_weight[j];
    return e;
}

}  // namespace

PrimalOracleResult penalty_primal_oracle(const Driver& g, const MeasureChange& q, const PrimalOracleOptions& o) {
    const GridPtr& grid = q.grid_ptr();
    if (!grid->full_binary() || grid->steps() > 4)
        fail(ErrorCode::InvalidArgument, "penalty_primal_oracle: needs a full binary grid with N <= 4 (got N = " +
                                             std::to_string(grid->steps()) + ")");
    require(g.dim == 1, "penalty_primal_oracle: scalar drivers only");
    require(g.convex, "penalty_primal_oracle: driver '" + g.name + "' is not convex");
    require(o.box > 0.0 && o.restarts >= 0 && o.max_iterations > 0, "penalty_primal_oracle: bad options");

    const std::vector<double> q_weight = leaf_weights(q);
    const std::size_t leaves = q_weight.size();
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> start(-o.start_scale, o.start_scale);

    PrimalOracleResult best;
    best.value = -kInf;
    bool all_converged = true;
    for (int r = 0; r <= o.restarts; ++r) {
        std::vector<double> x(leaves, 0.0);
        if (r > 0)
            for (double& v : x) v = std::clamp(start(rng), -o.box, o.box);
        Evaluation ex;
        try {
            ex = evaluate(g, grid, q_weight, x);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Domain) throw;
            continue;
        }
        double step = 1.0;
        bool converged = false;
        int it = 0;
        for (; it < o.max_iterations && !converged; ++it) {
            std::vector<double> y(leaves);
            for (std::size_t j = 0; j < leaves; ++j) y[j] = std::clamp(x[j] + step * ex.gradient[j], -o.box, o.box);
            if (y == x) {
                converged = true;
                break;
            }
            Evaluation ey;
            bool ok = true;
            try {
                ey = evaluate(g, grid, q_weight, y);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Domain) throw;
                ok = false;
            }
            if (ok && ey.value > ex.value) {
                const double gain = ey.value - ex.value;
                x = std::move(y);
                ex = std::move(ey);
                step *= 2.0;
                if (gain < o.tolerance) converged = true;
            } else {
                step *= 0.5;
                if (step < 1e-14) converged = true;  // no ascent left along the supergradient
            }
        }
        best.iterations += it;
        all_converged = all_converged && converged;
        if (ex.value > best.value) {
            best.value = ex.value;
            best.claim = terminal_field(grid, x);
        }
    }
    if (best.claim.empty())
        fail(ErrorCode::NotConverged, "penalty_primal_oracle: every start left the driver's validity region");
    best.converged = all_converged;
    return best;
}

double cocycle_residual(const PenaltyIntegrand& f, const MeasureChange& q, const StoppingTime& sigma,
                        const StoppingTime& tau, const StoppingTime& upsilon) {
    if (!sigma.precedes(tau) || !tau.precedes(upsilon))
        fail(ErrorCode::InvalidArgument, "cocycle_residual: need sigma <= tau <= upsilon");
    const ExtendedField whole = penalty_between(f, q, sigma, upsilon);
    const ExtendedField head = penalty_between(f, q, sigma, tau);
    const ExtendedField tail = penalty_between(f, q, tau, upsilon);
    double worst = 0.0;
    const TimeGrid& grid = q.grid();
    for (int k = 0; k <= grid.steps(); ++k)
        for (std::size_t i = 0; i < grid.node_count(k); ++i)
            if (sigma.stopped(k, i)) worst = std::max(worst, extended_gap(whole(k, i), head(k, i) + tail(k, i)));
    return worst;
}

IncreasingProcess increasing_process(const PenaltyIntegrand& f, const PredictableControl& q) {
    const TimeGrid& grid = q.grid();
    const int n = grid.steps();
    IncreasingProcess out{ExtendedField(q.grid_ptr(), 0, n - 1, Extended(0.0)), AdaptedField()};
    bool finite = true;
    for (int k = 0; k < n; ++k) {
        auto layer = out.increments.at(k);
        for (std::size_t i = 0; i < layer.size(); ++i) {
            layer[i] = step_cost(f, grid, k, q(k, i));
            finite = finite && layer[i].is_finite();
        }
    }
    if (!finite) return out;
    if (grid.full_binary()) {
        out.a = AdaptedField(q.grid_ptr(), 0, n);
        for (int k = 0; k < n; ++k)
            for (std::size_t i = 0; i < grid.node_count(k); ++i) {
                const double next = out.a(k, i) + out.increments(k, i).value();
                out.a(k + 1, grid.up_child(k, i)) = next;
                out.a(k + 1, grid.down_child(k, i)) = next;
            }
    } else if (q.node_independent()) {
        out.a = AdaptedField(q.grid_ptr(), 0, n);
        for (int k = 0; k < n; ++k) {
            const double next = out.a(k, 0) + out.increments(k, 0).value();
            for (double& v : out.a.at(k + 1)) v = next;
        }
    }
    return out;
}

DoobDecomposition doob_decomposition(const PenaltyIntegrand& f, const MeasureChange& q) {
    const TimeGrid& grid = q.grid();
    DoobDecomposition d{increasing_process(f, q.control())};
    for (int k = 0; k < grid.steps(); ++k)
        for (std::size_t i = 0; i < grid.node_count(k); ++i)
            if (d.process.increments(k, i).is_infinite())
                fail(ErrorCode::Domain, "doob_decomposition: infinite penalty, f = +inf at node " + node_text(k, i));
    if (d.process.a.empty())
        fail(ErrorCode::NotRepresentable,
             "doob_decomposition: A is path dependent on a recombining grid; use a full binary grid");
    const ExtendedField c = penalty_formula(f, q, 0, grid.steps());
    const AdaptedField terminal_mean = expectation_under(q, d.process.a, 0);
    d.starts_at_zero = d.process.a(0, 0) == 0.0;
    for (int k = 0; k <= grid.steps(); ++k)
        for (std::size_t i = 0; i < grid.node_count(k); ++i) {
            const double potential = terminal_mean(k, i) - d.process.a(k, i);
            d.residual = std::max(d.residual, std::abs(c(k, i).value() - potential));
            if (k < grid.steps() && d.process.increments(k, i).value() < 0.0) d.nondecreasing = false;
        }
    return d;
}

Report pasting_check(const PenaltyIntegrand& f, const PredictableControl& q1, const PredictableControl& q2,
                     const StoppingTime& sigma, const StoppingTime& tau, double n) {
    const PredictableControl pasted = paste_controls(q1, q2, sigma, tau);
    const TimeGrid& grid = q1.grid();
    const ExtendedField da = increasing_process(f, pasted).increments;
    const ExtendedField da1 = increasing_process(f, q1).increments;
    const ExtendedField da2 = increasing_process(f, q2).increments;
    const ExtendedField dah = increasing_process(f, truncate_control(pasted, n)).increments;

    double paste_gap = 0.0;
    double restrict_gap = 0.0;
    int inside = 0;
    for (int k = 0; k < grid.steps(); ++k)
        for (std::size_t i = 0; i < grid.node_count(k); ++i) {
            const bool in = sigma.stopped(k, i) && !tau.stopped(k, i);
            inside += in ? 1 : 0;
            paste_gap = std::max(paste_gap, extended_gap(da(k, i), in ? da2(k, i) : da1(k, i)));
            const bool in_h = std::abs(pasted(k, i)) <= n;
            restrict_gap = std::max(restrict_gap, extended_gap(dah(k, i), in_h ? da(k, i) : Extended(0.0)));
        }

    Report report;
    const std::string fixture = f.name + " N=" + std::to_string(grid.steps());
    report.add({"pasting_increments", fixture, paste_gap, 0.0, 0.0, paste_gap == 0.0,
                "nodes inside ]]sigma,tau]]: " + std::to_string(inside)});
    report.add({"restriction_increments", fixture + " n=" + format_real(n), restrict_gap, 0.0, 0.0,
                restrict_gap == 0.0, ""});
    return report;
}

Report truncation_convergence(const PenaltyIntegrand& f, const PredictableControl& q,
                              std::span<const double> levels, std::span<const double> stop_levels) {
    const TimeGrid& grid = q.grid();
    const int n = grid.steps();
    const std::string fixture = f.name + " N=" + std::to_string(n) + " max|q|=" + format_real(q.max_abs());
    const Extended full = penalty_formula(f, MeasureChange::from_control(q), 0, n)(0, 0);
    Report report;

    Extended previous(0.0);
    double worst_drop = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double level = levels[l];
        if (l > 0) require(level > levels[l - 1], "truncation_convergence: levels must increase");
        const Extended c = penalty_formula(f, MeasureChange::from_control(truncate_control(q, level)), 0, n)(0, 0);
        const bool saturated = level >= q.max_abs();
        CheckRow row{"truncated_penalty", fixture + " n=" + format_real(level), c.to_double(), full.to_double(),
                     0.0, !saturated || c == full, saturated ? "saturated: exact equality required" : ""};
        report.add(std::move(row));
        if (l > 0) {
            if (previous.is_infinite() && c.is_finite()) worst_drop = kInf;
            else if (c.is_finite()) worst_drop = std::max(worst_drop, previous.value() - c.value());
        }
        previous = c;
    }
    if (!levels.empty())
        report.add({"truncated_penalty_monotone", fixture, worst_drop, 0.0, 0.0, worst_drop <= 0.0,
                    "largest decrease between consecutive levels"});

    if (stop_levels.empty()) return report;
    const IncreasingProcess proc = increasing_process(f, q);
    if (proc.a.empty()) {
        report.add({"stopped_penalty", fixture, NAN, full.to_double(), 0.0, false,
                    "A is infinite or path dependent on this grid"});
        return report;
    }
    double max_increment = 0.0;
    for (int k = 0; k < n; ++k)
        for (const Extended& e : proc.increments.at(k)) max_increment = std::max(max_increment, e.value());
    const double max_total = sup_norm(proc.a.at(n));

    double prev = 0.0;
    worst_drop = 0.0;
    double worst_excess = -kInf;
    for (std::size_t l = 0; l < stop_levels.size(); ++l) {
        const double level = stop_levels[l];
        if (l > 0) require(level > stop_levels[l - 1], "truncation_convergence: stop levels must increase");
        AdaptedEvent hit(q.grid_ptr(), 0, n);
        for (int k = 0; k <= n; ++k)
            for (std::size_t i = 0; i < grid.node_count(k); ++i) hit(k, i) = proc.a(k, i) >= level ? 1 : 0;
        const StoppingTime tau = hitting_time(hit);
        const double c = penalty_formula(f, MeasureChange::from_control(stop_control(q, tau)), 0, n)(0, 0).value();
        for (int k = 0; k <= n; ++k)
            for (std::size_t i = 0; i < grid.node_count(k); ++i)
                if (first_stopped(tau, k, i)) worst_excess = std::max(worst_excess, proc.a(k, i) - level - max_increment);
        const bool beyond = level > max_total;
        report.add({"stopped_penalty", fixture + " n=" + format_real(level), c, full.value(), 0.0,
                    !beyond || c == full.value(), beyond ? "level above sup A_N: exact equality required" : ""});
        if (l > 0) worst_drop = std::max(worst_drop, prev - c);
        prev = c;
    }
    report.add({"stopped_penalty_monotone", fixture, worst_drop, 0.0, 0.0, worst_drop <= 0.0,
                "largest decrease between consecutive levels"});
    report.add({"stopped_process_bound", fixture, worst_excess, 0.0, 0.0, worst_excess <= 0.0,
                "max of A_tau - (n + max increment)"});
    return report;
}

Report doob_report(const PenaltyIntegrand& f, const MeasureChange& q, double tolerance) {
    const DoobDecomposition d = doob_decomposition(f, q);
    const std::string fixture = f.name + " N=" + std::to_string(q.grid().steps()) +
                                " max|q|=" + format_real(q.control().max_abs());
    Report report;
    report.add({"doob_identity", fixture, d.residual, 0.0, tolerance, d.residual <= tolerance,
                "max |c_k - E_Q[A_N - A_k | F_k]|"});
    report.add({"doob_start", fixture, d.process.a(0, 0), 0.0, 0.0, d.starts_at_zero, ""});
    report.add({"doob_nondecreasing", fixture, d.nondecreasing ? 0.0 : 1.0, 0.0, 0.0, d.nondecreasing, ""});
    return report;
}

Report cocycle_suite(const PenaltyIntegrand& f, const MeasureChange& q, const SuiteOptions& o) {
    require(o.trials >= 1, "cocycle_suite: need at least one trial");
    const GridPtr& grid = q.grid_ptr();
    std::vector<double> residuals(static_cast<std::size_t>(o.trials));
    parallel_for(residuals.size(), o.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(o.seed, t));
        const StoppingTime upsilon = random_stopping_time(rng, grid, o.stop_density);
        const StoppingTime tau = random_stopping_time(rng, grid, o.stop_density, &upsilon);
        const StoppingTime sigma = random_stopping_time(rng, grid, o.stop_density, &tau);
        residuals[t] = cocycle_residual(f, q, sigma, tau, upsilon);
    });
    double worst = 0.0;
    int bad = 0;
    for (double r : residuals) {
        worst = std::max(worst, r);
        bad += r > o.tolerance;
    }
    Report report;
    report.add({"cocycle_identity",
                f.name + " N=" + std::to_string(grid->steps()) + " max|q|=" + format_real(q.control().max_abs()),
                worst, 0.0, o.tolerance, bad == 0,
                "triples=" + std::to_string(o.trials) + " violations=" + std::to_string(bad)});
    return report;
}

Report pasting_suite(const PenaltyIntegrand& f, const GridPtr& grid, double bound, const SuiteOptions& o) {
    require(o.trials >= 1, "pasting_suite: need at least one fixture");
    std::vector<Report> reports(static_cast<std::size_t>(o.trials));
    parallel_for(reports.size(), o.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(o.seed, t));
        const PredictableControl q1 = random_control(rng, grid, bound);
        const PredictableControl q2 = random_control(rng, grid, bound);
        const StoppingTime tau = random_stopping_time(rng, grid, o.stop_density);
        const StoppingTime sigma = random_stopping_time(rng, grid, o.stop_density, &tau);
        std::uniform_real_distribution<double> level(0.0, bound);
        reports[t] = pasting_check(f, q1, q2, sigma, tau, level(rng));
    });
    Report report;
    const std::string fixture = f.name + " N=" + std::to_string(grid->steps()) + " |q|<=" + format_real(bound);
    for (const char* check : {"pasting_increments", "restriction_increments"}) {
        double worst = 0.0;
        int bad = 0;
        for (const Report& r : reports) {
            const CheckRow* row = r.find(check);
            worst = std::max(worst, row->value);
            bad += !row->pass;
        }
        report.add({check, fixture, worst, 0.0, 0.0, bad == 0,
                    "fixtures=" + std::to_string(o.trials) + " violations=" + std::to_string(bad)});
    }
    return report;
}

// ---------------------------------------------------------------------------

Report supermartingale_suite(const PenaltyIntegrand& f, const MeasureChange& q, const SuiteOptions& o) {
    require(o.trials >= 1, "supermartingale_suite: need at least one trial");
    const GridPtr& grid = q.grid_ptr();
    const int n = grid->steps();
    const StoppingTime horizon = StoppingTime::constant(grid, n);
    const ExtendedField c = penalty_formula(f, q, 0, n);
    double bound = 0.0;
    for (int k = 0; k <= n; ++k)
        for (const Extended& e : c.at(k)) bound = std::max(bound, e.to_double());

    struct Outcome {
        double violation = 0.0;
        double stopped_sup = 0.0;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(o.trials));
    parallel_for(outcomes.size(), o.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(o.seed, t));
        const StoppingTime tau = random_stopping_time(rng, grid, o.stop_density);
        const StoppingTime sigma = random_stopping_time(rng, grid, o.stop_density, &tau);
        const ExtendedField c_sigma = penalty_between(f, q, sigma, horizon);
        const ExtendedField c_tau = penalty_between(f, q, tau, horizon);
        Outcome out;
        for (int k = 0; k <= n; ++k)
            for (std::size_t i = 0; i < grid->node_count(k); ++i) {
                const Extended a = c_sigma(k, i);
                const Extended b = c_tau(k, i);
                if (a.is_infinite()) continue;
                out.violation = std::max(out.violation, b.is_infinite() ? kInf : b.value() - a.value());
                if (first_stopped(tau, k, i)) out.stopped_sup = std::max(out.stopped_sup, b.to_double());
            }
        outcomes[t] = out;
    });

    double violation = 0.0;
    double stopped_sup = 0.0;
    int violations = 0;
    for (const auto& out : outcomes) {
        violation = std::max(violation, out.violation);
        stopped_sup = std::max(stopped_sup, out.stopped_sup);
        if (out.violation > o.tolerance) ++violations;
    }
    Report report;
    const std::string fixture = f.name + " N=" + std::to_string(n);
    const std::string trials = "trials=" + std::to_string(o.trials) + " violations=" + std::to_string(violations);
    report.add({"supermartingale_inequality", fixture, violation, 0.0, o.tolerance, violations == 0, trials});
    report.add({"stopped_family_bounded", fixture, stopped_sup, bound, 0.0,
                std::isfinite(stopped_sup) && stopped_sup <= bound,
                "sup of c_{tau,N} over sampled tau against sup of c"});
    return report;
}

Report decomposition_suite(const Driver& g, const MeasureChange& q, const SuiteOptions& o,
                           double identity_tolerance, const PrimalOracleOptions& oracle) {
    require(o.trials >= 1, "decomposition_suite: need at least one trial");
    const GridPtr& grid = q.grid_ptr();
    const int n = grid->steps();
    const PenaltyIntegrand f = conjugate_of(g);
    const std::string fixture = g.name + " N=" + std::to_string(n);
    Report report;
    const Extended c0 = penalty_formula(f, q, 0, n)(0, 0);
    if (c0.is_infinite()) {
        report.add({"lemma16_inequality", fixture, kInf, NAN, o.tolerance, false, "infinite penalty"});
        return report;
    }

    const PrimalOracleResult best = penalty_primal_oracle(g, q, oracle);
    const AdaptedField u = utility(g, best.claim);
    const double mean = expectation_under(q, best.claim, 0)(0, 0);
    const double eps = c0.value() - (u(0, 0) - mean);
    report.add({"oracle_gap", fixture, eps, 0.0, 1e-6, eps >= -identity_tolerance && eps <= 1e-6,
                best.converged ? "" : "optimizer stopped on iteration cap"});

    struct Outcome {
        double inequality = -kInf;
        double tail = 0.0;
        double middle = 0.0;
    };
    std::vector<Outcome> outcomes(static_cast<std::size_t>(o.trials));
    parallel_for(outcomes.size(), o.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(o.seed, t));
        const StoppingTime tau = random_stopping_time(rng, grid, o.stop_density);
        const StoppingTime sigma = random_stopping_time(rng, grid, o.stop_density, &tau);
        Outcome out;

        const double lhs = penalty_between(f, q, sigma, tau)(0, 0).value();
        const double at_sigma = expectation_at_stopping(q, u, sigma)(0, 0);
        const double at_tau = expectation_at_stopping(q, u, tau)(0, 0);
        out.inequality = lhs - (at_sigma - at_tau + eps);

        // xi - u_tau(xi), valued from tau on.
        AdaptedField shifted(grid, n, n);
        for (std::size_t j = 0; j < grid->node_count(n); ++j) {
            const int s = stop_step(tau, n, j);
            shifted(n, j) = best.claim(n, j) - u(s, grid->ancestor({n, j}, s));
        }
        const AdaptedField v = utility(g, shifted);
        // u_tau(xi) - u_sigma(xi) at tau, frozen there.
        AdaptedField increment(grid, 0, n);
        for (int k = 0; k <= n; ++k)
            for (std::size_t i = 0; i < grid->node_count(k); ++i) {
                const int s = stop_step(sigma, k, i);
                if (s >= 0) increment(k, i) = u(k, i) - u(s, grid->ancestor({k, i}, s));
            }
        const AdaptedField w = utility_stopped(g, increment, tau);
        for (int k = 0; k <= n; ++k)
            for (std::size_t i = 0; i < grid->node_count(k); ++i) {
                if (first_stopped(tau, k, i)) out.tail = std::max(out.tail, std::abs(v(k, i)));
                if (first_stopped(sigma, k, i)) out.middle = std::max(out.middle, std::abs(w(k, i)));
            }
        outcomes[t] = out;
    });

    double inequality = -kInf, tail = 0.0, middle = 0.0;
    int bad_inequality = 0, bad_tail = 0, bad_middle = 0;
    for (const auto& out : outcomes) {
        inequality = std::max(inequality, out.inequality);
        tail = std::max(tail, out.tail);
        middle = std::max(middle, out.middle);
        bad_inequality += out.inequality > o.tolerance;
        bad_tail += out.tail > identity_tolerance;
        bad_middle += out.middle > identity_tolerance;
    }
    auto note = [&](int bad) {
        return "trials=" + std::to_string(o.trials) + " violations=" + std::to_string(bad);
    };
    report.add({"lemma16_inequality", fixture, inequality, 0.0, o.tolerance, bad_inequality == 0,
                note(bad_inequality) + " (value = max of lhs - rhs)"});
    report.add({"decomposition_tau_T", fixture, tail, 0.0, identity_tolerance, bad_tail == 0, note(bad_tail)});
    report.add({"decomposition_sigma_tau", fixture, middle, 0.0, identity_tolerance, bad_middle == 0,
                note(bad_middle)});
    return report;
}

Report upper_bound_check(const Driver& g, const MeasureChange& q, double tolerance,
                         const PrimalOracleOptions& oracle) {
    const int n = q.grid().steps();
    const Extended formula = penalty_formula(conjugate_of(g), q, 0, n)(0, 0);
    const PrimalOracleResult primal = penalty_primal_oracle(g, q, oracle);
    const std::string fixture = g.name + " N=" + std::to_string(n) + " max|q|=" + format_real(q.control().max_abs());
    Report report;
    report.add({"primal_le_formula", fixture, primal.value, formula.to_double(), 1e-12,
                formula.is_infinite() || primal.value <= formula.value() + 1e-12, ""});
    if (formula.is_infinite()) {
        report.add({"primal_eq_formula", fixture, primal.value, formula.to_double(), tolerance, true,
                    "formula is +inf; equality not asserted"});
    } else {
        report.add({"primal_eq_formula", fixture, primal.value, formula.value(), tolerance,
                    std::abs(primal.value - formula.value()) <= tolerance,
                    primal.converged ? "" : "optimizer stopped on iteration cap"});
    }
    return report;
}

}  // namespace gexlab
