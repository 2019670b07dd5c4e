#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gexlab/bsde.hpp"
#include "gexlab/penalty.hpp"
#include "gexlab/sampling.hpp"
#include "oracles.hpp"

using namespace gexlab;

namespace {

GridPtr binary(int n, double t = 1.0) { return TimeGrid::build(t, n, Topology::FullBinary); }
GridPtr recombining(int n, double t = 1.0) { return TimeGrid::build(t, n, Topology::Recombining); }

MeasureChange constant_q(const GridPtr& g, double q) { return density_from_control(PredictableControl::constant(g, q)); }

const PenaltyIntegrand& entropic_f() {
    static const PenaltyIntegrand f = conjugate_of(drivers::entropic(1.0));
    return f;
}

}  // namespace

TEST(Formula, ReferenceMeasureCostsNothing) {
    auto g = recombining(32);
    const ExtendedField c = penalty_formula(entropic_f(), MeasureChange::reference(g), 0, 32);
    for (int k = 0; k <= 32; ++k)
        for (const Extended& v : c.at(k)) EXPECT_EQ(v, Extended(0.0));
}

TEST(Formula, ConstantEntropicControl) {
    for (int n : {3, 16, 256}) {
        auto g = recombining(n);
        EXPECT_NEAR(penalty_formula(entropic_f(), constant_q(g, 0.4), 0, n)(0, 0).value(), 0.08, 1e-15) << n;
    }
}

TEST(Formula, MatchesPathEnumeration) {
    std::mt19937_64 rng(1);
    const int n = 8;
    auto g = binary(n);
    const PredictableControl q = random_control(rng, g, 2.0);
    const double got = penalty_formula(entropic_f(), density_from_control(q), 0, n)(0, 0).value();
    const double want = oracle::penalty(
        n, g->dt(), [&](int k, std::uint64_t node) { return q(k, node); }, [](double x) { return 0.5 * x * x; });
    EXPECT_NEAR(got, want, 1e-14);
}

TEST(Formula, InfinityReachesAncestorsOnly) {
    auto g = binary(4);
    PredictableControl q(g, 0.5);
    q(2, 3) = 1.5;  // outside [-1, 1]
    const PenaltyIntegrand f = conjugate_of(drivers::abs_scaled(1.0));
    const ExtendedField c = penalty_formula(f, density_from_control(q), 0, 4);
    EXPECT_TRUE(c(0, 0).is_infinite());
    EXPECT_TRUE(c(1, 1).is_infinite());
    EXPECT_TRUE(c(2, 3).is_infinite());
    EXPECT_EQ(c(1, 0), Extended(0.0));
    EXPECT_EQ(c(2, 2), Extended(0.0));
    EXPECT_EQ(c(3, 7), Extended(0.0));
    const double oracle_value = oracle::penalty(
        4, g->dt(), [&](int k, std::uint64_t node) { return q(k, node); },
        [](double x) { return std::abs(x) <= 1.0 ? 0.0 : HUGE_VAL; });
    EXPECT_TRUE(std::isinf(oracle_value));
}

TEST(Formula, RightEndpointIsZeroAndPositive) {
    std::mt19937_64 rng(2);
    auto g = binary(6);
    const ExtendedField c = penalty_formula(entropic_f(), density_from_control(random_control(rng, g, 1.0)), 2, 6);
    for (const Extended& v : c.at(6)) EXPECT_EQ(v, Extended(0.0));
    for (int k = 2; k <= 6; ++k)
        for (const Extended& v : c.at(k)) EXPECT_GE(v.value(), 0.0);
}

TEST(PrimalOracle, Examples) {
    auto g = binary(3);
    const PrimalOracleResult e = penalty_primal_oracle(drivers::entropic(1.0), constant_q(g, 0.4));
    EXPECT_NEAR(e.value, 0.08, 1e-6);
    EXPECT_TRUE(e.converged);
    const PrimalOracleResult a = penalty_primal_oracle(drivers::abs_scaled(1.0), constant_q(g, 0.5));
    EXPECT_NEAR(a.value, 0.0, 1e-6);
    for (const char* spec : {"entropic:1", "abs:0.5", "interval:-0.3,0.6"}) {
        const PrimalOracleResult p = penalty_primal_oracle(parse_driver(spec), MeasureChange::reference(g));
        EXPECT_NEAR(p.value, 0.0, 1e-9) << spec;
    }
}

TEST(PrimalOracle, Preconditions) {
    EXPECT_THROW(penalty_primal_oracle(drivers::entropic(1.0), constant_q(recombining(3), 0.4)), Error);
    EXPECT_THROW(penalty_primal_oracle(drivers::entropic(1.0), constant_q(binary(5), 0.4)), Error);
    EXPECT_THROW(penalty_primal_oracle(drivers::nonconvex(1.0), constant_q(binary(3), 0.4)), Error);
}

TEST(UpperBound, Examples) {
    std::mt19937_64 rng(3);
    auto g = binary(3);
    const Report inside = upper_bound_check(drivers::entropic(1.0), density_from_control(random_control(rng, g, 1.0)));
    EXPECT_TRUE(inside.passed()) << inside.summary();
    PredictableControl q(g, 0.2);
    q(1, 0) = 1.5;
    const Report outside = upper_bound_check(drivers::abs_scaled(1.0), density_from_control(q));
    EXPECT_TRUE(outside.passed()) << outside.summary();
    EXPECT_TRUE(std::isinf(outside.find("primal_le_formula")->reference));
    const Report zero = upper_bound_check(drivers::abs_scaled(1.0), MeasureChange::reference(g));
    EXPECT_TRUE(zero.passed());
    EXPECT_NEAR(zero.find("primal_eq_formula")->value, 0.0, 1e-9);
}

TEST(Cocycle, DeterministicTimes) {
    std::mt19937_64 rng(4);
    auto g = recombining(16);
    const MeasureChange q = density_from_control(random_control(rng, g, 2.0));
    const auto at = [&](int k) { return StoppingTime::constant(g, k); };
    EXPECT_LE(cocycle_residual(entropic_f(), q, at(0), at(8), at(16)), 1e-12);
    EXPECT_EQ(cocycle_residual(entropic_f(), q, at(3), at(3), at(10)), 0.0);
}

TEST(Cocycle, HittingTimes) {
    auto g = binary(12);
    const auto q = PredictableControl::feedback(g, [](double t, double x) { return std::tanh(x) + 0.3 * t; });
    const MeasureChange m = density_from_control(q);
    const auto above = [&](double level) {
        AdaptedEvent e(g, 0, 12, 0);
        for (int k = 0; k <= 12; ++k)
            for (std::size_t i = 0; i < g->node_count(k); ++i) e(k, i) = g->brownian_level({k, i}) >= level ? 1 : 0;
        return hitting_time(e);
    };
    EXPECT_LE(cocycle_residual(entropic_f(), m, above(0.25), above(0.5), above(1.0)), 1e-12);
}

TEST(Cocycle, Suite) {
    auto g = recombining(64);
    SuiteOptions o;
    o.trials = 200;
    const Report r = cocycle_suite(entropic_f(), constant_q(g, 0.7), o);
    EXPECT_TRUE(r.passed()) << r.summary();
}

TEST(Doob, ReferenceMeasure) {
    auto g = binary(6);
    const DoobDecomposition d = doob_decomposition(entropic_f(), MeasureChange::reference(g));
    for (int k = 0; k <= 6; ++k)
        for (double v : d.process.a.at(k)) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(d.residual, 0.0);
}

TEST(Doob, ConstantEntropicControl) {
    auto g = recombining(50);
    const DoobDecomposition d = doob_decomposition(entropic_f(), constant_q(g, 0.6));
    for (double v : d.process.a.at(50)) EXPECT_NEAR(v, 0.18, 1e-14);
    EXPECT_LE(d.residual, 1e-12);
    EXPECT_TRUE(d.starts_at_zero);
    EXPECT_TRUE(d.nondecreasing);
}

TEST(Doob, StateDependentControl) {
    std::mt19937_64 rng(5);
    auto g = binary(10);
    const DoobDecomposition d = doob_decomposition(entropic_f(), density_from_control(random_control(rng, g, 2.0)));
    EXPECT_LE(d.residual, 1e-12);
    EXPECT_TRUE(d.nondecreasing);
    const Report r = doob_report(entropic_f(), density_from_control(random_control(rng, g, 2.0)));
    EXPECT_TRUE(r.passed()) << r.summary();
}

TEST(Doob, Errors) {
    auto g = recombining(6);
    const auto q = PredictableControl::feedback(g, [](double, double x) { return 0.3 * x; });
    try {
        doob_decomposition(entropic_f(), density_from_control(q));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotRepresentable);
    }
    try {
        doob_decomposition(conjugate_of(drivers::abs_scaled(0.2)), constant_q(g, 0.5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Domain);
    }
}

TEST(Pasting, Examples) {
    std::mt19937_64 rng(6);
    auto g = binary(6);
    const PredictableControl q1 = random_control(rng, g, 1.0), q2 = random_control(rng, g, 1.0);
    const StoppingTime tau = random_stopping_time(rng, g, 0.2);
    const StoppingTime sigma = random_stopping_time(rng, g, 0.2, &tau);
    EXPECT_TRUE(pasting_check(entropic_f(), q1, q2, sigma, tau, 0.5).passed());
    EXPECT_TRUE(pasting_check(entropic_f(), q1, q1, sigma, tau, 2.0).passed());

    // q1 = 0: the pasted increments vanish outside ]]sigma, tau]]
    const PredictableControl zero(g, 0.0);
    const IncreasingProcess a = increasing_process(entropic_f(), paste_controls(zero, q2, sigma, tau));
    for (int k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i)
            if (!(sigma.stopped(k, i) && !tau.stopped(k, i))) EXPECT_EQ(a.increments(k, i), Extended(0.0));

    // restriction with n >= max|q| changes nothing
    const IncreasingProcess full = increasing_process(entropic_f(), q1);
    const IncreasingProcess same = increasing_process(entropic_f(), truncate_control(q1, q1.max_abs()));
    for (int k = 0; k <= 6; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i) EXPECT_EQ(full.a(k, i), same.a(k, i));
}

TEST(Pasting, Suite) {
    SuiteOptions o;
    o.trials = 50;
    const Report r = pasting_suite(entropic_f(), recombining(32), 1.0, o);
    EXPECT_TRUE(r.passed()) << r.summary();
}

TEST(Truncation, SaturatesAtMaxControl) {
    auto g = binary(4);
    PredictableControl q(g, 0.3);
    q(1, 0) = 1.7;
    q(3, 5) = -1.7;
    const std::vector<double> levels = {1.0, 2.0, 3.0};
    const std::vector<double> stops = {0.01, 0.05, 0.2};
    const Report r = truncation_convergence(entropic_f(), q, levels, stops);
    EXPECT_TRUE(r.passed()) << r.summary();
    const double full = penalty_formula(entropic_f(), density_from_control(q), 0, 4)(0, 0).value();
    const double at1 = penalty_formula(entropic_f(), density_from_control(truncate_control(q, 1.0)), 0, 4)(0, 0).value();
    EXPECT_LT(at1, full);
    for (double n : {2.0, 3.0})
        EXPECT_EQ(penalty_formula(entropic_f(), density_from_control(truncate_control(q, n)), 0, 4)(0, 0).value(), full);
}

TEST(Truncation, StoppedPenaltyPartialSums) {
    // constant q: A_k = k q^2 dt / 2, tau^n = first k with A_k >= n
    const int n = 16;
    auto g = recombining(n);
    const double q = 0.8, step = 0.5 * q * q / n;
    const PredictableControl control = PredictableControl::constant(g, q);
    double previous = -1.0;
    for (double level : {0.0, 0.05, 0.1, 0.2, 0.5}) {
        int stop = 0;
        while (stop < n && stop * step < level) ++stop;
        AdaptedEvent hit(g, 0, n, 0);
        for (int k = stop; k <= n; ++k)
            for (std::size_t i = 0; i < g->node_count(k); ++i) hit(k, i) = 1;
        const PredictableControl stopped = stop_control(control, hitting_time(hit));
        const double c = penalty_formula(entropic_f(), density_from_control(stopped), 0, n)(0, 0).value();
        EXPECT_NEAR(c, std::min(stop * step, 0.5 * q * q), 1e-15) << level;
        EXPECT_GE(c, previous);
        previous = c;
    }
}

TEST(Truncation, ZeroControl) {
    auto g = binary(4);
    const std::vector<double> levels = {0.0, 1.0};
    const Report r = truncation_convergence(entropic_f(), PredictableControl(g, 0.0), levels, std::vector<double>{0.1});
    EXPECT_TRUE(r.passed()) << r.summary();
    for (const CheckRow& row : r.rows())
        if (row.check == "truncated_penalty") EXPECT_EQ(row.value, 0.0);
}

TEST(Supermartingale, Suites) {
    SuiteOptions o;
    o.trials = 200;
    EXPECT_TRUE(supermartingale_suite(entropic_f(), MeasureChange::reference(recombining(64)), o).passed());
    EXPECT_TRUE(supermartingale_suite(entropic_f(), constant_q(recombining(64), 0.5), o).passed());
    auto g = recombining(64);
    const auto q = PredictableControl::feedback(g, [](double, double x) { return std::sin(x); });
    const Report r = supermartingale_suite(entropic_f(), density_from_control(q), o);
    EXPECT_TRUE(r.passed()) << r.summary();
}

TEST(Decomposition, Lemma16) {
    SuiteOptions o;
    o.trials = 200;
    const Report r = decomposition_suite(drivers::entropic(1.0), constant_q(binary(3), 0.4), o);
    EXPECT_TRUE(r.passed()) << r.summary();
    std::mt19937_64 rng(8);
    const Report s = decomposition_suite(drivers::abs_scaled(1.0), density_from_control(random_control(rng, binary(3), 0.9)), o);
    EXPECT_TRUE(s.passed()) << s.summary();
}
