#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gexlab/measure.hpp"
#include "gexlab/sampling.hpp"
#include "oracles.hpp"

using namespace gexlab;

namespace {

GridPtr binary(int n, double t = 1.0) { return TimeGrid::build(t, n, Topology::FullBinary); }
GridPtr recombining(int n, double t = 1.0) { return TimeGrid::build(t, n, Topology::Recombining); }

double sum_layer(const AdaptedField& f, int k) {
    double s = 0.0;
    for (double v : f.at(k)) s += v;
    return s;
}

}  // namespace

TEST(Density, ReferenceMeasure) {
    auto g = recombining(8);
    const MeasureChange p = MeasureChange::reference(g);
    const AdaptedField m = p.density();
    for (int k = 0; k <= 8; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i) EXPECT_EQ(m(k, i), 1.0);
    for (int k = 0; k < 8; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i) EXPECT_EQ(p.up_prob(k, i), 0.5);
}

TEST(Density, ConstantControl) {
    auto g = recombining(4);
    const MeasureChange q = density_from_control(PredictableControl::constant(g, 0.4));
    for (int k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i) EXPECT_DOUBLE_EQ(q.up_prob(k, i), 0.6);
}

TEST(Density, InadmissibleControlIsRejected) {
    auto g = recombining(4);
    try {
        density_from_control(PredictableControl::constant(g, 5.0));
        FAIL() << "expected a domain error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Domain);
        EXPECT_NE(std::string(e.what()).find("(0, 0)"), std::string::npos);
    }
}

TEST(Density, PathDependentDensityNeedsFullBinary) {
    auto g = recombining(4);
    const auto q = PredictableControl::feedback(g, [](double, double x) { return 0.5 * x; });
    const MeasureChange m = density_from_control(q);
    try {
        (void)m.density();
        FAIL() << "expected NotRepresentable";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotRepresentable);
    }
}

TEST(Density, MartingaleAndPositive) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto g = binary(10);
        const PredictableControl q = random_control(rng, g, 2.5);
        const AdaptedField m = density_from_control(q).density();
        for (int k = 0; k <= 10; ++k) {
            for (double v : m.at(k)) EXPECT_GT(v, 0.0);
            EXPECT_NEAR(sum_layer(m, k) / static_cast<double>(g->node_count(k)), 1.0, 1e-12);
        }
    }
}

TEST(Expectation, MartingaleUnderP) {
    auto g = recombining(16);
    const AdaptedField xi = terminal_field(g, [](double x) { return x; });
    EXPECT_NEAR(expectation_under(MeasureChange::reference(g), xi, 0)(0, 0), 0.0, 1e-15);
}

TEST(Expectation, DriftUnderConstantControl) {
    for (double q : {-1.2, 0.4, 2.0}) {
        auto g = recombining(64, 1.5);
        const AdaptedField xi = terminal_field(g, [](double x) { return x; });
        const MeasureChange m = density_from_control(PredictableControl::constant(g, q));
        EXPECT_NEAR(expectation_under(m, xi, 0)(0, 0), q * 1.5, 1e-13);
    }
}

TEST(Expectation, SameStepIsIdentity) {
    auto g = recombining(5);
    const AdaptedField xi = terminal_field(g, [](double x) { return std::exp(x); });
    const AdaptedField e = expectation_under(MeasureChange::reference(g), xi, 5);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(e(5, i), xi(5, i));
}

TEST(Expectation, MatchesPathEnumeration) {
    const int n = 8;
    auto g = binary(n);
    std::mt19937_64 rng(5);
    const PredictableControl q = random_control(rng, g, 2.0);
    const AdaptedField xi = random_claim(rng, g, 1.0);
    const double got = expectation_under(density_from_control(q), xi, 0)(0, 0);
    const double want = oracle::expectation(
        n, g->sqrt_dt(), [&](int k, std::uint64_t node) { return q(k, node); },
        [&](std::uint64_t leaf) { return xi(n, leaf); });
    EXPECT_NEAR(got, want, 1e-13);
}

TEST(Expectation, TowerProperty) {
    std::mt19937_64 rng(9);
    auto g = binary(9);
    for (int trial = 0; trial < 20; ++trial) {
        const MeasureChange m = density_from_control(random_control(rng, g, 2.0));
        const AdaptedField xi = random_claim(rng, g, 1.0);
        const AdaptedField one = expectation_under(m, xi, 0);
        AdaptedField mid(g, 4, 4);
        const AdaptedField stage = expectation_under(m, xi, 4);
        for (std::size_t i = 0; i < g->node_count(4); ++i) mid(4, i) = stage(4, i);
        const AdaptedField two = expectation_under(m, mid, 0);
        for (int k = 0; k <= 4; ++k)
            for (std::size_t i = 0; i < g->node_count(k); ++i) EXPECT_EQ(one(k, i), two(k, i));
    }
}

TEST(Expectation, AtStoppingTime) {
    auto g = binary(4);
    const AdaptedField x = level_field(g, 0, 4, [](double, double b) { return b; });
    const StoppingTime tau = StoppingTime::constant(g, 2);
    const MeasureChange m = density_from_control(PredictableControl::constant(g, 0.8));
    const AdaptedField e = expectation_at_stopping(m, x, tau);
    EXPECT_NEAR(e(0, 0), 0.8 * 2 * g->dt(), 1e-15);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(e(4, i), x(2, g->ancestor({4, i}, 2)));
}

TEST(Paste, Examples) {
    std::mt19937_64 rng(1);
    auto g = binary(6);
    const PredictableControl q1 = random_control(rng, g, 1.0);
    const PredictableControl q2 = random_control(rng, g, 1.0);
    const StoppingTime tau = random_stopping_time(rng, g, 0.2);
    const StoppingTime sigma = random_stopping_time(rng, g, 0.2, &tau);
    EXPECT_TRUE(paste_controls(q1, q1, sigma, tau) == q1);
    EXPECT_TRUE(paste_controls(q1, q2, StoppingTime::constant(g, 0), StoppingTime::constant(g, 6)) == q2);

    const PredictableControl zero(g, 0.0);
    const PredictableControl p =
        paste_controls(zero, q2, StoppingTime::constant(g, 2), StoppingTime::constant(g, 4));
    for (int k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i)
            EXPECT_EQ(p(k, i), (k >= 2 && k < 4) ? q2(k, i) : 0.0);

    const PredictableControl r = paste_controls(q1, q2, sigma, tau);
    for (int k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i) {
            const bool inside = sigma.stopped(k, i) && !tau.stopped(k, i);
            EXPECT_EQ(r(k, i), inside ? q2(k, i) : q1(k, i));
        }
}

TEST(Truncate, Examples) {
    auto g = recombining(3);
    PredictableControl q(g, 0.3);
    q(1, 1) = 1.7;
    q(2, 0) = -1.7;
    EXPECT_TRUE(truncate_control(q, 2.0) == q);
    EXPECT_TRUE(truncate_control(q, 0.0) == PredictableControl(g, 0.0));
    const PredictableControl t = truncate_control(q, 1.0);
    EXPECT_EQ(t(1, 1), 0.0);
    EXPECT_EQ(t(2, 0), 0.0);
    EXPECT_EQ(t(1, 0), 0.3);
}

TEST(Truncate, DensityConvergesInL1) {
    std::mt19937_64 rng(2);
    auto g = binary(8);
    const PredictableControl q = random_control(rng, g, 1.5);
    const AdaptedField m = density_from_control(q).density();
    double previous = HUGE_VAL;
    for (double n : {0.0, 0.5, 1.0, 1.25, q.max_abs()}) {
        const AdaptedField mn = density_from_control(truncate_control(q, n)).density();
        double l1 = 0.0;
        for (std::size_t i = 0; i < g->node_count(8); ++i) l1 += std::abs(mn(8, i) - m(8, i));
        l1 /= static_cast<double>(g->node_count(8));
        if (n == q.max_abs()) EXPECT_EQ(l1, 0.0);
        EXPECT_LE(l1, previous + 1e-12);
        previous = l1;
    }
}

TEST(StopControl, Examples) {
    auto g = binary(5);
    std::mt19937_64 rng(4);
    const PredictableControl q = random_control(rng, g, 1.0);
    EXPECT_TRUE(stop_control(q, StoppingTime::constant(g, 5)) == q);
    EXPECT_TRUE(stop_control(q, StoppingTime::constant(g, 0)) == PredictableControl(g, 0.0));
    const AdaptedField m = density_from_control(stop_control(q, StoppingTime::constant(g, 2))).density();
    for (int j = 2; j <= 5; ++j)
        for (std::size_t i = 0; i < g->node_count(j); ++i) EXPECT_EQ(m(j, i), m(2, g->ancestor({j, i}, 2)));
}

TEST(Restrict, Examples) {
    auto g = recombining(6);
    const auto q = PredictableControl::feedback(g, [](double t, double x) { return x - t; });
    PredictableEvent all(g, true), none(g, false), small(g, false);
    for (int k = 0; k < 6; ++k)
        for (std::size_t i = 0; i < g->node_count(k); ++i) small.set(k, i, std::abs(q(k, i)) <= 0.9);
    EXPECT_TRUE(restrict_control(q, all) == q);
    EXPECT_TRUE(restrict_control(q, none) == PredictableControl(g, 0.0));
    EXPECT_TRUE(restrict_control(q, small) == truncate_control(q, 0.9));
    EXPECT_TRUE(restrict_control(restrict_control(q, small), small) == restrict_control(q, small));
}

TEST(ExponentialDensity, BiasIsOrderDt) {
    double previous = HUGE_VAL;
    for (int n : {4, 8, 16}) {
        auto g = binary(n);
        const AdaptedField m = exponential_density(PredictableControl::constant(g, 1.0));
        const double bias = std::abs(sum_layer(m, n) / static_cast<double>(g->node_count(n)) - 1.0);
        EXPECT_GT(bias, 0.0);
        EXPECT_LT(bias, previous);
        EXPECT_LT(bias, 0.5 / n);
        previous = bias;
    }
}
