// Randomised cross-module properties over many seeds.
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gexlab/bsde.hpp"
#include "gexlab/dualrep.hpp"
#include "gexlab/extended.hpp"
#include "gexlab/penalty.hpp"
#include "gexlab/sampling.hpp"
#include "oracles.hpp"

using namespace gexlab;

TEST(Extended, Arithmetic) {
    const Extended inf = Extended::infinity();
    EXPECT_TRUE((inf + Extended(1.0)).is_infinite());
    EXPECT_EQ(min(inf, Extended(2.0)), Extended(2.0));
    EXPECT_EQ(max(inf, Extended(2.0)), inf);
    EXPECT_EQ(scale(0.0, inf), Extended(0.0));
    EXPECT_TRUE(scale(0.5, inf).is_infinite());
    EXPECT_THROW(Extended{HUGE_VAL}, Error);
    EXPECT_THROW(inf.value(), Error);
    EXPECT_EQ(inf.to_string(), "inf");
    EXPECT_EQ(format_real(0.1), "0.1");
    EXPECT_LT(Extended(1e300), inf);
}

TEST(Sampling, TrialSeedsAreDistinctAndStable) {
    EXPECT_EQ(trial_seed(1, 5), trial_seed(1, 5));
    EXPECT_NE(trial_seed(1, 5), trial_seed(1, 6));
    EXPECT_NE(trial_seed(1, 5), trial_seed(2, 5));
}

TEST(Sampling, RandomClaimSlopes) {
    std::mt19937_64 rng(1);
    for (auto topo : {Topology::Recombining, Topology::FullBinary}) {
        auto g = TimeGrid::build(1.0, 10, topo);
        for (int i = 0; i < 20; ++i) {
            const BsdeSolution s = solve(drivers::zero(), random_claim(rng, g, 0.7));
            for (int k = 0; k < 10; ++k)
                for (double z : s.z.at(k)) EXPECT_LE(std::abs(z), 0.7 + 1e-12);
        }
    }
}

TEST(Sampling, ParallelForCoversEveryIndexOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
}

class SeededProperty : public ::testing::TestWithParam<int> {};

TEST_P(SeededProperty, DualityGapOnRandomClaims) {
    std::mt19937_64 rng(static_cast<unsigned>(GetParam()));
    auto g = TimeGrid::build(1.0, 10, Topology::FullBinary);
    for (const char* spec : {"entropic:1", "abs:0.5", "interval:-0.3,0.8", "zero", "linear:0"}) {
        const AdaptedField xi = random_claim(rng, g, 1.0);
        EXPECT_LE(duality_gap(parse_driver(spec), xi), 1e-10) << spec;
    }
}

TEST_P(SeededProperty, PenaltyMatchesEnumeration) {
    std::mt19937_64 rng(static_cast<unsigned>(GetParam()));
    const int n = 7;
    auto g = TimeGrid::build(1.3, n, Topology::FullBinary);
    const PredictableControl q = random_control(rng, g, 1.0);
    for (double gamma : {0.5, 2.0}) {
        const PenaltyIntegrand f = conjugate_of(drivers::entropic(gamma));
        const double got = penalty_formula(f, density_from_control(q), 0, n)(0, 0).value();
        const double want = oracle::penalty(
            n, g->dt(), [&](int k, std::uint64_t node) { return q(k, node); },
            [&](double x) { return x * x / (2.0 * gamma); });
        EXPECT_NEAR(got, want, 1e-14);
    }
}

TEST_P(SeededProperty, PrimalFormulaEquivalence) {
    std::mt19937_64 rng(static_cast<unsigned>(GetParam()));
    auto g = TimeGrid::build(1.0, 3, Topology::FullBinary);
    PrimalOracleOptions o;
    o.seed = static_cast<std::uint64_t>(GetParam());
    const MeasureChange q = density_from_control(random_control(rng, g, 0.9));
    for (const char* spec : {"entropic:1", "abs:1", "interval:-1,1"}) {
        const Driver drv = parse_driver(spec);
        const double formula = penalty_formula(conjugate_of(drv), q, 0, 3)(0, 0).value();
        EXPECT_NEAR(penalty_primal_oracle(drv, q, o).value, formula, 1e-6) << spec;
    }
}

TEST_P(SeededProperty, CocycleOnRandomTriples) {
    std::mt19937_64 rng(static_cast<unsigned>(GetParam()));
    auto g = TimeGrid::build(1.0, 24, Topology::Recombining);
    const auto q = PredictableControl::feedback(g, [](double, double x) { return 0.8 * std::tanh(x); });
    const MeasureChange m = density_from_control(q);
    const PenaltyIntegrand f = conjugate_of(drivers::entropic(1.0));
    for (int i = 0; i < 20; ++i) {
        const StoppingTime u = random_stopping_time(rng, g, 0.05);
        const StoppingTime t = random_stopping_time(rng, g, 0.1, &u);
        const StoppingTime s = random_stopping_time(rng, g, 0.1, &t);
        EXPECT_LE(cocycle_residual(f, m, s, t, u), 1e-12);
    }
}

TEST_P(SeededProperty, TimeConsistency) {
    std::mt19937_64 rng(static_cast<unsigned>(GetParam()));
    auto g = TimeGrid::build(1.0, 9, Topology::FullBinary);
    const Driver drv = drivers::entropic(1.0);
    const AdaptedField xi = random_claim(rng, g, 1.0);
    const AdaptedField full = utility(drv, xi);
    const int k = static_cast<int>(rng() % 9);
    AdaptedField mid(g, k, k);
    for (std::size_t i = 0; i < g->node_count(k); ++i) mid(k, i) = full(k, i);
    const AdaptedField head = utility(drv, mid);
    for (int j = 0; j <= k; ++j)
        for (std::size_t i = 0; i < g->node_count(j); ++i) EXPECT_EQ(head(j, i), full(j, i));
}

INSTANTIATE_TEST_SUITE_P(Seeds, SeededProperty, ::testing::Range(1, 9));
