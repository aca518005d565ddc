#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "elf/di_estimation.hpp"
#include "elf/synthetic_world.hpp"
#include "toy_world.hpp"

using namespace elf;

namespace {

// Binary classifier with a constant probability of label 1.
StochasticLinearClassifier constant(double p1, std::size_t d = 1) {
    std::vector<double> theta(2 * (d + 1), 0.0);
    theta[2 * (d + 1) - 1] = std::log(p1 / (1.0 - p1));
    return StochasticLinearClassifier(2, d, theta);
}

Dataset one_example(int y_hat, double i_beta, int t = 0) {
    Dataset d(1, 2, 2);
    d.add({{0.0}, 0, t, y_hat, i_beta});
    return d;
}

DIConstraint di(double tau, ConditionalPredicate p = ConditionalPredicate::always()) {
    DIConstraint c;
    c.tau = tau;
    c.predicate = p;
    return c;
}

}  // namespace

TEST(ImportanceWeight, IdenticalPoliciesGiveOne) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 2.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> theta(6);
        for (double& v : theta) v = g(rng);
        const StochasticLinearClassifier pi(2, 2, theta);
        const std::vector<double> x{g(rng), g(rng)};
        EXPECT_EQ(importance_weight(pi, pi, x, rep % 2), 1.0);
    }
}

TEST(ImportanceWeight, HandArithmetic) {
    EXPECT_NEAR(importance_weight(0.8, 0.5), 1.6, 1e-15);
    EXPECT_NEAR(importance_weight(0.1, 0.5), 0.2, 1e-15);
    const std::vector<double> x{0.0};
    EXPECT_NEAR(importance_weight(constant(0.8), constant(0.5), x, 1), 1.6, 1e-12);
    EXPECT_NEAR(importance_weight(constant(0.9), constant(0.5), x, 0), 0.2, 1e-12);
}

TEST(ImportanceWeight, UnderflowIsReported) {
    EXPECT_THROW(importance_weight(0.5, 1e-301), std::underflow_error);
    EXPECT_THROW(importance_weight(0.5, 0.0), std::underflow_error);
}

TEST(GEstimates, HandArithmetic) {
    const auto g = g_estimates(constant(0.8), constant(0.5), one_example(1, 2.0), di(1.0));
    ASSERT_EQ(g.values.size(), 1u);
    EXPECT_NEAR(g.values[0], -2.2, 1e-12);
}

TEST(GEstimates, IdentityPolicyGivesNegativeImpact) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset d(1, 2, 2);
    for (int i = 0; i < 30; ++i) d.add({{g(rng)}, i % 2, (i / 2) % 2, (i / 3) % 2, g(rng)});
    const StochasticLinearClassifier pi(2, 1, {0.3, -0.1, -0.2, 0.4});
    const auto est = g_estimates(pi, pi, d, di(0.0));
    ASSERT_EQ(est.values.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(est.values[i], -d[i].i_beta);
}

TEST(GEstimates, ZeroImpactGivesTau) {
    Dataset d(1, 2, 2);
    for (int i = 0; i < 10; ++i) d.add({{double(i)}, 0, i % 2, i % 2, 0.0});
    for (double v : g_estimates(constant(0.7), constant(0.4), d, di(0.35)).values) EXPECT_EQ(v, 0.35);
}

TEST(GEstimates, OnlyMatchingExamplesInOrder) {
    Dataset d(1, 2, 2);
    for (int i = 0; i < 10; ++i) d.add({{0.0}, 0, i % 2, 0, double(i)});
    const auto pi = constant(0.5);
    const auto est = g_estimates(pi, pi, d, di(0.0, ConditionalPredicate::group_equals(1)));
    ASSERT_EQ(est.values.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(est.values[k], -double(2 * k + 1));
    const auto none = g_estimates(pi, pi, d, di(0.0, ConditionalPredicate::label_equals(1)));
    EXPECT_TRUE(none.values.empty());
}

TEST(GEstimates, AccuracyConstraintUsesTrueLabelProbability) {
    DIConstraint c = di(0.75);
    c.kind = ConstraintKind::Accuracy;
    Dataset d(1, 2, 2);
    d.add({{0.0}, 1, 0, 0, 5.0});
    d.add({{0.0}, 0, 0, 1, -5.0});
    const auto est = g_estimates(constant(0.9), constant(0.5), d, c);
    EXPECT_NEAR(est.values[0], 0.75 - 0.9, 1e-12);
    EXPECT_NEAR(est.values[1], 0.75 - 0.1, 1e-12);
}

// Exact expectation of the estimate over every logged outcome of the toy
// world equals the exact conditional expected impact of pi.
TEST(DIEstimationProperty, UnbiasedByEnumeration) {
    const auto beta = toy::behavior();
    const auto outcomes = toy::enumerate(beta);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> theta(6);
        for (double& v : theta) v = g(rng);
        const StochasticLinearClassifier pi(2, 2, theta);
        for (int t = 0; t < 2; ++t) {
            const auto c = di(0.0, ConditionalPredicate::group_equals(t));
            double mass = 0.0, expect = 0.0;
            for (const auto& o : outcomes) {
                if (!evaluate_predicate(c.predicate, o.ex)) continue;
                Dataset single(2, 2, 2);
                single.add(o.ex);
                const double estimate = -g_estimates(pi, beta, single, c).values.at(0);
                expect += o.prob * estimate;
                mass += o.prob;
            }
            const double truth = toy::expected_impact(pi, t);
            EXPECT_NEAR(expect / mass, truth, 1e-12 * std::fabs(truth));
        }
    }
}

TEST(DIEstimationProperty, WeightsArePositive) {
    const auto beta = toy::behavior();
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 20.0);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> theta(6);
        for (double& v : theta) v = g(rng);
        const StochasticLinearClassifier pi(2, 2, theta);
        for (const auto& o : toy::enumerate(beta)) EXPECT_GT(importance_weight(pi, beta, o.ex.x, o.ex.y_hat_beta), 0.0);
    }
}

TEST(TrueG, NoDependenceOnPolicyAtAlphaZero) {
    WorldConfig w;
    w.alpha = 0.0;
    const auto population = draw_population(w, 2000, 5);
    for (double p : {0.01, 0.5, 0.99}) {
        EXPECT_NEAR(true_g_oracle(constant(p, 5), population, di(0.3, ConditionalPredicate::group_equals(0)), w.di_law()),
                    0.3 - 2.0, 1e-12);
        EXPECT_NEAR(true_g_oracle(constant(p, 5), population, di(0.3, ConditionalPredicate::group_equals(1)), w.di_law()),
                    0.3 - 1.0, 1e-12);
    }
}

TEST(TrueG, AlphaOneAlwaysPositive) {
    WorldConfig w;
    w.alpha = 1.0;
    const auto population = draw_population(w, 1000, 6);
    EXPECT_NEAR(true_g_oracle(constant(1.0 - 1e-9, 5), population, di(0.0), w.di_law()), -1.0, 1e-8);
}

TEST(TrueG, BehaviorPolicyMatchesOwnTolerance) {
    WorldConfig w;
    w.alpha = 0.9;
    const auto beta = train_behavior_model(w, 7);
    const auto data = generate_behavior_dataset(w, 200000, beta, 8);
    const auto tau = compute_tolerances(data);
    const auto population = draw_population(w, 200000, 9);
    for (int t = 0; t < 2; ++t) {
        // Standard error of tau_t is about 0.9 * 0.5 / sqrt(1e5) + noise; 0.01 is > 5 SE.
        EXPECT_NEAR(true_g_oracle(beta, population, di(tau[t], ConditionalPredicate::group_equals(t)), w.di_law()), 0.0,
                    0.01);
    }
}

TEST(TrueG, NoMatchThrows) {
    WorldConfig w;
    const auto population = draw_population(w, 10, 1);
    EXPECT_THROW(true_g_oracle(constant(0.5, 5), population, di(0.0, ConditionalPredicate::group_equals(5)), w.di_law()),
                 std::invalid_argument);
}

TEST(ConstraintJson, RoundTrip) {
    DIConstraint c = di(0.25, ConditionalPredicate::group_equals(1));
    c.delta = 0.05;
    c.bound = Hoeffding{-3.0, 4.0};
    c.name = "g1";
    const auto back = nlohmann::json(c).get<DIConstraint>();
    EXPECT_EQ(back.predicate, c.predicate);
    EXPECT_EQ(back.tau, c.tau);
    EXPECT_EQ(back.delta, c.delta);
    EXPECT_EQ(back.bound, c.bound);
    EXPECT_EQ(back.name, c.name);
    EXPECT_THROW(nlohmann::json::parse(R"({"kind": "fairness", "tau": 0})").get<DIConstraint>(), std::invalid_argument);
}
