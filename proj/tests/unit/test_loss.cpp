#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "penlik/bandit.hpp"
#include "penlik/error.hpp"
#include "penlik/histogram.hpp"
#include "penlik/hmm.hpp"
#include "penlik/loss.hpp"

using namespace penlik;

namespace {

struct UniformSetup {
    std::shared_ptr<HistogramModel> truth = std::make_shared<HistogramModel>(1, 0.1);
    Oracle oracle{truth, Vector{1.0}};
    HistogramModel model{2, 0.1};
    Trajectory traj{Vector{0.1, 0.7, 0.4, 0.95, 0.3}};
};

} // namespace

TEST(StochasticKl, UniformTruthAgainstTwoBins)
{
    UniformSetup s;
    const LossReport report = stochastic_kl(s.model, Vector{1.5, 0.5}, &s.oracle, s.traj);
    EXPECT_NEAR(report.kl, 0.14384103622589042, 1e-14);
    ASSERT_EQ(report.per_step_kl.size(), s.traj.n());
    for (double v : report.per_step_kl) EXPECT_NEAR(v, 0.14384103622589042, 1e-14);
    EXPECT_LE(report.quadrature_error, 1e-8);
}

TEST(StochasticKl, ZeroAtTruth)
{
    UniformSetup s;
    EXPECT_EQ(stochastic_kl(s.model, Vector{1.0, 1.0}, &s.oracle, s.traj).kl, 0.0);
    EXPECT_EQ(empirical_variance(s.model, Vector{1.0, 1.0}, &s.oracle, s.traj, Regime::Bounded), 0.0);
    EXPECT_EQ(conditional_hellinger(s.model, Vector{1.0, 1.0}, &s.oracle, s.traj), 0.0);
}

TEST(StochasticKl, NeedsOracle)
{
    UniformSetup s;
    EXPECT_THROW(static_cast<void>(stochastic_kl(s.model, Vector{1.5, 0.5}, nullptr, s.traj)), OracleUnavailable);
    EXPECT_THROW(static_cast<void>(empirical_variance(s.model, Vector{1.5, 0.5}, nullptr, s.traj, Regime::Bounded)), OracleUnavailable);
    EXPECT_THROW(static_cast<void>(conditional_hellinger(s.model, Vector{1.5, 0.5}, nullptr, s.traj)), OracleUnavailable);
}

TEST(EmpiricalVariance, UniformTruthAgainstTwoBins)
{
    UniformSetup s;
    const double v = empirical_variance(s.model, Vector{1.5, 0.5}, &s.oracle, s.traj, Regime::Bounded);
    EXPECT_NEAR(v, 0.32242748390568343, 1e-14);
    // Every log-ratio is below 2 log 10, so truncating changes nothing.
    EXPECT_EQ(v, empirical_variance(s.model, Vector{1.5, 0.5}, &s.oracle, s.traj, Regime::Unbounded));
}

TEST(Hellinger, UniformTruthAgainstTwoBins)
{
    UniformSetup s;
    EXPECT_NEAR(conditional_hellinger(s.model, Vector{1.5, 0.5}, &s.oracle, s.traj), 0.034074173710931799, 1e-14);
}

TEST(VarianceLemma, HistogramSweep)
{
    auto truth = std::make_shared<HistogramModel>(3, 0.1);
    Philox rng(5, 5);
    const Vector heights = truth->random_parameter(rng);
    const Oracle oracle(truth, heights);
    const HistogramModel model(4, 0.1);
    const Trajectory traj = sample_iid(PiecewiseConstantDensity(heights), 30, rng);
    std::vector<Vector> thetas{model.random_parameter(rng)};
    for (int i = 0; i < 1000; ++i) thetas.push_back(model.random_parameter(rng));
    const VarianceLemmaReport report = check_variance_lemma(model, thetas, &oracle, traj);
    EXPECT_EQ(report.violations, 0u);
    EXPECT_LE(report.max_ratio, 1.0);
}

TEST(VarianceLemma, TruthGivesZeroRatio)
{
    UniformSetup s;
    const std::vector<Vector> thetas{{1.0, 1.0}};
    const VarianceLemmaReport report = check_variance_lemma(s.model, thetas, &s.oracle, s.traj);
    EXPECT_EQ(report.rows[0].ratio, 0.0);
    EXPECT_EQ(report.violations, 0u);
}

TEST(VarianceLemma, HmmSweep)
{
    const std::size_t n = 50;
    auto truth = std::make_shared<HmmModel>(2, 3, n);
    Philox rng(6, 1);
    const Vector theta = truth->random_parameter(rng);
    const Oracle oracle(truth, theta);
    const Trajectory traj = sample_hmm(*truth, theta, n, rng).trajectory;
    const HmmModel model(3, 3, n);
    std::vector<Vector> thetas;
    for (int i = 0; i < 200; ++i) thetas.push_back(model.random_parameter(rng));
    EXPECT_EQ(check_variance_lemma(model, thetas, &oracle, traj).violations, 0u);
}

TEST(LogRatioHellinger, ReferencePair)
{
    const Vector p{0.5, 0.5};
    const Vector q{0.8, 0.2};
    const LemmaPair pair = check_logratio_hellinger(p, q, 0.5);
    EXPECT_NEAR(pair.lhs, 0.11045170575208144, 1e-15);
    EXPECT_NEAR(pair.rhs, 0.41558016765337452, 1e-15);
    EXPECT_TRUE(pair.holds);
    const LemmaPair same = check_logratio_hellinger(p, p, 0.1);
    EXPECT_EQ(same.lhs, 0.0);
    EXPECT_EQ(same.rhs, 0.0);
}

TEST(LogRatioHellinger, RejectsBadLambda)
{
    const Vector p{0.5, 0.5};
    EXPECT_THROW(static_cast<void>(check_logratio_hellinger(p, p, 0.0)), InvalidLambda);
    EXPECT_THROW(static_cast<void>(check_logratio_hellinger(p, p, 0.6)), InvalidLambda);
}

TEST(LogRatioHellinger, RandomPairs)
{
    Philox rng(8, 8);
    std::size_t violations = 0;
    for (int i = 0; i < 3000; ++i) {
        const std::size_t size = 2 + uniform_index(rng, 9);
        Vector p(size), q(size);
        double sp = 0.0, sq = 0.0;
        for (std::size_t j = 0; j < size; ++j) {
            p[j] = uniform01(rng) + 1e-6;
            q[j] = uniform01(rng) + 1e-6;
            sp += p[j];
            sq += q[j];
        }
        for (std::size_t j = 0; j < size; ++j) {
            p[j] /= sp;
            q[j] /= sq;
        }
        for (double lambda : {0.5, 0.1, 0.01})
            if (!check_logratio_hellinger(p, q, lambda).holds) ++violations;
    }
    EXPECT_EQ(violations, 0u);
}

TEST(Sandwich, KlBetweenPhiBounds)
{
    Philox rng(9, 9);
    for (int i = 0; i < 200; ++i) {
        LogDensityTable truth(5, 3), cand(5, 3);
        for (std::size_t t = 0; t < 5; ++t) {
            double sp = 0.0, sq = 0.0;
            Vector p(3), q(3);
            for (std::size_t j = 0; j < 3; ++j) {
                p[j] = uniform01(rng) + 0.01;
                q[j] = uniform01(rng) + 0.01;
                sp += p[j];
                sq += q[j];
            }
            for (std::size_t j = 0; j < 3; ++j) {
                truth(t, j) = std::log(p[j] / sp);
                cand(t, j) = std::log(q[j] / sq);
            }
        }
        const Vector weights(3, 1.0);
        const SandwichReport report = check_kl_variance_sandwich(truth, cand, weights);
        ASSERT_TRUE(report.holds);
        EXPECT_LE(report.lower, report.kl * (1.0 + 1e-12));
        EXPECT_GE(report.upper, report.kl * (1.0 - 1e-12));
    }
}

TEST(Exp3Loss, BoundsSquaredProbabilityDistance)
{
    Exp3Config config;
    config.arms = 3;
    config.horizon_scale = 90000;
    config.rate_min = 0.5;
    config.rate_max = 2.0;
    config.losses = {0.8, 0.4, 0.1};
    config.epsilon = 0.1;
    auto model = std::make_shared<Exp3RateModel>(config, config.truncation());
    const double eps = config.epsilon;
    // log-ratios lie in [-F, F] with F = log((1 - eps) / eps); phi(u) >= phi(-F) u^2 / F^2,
    // p* >= eps and |log a - log b| >= |a - b| / (1 - eps) on [eps, 1 - eps].
    const double f = std::log((1.0 - eps) / eps);
    const double phi = std::exp(-f) + f - 1.0;
    const double constant = eps * phi / (f * f) / ((1.0 - eps) * (1.0 - eps));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Exp3Run run = simulate_exp3(config, 1.7, seed);
        const Oracle oracle(model, Vector{1.7});
        for (double theta : {0.5, 1.0, 1.3}) {
            const double kl = stochastic_kl(*model, Vector{theta}, &oracle, run.trajectory).kl;
            const auto path = model->probability_path(theta, run.trajectory);
            double square = 0.0;
            for (std::size_t t = 0; t < path.size(); ++t)
                for (std::size_t k = 0; k < config.arms; ++k) square += std::pow(run.probabilities[t][k] - path[t][k], 2);
            square /= static_cast<double>(path.size());
            EXPECT_GE(kl, constant * square);
            EXPECT_GT(kl, 0.0);
        }
    }
}
