#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "penlik/bandit.hpp"
#include "penlik/core.hpp"
#include "penlik/error.hpp"
#include "penlik/histogram.hpp"
#include "penlik/hmm.hpp"

using namespace penlik;

TEST(Trajectory, RejectsShortSequences)
{
    EXPECT_THROW(Trajectory(Vector{}), EmptyTrajectory);
    EXPECT_THROW(Trajectory(Vector{0.5}), InvalidArgument);
    EXPECT_NO_THROW(Trajectory(Vector{0.5, 0.25}));
}

TEST(Trajectory, ValidatesSideInformationLength)
{
    EXPECT_THROW(Trajectory(Vector{0, 1, 0}, BanditHistory{{0.5, 0.5}}), InvalidArgument);
    EXPECT_THROW(Trajectory(Vector{0, 1}, SpikeRaster(2, 1, 2)), InvalidArgument);
    EXPECT_NO_THROW(Trajectory(Vector{0, 1}, SpikeRaster(2, -3, 2)));
    const Trajectory traj(Vector{0.1, 0.2, 0.3});
    EXPECT_DOUBLE_EQ(traj.at(1), 0.1);
    EXPECT_DOUBLE_EQ(traj.at(3), 0.3);
}

TEST(SpikeRaster, OutsideWindowThrows)
{
    SpikeRaster raster(2, -2, 3);
    raster.set(1, -2, true);
    EXPECT_TRUE(raster.spike(1, -2));
    EXPECT_FALSE(raster.spike(0, 3));
    EXPECT_THROW(static_cast<void>(raster.spike(0, -3)), InsufficientHistory);
}

TEST(AssumptionConstants, SideConditions)
{
    AssumptionConstants c;
    c.regime = Regime::Bounded;
    c.epsilon = 0.5;
    EXPECT_THROW(c.validate(), InvalidArgument); // log 0.5 > -1
    c.epsilon = 0.1;
    c.lipschitz = 0.5;
    c.diameter = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument); // L M < 1
    c.lipschitz = 1.0;
    EXPECT_NO_THROW(c.validate());
    EXPECT_DOUBLE_EQ(c.scale(), 1.0 + 2.0 * std::log(10.0));
    c.regime = Regime::Unbounded;
    c.tail_scale = 0.5;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(PartialLogLikelihood, ConstantHistogramIsZero)
{
    const HistogramModel model(1, 0.1);
    const Trajectory traj(Vector{0.1, 0.7, 0.99, 0.0});
    EXPECT_EQ(partial_log_likelihood(model, Vector{1.0}, traj), 0.0);
}

TEST(PartialLogLikelihood, TwoBinHistogramByHand)
{
    const HistogramModel model(2, 0.1);
    const Trajectory traj(Vector{0.1, 0.2, 0.3, 0.6});
    const double value = partial_log_likelihood(model, Vector{1.5, 0.5}, traj);
    EXPECT_NEAR(value, 0.52324814376454787, 1e-14);
    double sum = 0.0;
    for (std::size_t t = 1; t <= traj.n(); ++t) sum += log_density(model, Vector{1.5, 0.5}, traj, t, traj.at(t));
    EXPECT_NEAR(value, sum, 1e-14);
    EXPECT_EQ(value, partial_log_likelihood(model, Vector{1.5, 0.5}, traj));
}

TEST(PartialLogLikelihood, RejectsInfeasibleParameter)
{
    const HistogramModel model(2, 0.1);
    const Trajectory traj(Vector{0.1, 0.6});
    EXPECT_THROW(static_cast<void>(partial_log_likelihood(model, Vector{1.95, 0.05}, traj)), ParameterOutsideModel);
    EXPECT_THROW(static_cast<void>(partial_log_likelihood(model, Vector{1.5, 0.6}, traj)), ParameterOutsideModel);
}

TEST(PartialLogLikelihood, SingleStateHmmIsIid)
{
    const HmmModel model(1, 3, 50);
    Philox rng(3, 0);
    const Vector theta = model.random_parameter(rng);
    const HmmParameters params = model.unpack(theta);
    const Trajectory traj(Vector{0, 2, 1, 1, 0, 2, 2});
    double expected = 0.0;
    for (double x : traj.observations()) expected += std::log(params.emission[0][static_cast<std::size_t>(x)]);
    EXPECT_NEAR(partial_log_likelihood(model, theta, traj), expected, 1e-12);
}

TEST(AssumptionBounds, HistogramInsideAndOutside)
{
    const HistogramModel model(2, 0.1);
    const Trajectory traj(Vector{0.1, 0.4, 0.8});
    const std::vector<Vector> good{{1.5, 0.5}};
    const BoundsReport ok = check_assumption_bounds(model, traj, good);
    EXPECT_TRUE(ok.ok());
    EXPECT_DOUBLE_EQ(ok.model_min, 0.5);
    EXPECT_DOUBLE_EQ(ok.model_max, 1.5);
    // A diagnostic: parameters outside the model are reported, not rejected.
    const std::vector<Vector> bad{{1.99, 0.01}};
    const BoundsReport flagged = check_assumption_bounds(model, traj, bad);
    EXPECT_FALSE(flagged.ok());
    EXPECT_EQ(flagged.model_violations, 1u);
}

TEST(AssumptionBounds, Exp3StaysAboveFloor)
{
    Exp3Config config;
    config.arms = 3;
    config.horizon_scale = 40000;
    config.rate_min = 0.5;
    config.rate_max = 2.0;
    config.losses = {0.9, 0.5, 0.1};
    config.epsilon = 0.1;
    const Exp3RateModel model(config, config.truncation());
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Exp3Run run = simulate_exp3(config, 2.0, seed);
        const std::vector<Vector> sample{{0.5}, {1.25}, {2.0}};
        const auto oracle = Oracle(std::make_shared<Exp3RateModel>(model), Vector{2.0});
        const BoundsReport report = check_assumption_bounds(model, run.trajectory, sample, &oracle);
        ASSERT_TRUE(report.ok()) << "seed " << seed;
        ASSERT_GE(report.model_min, config.epsilon);
    }
}

TEST(Lipschitz, HistogramBelowInverseEpsilon)
{
    const double eps = 0.1;
    const HistogramModel model(2, eps);
    const Trajectory traj(Vector{0.1, 0.4, 0.8, 0.9});
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int i = 0; i <= 100; ++i) {
        const double a = eps + (2.0 - 2.0 * eps) * i / 100.0;
        for (int j = 0; j <= 100; j += 7) {
            const double b = eps + (2.0 - 2.0 * eps) * j / 100.0;
            pairs.push_back({{a, 2.0 - a}, {b, 2.0 - b}});
        }
    }
    const double estimate = estimate_lipschitz(model, traj, pairs);
    EXPECT_LE(estimate, 1.0 / eps + 1e-9);
    EXPECT_GT(estimate, 0.5 / eps);
    EXPECT_LE(estimate, model.constants().lipschitz + 1e-9);
}

TEST(Lipschitz, IdenticalPairsGiveZero)
{
    const HistogramModel model(2, 0.1);
    const Trajectory traj(Vector{0.1, 0.9});
    const std::vector<std::pair<Vector, Vector>> pairs{{{1.5, 0.5}, {1.5, 0.5}}};
    EXPECT_EQ(estimate_lipschitz(model, traj, pairs), 0.0);
}

TEST(Lipschitz, Exp3BelowDeclaredConstant)
{
    Exp3Config config;
    config.arms = 2;
    config.horizon_scale = 10000;
    config.rate_min = 0.5;
    config.rate_max = 2.0;
    config.losses = {1.0, 0.2};
    config.epsilon = 0.1;
    const Exp3RateModel model(config, config.truncation());
    const Exp3Run run = simulate_exp3(config, 1.0, std::uint64_t{5});
    Philox rng(11, 0);
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int i = 0; i < 200; ++i) pairs.push_back({model.random_parameter(rng), model.random_parameter(rng)});
    EXPECT_LE(estimate_lipschitz(model, run.trajectory, pairs), model.constants().lipschitz);
}

TEST(ModelContract, DiscreteFamiliesNormalize)
{
    const HmmModel hmm(2, 3, 40);
    Philox rng(1, 2);
    const Vector theta = hmm.random_parameter(rng);
    const HmmSample sample = sample_hmm(hmm, theta, 40, rng);
    EXPECT_LT(normalization_error(hmm, hmm.random_parameter(rng), sample.trajectory), 1e-10);

    const HistogramModel hist(4, 0.1);
    const Trajectory traj(Vector{0.1, 0.9, 0.3});
    EXPECT_LT(normalization_error(hist, hist.random_parameter(rng), traj), 1e-10);
}

TEST(ModelContract, HmmEvaluatorIsPredictable)
{
    const HmmModel hmm(2, 3, 30);
    Philox rng(4, 4);
    const Vector theta = hmm.random_parameter(rng);
    Trajectory traj = sample_hmm(hmm, theta, 30, rng).trajectory;
    const Vector before = hmm.log_likelihood_terms(theta, traj);
    Vector changed(traj.observations().begin(), traj.observations().end());
    for (std::size_t s = 20; s < changed.size(); ++s) changed[s] = static_cast<double>((static_cast<int>(changed[s]) + 1) % 3);
    const Vector points{0, 1, 2};
    const LogDensityTable a = hmm.log_density_table(theta, traj, points);
    const LogDensityTable b = hmm.log_density_table(theta, traj.with_observations(changed), points);
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a(t, j), b(t, j));
    EXPECT_EQ(before.size(), 30u);
}
