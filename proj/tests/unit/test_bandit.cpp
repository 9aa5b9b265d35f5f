#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>
#include <vector>

#include "penlik/bandit.hpp"
#include "penlik/error.hpp"
#include "penlik/loss.hpp"

using namespace penlik;

namespace {

Exp3Config three_arms()
{
    Exp3Config c;
    c.arms = 3;
    c.horizon_scale = 250000;
    c.rate_min = 0.5;
    c.rate_max = 2.0;
    c.losses = {0.9, 0.5, 0.1};
    c.epsilon = 0.1;
    return c;
}

PartitionSettings partition_settings(std::size_t horizon)
{
    PartitionSettings s;
    s.horizon_scale = 1e6;
    s.rate_min = 0.5;
    s.rate_max = 2.0;
    s.epsilon = 0.1;
    s.horizon = horizon;
    return s;
}

} // namespace

TEST(Exp3, TruncationAndValidation)
{
    const Exp3Config c = three_arms();
    EXPECT_EQ(c.truncation(), static_cast<std::size_t>(std::floor((1.0 / 3.0 - 0.1) * 500.0 / 2.0)));
    Exp3Config bad = c;
    bad.epsilon = 0.4;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = c;
    bad.horizon_scale = 1.0;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    bad = c;
    bad.losses = {0.5, 1.5, 0.0};
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Exp3, FirstStepsByHand)
{
    Exp3Config c;
    c.arms = 2;
    c.horizon_scale = 100;
    c.rate_min = 0.5;
    c.rate_max = 1.0;
    c.losses = {1.0, 1.0};
    c.epsilon = 0.1;
    const Vector uniform = exp3_cond_prob(c, 1.0, {}, {});
    EXPECT_EQ(uniform, (Vector{0.5, 0.5}));
    const Vector actions{0.0};
    const Vector losses{1.0};
    const Vector p2 = exp3_cond_prob(c, 1.0, actions, losses);
    EXPECT_NEAR(p2[0], 0.4501660026875221, 1e-15);
    EXPECT_NEAR(p2[0] + p2[1], 1.0, 1e-15);
    const Vector bad_action{2.0};
    EXPECT_THROW(static_cast<void>(exp3_cond_prob(c, 1.0, bad_action, losses)), InconsistentHistory);
}

TEST(Exp3, ReconstructionMatchesSimulatorExactly)
{
    const Exp3Config c = three_arms();
    const Exp3Run run = simulate_exp3(c, 1.3, std::uint64_t{4});
    const auto& losses = run.trajectory.side<BanditHistory>().realized_losses;
    const auto obs = run.trajectory.observations();
    for (std::size_t t = 0; t < run.trajectory.n(); t += 7) {
        const Vector p = exp3_cond_prob(c, 1.3, obs.subspan(0, t), std::span<const double>(losses).subspan(0, t));
        EXPECT_EQ(p, run.probabilities[t]);
    }
    const Exp3RateModel model(c, c.truncation());
    EXPECT_EQ(model.probability_path(1.3, run.trajectory), run.probabilities);
    for (const auto& row : model.probability_path(0.6, run.trajectory))
        EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
}

TEST(Exp3, ProbabilitiesArePredictable)
{
    const Exp3Config c = three_arms();
    const Exp3Run run = simulate_exp3(c, 1.0, std::uint64_t{5});
    const Exp3RateModel model(c, c.truncation());
    const std::size_t t = 20;
    Vector altered(run.trajectory.observations().begin(), run.trajectory.observations().end());
    Vector losses = run.trajectory.side<BanditHistory>().realized_losses;
    for (std::size_t s = t; s < altered.size(); ++s) {
        altered[s] = static_cast<double>((static_cast<std::size_t>(altered[s]) + 1) % 3);
        losses[s] = c.losses[static_cast<std::size_t>(altered[s])];
    }
    const Trajectory other(altered, BanditHistory{losses});
    const auto a = model.probability_path(0.9, run.trajectory);
    const auto b = model.probability_path(0.9, other);
    for (std::size_t s = 0; s <= t; ++s) EXPECT_EQ(a[s], b[s]);
}

TEST(Exp3, FloorHoldsAcrossSeeds)
{
    for (std::size_t arms : {2u, 5u}) {
        Exp3Config c;
        c.arms = arms;
        c.horizon_scale = 1e6;
        c.rate_min = 0.5;
        c.rate_max = 2.0;
        c.epsilon = 0.05;
        for (std::size_t k = 0; k < arms; ++k) c.losses.push_back(static_cast<double>(k) / (arms - 1));
        for (double theta : {0.5, 1.25, 2.0})
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                const Exp3Run run = simulate_exp3(c, theta, seed);
                double lowest = 1.0;
                for (const auto& row : run.probabilities) lowest = std::min(lowest, *std::min_element(row.begin(), row.end()));
                ASSERT_GE(lowest, c.epsilon);
            }
    }
}

TEST(Exp3, DerivativeMatchesFiniteDifferences)
{
    const Exp3Config c = three_arms();
    const Exp3RateModel model(c, c.truncation());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Exp3Run run = simulate_exp3(c, 1.5, seed);
        for (double theta : {0.6, 1.1, 1.9}) {
            const auto [value, derivative] = model.log_likelihood_with_derivative(theta, run.trajectory);
            EXPECT_NEAR(value, partial_log_likelihood(model, Vector{theta}, run.trajectory), 1e-9);
            const double h = 1e-5;
            const double fd = (model.log_likelihood_with_derivative(theta + h, run.trajectory).first
                                  - model.log_likelihood_with_derivative(theta - h, run.trajectory).first)
                / (2.0 * h);
            EXPECT_LE(std::abs(fd - derivative), 1e-6 * std::max(1.0, std::abs(derivative)));
        }
    }
}

TEST(Exp3, MleMatchesDenseGrid)
{
    const Exp3Config c = three_arms();
    const Exp3RateModel model(c, c.truncation());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Exp3Run run = simulate_exp3(c, 1.2, seed);
        const double theta = mle_learning_rate(model, run.trajectory);
        const double best = partial_log_likelihood(model, Vector{theta}, run.trajectory);
        double grid_best = -1e300, grid_arg = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double v = c.rate_min + (c.rate_max - c.rate_min) * i / 9999.0;
            const double value = partial_log_likelihood(model, Vector{v}, run.trajectory);
            if (value > grid_best) {
                grid_best = value;
                grid_arg = v;
            }
        }
        EXPECT_GE(best, grid_best - 1e-9);
        EXPECT_NEAR(theta, grid_arg, 1e-3);
        if (theta > c.rate_min + 1e-3 && theta < c.rate_max - 1e-3)
            EXPECT_LE(std::abs(model.log_likelihood_with_derivative(theta, run.trajectory).second), 1e-6 * run.trajectory.n());
    }
    Exp3Config fixed = c;
    fixed.rate_min = fixed.rate_max = 1.0;
    const Exp3RateModel singleton(fixed, fixed.truncation());
    EXPECT_EQ(mle_learning_rate(singleton, simulate_exp3(fixed, 1.0, std::uint64_t{1}).trajectory), 1.0);
}

TEST(Exp3, ErrorShrinksWithTruncation)
{
    std::vector<double> log_n, log_err;
    for (double scale : {4e6, 6.4e7, 1.024e9}) {
        Exp3Config c;
        c.arms = 2;
        c.horizon_scale = scale;
        c.rate_min = 0.2;
        c.rate_max = 4.0;
        c.losses = {1.0, 0.0};
        c.epsilon = 0.1;
        const Exp3RateModel model(c, c.truncation());
        std::vector<double> errors;
        for (std::uint64_t seed = 0; seed < 15; ++seed)
            errors.push_back(std::abs(mle_learning_rate(model, simulate_exp3(c, 2.0, seed).trajectory) - 2.0));
        std::nth_element(errors.begin(), errors.begin() + 7, errors.end());
        log_n.push_back(std::log(static_cast<double>(c.truncation())));
        log_err.push_back(std::log(errors[7]));
    }
    const double mx = (log_n[0] + log_n[1] + log_n[2]) / 3.0;
    const double my = (log_err[0] + log_err[1] + log_err[2]) / 3.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        sxy += (log_n[i] - mx) * (log_err[i] - my);
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
    }
    EXPECT_LE(sxy / sxx, -0.25);
}

TEST(Exp3, LipschitzBoundsSampledPairs)
{
    const Exp3Config c = three_arms();
    const Exp3RateModel model(c, c.truncation());
    const Exp3Run run = simulate_exp3(c, 1.4, std::uint64_t{2});
    Philox rng(3, 0);
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int i = 0; i < 200; ++i) pairs.push_back({model.random_parameter(rng), model.random_parameter(rng)});
    EXPECT_LE(estimate_lipschitz(model, run.trajectory, pairs), model.constants().lipschitz);
}

TEST(Partition, RegularBlocksAndValidation)
{
    const Partition p = Partition::regular(6, 3);
    EXPECT_EQ(p.cells(), 3u);
    EXPECT_EQ(p.cell(3), 1u);
    EXPECT_EQ(p.cell_size(2), 2u);
    EXPECT_THROW(Partition::regular(6, 4), InvalidArgument);
    EXPECT_THROW(Partition({0, 2}), InvalidArgument);
}

TEST(Partition, SingleCellIsUniform)
{
    const Exp3PartitionModel model(Partition::regular(4, 1), partition_settings(100));
    EXPECT_TRUE(model.degenerate());
    const PartitionRun run = simulate_partition_learner(model, Vector{1.0}, std::uint64_t{3}, 100);
    for (const auto& row : run.cell_probabilities) EXPECT_EQ(row[0], 1.0);
    for (double term : model.log_likelihood_terms(Vector{1.7}, run.trajectory)) EXPECT_NEAR(term, std::log(0.25), 1e-15);
    const Vector fit = mle_partition(model, run.trajectory);
    EXPECT_TRUE(model.theta_space().contains(fit));
}

TEST(Partition, EqualRewardsAreSymmetric)
{
    // Pathwise the chosen cell is penalized, so uniformity only holds on average.
    const Exp3PartitionModel model(Partition::regular(4, 2), partition_settings(200));
    double mean = 0.0;
    const int seeds = 400;
    for (int seed = 0; seed < seeds; ++seed) {
        const PartitionRun run = simulate_partition_learner(model, Vector{1.2, 1.2}, static_cast<std::uint64_t>(seed), 200);
        EXPECT_EQ(run.cell_probabilities[0], (Vector{0.5, 0.5}));
        mean += run.cell_probabilities.back()[0] / seeds;
    }
    EXPECT_NEAR(mean, 0.5, 0.01);
    const PartitionRun a = simulate_partition_learner(model, Vector{1.2, 1.2}, std::uint64_t{4}, 200);
    const PartitionRun b = simulate_partition_learner(model, Vector{1.2, 1.2}, std::uint64_t{4}, 200);
    EXPECT_EQ(a.cells, b.cells);
    EXPECT_EQ(a.cell_probabilities, b.cell_probabilities);
}

TEST(Partition, GradientMatchesFiniteDifferences)
{
    const Exp3PartitionModel model(Partition::regular(8, 4), partition_settings(300));
    const PartitionRun run = simulate_partition_learner(model, Vector{0.6, 1.0, 1.5, 1.9}, std::uint64_t{7}, 300);
    Philox rng(4, 4);
    for (int i = 0; i < 10; ++i) {
        const Vector theta = model.random_parameter(rng);
        Vector grad(4), scratch(4);
        const double value = model.cell_objective(theta, run.cells, {}, grad);
        EXPECT_NEAR(value * 300.0,
            partial_log_likelihood(model, theta, run.trajectory) + 300.0 * std::log(2.0), 1e-9);
        for (std::size_t k = 0; k < 4; ++k) {
            Vector up = theta, down = theta;
            up[k] += 1e-5;
            down[k] -= 1e-5;
            const double fd = (model.cell_objective(up, run.cells, {}, scratch) - model.cell_objective(down, run.cells, {}, scratch)) / 2e-5;
            EXPECT_LE(std::abs(fd - grad[k]), 1e-6 * std::max(1.0, std::abs(grad[k])));
        }
    }
}

TEST(Partition, MleDominatesProbeSet)
{
    const Exp3PartitionModel model(Partition::regular(4, 2), partition_settings(400));
    const PartitionRun run = simulate_partition_learner(model, Vector{0.7, 1.8}, std::uint64_t{8}, 400);
    const Vector fit = mle_partition(model, run.trajectory);
    ASSERT_TRUE(model.theta_space().contains(fit));
    const double best = partial_log_likelihood(model, fit, run.trajectory);
    Philox rng(1, 2);
    for (int i = 0; i < 1000; ++i) EXPECT_GE(best, partial_log_likelihood(model, model.random_parameter(rng), run.trajectory) - 1e-9);
}

TEST(Partition, OracleLossZeroAtTruth)
{
    auto model = std::make_shared<Exp3PartitionModel>(Partition::regular(4, 2), partition_settings(300));
    const Vector theta{0.8, 1.6};
    const PartitionRun run = simulate_partition_learner(*model, theta, std::uint64_t{9}, 300);
    const Oracle oracle(model, theta);
    EXPECT_LE(std::abs(stochastic_kl(*model, theta, &oracle, run.trajectory).kl), 1e-12);
}

TEST(Csv, WritesOneRowPerStep)
{
    const Exp3Config c = three_arms();
    const Exp3Run run = simulate_exp3(c, 1.0, std::uint64_t{1});
    std::ostringstream out;
    write_bandit_csv(run.trajectory, {}, &run.probabilities, out);
    const std::string text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(run.trajectory.n() + 1));
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,action,cell,loss,p0,p1,p2");
}
