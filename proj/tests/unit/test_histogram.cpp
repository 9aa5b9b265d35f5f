#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "penlik/error.hpp"
#include "penlik/histogram.hpp"

using namespace penlik;

namespace {

Trajectory with_counts(const std::vector<std::size_t>& counts)
{
    Vector obs;
    const double d = static_cast<double>(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (std::size_t c = 0; c < counts[i]; ++c) obs.push_back((static_cast<double>(i) + 0.5) / d);
    return Trajectory(obs);
}

} // namespace

TEST(HistogramBin, BoundaryConvention)
{
    EXPECT_EQ(histogram_bin(0.0, 4), 0u);
    EXPECT_EQ(histogram_bin(0.25, 4), 0u);
    EXPECT_EQ(histogram_bin(0.2500001, 4), 1u);
    EXPECT_EQ(histogram_bin(1.0, 4), 3u);
}

TEST(HistogramModel, DeclaredConstants)
{
    const HistogramModel model(3, 0.1);
    EXPECT_EQ(model.constants().regime, Regime::Bounded);
    EXPECT_DOUBLE_EQ(model.constants().lipschitz, 10.0);
    EXPECT_DOUBLE_EQ(model.constants().diameter, 10.0 - 0.1);
    EXPECT_EQ(model.id(), "hist-3");
}

TEST(Density, RejectsInvalidHeights)
{
    EXPECT_THROW(PiecewiseConstantDensity(Vector{1.5, 0.6}), InvalidDensity);
    EXPECT_THROW(PiecewiseConstantDensity(Vector{2.0, 0.0}), InvalidDensity);
    EXPECT_NO_THROW(PiecewiseConstantDensity(Vector{1.8, 0.2}));
}

TEST(Mle, InteriorOptimumMatchesGridOracle)
{
    const HistogramModel model(2, 0.1);
    const Vector theta = mle_histogram(model, with_counts({3, 1}));
    EXPECT_NEAR(theta[0], 1.5, 1e-9);
    EXPECT_NEAR(theta[1], 0.5, 1e-9);
}

TEST(Mle, EqualCountsGiveUniform)
{
    const HistogramModel model(4, 0.05);
    const Vector theta = mle_histogram(model, with_counts({5, 5, 5, 5}));
    for (double v : theta) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Mle, EmptyBinsClipToFloor)
{
    const HistogramModel model(3, 0.1);
    const Vector theta = mle_histogram(model, with_counts({7, 0, 0}));
    EXPECT_NEAR(theta[0], 2.7999999999999998, 1e-12);
    EXPECT_NEAR(theta[1], 0.1, 1e-12);
    EXPECT_NEAR(theta[2], 0.1, 1e-12);
}

TEST(Mle, CeilingBindsWhenMassConcentrates)
{
    // With eps = 0.35 the first bin stops at 1/eps and the single count in bin 2 takes the rest.
    const HistogramModel model(4, 0.35);
    const Vector theta = mle_histogram(model, with_counts({50, 1, 0, 0}));
    EXPECT_TRUE(model.theta_space().contains(theta, 1e-12));
    EXPECT_NEAR(theta[0], 1.0 / 0.35, 1e-12);
    EXPECT_NEAR(theta[1], 4.0 - 1.0 / 0.35 - 0.7, 1e-12);
    EXPECT_NEAR(theta[2], 0.35, 1e-12);
}

TEST(Mle, DominatesRandomFeasibleParameters)
{
    Philox rng(3, 3);
    for (int instance = 0; instance < 20; ++instance) {
        const std::size_t bins = 1 + uniform_index(rng, 6);
        const HistogramModel model(bins, 0.05);
        std::vector<std::size_t> counts(bins);
        for (auto& c : counts) c = uniform_index(rng, 20);
        counts[0] += 1;
        const Trajectory traj = with_counts(counts);
        const Vector theta = mle_histogram(model, traj);
        ASSERT_TRUE(model.theta_space().contains(theta, 1e-12));
        const double best = partial_log_likelihood(model, theta, traj);
        for (int i = 0; i < 1000; ++i) EXPECT_GE(best, partial_log_likelihood(model, model.random_parameter(rng), traj) - 1e-12);
    }
}

TEST(Mle, KktSolverAgreesWithGridSearch)
{
    // Zooming grid search over the free coordinates; the objective is concave.
    Philox rng(12, 0);
    for (int instance = 0; instance < 30; ++instance) {
        const std::size_t bins = 2 + uniform_index(rng, 2);
        const double eps = 0.1;
        const HistogramModel model(bins, eps);
        std::vector<std::size_t> counts(bins);
        for (auto& c : counts) c = uniform_index(rng, 15);
        counts[1] += 1;
        const Trajectory traj = with_counts(counts);
        const Vector theta = mle_histogram(model, traj);
        const double total = static_cast<double>(bins);
        const auto objective = [&](const Vector& free) {
            Vector t = free;
            t.push_back(total - std::accumulate(free.begin(), free.end(), 0.0));
            double v = 0.0;
            for (std::size_t i = 0; i < bins; ++i) {
                if (t[i] < eps || t[i] > 1.0 / eps) return -1e300;
                if (counts[i] > 0) v += counts[i] * std::log(t[i]);
            }
            return v;
        };
        const std::size_t free_dims = bins - 1;
        const int points = 201;
        Vector lo(free_dims, eps), hi(free_dims, 1.0 / eps), best(free_dims);
        while (hi[0] - lo[0] > 1e-10) {
            double best_value = -1e301;
            Vector node(free_dims);
            std::vector<int> index(free_dims, 0);
            for (;;) {
                for (std::size_t k = 0; k < free_dims; ++k) node[k] = lo[k] + (hi[k] - lo[k]) * index[k] / (points - 1);
                if (const double v = objective(node); v > best_value) {
                    best_value = v;
                    best = node;
                }
                std::size_t k = 0;
                while (k < free_dims && ++index[k] == points) index[k++] = 0;
                if (k == free_dims) break;
            }
            for (std::size_t k = 0; k < free_dims; ++k) {
                const double step = (hi[k] - lo[k]) / (points - 1);
                lo[k] = std::max(eps, best[k] - 2.0 * step);
                hi[k] = std::min(1.0 / eps, best[k] + 2.0 * step);
            }
        }
        for (std::size_t k = 0; k < free_dims; ++k) EXPECT_NEAR(theta[k], best[k], 1e-6);
    }
}

TEST(Sampler, UniformBinFrequencies)
{
    const PiecewiseConstantDensity uniform(Vector{1.0});
    const std::size_t n = 100000;
    const Trajectory traj = sample_iid(uniform, n, std::uint64_t{17});
    const HistogramModel model(5, 0.1);
    const auto counts = model.bin_counts(traj);
    const double sd = std::sqrt(n * 0.2 * 0.8);
    for (auto c : counts) EXPECT_LE(std::abs(static_cast<double>(c) - 0.2 * n), 4.0 * sd);
}

TEST(Sampler, SkewedDensityAndReproducibility)
{
    const PiecewiseConstantDensity skewed(Vector{1.8, 0.2});
    const std::size_t n = 100000;
    const Trajectory a = sample_iid(skewed, n, std::uint64_t{5});
    const Trajectory b = sample_iid(skewed, n, std::uint64_t{5});
    EXPECT_TRUE(std::equal(a.observations().begin(), a.observations().end(), b.observations().begin()));
    const auto counts = HistogramModel(2, 0.1).bin_counts(a);
    EXPECT_LE(std::abs(static_cast<double>(counts[0]) - 0.9 * n), 4.0 * std::sqrt(n * 0.09));
}

TEST(Consistency, WellSpecifiedErrorSmallAtLargeN)
{
    const double eps = 0.05;
    for (std::size_t bins : {2u, 4u, 8u}) {
        const HistogramModel model(bins, eps);
        Philox rng(bins, 99);
        const Vector truth = model.random_parameter(rng);
        std::vector<double> errors;
        for (int rep = 0; rep < 21; ++rep) {
            const Trajectory traj = sample_iid(PiecewiseConstantDensity(truth), 10000, rng);
            const Vector theta = mle_histogram(model, traj);
            double err = 0.0;
            for (std::size_t i = 0; i < bins; ++i) err = std::max(err, std::abs(theta[i] - truth[i]));
            errors.push_back(err);
        }
        std::nth_element(errors.begin(), errors.begin() + 10, errors.end());
        EXPECT_LT(errors[10], 0.05 * std::max(1.0, *std::max_element(truth.begin(), truth.end())));
    }
}
