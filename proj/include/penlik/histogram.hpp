#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "penlik/core.hpp"

namespace penlik {

// Density on [0, 1] that is constant on the bins of a regular partition.
// heights[I] is the density value on bin I, so the heights average to one.
class PiecewiseConstantDensity {
public:
    explicit PiecewiseConstantDensity(Vector heights);

    [[nodiscard]] std::size_t bins() const { return heights_.size(); }
    [[nodiscard]] std::span<const double> heights() const { return heights_; }
    [[nodiscard]] double operator()(double x) const;

private:
    Vector heights_;
};

// Bin of x among `bins` equal bins of [0, 1]. A point on an interior
// boundary belongs to the bin on its left; 0 belongs to the first bin.
std::size_t histogram_bin(double x, std::size_t bins);

// Regular histograms with heights in [eps, 1/eps] averaging to one.
class HistogramModel : public Model {
public:
    HistogramModel(std::size_t bins, double epsilon);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t dim() const override { return bins_; }
    [[nodiscard]] const AssumptionConstants& constants() const override { return constants_; }
    [[nodiscard]] const ThetaSpace& theta_space() const override { return space_; }
    [[nodiscard]] SampleSpace sample_space() const override;

    [[nodiscard]] Vector log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const override;
    [[nodiscard]] LogDensityTable log_density_table(
        std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const override;

    [[nodiscard]] Vector maximum_likelihood(const Trajectory& traj, Philox& rng) const override;
    [[nodiscard]] Vector minimize_oracle_loss(
        const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const override;
    [[nodiscard]] Vector random_parameter(Philox& rng) const override;

    [[nodiscard]] double epsilon() const { return epsilon_; }
    [[nodiscard]] std::vector<std::size_t> bin_counts(const Trajectory& traj) const;

private:
    std::size_t bins_;
    double epsilon_;
    AssumptionConstants constants_;
    ThetaSpace space_;
};

// argmax over the feasible heights of sum_I weights[I] log theta_I.
Vector water_fill(std::span<const double> weights, double epsilon);

Vector mle_histogram(const HistogramModel& model, const Trajectory& traj);

Trajectory sample_iid(const PiecewiseConstantDensity& density, std::size_t n, Philox& rng);
Trajectory sample_iid(const PiecewiseConstantDensity& density, std::size_t n, std::uint64_t seed);

} // namespace penlik
