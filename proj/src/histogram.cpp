#include "penlik/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "penlik/error.hpp"
#include "penlik/optimize.hpp"

namespace penlik {

PiecewiseConstantDensity::PiecewiseConstantDensity(Vector heights) : heights_(std::move(heights))
{
    if (heights_.empty()) throw InvalidDensity("histogram density: no bins");
    double total = 0.0;
    for (double h : heights_) {
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidDensity("histogram density: heights must be positive");
        total += h;
    }
    if (std::abs(total / static_cast<double>(heights_.size()) - 1.0) > 1e-9)
        throw InvalidDensity("histogram density: heights must average to one");
}

double PiecewiseConstantDensity::operator()(double x) const
{
    if (x < 0.0 || x > 1.0) return 0.0;
    return heights_[histogram_bin(x, heights_.size())];
}

std::size_t histogram_bin(double x, std::size_t bins)
{
    const double scaled = std::ceil(x * static_cast<double>(bins));
    if (scaled <= 1.0) return 0;
    return std::min(static_cast<std::size_t>(scaled) - 1, bins - 1);
}

// ---------------------------------------------------------------------------

HistogramModel::HistogramModel(std::size_t bins, double epsilon) : bins_(bins), epsilon_(epsilon)
{
    if (bins == 0) throw InvalidArgument("HistogramModel: need at least one bin");
    constants_.regime = Regime::Bounded;
    constants_.epsilon = epsilon;
    constants_.lipschitz = 1.0 / epsilon;
    constants_.diameter = 1.0 / epsilon - epsilon;
    constants_.norm = NormId::Sup;
    constants_.validate();

    const double d = static_cast<double>(bins);
    space_ = ThetaSpace(Vector(bins, epsilon), Vector(bins, 1.0 / epsilon));
    space_.with_equality(AffineEquality{Vector(bins, 1.0 / d), 1.0});
}

std::string HistogramModel::id() const
{
    return "hist-" + std::to_string(bins_);
}

SampleSpace HistogramModel::sample_space() const
{
    Vector breaks(bins_ + 1);
    for (std::size_t i = 0; i <= bins_; ++i) breaks[i] = static_cast<double>(i) / static_cast<double>(bins_);
    breaks.back() = 1.0;
    return SampleSpace::unit_interval(std::move(breaks));
}

Vector HistogramModel::log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const
{
    Vector out(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t) {
        const double x = traj.observations()[t];
        out[t] = (x < 0.0 || x > 1.0) ? -std::numeric_limits<double>::infinity() : std::log(theta[histogram_bin(x, bins_)]);
    }
    return out;
}

LogDensityTable HistogramModel::log_density_table(
    std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const
{
    Vector row(points.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
        const double x = points[j];
        row[j] = (x < 0.0 || x > 1.0) ? -std::numeric_limits<double>::infinity() : std::log(theta[histogram_bin(x, bins_)]);
    }
    LogDensityTable table(traj.n(), points.size());
    for (std::size_t t = 0; t < traj.n(); ++t)
        for (std::size_t j = 0; j < points.size(); ++j) table(t, j) = row[j];
    return table;
}

std::vector<std::size_t> HistogramModel::bin_counts(const Trajectory& traj) const
{
    std::vector<std::size_t> counts(bins_, 0);
    for (double x : traj.observations()) {
        if (x < 0.0 || x > 1.0) throw InvalidArgument("histogram: observation outside [0, 1]");
        ++counts[histogram_bin(x, bins_)];
    }
    return counts;
}

Vector HistogramModel::maximum_likelihood(const Trajectory& traj, Philox&) const
{
    return mle_histogram(*this, traj);
}

Vector HistogramModel::minimize_oracle_loss(const Trajectory& traj, const Oracle& oracle, std::span<const double>, Philox&) const
{
    // K_n is linear in the log-heights, weighted by the true mass of each bin
    // averaged over steps, so the same solver applies.
    const EvaluationGrid grid = evaluation_grid(oracle.sample_space(), sample_space());
    const LogDensityTable truth = oracle.log_density_table(traj, grid.points);
    Vector mass(bins_, 0.0);
    for (std::size_t t = 0; t < truth.steps(); ++t)
        for (std::size_t j = 0; j < grid.points.size(); ++j)
            mass[histogram_bin(grid.points[j], bins_)] += grid.weights[j] * std::exp(truth(t, j));
    return water_fill(mass, epsilon_);
}

Vector HistogramModel::random_parameter(Philox& rng) const
{
    Vector theta(bins_);
    double total = 0.0;
    for (double& v : theta) {
        v = -std::log1p(-uniform01(rng));
        total += v;
    }
    for (double& v : theta) v *= static_cast<double>(bins_) / total;
    project_capped_simplex(theta, epsilon_, 1.0 / epsilon_, static_cast<double>(bins_));
    return theta;
}

// ---------------------------------------------------------------------------

Vector water_fill(std::span<const double> weights, double epsilon)
{
    const std::size_t bins = weights.size();
    if (bins == 0) throw InvalidArgument("water_fill: no bins");
    const double d = static_cast<double>(bins);
    const double lo = epsilon, hi = 1.0 / epsilon;
    double total = 0.0, w_min = std::numeric_limits<double>::infinity(), w_max = 0.0;
    std::size_t positive = 0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw InvalidArgument("water_fill: weights must be nonnegative");
        total += w;
        if (w > 0.0) {
            ++positive;
            w_min = std::min(w_min, w);
            w_max = std::max(w_max, w);
        }
    }
    if (!(total > 0.0)) throw EmptyTrajectory("water_fill: no mass");

    Vector theta(bins);
    // Even with every occupied bin at the ceiling the constraint is slack:
    // the objective ignores empty bins, which share the remainder.
    if (static_cast<double>(positive) * hi + static_cast<double>(bins - positive) * lo <= d) {
        const double rest = positive < bins ? (d - static_cast<double>(positive) * hi) / static_cast<double>(bins - positive) : 0.0;
        for (std::size_t i = 0; i < bins; ++i) theta[i] = weights[i] > 0.0 ? hi : std::clamp(rest, lo, hi);
        return theta;
    }

    auto height = [&](std::size_t i, double lambda) { return std::clamp(d * weights[i] / (total * lambda), lo, hi); };
    auto mean_height = [&](double lambda) {
        double s = 0.0;
        for (std::size_t i = 0; i < bins; ++i) s += height(i, lambda);
        return s / d;
    };

    double a = d * w_min * lo / total; // every occupied bin at the ceiling: mean >= 1
    double b = d * w_max / (total * lo); // every bin at the floor: mean <= 1
    while (b / a - 1.0 > 1e-12) {
        const double mid = std::sqrt(a * b);
        if (mid <= a || mid >= b) break;
        (mean_height(mid) >= 1.0 ? a : b) = mid;
    }
    const double lambda = std::sqrt(a * b);

    // Free heights are proportional to the weights; fix their common scale so
    // the equality holds exactly.
    double clipped = 0.0, free_weight = 0.0;
    std::vector<bool> is_free(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        const double raw = d * weights[i] / (total * lambda);
        is_free[i] = raw > lo && raw < hi;
        theta[i] = height(i, lambda);
        if (is_free[i])
            free_weight += weights[i];
        else
            clipped += theta[i];
    }
    if (free_weight > 0.0) {
        const double scale = (d - clipped) / free_weight;
        for (std::size_t i = 0; i < bins; ++i)
            if (is_free[i]) theta[i] = std::clamp(weights[i] * scale, lo, hi);
    }
    return theta;
}

Vector mle_histogram(const HistogramModel& model, const Trajectory& traj)
{
    const auto counts = model.bin_counts(traj);
    Vector weights(counts.begin(), counts.end());
    return water_fill(weights, model.epsilon());
}

// ---------------------------------------------------------------------------

Trajectory sample_iid(const PiecewiseConstantDensity& density, std::size_t n, Philox& rng)
{
    const std::size_t bins = density.bins();
    const double d = static_cast<double>(bins);
    Vector cumulative(bins);
    double acc = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        acc += density.heights()[i] / d;
        cumulative[i] = acc;
    }
    Vector xs(n);
    for (double& x : xs) {
        const double u = uniform01(rng) * acc;
        const std::size_t bin = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()), bins - 1);
        const double start = bin == 0 ? 0.0 : cumulative[bin - 1];
        const double within = (u - start) / (density.heights()[bin] / d);
        x = std::clamp((static_cast<double>(bin) + within) / d, static_cast<double>(bin) / d, static_cast<double>(bin + 1) / d);
    }
    return Trajectory(std::move(xs));
}

Trajectory sample_iid(const PiecewiseConstantDensity& density, std::size_t n, std::uint64_t seed)
{
    Philox rng(seed, 0);
    return sample_iid(density, n, rng);
}

} // namespace penlik
