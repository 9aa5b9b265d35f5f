#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "penlik/core.hpp"

namespace penlik {

enum class NeuroVariant { Hawkes, GL };

std::string_view to_string(NeuroVariant variant);
NeuroVariant parse_variant(std::string_view text);

// Increasing link from the linear predictor to a spike probability.
class RateFunction {
public:
    enum class Kind { Linear, Sigmoid };

    // phi(x) = baseline + x
    static RateFunction linear(double baseline);
    // phi(x) = 1 / (1 + exp(-(x + offset)))
    static RateFunction sigmoid(double offset = 0.0);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double parameter() const { return parameter_; }
    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] double derivative(double x) const;
    [[nodiscard]] double inverse(double p) const;
    [[nodiscard]] double lipschitz() const;

private:
    RateFunction(Kind kind, double parameter) : kind_(kind), parameter_(parameter) {}

    Kind kind_;
    double parameter_;
};

// Interaction weights of a whole network: weight(i, j, u) is the effect of a
// spike of j at time t-u on neuron i at time t, for u = 1..lag.
struct NetworkParameters {
    std::size_t neurons = 0;
    std::size_t lag = 0;
    std::vector<RateFunction> rates; // one per neuron
    Vector weights; // neurons x neurons x lag

    [[nodiscard]] double weight(std::size_t i, std::size_t j, std::size_t u) const;
    // Weights into neuron i laid out as in a model with neighborhood {0..N-1}.
    [[nodiscard]] Vector incoming(std::size_t i) const;
    // Throws RateOutOfRange when some reachable rate leaves [eps, 1 - eps].
    void validate(double epsilon) const;
};

// Bernoulli spike model for one target neuron with neighborhood V and lag A.
// theta[v * A + (u - 1)] multiplies the spike of neighborhood[v] at t - u.
class NeuroModel : public Model {
public:
    NeuroModel(std::size_t target, std::vector<std::size_t> neighborhood, std::size_t lag, NeuroVariant variant,
        RateFunction rate, double epsilon);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t dim() const override { return lag_ * neighborhood_.size(); }
    [[nodiscard]] const AssumptionConstants& constants() const override { return constants_; }
    [[nodiscard]] const ThetaSpace& theta_space() const override { return space_; }
    [[nodiscard]] SampleSpace sample_space() const override { return SampleSpace::finite(2); }

    [[nodiscard]] Vector log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const override;
    [[nodiscard]] LogDensityTable log_density_table(
        std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const override;

    [[nodiscard]] Vector maximum_likelihood(const Trajectory& traj, Philox& rng) const override;
    [[nodiscard]] Vector minimize_oracle_loss(
        const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const override;
    [[nodiscard]] Vector random_parameter(Philox& rng) const override;

    [[nodiscard]] std::size_t target() const { return target_; }
    [[nodiscard]] std::span<const std::size_t> neighborhood() const { return neighborhood_; }
    [[nodiscard]] std::size_t lag() const { return lag_; }
    [[nodiscard]] NeuroVariant variant() const { return variant_; }
    [[nodiscard]] const RateFunction& rate() const { return rate_; }
    [[nodiscard]] double epsilon() const { return epsilon_; }

    // Linear predictor and spike probability at time t (1-based).
    [[nodiscard]] double linear_predictor(std::span<const double> theta, const SpikeRaster& raster, int t) const;
    [[nodiscard]] double spike_prob(std::span<const double> theta, const SpikeRaster& raster, int t) const;

    // 0/1 regressors for steps 1..n, row-major n x dim.
    [[nodiscard]] std::vector<std::uint8_t> design(const SpikeRaster& raster, std::size_t n) const;

    // Mean Bernoulli log-likelihood of `labels` (soft or hard) and its gradient.
    [[nodiscard]] double objective(std::span<const double> theta, std::span<const std::uint8_t> design,
        std::span<const double> labels, std::span<double> grad) const;

    // Euclidean projection onto the feasible set.
    void project(std::span<double> theta) const;

    // Maximizes the mean log-likelihood of `labels` over the feasible set,
    // starting from `start` when it is feasible and from zero otherwise.
    [[nodiscard]] Vector fit(
        std::span<const std::uint8_t> design, std::span<const double> labels, std::span<const double> start = {}) const;

private:
    void check_history(const Trajectory& traj) const;
    [[nodiscard]] int last_spike_before(const SpikeRaster& raster, int t) const;

    std::size_t target_;
    std::vector<std::size_t> neighborhood_;
    std::size_t lag_;
    NeuroVariant variant_;
    RateFunction rate_;
    double epsilon_;
    double positive_budget_; // phi^{-1}(1 - eps)
    double negative_budget_; // -phi^{-1}(eps)
    AssumptionConstants constants_;
    ThetaSpace space_;
};

// Observations are the target's spikes at 1..n; the raster rides along.
Trajectory neuro_trajectory(const SpikeRaster& raster, std::size_t target);

// The true conditional model of `target`: full neighborhood, true lag.
NeuroModel true_neuro_model(const NetworkParameters& params, std::size_t target, NeuroVariant variant, double epsilon);

// Simulates times -window..n. Spikes before -window are taken from
// `initial_window` (neurons x window, oldest first) or are all zero.
SpikeRaster simulate_network(const NetworkParameters& params, NeuroVariant variant, std::size_t n, std::size_t window,
    double epsilon, Philox& rng, const std::vector<std::vector<std::uint8_t>>* initial_window = nullptr);
SpikeRaster simulate_network(const NetworkParameters& params, NeuroVariant variant, std::size_t n, std::size_t window,
    double epsilon, std::uint64_t seed);

Vector neuro_mle(const NeuroModel& model, const Trajectory& traj);

// (1/n) sum_t (true predictor - model predictor)^2 along the trajectory.
double average_square_distance(
    const NetworkParameters& truth, const NeuroModel& model, std::span<const double> theta, const Trajectory& traj);

// Constants c1 <= c2 with c1 d^2 <= KL(Ber(phi(a)) || Ber(phi(b))) <= c2 d^2,
// d = a - b, for predictors a, b in [lo, hi].
struct DistanceSandwich {
    double lower = 0.0;
    double upper = 0.0;
};

DistanceSandwich distance_sandwich(const RateFunction& rate, double lo, double hi);

void write_raster_csv(const SpikeRaster& raster, std::ostream& out);
SpikeRaster read_raster_csv(std::istream& in);

} // namespace penlik
