#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "penlik/core.hpp"

namespace penlik {

struct Exp3Config {
    std::size_t arms = 2;
    double horizon_scale = 1.0; // T; the learning rate is theta / sqrt(T)
    double rate_min = 1.0; // r
    double rate_max = 1.0; // R
    Vector losses; // g_k in [0, 1], constant in time
    double epsilon = 0.1;

    void validate() const;
    // T_eps = floor((1/K - eps) sqrt(T) / R).
    [[nodiscard]] std::size_t truncation() const;
};

// floor((1/cells - eps) sqrt(T) / R), the number of steps during which every
// probability of an exponential-weights learner over `cells` options stays
// above eps.
std::size_t exp3_truncation(std::size_t cells, double horizon_scale, double rate_max, double epsilon);

// Declared log-Lipschitz constant over [r, R] in the sup norm for n steps.
double exp3_lipschitz(std::size_t n, double horizon_scale, double rate_max, double epsilon);

struct Exp3Run {
    Trajectory trajectory; // actions, with the realized losses as side information
    std::vector<Vector> probabilities; // p_t for t = 1..n
};

Exp3Run simulate_exp3(const Exp3Config& config, double theta, Philox& rng);
Exp3Run simulate_exp3(const Exp3Config& config, double theta, std::uint64_t seed);

// p_{theta/sqrt(T), t} after observing `actions` (t = actions.size() + 1).
Vector exp3_cond_prob(const Exp3Config& config, double theta, std::span<const double> actions, std::span<const double> losses);

// Single learning-rate family: theta in [r, R].
class Exp3RateModel : public Model {
public:
    Exp3RateModel(Exp3Config config, std::size_t horizon);

    [[nodiscard]] std::string id() const override { return "exp3-rate"; }
    [[nodiscard]] std::size_t dim() const override { return 1; }
    [[nodiscard]] const AssumptionConstants& constants() const override { return constants_; }
    [[nodiscard]] const ThetaSpace& theta_space() const override { return space_; }
    [[nodiscard]] SampleSpace sample_space() const override { return SampleSpace::finite(config_.arms); }

    [[nodiscard]] Vector log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const override;
    [[nodiscard]] LogDensityTable log_density_table(
        std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const override;

    [[nodiscard]] Vector maximum_likelihood(const Trajectory& traj, Philox& rng) const override;
    [[nodiscard]] Vector minimize_oracle_loss(
        const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const override;
    [[nodiscard]] Vector random_parameter(Philox& rng) const override;

    [[nodiscard]] const Exp3Config& config() const { return config_; }
    // Probability path p_1..p_n along the observed history.
    [[nodiscard]] std::vector<Vector> probability_path(double theta, const Trajectory& traj) const;
    // Log-likelihood and its derivative in theta by forward-mode recursion.
    [[nodiscard]] std::pair<double, double> log_likelihood_with_derivative(double theta, const Trajectory& traj) const;

private:
    Exp3Config config_;
    AssumptionConstants constants_;
    ThetaSpace space_;
};

double mle_learning_rate(const Exp3RateModel& model, const Trajectory& traj);

// Partition of the action set {0, ..., actions-1} into cells.
class Partition {
public:
    explicit Partition(std::vector<std::size_t> cell_of_action);
    // `cells` contiguous blocks of equal size.
    static Partition regular(std::size_t actions, std::size_t cells);

    [[nodiscard]] std::size_t actions() const { return cell_of_action_.size(); }
    [[nodiscard]] std::size_t cells() const { return sizes_.size(); }
    [[nodiscard]] std::size_t cell(std::size_t action) const { return cell_of_action_.at(action); }
    [[nodiscard]] std::size_t cell_size(std::size_t cell) const { return sizes_.at(cell); }
    [[nodiscard]] std::span<const std::size_t> cell_of_action() const { return cell_of_action_; }

private:
    std::vector<std::size_t> cell_of_action_;
    std::vector<std::size_t> sizes_;
};

struct PartitionSettings {
    double horizon_scale = 1.0; // T
    double rate_min = 1.0; // r
    double rate_max = 1.0; // R
    double epsilon = 0.1; // cell-level floor used for the truncation
    std::size_t horizon = 2; // trajectory length n
};

// Exponential weights over the cells of a partition with per-cell losses
// theta_J / sqrt(T); actions are uniform inside the chosen cell.
class Exp3PartitionModel : public Model {
public:
    Exp3PartitionModel(Partition partition, PartitionSettings settings);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t dim() const override { return partition_.cells(); }
    [[nodiscard]] const AssumptionConstants& constants() const override { return constants_; }
    [[nodiscard]] const ThetaSpace& theta_space() const override { return space_; }
    [[nodiscard]] SampleSpace sample_space() const override { return SampleSpace::finite(partition_.actions()); }

    [[nodiscard]] Vector log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const override;
    [[nodiscard]] LogDensityTable log_density_table(
        std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const override;

    [[nodiscard]] Vector maximum_likelihood(const Trajectory& traj, Philox& rng) const override;
    [[nodiscard]] Vector minimize_oracle_loss(
        const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const override;
    [[nodiscard]] Vector random_parameter(Philox& rng) const override;

    [[nodiscard]] const Partition& partition() const { return partition_; }
    [[nodiscard]] const PartitionSettings& settings() const { return settings_; }
    [[nodiscard]] bool degenerate() const { return partition_.cells() == 1; }
    // Steps for which this partition's own learner keeps every cell above eps.
    [[nodiscard]] std::size_t truncation() const;

    // Cell probabilities p_1..p_n along the observed history.
    [[nodiscard]] std::vector<Vector> cell_path(std::span<const double> theta, const Trajectory& traj) const;
    // (1/n) sum_t sum_J w_t(J) log p_t(J) and its gradient, where w_t are
    // cell weights (indicator of the observed cell, or true cell masses).
    [[nodiscard]] double cell_objective(std::span<const double> theta, std::span<const std::size_t> observed_cells,
        std::span<const double> cell_weights, std::span<double> grad) const;

private:
    [[nodiscard]] std::vector<std::size_t> observed_cells(const Trajectory& traj) const;

    Partition partition_;
    PartitionSettings settings_;
    AssumptionConstants constants_;
    ThetaSpace space_;
};

struct PartitionRun {
    Trajectory trajectory;
    std::vector<std::size_t> cells;
    std::vector<Vector> cell_probabilities;
};

// Runs for `steps` steps, or the model's own truncation when steps == 0.
PartitionRun simulate_partition_learner(const Exp3PartitionModel& model, std::span<const double> theta, Philox& rng, std::size_t steps = 0);
PartitionRun simulate_partition_learner(
    const Exp3PartitionModel& model, std::span<const double> theta, std::uint64_t seed, std::size_t steps = 0);

Vector mle_partition(const Exp3PartitionModel& model, const Trajectory& traj);

// CSV with columns t, action, cell, loss and optionally the true probability
// of every action.
void write_bandit_csv(const Trajectory& traj, std::span<const std::size_t> cells, const std::vector<Vector>* truth, std::ostream& out);

} // namespace penlik
