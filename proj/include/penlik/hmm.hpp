#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "penlik/core.hpp"

namespace penlik {

// Full (row-stochastic) form of an HMM parameter.
struct HmmParameters {
    Vector initial; // h
    std::vector<Vector> transition; // h x h
    std::vector<Vector> emission; // h x alphabet
};

struct EmOptions {
    std::size_t restarts = 3;
    std::size_t max_iter = 500;
    double tol = 1e-9;
};

// Finite-state, finite-alphabet hidden Markov models whose initial and
// transition entries lie in [1/(c log n h), c log n / h] and whose emission
// entries are at least n^{-alpha}. The free parameter drops the last entry
// of every row: h-1 initial, h(h-1) transition and h(|X|-1) emission values.
class HmmModel : public Model {
public:
    HmmModel(std::size_t states, std::size_t alphabet, std::size_t horizon, double c_q = 2.0, double alpha = 1.0);

    [[nodiscard]] std::string id() const override;
    [[nodiscard]] std::size_t dim() const override;
    [[nodiscard]] const AssumptionConstants& constants() const override { return constants_; }
    [[nodiscard]] const ThetaSpace& theta_space() const override { return space_; }
    [[nodiscard]] SampleSpace sample_space() const override { return SampleSpace::finite(alphabet_); }

    [[nodiscard]] Vector log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const override;
    [[nodiscard]] LogDensityTable log_density_table(
        std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const override;

    [[nodiscard]] Vector maximum_likelihood(const Trajectory& traj, Philox& rng) const override;
    [[nodiscard]] Vector minimize_oracle_loss(
        const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const override;
    [[nodiscard]] Vector random_parameter(Philox& rng) const override;

    [[nodiscard]] std::size_t states() const { return states_; }
    [[nodiscard]] std::size_t alphabet() const { return alphabet_; }
    [[nodiscard]] std::size_t horizon() const { return horizon_; }
    [[nodiscard]] double transition_lower() const { return lower_; }
    [[nodiscard]] double transition_upper() const { return upper_; }
    [[nodiscard]] double emission_floor() const { return floor_; }

    [[nodiscard]] Vector pack(const HmmParameters& params) const;
    [[nodiscard]] HmmParameters unpack(std::span<const double> theta) const;
    // Clips every row into its box and restores the row sums.
    void repair(HmmParameters& params) const;

    [[nodiscard]] HmmModel with_lipschitz(double lipschitz) const;
    void set_em_options(const EmOptions& options) { em_ = options; }
    [[nodiscard]] const EmOptions& em_options() const { return em_; }
    void set_oracle_fit_iterations(std::size_t iterations) { oracle_fit_iterations_ = iterations; }

private:
    std::size_t states_;
    std::size_t alphabet_;
    std::size_t horizon_;
    double c_q_;
    double alpha_;
    double lower_;
    double upper_;
    double floor_;
    AssumptionConstants constants_;
    ThetaSpace space_;
    EmOptions em_;
    std::size_t oracle_fit_iterations_ = 40;
};

// Predictive log-probabilities log p_t(x) for every step and symbol.
LogDensityTable hmm_conditional_densities(const HmmModel& model, std::span<const double> theta, const Trajectory& traj);

Vector hmm_em_fit(const HmmModel& model, const Trajectory& traj, const EmOptions& options, Philox& rng);

struct HmmSample {
    Trajectory trajectory;
    std::vector<std::size_t> hidden;
};

HmmSample sample_hmm(const HmmModel& model, std::span<const double> theta, std::size_t n, Philox& rng);
HmmSample sample_hmm(const HmmModel& model, std::span<const double> theta, std::size_t n, std::uint64_t seed);

// Moves `row` into {lo <= x_i <= hi, sum x_i = 1}, shifting mass in
// proportion to each entry's remaining room.
void repair_probability_row(std::span<double> row, double lo, double hi);

// Lipschitz estimate on a pilot trajectory from random nearby and distant pairs.
double pilot_lipschitz(const HmmModel& model, const Trajectory& pilot, std::size_t pairs, Philox& rng);

} // namespace penlik
