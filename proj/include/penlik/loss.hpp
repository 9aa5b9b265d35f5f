#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "penlik/core.hpp"

namespace penlik {

struct LossReport {
    double kl = 0.0; // K_n
    double variance = 0.0; // V_n in the model's regime
    Vector per_step_kl;
    double log_ratio_bound = 0.0; // F^inf used for V_n
    bool truncated = false;
    double quadrature_error = 0.0;
};

// Conditional densities of the truth and of a candidate on a common grid.
struct PairedTables {
    EvaluationGrid grid;
    LogDensityTable truth;
    LogDensityTable candidate;
};

PairedTables paired_tables(const Model& model, std::span<const double> theta, const Oracle& oracle, const Trajectory& traj);

// Per-step KL(p*_t || p_t) from tables sharing `weights`.
Vector conditional_kl(const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights);
// (1/n) sum_t E[(log p*_t/p_t)^2 1{|log p*_t/p_t| <= bound}]; pass +inf for no truncation.
double variance_from_tables(
    const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights, double bound);
// (1/n) sum_t h^2(p*_t, p_t) with h^2 = (1/2) int (sqrt p* - sqrt p)^2.
double hellinger_from_tables(const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights);

// `oracle` may be null, in which case OracleUnavailable is raised.
LossReport stochastic_kl(const Model& model, std::span<const double> theta, const Oracle* oracle, const Trajectory& traj);
double empirical_variance(
    const Model& model, std::span<const double> theta, const Oracle* oracle, const Trajectory& traj, Regime regime);
double conditional_hellinger(const Model& model, std::span<const double> theta, const Oracle* oracle, const Trajectory& traj);

struct VarianceLemmaRow {
    double variance = 0.0;
    double kl = 0.0;
    double bound = 0.0; // 16 (F^inf)^2 K_n
    double ratio = 0.0; // variance / bound, 0/0 := 0
};

struct VarianceLemmaReport {
    std::vector<VarianceLemmaRow> rows;
    double max_ratio = 0.0;
    std::size_t violations = 0;
};

VarianceLemmaReport check_variance_lemma(
    const Model& model, std::span<const Vector> thetas, const Oracle* oracle, const Trajectory& traj);

struct LemmaPair {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

// Both sides of
//   P[(log p/q)^2 1{|log p/q| <= log 1/lambda}] <= 8(1 + log^2 1/lambda) P[(sqrt(q/p) - 1)^2 1{...}].
LemmaPair check_logratio_hellinger(std::span<const double> p, std::span<const double> q, double lambda);

// Two-sided comparison of K_n with the untruncated V_n through
// phi(u) = e^u - u - 1: with F the largest realized |log ratio|,
//   (phi(-F)/F^2) V_n <= K_n <= (phi(F)/F^2) V_n.
struct SandwichReport {
    double kl = 0.0;
    double variance = 0.0;
    double realized_bound = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool holds = true;
};

SandwichReport check_kl_variance_sandwich(const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights);

} // namespace penlik
