#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "penlik/core.hpp"

namespace penlik {

struct PenaltySpec {
    Regime regime = Regime::Bounded;
    double kappa = 1.0;
    double c_constant = 1.0;
    std::size_t n = 2;

    void validate() const;
};

// The parts of a model that the penalty machinery needs.
struct ModelSummary {
    std::string id;
    std::size_t dim = 0;
    AssumptionConstants constants;
};

ModelSummary summarize(const Model& model);

double penalty_bounded(const AssumptionConstants& constants, std::size_t dim, const PenaltySpec& spec);
double penalty_unbounded(const AssumptionConstants& constants, std::size_t dim, const PenaltySpec& spec);
// Dispatches on spec.regime.
double penalty(const AssumptionConstants& constants, std::size_t dim, const PenaltySpec& spec);

// Per-model residual of the high-probability oracle inequality at deviation
// level x, with the residual constant taken equal to the penalty constant.
double residual_term(const AssumptionConstants& constants, const PenaltySpec& spec, double x);

// Residual of the expectation form, given the uniform bounds A(n) and B(n).
double expectation_residual(double complexity, double scale_bound, double tail_bound, double epsilon, const PenaltySpec& spec);

// 18 log(n) Sigma e^{-x} (+ 2/n in the unbounded regime).
double failure_budget(Regime regime, std::size_t n, double complexity, double x);

// sigma minus the right-hand side of the fixed-point equation
//   sigma = (1 ^ v/sigma) sqrt((D+1) log(v/sigma v e)) + (A/sigma)(D+1) log(v/sigma v e),
// v = A sqrt(2n). Strictly decreasing in sigma.
double sigma_residual(double sigma, double scale, std::size_t n, std::size_t dim);
double sigma_fixed_point(double scale, std::size_t n, std::size_t dim, double tol = 1e-10);
// Same equation without the (1 ^ v/sigma) factor; the dominating solution.
double sigma_dominating_residual(double sigma, double scale, std::size_t n, std::size_t dim);
double sigma_dominating(double scale, std::size_t n, std::size_t dim, double tol = 1e-10);

struct ComplexitySum {
    double value = 0.0;
    double tail_share = 0.0; // share of the largest-dimension terms
    bool tail_warning = false; // tail_share > 1%
};

ComplexitySum complexity_sum(std::span<const ModelSummary> models);

struct SelectionRow {
    std::string model_id;
    std::size_t dim = 0;
    Vector theta;
    double mean_log_likelihood = 0.0; // l_n(theta_hat)/n
    double penalty = 0.0;
    double criterion = 0.0;
};

struct SelectionReport {
    std::vector<SelectionRow> rows;
    std::size_t selected = 0;
    bool tie_break_applied = false;

    [[nodiscard]] const SelectionRow& selected_row() const { return rows.at(selected); }
};

struct ModelFit {
    std::shared_ptr<const Model> model;
    Vector theta;
    double log_likelihood = 0.0;
};

// Computes crit = -l/n + pen for each row with `penalty` filled in, and picks
// the minimizer. Ties within 1e-12 relative go to the smallest dimension,
// then the smallest id.
SelectionReport select_by_criterion(std::vector<SelectionRow> rows);
SelectionReport select_model(std::span<const ModelFit> fits, const PenaltySpec& spec);

// C-independent results of one simulated replication.
struct ModelOutcome {
    ModelSummary model;
    double mean_log_likelihood = 0.0;
    double fitted_loss = 0.0; // K_n at the maximum likelihood estimate
    double best_loss = 0.0; // surrogate for inf over theta of K_n
};

struct ReplicationOutcome {
    std::size_t n = 0;
    std::vector<ModelOutcome> models;
};

struct InequalityCheck {
    SelectionReport selection;
    Vector penalties;
    Vector residuals;
    double selected_loss = 0.0;
    double lhs = 0.0; // (1 - kappa) K_n(p~)
    double oracle_term = 0.0; // min_m [(1 + kappa) inf K_m + 2 pen(m) + res(m)]
    std::size_t oracle_model = 0;
    double residual_selected = 0.0;
    double rhs = 0.0;
    bool violated = false;
};

InequalityCheck evaluate_oracle_inequality(const ReplicationOutcome& outcome, const PenaltySpec& spec, double x);

struct CalibrationPoint {
    double c_constant = 0.0;
    double coverage = 0.0;
    double mean_risk = 0.0;
};

struct CalibrationResult {
    double c_constant = 0.0;
    std::vector<CalibrationPoint> curve;
};

// Smallest C on the grid whose inequality coverage over the replications
// reaches `target`. The same replications are reused for every C.
CalibrationResult calibrate_constant(std::span<const ReplicationOutcome> replications, Regime regime, double kappa,
    std::span<const double> grid, double x, double target = 0.95);

} // namespace penlik
