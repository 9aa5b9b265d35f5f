#include "penlik/selection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "penlik/error.hpp"

namespace penlik {

void PenaltySpec::validate() const
{
    if (!(kappa > 0.0 && kappa <= 1.0)) throw InvalidArgument("PenaltySpec: kappa must lie in (0, 1]");
    if (!(c_constant > 0.0)) throw InvalidArgument("PenaltySpec: C must be positive");
    if (n < 2) throw InvalidArgument("PenaltySpec: n must be at least 2");
}

ModelSummary summarize(const Model& model)
{
    return ModelSummary{model.id(), model.dim(), model.constants()};
}

namespace {

double log_n(const PenaltySpec& spec)
{
    return std::log(static_cast<double>(spec.n));
}

void check_regime(const AssumptionConstants& constants, Regime expected)
{
    if (constants.regime != expected)
        throw RegimeMismatch("penalty for the " + std::string(to_string(expected)) + " regime applied to "
                             + std::string(to_string(constants.regime)) + " constants");
}

} // namespace

double penalty_bounded(const AssumptionConstants& constants, std::size_t dim, const PenaltySpec& spec)
{
    check_regime(constants, Regime::Bounded);
    spec.validate();
    constants.validate();
    const double a = constants.scale();
    const double log_eps = std::log(1.0 / constants.epsilon);
    const double log_na = std::log(static_cast<double>(spec.n) * a);
    return spec.c_constant / spec.kappa * a * a * std::pow(log_eps, 1.5) * log_na * log_na
        * static_cast<double>(dim) / static_cast<double>(spec.n);
}

double penalty_unbounded(const AssumptionConstants& constants, std::size_t dim, const PenaltySpec& spec)
{
    check_regime(constants, Regime::Unbounded);
    spec.validate();
    constants.validate();
    const double a = constants.scale();
    const double log_na = std::log(static_cast<double>(spec.n) * a);
    return spec.c_constant / spec.kappa * a * a * std::pow(constants.tail_scale, 1.5) * std::pow(log_n(spec), 3.5)
        * log_na * log_na * static_cast<double>(dim) / static_cast<double>(spec.n);
}

double penalty(const AssumptionConstants& constants, std::size_t dim, const PenaltySpec& spec)
{
    return spec.regime == Regime::Bounded ? penalty_bounded(constants, dim, spec)
                                          : penalty_unbounded(constants, dim, spec);
}

double residual_term(const AssumptionConstants& constants, const PenaltySpec& spec, double x)
{
    check_regime(constants, spec.regime);
    const double a = constants.scale();
    const double log_na = std::log(static_cast<double>(spec.n) * a);
    const double factor = spec.c_constant / spec.kappa * a * log_na * log_na * x / static_cast<double>(spec.n);
    if (spec.regime == Regime::Bounded) return factor * std::pow(std::log(1.0 / constants.epsilon), 1.5);
    return factor * std::pow(constants.tail_scale, 1.5) * std::pow(log_n(spec), 2.5);
}

double expectation_residual(double complexity, double scale_bound, double tail_bound, double epsilon, const PenaltySpec& spec)
{
    const double n = static_cast<double>(spec.n);
    const double log_na = std::log(n * scale_bound);
    if (spec.regime == Regime::Bounded) {
        return 36.0 * spec.c_constant / spec.kappa * complexity * scale_bound * std::pow(std::log(1.0 / epsilon), 1.5)
            * log_na * log_na * std::log(n) / n;
    }
    return 40.0 * spec.c_constant / spec.kappa * complexity * scale_bound * std::pow(tail_bound, 1.5) * log_na * log_na
        * std::pow(std::log(n), 3.5) / n;
}

double failure_budget(Regime regime, std::size_t n, double complexity, double x)
{
    const double nd = static_cast<double>(n);
    const double budget = 18.0 * std::log(nd) * complexity * std::exp(-x);
    return regime == Regime::Bounded ? budget : budget + 2.0 / nd;
}

// ---------------------------------------------------------------------------

namespace {

double log_term(double sigma, double v)
{
    return std::log(std::max(v / sigma, std::exp(1.0)));
}

double solve_decreasing(const std::function<double(double)>& residual, double lo, double hi, double tol)
{
    double flo = residual(lo), fhi = residual(hi);
    if (!(flo < 0.0) || !(fhi > 0.0)) throw NoBracket("sigma fixed point: no sign change on the bracket");
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = residual(mid);
        if (fm == 0.0) return mid;
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        if (hi - lo <= tol && std::min(-flo, fhi) <= tol) break;
    }
    return -flo <= fhi ? lo : hi;
}

void check_sigma_inputs(double scale, std::size_t n, std::size_t dim, double tol)
{
    if (!(scale >= 1.0) || n < 1 || dim < 1 || !(tol > 0.0))
        throw InvalidArgument("sigma fixed point: need A >= 1, n >= 1, D >= 1, tol > 0");
}

} // namespace

double sigma_residual(double sigma, double scale, std::size_t n, std::size_t dim)
{
    const double v = scale * std::sqrt(2.0 * static_cast<double>(n));
    const double d1 = static_cast<double>(dim) + 1.0;
    const double l = log_term(sigma, v);
    return sigma - (std::min(1.0, v / sigma) * std::sqrt(d1 * l) + scale / sigma * d1 * l);
}

double sigma_dominating_residual(double sigma, double scale, std::size_t n, std::size_t dim)
{
    const double v = scale * std::sqrt(2.0 * static_cast<double>(n));
    const double d1 = static_cast<double>(dim) + 1.0;
    const double l = log_term(sigma, v);
    return sigma - (std::sqrt(d1 * l) + scale / sigma * d1 * l);
}

double sigma_fixed_point(double scale, std::size_t n, std::size_t dim, double tol)
{
    check_sigma_inputs(scale, n, dim, tol);
    const double v = scale * std::sqrt(2.0 * static_cast<double>(n));
    return solve_decreasing([&](double s) { return sigma_residual(s, scale, n, dim); }, tol, 10.0 * v, tol);
}

double sigma_dominating(double scale, std::size_t n, std::size_t dim, double tol)
{
    check_sigma_inputs(scale, n, dim, tol);
    const double v = scale * std::sqrt(2.0 * static_cast<double>(n));
    return solve_decreasing([&](double s) { return sigma_dominating_residual(s, scale, n, dim); }, tol, 10.0 * v, tol);
}

// ---------------------------------------------------------------------------

ComplexitySum complexity_sum(std::span<const ModelSummary> models)
{
    ComplexitySum out;
    if (models.empty()) return out;
    std::size_t max_dim = 0;
    for (const auto& m : models) max_dim = std::max(max_dim, m.dim);
    double tail = 0.0;
    for (const auto& m : models) {
        const double term = std::log(m.constants.scale()) * std::exp(-static_cast<double>(m.dim));
        out.value += term;
        if (m.dim == max_dim) tail += term;
    }
    out.tail_share = out.value > 0.0 ? tail / out.value : 0.0;
    out.tail_warning = out.tail_share > 0.01;
    return out;
}

// ---------------------------------------------------------------------------

SelectionReport select_by_criterion(std::vector<SelectionRow> rows)
{
    if (rows.empty()) throw EmptyModelList("select_model: no candidate models");
    SelectionReport report;
    for (auto& row : rows) row.criterion = -row.mean_log_likelihood + row.penalty;

    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].criterion < rows[best].criterion) best = i;
    const double floor = rows[best].criterion;
    const double slack = 1e-12 * std::max(1.0, std::abs(floor));

    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].criterion <= floor + slack) tied.push_back(i);
    report.tie_break_applied = tied.size() > 1;
    report.selected = *std::min_element(tied.begin(), tied.end(), [&](std::size_t a, std::size_t b) {
        if (rows[a].dim != rows[b].dim) return rows[a].dim < rows[b].dim;
        return rows[a].model_id < rows[b].model_id;
    });
    report.rows = std::move(rows);
    return report;
}

SelectionReport select_model(std::span<const ModelFit> fits, const PenaltySpec& spec)
{
    if (fits.empty()) throw EmptyModelList("select_model: no candidate models");
    spec.validate();
    std::vector<SelectionRow> rows;
    rows.reserve(fits.size());
    for (const auto& fit : fits) {
        fit.model->theta_space().require(fit.theta);
        SelectionRow row;
        row.model_id = fit.model->id();
        row.dim = fit.model->dim();
        row.theta = fit.theta;
        row.mean_log_likelihood = fit.log_likelihood / static_cast<double>(spec.n);
        row.penalty = penalty(fit.model->constants(), row.dim, spec);
        rows.push_back(std::move(row));
    }
    return select_by_criterion(std::move(rows));
}

// ---------------------------------------------------------------------------

InequalityCheck evaluate_oracle_inequality(const ReplicationOutcome& outcome, const PenaltySpec& spec, double x)
{
    if (outcome.models.empty()) throw EmptyModelList("oracle inequality: no candidate models");
    spec.validate();
    InequalityCheck check;
    std::vector<SelectionRow> rows;
    for (const auto& m : outcome.models) {
        SelectionRow row;
        row.model_id = m.model.id;
        row.dim = m.model.dim;
        row.mean_log_likelihood = m.mean_log_likelihood;
        row.penalty = penalty(m.model.constants, m.model.dim, spec);
        check.penalties.push_back(row.penalty);
        check.residuals.push_back(residual_term(m.model.constants, spec, x));
        rows.push_back(std::move(row));
    }
    check.selection = select_by_criterion(std::move(rows));
    const std::size_t sel = check.selection.selected;

    check.oracle_term = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < outcome.models.size(); ++i) {
        const double term = (1.0 + spec.kappa) * outcome.models[i].best_loss + 2.0 * check.penalties[i] + check.residuals[i];
        if (term < check.oracle_term) {
            check.oracle_term = term;
            check.oracle_model = i;
        }
    }
    check.selected_loss = outcome.models[sel].fitted_loss;
    check.residual_selected = check.residuals[sel];
    check.lhs = (1.0 - spec.kappa) * check.selected_loss;
    check.rhs = check.oracle_term + check.residual_selected;
    check.violated = check.lhs > check.rhs;
    return check;
}

CalibrationResult calibrate_constant(std::span<const ReplicationOutcome> replications, Regime regime, double kappa,
    std::span<const double> grid, double x, double target)
{
    if (grid.empty()) throw InvalidArgument("calibrate_constant: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw InvalidArgument("calibrate_constant: grid must be increasing");
    if (replications.empty()) throw CalibrationFailed("calibrate_constant: no replications");

    CalibrationResult result;
    bool found = false;
    for (double c : grid) {
        if (!(c > 0.0)) continue; // a zero penalty cannot certify anything
        std::size_t covered = 0;
        double risk = 0.0;
        for (const auto& rep : replications) {
            PenaltySpec spec{regime, kappa, c, rep.n};
            const InequalityCheck check = evaluate_oracle_inequality(rep, spec, x);
            if (!check.violated) ++covered;
            risk += check.selected_loss;
        }
        const double reps = static_cast<double>(replications.size());
        CalibrationPoint point{c, static_cast<double>(covered) / reps, risk / reps};
        result.curve.push_back(point);
        if (!found && point.coverage >= target) {
            result.c_constant = c;
            found = true;
        }
    }
    if (!found) throw CalibrationFailed("calibrate_constant: no grid value reaches the coverage target");
    return result;
}

} // namespace penlik
