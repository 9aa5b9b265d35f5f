#include "penlik/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "penlik/error.hpp"

namespace penlik {

namespace {

constexpr double quadrature_tolerance = 1e-8;

const Oracle& need_oracle(const Oracle* oracle)
{
    if (!oracle) throw OracleUnavailable("true conditional densities are not available");
    return *oracle;
}

void check_tables(const LogDensityTable& a, const LogDensityTable& b, std::span<const double> weights)
{
    if (a.steps() != b.steps() || a.points() != b.points() || a.points() != weights.size())
        throw InvalidArgument("loss: table shapes differ");
    if (a.steps() == 0) throw EmptyTrajectory("loss: no steps");
}

double step_kl(std::span<const double> truth, std::span<const double> cand, std::span<const double> weights)
{
    double kl = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const double p = std::exp(truth[j]);
        if (p == 0.0) continue;
        kl += weights[j] * p * (truth[j] - cand[j]);
    }
    return kl;
}

} // namespace

PairedTables paired_tables(const Model& model, std::span<const double> theta, const Oracle& oracle, const Trajectory& traj)
{
    PairedTables out;
    out.grid = evaluation_grid(oracle.sample_space(), model.sample_space());
    out.truth = oracle.log_density_table(traj, out.grid.points);
    out.candidate = model.log_density_table(theta, traj, out.grid.points);
    return out;
}

Vector conditional_kl(const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights)
{
    check_tables(truth, candidate, weights);
    Vector out(truth.steps());
    for (std::size_t t = 0; t < truth.steps(); ++t) {
        // Clamp rounding noise; the divergence itself is nonnegative.
        out[t] = std::max(0.0, step_kl(truth.row(t), candidate.row(t), weights));
    }
    return out;
}

double variance_from_tables(
    const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights, double bound)
{
    check_tables(truth, candidate, weights);
    double total = 0.0;
    for (std::size_t t = 0; t < truth.steps(); ++t) {
        const auto a = truth.row(t);
        const auto b = candidate.row(t);
        for (std::size_t j = 0; j < weights.size(); ++j) {
            const double u = a[j] - b[j];
            if (std::abs(u) > bound) continue;
            total += weights[j] * std::exp(a[j]) * u * u;
        }
    }
    return total / static_cast<double>(truth.steps());
}

double hellinger_from_tables(const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights)
{
    check_tables(truth, candidate, weights);
    double total = 0.0;
    for (std::size_t t = 0; t < truth.steps(); ++t) {
        const auto a = truth.row(t);
        const auto b = candidate.row(t);
        for (std::size_t j = 0; j < weights.size(); ++j) {
            const double d = std::exp(0.5 * a[j]) - std::exp(0.5 * b[j]);
            total += 0.5 * weights[j] * d * d;
        }
    }
    return total / static_cast<double>(truth.steps());
}

LossReport stochastic_kl(const Model& model, std::span<const double> theta, const Oracle* oracle, const Trajectory& traj)
{
    const Oracle& truth = need_oracle(oracle);
    model.theta_space().require(theta);
    PairedTables tables = paired_tables(model, theta, truth, traj);

    LossReport report;
    report.per_step_kl = conditional_kl(tables.truth, tables.candidate, tables.grid.weights);
    double sum = 0.0;
    for (double v : report.per_step_kl) sum += v;
    report.kl = sum / static_cast<double>(traj.n());

    if (!model.sample_space().discrete()) {
        const EvaluationGrid fine = refine(tables.grid, false);
        const LogDensityTable a = truth.log_density_table(traj, fine.points);
        const LogDensityTable b = model.log_density_table(theta, traj, fine.points);
        double fine_sum = 0.0;
        for (double v : conditional_kl(a, b, fine.weights)) fine_sum += v;
        report.quadrature_error = std::abs(fine_sum / static_cast<double>(traj.n()) - report.kl);
        if (report.quadrature_error > quadrature_tolerance)
            throw QuadratureFailure("stochastic_kl: quadrature error estimate " + std::to_string(report.quadrature_error));
    }

    const AssumptionConstants& k = model.constants();
    report.log_ratio_bound = k.log_ratio_bound(traj.n());
    report.truncated = k.regime == Regime::Unbounded;
    report.variance = variance_from_tables(tables.truth, tables.candidate, tables.grid.weights,
        report.truncated ? report.log_ratio_bound : std::numeric_limits<double>::infinity());
    return report;
}

double empirical_variance(
    const Model& model, std::span<const double> theta, const Oracle* oracle, const Trajectory& traj, Regime regime)
{
    const Oracle& truth = need_oracle(oracle);
    model.theta_space().require(theta);
    AssumptionConstants k = model.constants();
    if (regime == Regime::Bounded && !(k.epsilon > 0.0))
        throw InvalidArgument("empirical_variance: bounded regime needs epsilon");
    k.regime = regime;
    const PairedTables tables = paired_tables(model, theta, truth, traj);
    const double bound = regime == Regime::Unbounded ? k.log_ratio_bound(traj.n()) : std::numeric_limits<double>::infinity();
    return variance_from_tables(tables.truth, tables.candidate, tables.grid.weights, bound);
}

double conditional_hellinger(const Model& model, std::span<const double> theta, const Oracle* oracle, const Trajectory& traj)
{
    const Oracle& truth = need_oracle(oracle);
    model.theta_space().require(theta);
    const PairedTables tables = paired_tables(model, theta, truth, traj);
    return hellinger_from_tables(tables.truth, tables.candidate, tables.grid.weights);
}

VarianceLemmaReport check_variance_lemma(
    const Model& model, std::span<const Vector> thetas, const Oracle* oracle, const Trajectory& traj)
{
    const Oracle& truth = need_oracle(oracle);
    VarianceLemmaReport report;
    const double f = model.constants().log_ratio_bound(traj.n());
    const bool truncate = model.constants().regime == Regime::Unbounded;
    for (const Vector& theta : thetas) {
        const PairedTables tables = paired_tables(model, theta, truth, traj);
        double kl = 0.0;
        for (double v : conditional_kl(tables.truth, tables.candidate, tables.grid.weights)) kl += v;
        kl /= static_cast<double>(traj.n());

        VarianceLemmaRow row;
        row.kl = kl;
        row.variance = variance_from_tables(tables.truth, tables.candidate, tables.grid.weights,
            truncate ? f : std::numeric_limits<double>::infinity());
        row.bound = 16.0 * f * f * kl;
        row.ratio = row.bound > 0.0 ? row.variance / row.bound : (row.variance > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        report.max_ratio = std::max(report.max_ratio, row.ratio);
        if (row.ratio > 1.0) ++report.violations;
        report.rows.push_back(row);
    }
    return report;
}

LemmaPair check_logratio_hellinger(std::span<const double> p, std::span<const double> q, double lambda)
{
    if (!(lambda > 0.0 && lambda <= 0.5)) throw InvalidLambda("lambda must lie in (0, 1/2]");
    if (p.size() != q.size() || p.empty()) throw InvalidArgument("check_logratio_hellinger: size mismatch");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0) || !(q[i] > 0.0)) throw InvalidArgument("check_logratio_hellinger: densities must be positive");
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9)
        throw InvalidArgument("check_logratio_hellinger: densities must sum to one");

    const double cut = std::log(1.0 / lambda);
    LemmaPair out;
    double hell = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = std::log(p[i] / q[i]);
        if (std::abs(u) > cut) continue;
        out.lhs += p[i] * u * u;
        const double d = std::sqrt(q[i] / p[i]) - 1.0;
        hell += p[i] * d * d;
    }
    out.rhs = 8.0 * (1.0 + cut * cut) * hell;
    out.holds = out.lhs <= out.rhs * (1.0 + 1e-12) + 1e-300;
    return out;
}

SandwichReport check_kl_variance_sandwich(const LogDensityTable& truth, const LogDensityTable& candidate, std::span<const double> weights)
{
    check_tables(truth, candidate, weights);
    SandwichReport out;
    double kl = 0.0;
    for (double v : conditional_kl(truth, candidate, weights)) kl += v;
    out.kl = kl / static_cast<double>(truth.steps());
    out.variance = variance_from_tables(truth, candidate, weights, std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < truth.steps(); ++t)
        for (std::size_t j = 0; j < weights.size(); ++j)
            out.realized_bound = std::max(out.realized_bound, std::abs(truth(t, j) - candidate(t, j)));

    const double f = out.realized_bound;
    double lo = 0.5, hi = 0.5;
    if (f > 1e-6) {
        lo = (std::exp(-f) + f - 1.0) / (f * f);
        hi = (std::exp(f) - f - 1.0) / (f * f);
    }
    out.lower = lo * out.variance;
    out.upper = hi * out.variance;
    const double slack = 1e-9 * std::max(out.kl, out.variance) + 1e-14;
    out.holds = out.lower <= out.kl + slack && out.kl <= out.upper + slack;
    return out;
}

} // namespace penlik
