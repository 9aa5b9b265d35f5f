#include "penlik/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "penlik/error.hpp"
#include "penlik/optimize.hpp"

namespace penlik {

namespace {

constexpr std::size_t kRateGridPoints = 2001;

// Softmax of -scaled cumulative losses, shifted for stability.
void softmax_negative(std::span<const double> scaled, std::span<double> out)
{
    const double shift = *std::min_element(scaled.begin(), scaled.end());
    double total = 0.0;
    for (std::size_t k = 0; k < scaled.size(); ++k) {
        out[k] = std::exp(-(scaled[k] - shift));
        total += out[k];
    }
    for (double& p : out) p /= total;
}

std::size_t action_index(double value, std::size_t arms)
{
    if (!(value >= 0.0) || value != std::floor(value) || value >= static_cast<double>(arms))
        throw InconsistentHistory(fmt::format("action {} outside [0, {})", value, arms));
    return static_cast<std::size_t>(value);
}

// Learning-rate recursion shared by the simulator and the evaluator.
class RateRecursion {
public:
    RateRecursion(std::size_t arms, double eta) : eta_(eta), cumulative_(arms, 0.0), scaled_(arms, 0.0), probs_(arms, 1.0 / static_cast<double>(arms)) {}

    [[nodiscard]] std::span<const double> probabilities() const { return probs_; }

    void update(std::size_t action, double loss)
    {
        cumulative_[action] += loss / probs_[action];
        for (std::size_t k = 0; k < cumulative_.size(); ++k) scaled_[k] = eta_ * cumulative_[k];
        softmax_negative(scaled_, probs_);
    }

private:
    double eta_;
    Vector cumulative_;
    Vector scaled_;
    Vector probs_;
};

const Vector& bandit_losses(const Trajectory& traj)
{
    const auto* history = std::get_if<BanditHistory>(&traj.side_info());
    if (history == nullptr) throw InconsistentHistory("trajectory carries no bandit history");
    return history->realized_losses;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

std::size_t exp3_truncation(std::size_t cells, double horizon_scale, double rate_max, double epsilon)
{
    const double value = (1.0 / static_cast<double>(cells) - epsilon) * std::sqrt(horizon_scale) / rate_max;
    return value <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(value));
}

double exp3_lipschitz(std::size_t n, double horizon_scale, double rate_max, double epsilon)
{
    const double ratio = static_cast<double>(n) / (std::sqrt(horizon_scale) * epsilon);
    return 2.0 * ratio * std::exp(2.0 * rate_max * ratio);
}

void Exp3Config::validate() const
{
    if (arms < 2) throw InvalidArgument("exp3 needs at least two arms");
    if (!(horizon_scale > 0.0)) throw InvalidArgument("exp3 horizon scale must be positive");
    if (!(rate_min > 0.0) || !(rate_max >= rate_min)) throw InvalidArgument("exp3 rate range must satisfy 0 < r <= R");
    if (losses.size() != arms) throw InvalidArgument(fmt::format("exp3 expects {} losses, got {}", arms, losses.size()));
    for (double g : losses)
        if (!(g >= 0.0 && g <= 1.0)) throw InvalidArgument("exp3 losses must lie in [0, 1]");
    if (!(epsilon > 0.0 && epsilon < 1.0 / static_cast<double>(arms)))
        throw InvalidArgument("exp3 epsilon must lie in (0, 1/K)");
    if (truncation() < 2) throw InvalidArgument(fmt::format("exp3 truncation T_eps = {} is below 2", truncation()));
}

std::size_t Exp3Config::truncation() const { return exp3_truncation(arms, horizon_scale, rate_max, epsilon); }

// ---------------------------------------------------------------------------
// Single learning rate

Exp3Run simulate_exp3(const Exp3Config& config, double theta, Philox& rng)
{
    config.validate();
    if (theta < config.rate_min || theta > config.rate_max)
        throw ParameterOutsideModel(fmt::format("learning rate {} outside [{}, {}]", theta, config.rate_min, config.rate_max));
    const std::size_t n = config.truncation();
    RateRecursion recursion(config.arms, theta / std::sqrt(config.horizon_scale));
    Vector actions(n);
    Vector realized(n);
    std::vector<Vector> path;
    path.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto probs = recursion.probabilities();
        path.emplace_back(probs.begin(), probs.end());
        const std::size_t action = categorical(rng, probs);
        actions[t] = static_cast<double>(action);
        realized[t] = config.losses[action];
        recursion.update(action, realized[t]);
    }
    return {Trajectory(std::move(actions), BanditHistory{std::move(realized)}), std::move(path)};
}

Exp3Run simulate_exp3(const Exp3Config& config, double theta, std::uint64_t seed)
{
    Philox rng(seed, 0);
    return simulate_exp3(config, theta, rng);
}

Vector exp3_cond_prob(const Exp3Config& config, double theta, std::span<const double> actions, std::span<const double> losses)
{
    if (actions.size() != losses.size())
        throw InconsistentHistory(fmt::format("{} actions but {} losses", actions.size(), losses.size()));
    RateRecursion recursion(config.arms, theta / std::sqrt(config.horizon_scale));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (!(losses[s] >= 0.0 && losses[s] <= 1.0))
            throw InconsistentHistory(fmt::format("realized loss {} outside [0, 1]", losses[s]));
        recursion.update(action_index(actions[s], config.arms), losses[s]);
    }
    const auto probs = recursion.probabilities();
    return {probs.begin(), probs.end()};
}

Exp3RateModel::Exp3RateModel(Exp3Config config, std::size_t horizon)
    : config_(std::move(config)), space_({config_.rate_min}, {config_.rate_max})
{
    config_.validate();
    constants_.regime = Regime::Bounded;
    constants_.epsilon = config_.epsilon;
    constants_.lipschitz = exp3_lipschitz(horizon, config_.horizon_scale, config_.rate_max, config_.epsilon);
    constants_.diameter = config_.rate_max;
    constants_.norm = NormId::Sup;
    if (constants_.lipschitz * constants_.diameter < 1.0) constants_.lipschitz = 1.0 / constants_.diameter;
    constants_.validate();
}

std::vector<Vector> Exp3RateModel::probability_path(double theta, const Trajectory& traj) const
{
    const Vector& losses = bandit_losses(traj);
    if (losses.size() != traj.n()) throw InconsistentHistory("loss history length differs from the trajectory");
    RateRecursion recursion(config_.arms, theta / std::sqrt(config_.horizon_scale));
    std::vector<Vector> path;
    path.reserve(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t) {
        const auto probs = recursion.probabilities();
        path.emplace_back(probs.begin(), probs.end());
        recursion.update(action_index(traj.observations()[t], config_.arms), losses[t]);
    }
    return path;
}

Vector Exp3RateModel::log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const
{
    const auto path = probability_path(theta[0], traj);
    Vector terms(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t)
        terms[t] = std::log(path[t][static_cast<std::size_t>(traj.observations()[t])]);
    return terms;
}

LogDensityTable Exp3RateModel::log_density_table(
    std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const
{
    const auto path = probability_path(theta[0], traj);
    LogDensityTable table(traj.n(), points.size());
    for (std::size_t t = 0; t < traj.n(); ++t)
        for (std::size_t j = 0; j < points.size(); ++j) table(t, j) = std::log(path[t][action_index(points[j], config_.arms)]);
    return table;
}

std::pair<double, double> Exp3RateModel::log_likelihood_with_derivative(double theta, const Trajectory& traj) const
{
    const Vector& losses = bandit_losses(traj);
    if (losses.size() != traj.n()) throw InconsistentHistory("loss history length differs from the trajectory");
    const std::size_t arms = config_.arms;
    const double root = std::sqrt(config_.horizon_scale);
    const double eta = theta / root;
    Vector cumulative(arms, 0.0);
    Vector d_cumulative(arms, 0.0);
    Vector scaled(arms, 0.0);
    Vector d_scaled(arms, 0.0);
    Vector probs(arms, 1.0 / static_cast<double>(arms));
    Vector d_log(arms, 0.0);
    double value = 0.0;
    double derivative = 0.0;
    for (std::size_t t = 0; t < traj.n(); ++t) {
        const std::size_t action = action_index(traj.observations()[t], arms);
        value += std::log(probs[action]);
        derivative += d_log[action];
        // S_k += g / p_k, dS_k -= g * dlog p_k / p_k
        cumulative[action] += losses[t] / probs[action];
        d_cumulative[action] -= losses[t] * d_log[action] / probs[action];
        for (std::size_t k = 0; k < arms; ++k) {
            scaled[k] = eta * cumulative[k];
            d_scaled[k] = cumulative[k] / root + eta * d_cumulative[k];
        }
        softmax_negative(scaled, probs);
        double mean = 0.0;
        for (std::size_t k = 0; k < arms; ++k) mean += probs[k] * d_scaled[k];
        for (std::size_t k = 0; k < arms; ++k) d_log[k] = mean - d_scaled[k];
    }
    return {value, derivative};
}

double mle_learning_rate(const Exp3RateModel& model, const Trajectory& traj)
{
    const auto& config = model.config();
    if (config.rate_max == config.rate_min) return config.rate_min;
    const auto objective = [&](double theta) {
        const double value = partial_log_likelihood(model, std::span<const double>(&theta, 1), traj);
        return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
    };
    return grid_golden_max(objective, config.rate_min, config.rate_max, kRateGridPoints).argmax;
}

Vector Exp3RateModel::maximum_likelihood(const Trajectory& traj, Philox&) const { return {mle_learning_rate(*this, traj)}; }

Vector Exp3RateModel::minimize_oracle_loss(const Trajectory& traj, const Oracle& oracle, std::span<const double>, Philox&) const
{
    if (config_.rate_max == config_.rate_min) return {config_.rate_min};
    Vector points(config_.arms);
    std::iota(points.begin(), points.end(), 0.0);
    const LogDensityTable truth = oracle.log_density_table(traj, points);
    const auto objective = [&](double theta) {
        const auto path = probability_path(theta, traj);
        double total = 0.0;
        for (std::size_t t = 0; t < traj.n(); ++t)
            for (std::size_t k = 0; k < config_.arms; ++k) total += std::exp(truth(t, k)) * std::log(path[t][k]);
        return total;
    };
    return {grid_golden_max(objective, config_.rate_min, config_.rate_max, kRateGridPoints).argmax};
}

Vector Exp3RateModel::random_parameter(Philox& rng) const { return {uniform(rng, config_.rate_min, config_.rate_max)}; }

// ---------------------------------------------------------------------------
// Partitions

Partition::Partition(std::vector<std::size_t> cell_of_action) : cell_of_action_(std::move(cell_of_action))
{
    if (cell_of_action_.empty()) throw InvalidArgument("partition of an empty action set");
    const std::size_t cells = *std::max_element(cell_of_action_.begin(), cell_of_action_.end()) + 1;
    sizes_.assign(cells, 0);
    for (std::size_t c : cell_of_action_) ++sizes_[c];
    for (std::size_t c = 0; c < cells; ++c)
        if (sizes_[c] == 0) throw InvalidArgument(fmt::format("partition cell {} is empty", c));
}

Partition Partition::regular(std::size_t actions, std::size_t cells)
{
    if (cells == 0 || actions % cells != 0)
        throw InvalidArgument(fmt::format("cannot split {} actions into {} equal cells", actions, cells));
    std::vector<std::size_t> cell_of_action(actions);
    const std::size_t width = actions / cells;
    for (std::size_t a = 0; a < actions; ++a) cell_of_action[a] = a / width;
    return Partition(std::move(cell_of_action));
}

Exp3PartitionModel::Exp3PartitionModel(Partition partition, PartitionSettings settings)
    : partition_(std::move(partition)), settings_(settings),
      space_(Vector(partition_.cells(), settings.rate_min), Vector(partition_.cells(), settings.rate_max))
{
    if (!(settings_.horizon_scale > 0.0)) throw InvalidArgument("partition horizon scale must be positive");
    if (!(settings_.rate_min > 0.0) || !(settings_.rate_max >= settings_.rate_min))
        throw InvalidArgument("partition rate range must satisfy 0 < r <= R");
    if (!(settings_.epsilon > 0.0 && settings_.epsilon < 1.0)) throw InvalidArgument("partition epsilon must lie in (0, 1)");
    if (settings_.horizon < 2) throw InvalidArgument("partition horizon must be at least 2");
    // Every action keeps probability at least eps / #actions while its cell
    // stays above eps.
    constants_.regime = Regime::Bounded;
    constants_.epsilon = settings_.epsilon / static_cast<double>(partition_.actions());
    constants_.lipschitz = exp3_lipschitz(settings_.horizon, settings_.horizon_scale, settings_.rate_max, settings_.epsilon);
    constants_.diameter = settings_.rate_max;
    constants_.norm = NormId::Sup;
    if (constants_.lipschitz * constants_.diameter < 1.0) constants_.lipschitz = 1.0 / constants_.diameter;
    constants_.validate();
}

std::string Exp3PartitionModel::id() const { return fmt::format("exp3-cells-{}", partition_.cells()); }

std::size_t Exp3PartitionModel::truncation() const
{
    return exp3_truncation(partition_.cells(), settings_.horizon_scale, settings_.rate_max, settings_.epsilon);
}

std::vector<std::size_t> Exp3PartitionModel::observed_cells(const Trajectory& traj) const
{
    std::vector<std::size_t> cells(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t) cells[t] = partition_.cell(action_index(traj.observations()[t], partition_.actions()));
    return cells;
}

std::vector<Vector> Exp3PartitionModel::cell_path(std::span<const double> theta, const Trajectory& traj) const
{
    const std::size_t cells = partition_.cells();
    const double root = std::sqrt(settings_.horizon_scale);
    Vector weights(cells, 0.0); // sum_s 1{I_s = J} / p_s(J)
    Vector scaled(cells, 0.0);
    Vector probs(cells, 1.0 / static_cast<double>(cells));
    std::vector<Vector> path;
    path.reserve(traj.n());
    for (std::size_t cell : observed_cells(traj)) {
        path.push_back(probs);
        weights[cell] += 1.0 / probs[cell];
        for (std::size_t j = 0; j < cells; ++j) scaled[j] = theta[j] / root * weights[j];
        softmax_negative(scaled, probs);
    }
    return path;
}

Vector Exp3PartitionModel::log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const
{
    const auto path = cell_path(theta, traj);
    Vector terms(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t) {
        const std::size_t cell = partition_.cell(static_cast<std::size_t>(traj.observations()[t]));
        terms[t] = std::log(path[t][cell]) - std::log(static_cast<double>(partition_.cell_size(cell)));
    }
    return terms;
}

LogDensityTable Exp3PartitionModel::log_density_table(
    std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const
{
    const auto path = cell_path(theta, traj);
    LogDensityTable table(traj.n(), points.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
        const std::size_t cell = partition_.cell(action_index(points[j], partition_.actions()));
        const double within = std::log(static_cast<double>(partition_.cell_size(cell)));
        for (std::size_t t = 0; t < traj.n(); ++t) table(t, j) = std::log(path[t][cell]) - within;
    }
    return table;
}

double Exp3PartitionModel::cell_objective(std::span<const double> theta, std::span<const std::size_t> observed,
    std::span<const double> cell_weights, std::span<double> grad) const
{
    const std::size_t cells = partition_.cells();
    const std::size_t n = observed.size();
    if (!cell_weights.empty() && cell_weights.size() != n * cells)
        throw InvalidArgument("cell weights must be steps x cells");
    const double root = std::sqrt(settings_.horizon_scale);
    Vector weights(cells, 0.0);
    std::vector<double> d_weights(cells * cells, 0.0); // d weights[J] / d theta[I] at [J * cells + I]
    Vector scaled(cells, 0.0);
    std::vector<double> d_scaled(cells * cells, 0.0);
    Vector probs(cells, 1.0 / static_cast<double>(cells));
    std::vector<double> d_log(cells * cells, 0.0); // d log p[J] / d theta[I]
    std::fill(grad.begin(), grad.end(), 0.0);
    double value = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t chosen = observed[t];
        if (cell_weights.empty()) {
            value += std::log(probs[chosen]);
            for (std::size_t i = 0; i < cells; ++i) grad[i] += d_log[chosen * cells + i];
        } else {
            for (std::size_t j = 0; j < cells; ++j) {
                const double w = cell_weights[t * cells + j];
                if (w == 0.0) continue;
                value += w * std::log(probs[j]);
                for (std::size_t i = 0; i < cells; ++i) grad[i] += w * d_log[j * cells + i];
            }
        }
        const double inverse = 1.0 / probs[chosen];
        weights[chosen] += inverse;
        for (std::size_t i = 0; i < cells; ++i) d_weights[chosen * cells + i] -= inverse * d_log[chosen * cells + i];
        for (std::size_t j = 0; j < cells; ++j) {
            scaled[j] = theta[j] / root * weights[j];
            for (std::size_t i = 0; i < cells; ++i)
                d_scaled[j * cells + i] = theta[j] / root * d_weights[j * cells + i] + (i == j ? weights[j] / root : 0.0);
        }
        softmax_negative(scaled, probs);
        for (std::size_t i = 0; i < cells; ++i) {
            double mean = 0.0;
            for (std::size_t j = 0; j < cells; ++j) mean += probs[j] * d_scaled[j * cells + i];
            for (std::size_t j = 0; j < cells; ++j) d_log[j * cells + i] = mean - d_scaled[j * cells + i];
        }
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (double& g : grad) g *= scale;
    return value * scale;
}

namespace {

Vector fit_cells(const Exp3PartitionModel& model, std::span<const std::size_t> observed, std::span<const double> cell_weights,
    std::span<const double> initial = {})
{
    const auto& settings = model.settings();
    const std::size_t cells = model.dim();
    Vector start(cells, 0.5 * (settings.rate_min + settings.rate_max));
    if (model.degenerate() || settings.rate_max == settings.rate_min) return start;
    if (initial.size() == cells && model.theta_space().contains(initial)) start.assign(initial.begin(), initial.end());
    const SmoothObjective objective = [&](std::span<const double> theta, std::span<double> grad) {
        return model.cell_objective(theta, observed, cell_weights, grad);
    };
    const Projection project = [&](std::span<double> theta) {
        for (double& v : theta) v = std::clamp(v, settings.rate_min, settings.rate_max);
    };
    AscentOptions options;
    options.max_iter = 2000;
    options.tol = 1e-9;
    return projected_gradient_ascent(objective, project, std::move(start), options).theta;
}

} // namespace

Vector mle_partition(const Exp3PartitionModel& model, const Trajectory& traj)
{
    std::vector<std::size_t> observed(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t)
        observed[t] = model.partition().cell(action_index(traj.observations()[t], model.partition().actions()));
    return fit_cells(model, observed, {});
}

Vector Exp3PartitionModel::maximum_likelihood(const Trajectory& traj, Philox&) const { return mle_partition(*this, traj); }

Vector Exp3PartitionModel::minimize_oracle_loss(
    const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox&) const
{
    const std::size_t cells = partition_.cells();
    Vector points(partition_.actions());
    std::iota(points.begin(), points.end(), 0.0);
    const LogDensityTable truth = oracle.log_density_table(traj, points);
    Vector masses(traj.n() * cells, 0.0);
    for (std::size_t t = 0; t < traj.n(); ++t)
        for (std::size_t a = 0; a < points.size(); ++a) masses[t * cells + partition_.cell(a)] += std::exp(truth(t, a));
    return fit_cells(*this, observed_cells(traj), masses, start);
}

Vector Exp3PartitionModel::random_parameter(Philox& rng) const
{
    Vector theta(partition_.cells());
    for (double& v : theta) v = uniform(rng, settings_.rate_min, settings_.rate_max);
    return theta;
}

PartitionRun simulate_partition_learner(const Exp3PartitionModel& model, std::span<const double> theta, Philox& rng, std::size_t steps)
{
    model.theta_space().require(theta);
    const Partition& partition = model.partition();
    const std::size_t cells = partition.cells();
    const std::size_t n = steps == 0 ? model.truncation() : steps;
    if (n < 2) throw InvalidArgument(fmt::format("partition learner needs at least 2 steps, got {}", n));
    std::vector<std::vector<std::size_t>> members(cells);
    for (std::size_t a = 0; a < partition.actions(); ++a) members[partition.cell(a)].push_back(a);

    const double root = std::sqrt(model.settings().horizon_scale);
    Vector weights(cells, 0.0);
    Vector scaled(cells, 0.0);
    Vector probs(cells, 1.0 / static_cast<double>(cells));
    Vector actions(n);
    Vector realized(n);
    PartitionRun run{Trajectory({0.0, 0.0}), std::vector<std::size_t>(n), {}};
    run.cell_probabilities.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        run.cell_probabilities.push_back(probs);
        const std::size_t cell = categorical(rng, probs);
        const auto& inside = members[cell];
        actions[t] = static_cast<double>(inside[uniform_index(rng, inside.size())]);
        realized[t] = theta[cell] / root;
        run.cells[t] = cell;
        weights[cell] += 1.0 / probs[cell];
        for (std::size_t j = 0; j < cells; ++j) scaled[j] = theta[j] / root * weights[j];
        softmax_negative(scaled, probs);
    }
    run.trajectory = Trajectory(std::move(actions), BanditHistory{std::move(realized)});
    return run;
}

PartitionRun simulate_partition_learner(const Exp3PartitionModel& model, std::span<const double> theta, std::uint64_t seed, std::size_t steps)
{
    Philox rng(seed, 0);
    return simulate_partition_learner(model, theta, rng, steps);
}

void write_bandit_csv(const Trajectory& traj, std::span<const std::size_t> cells, const std::vector<Vector>* truth, std::ostream& out)
{
    const auto* history = std::get_if<BanditHistory>(&traj.side_info());
    if (!cells.empty() && cells.size() != traj.n()) throw InvalidArgument("cell column length differs from the trajectory");
    if (truth != nullptr && truth->size() != traj.n()) throw InvalidArgument("probability rows differ from the trajectory");
    out << "t,action,cell,loss";
    const std::size_t width = truth != nullptr && !truth->empty() ? truth->front().size() : 0;
    for (std::size_t k = 0; k < width; ++k) out << ",p" << k;
    out << '\n';
    for (std::size_t t = 0; t < traj.n(); ++t) {
        out << t + 1 << ',' << static_cast<std::size_t>(traj.observations()[t]) << ',';
        if (!cells.empty()) out << cells[t];
        out << ',';
        if (history != nullptr) out << fmt::format("{:.17g}", history->realized_losses[t]);
        for (std::size_t k = 0; k < width; ++k) out << fmt::format(",{:.17g}", (*truth)[t][k]);
        out << '\n';
    }
    if (!out) throw IoFailure("failed writing bandit CSV");
}

} // namespace penlik
