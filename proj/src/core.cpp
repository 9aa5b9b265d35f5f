#include "penlik/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "penlik/error.hpp"

namespace penlik {

std::string_view to_string(Regime regime)
{
    return regime == Regime::Bounded ? "bounded" : "unbounded";
}

Regime parse_regime(std::string_view text)
{
    if (text == "bounded") return Regime::Bounded;
    if (text == "unbounded") return Regime::Unbounded;
    throw InvalidArgument("unknown regime '" + std::string(text) + "'");
}

std::string_view to_string(NormId norm)
{
    return norm == NormId::Sup ? "sup" : "l1";
}

double norm_distance(NormId norm, std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw InvalidArgument("norm_distance: dimension mismatch");
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        out = norm == NormId::Sup ? std::max(out, d) : out + d;
    }
    return out;
}

// ---------------------------------------------------------------------------

SpikeRaster::SpikeRaster(std::size_t neurons, int first_time, int last_time)
    : neurons_(neurons), first_time_(first_time), last_time_(last_time)
{
    if (neurons == 0) throw InvalidArgument("SpikeRaster: no neurons");
    if (last_time < first_time) throw InvalidArgument("SpikeRaster: empty time window");
    spikes_.assign(neurons * times(), 0);
}

std::size_t SpikeRaster::index(std::size_t neuron, int t) const
{
    if (neuron >= neurons_) throw InvalidArgument("SpikeRaster: neuron out of range");
    if (!covers(t)) {
        throw InsufficientHistory("SpikeRaster: time " + std::to_string(t) + " outside window ["
                                  + std::to_string(first_time_) + ", " + std::to_string(last_time_) + "]");
    }
    return neuron * times() + static_cast<std::size_t>(t - first_time_);
}

bool SpikeRaster::spike(std::size_t neuron, int t) const
{
    return spikes_[index(neuron, t)] != 0;
}

void SpikeRaster::set(std::size_t neuron, int t, bool value)
{
    spikes_[index(neuron, t)] = value ? 1 : 0;
}

// ---------------------------------------------------------------------------

namespace {

void check_side_info(std::size_t n, const SideInfo& side)
{
    if (const auto* cov = std::get_if<Covariates>(&side)) {
        if (cov->values.size() != n) throw InvalidArgument("Trajectory: covariates must cover 1..n");
    } else if (const auto* raster = std::get_if<SpikeRaster>(&side)) {
        if (raster->first_time() > 0 || raster->last_time() != static_cast<int>(n))
            throw InvalidArgument("Trajectory: spike raster must cover 0..n");
    } else if (const auto* bandit = std::get_if<BanditHistory>(&side)) {
        if (bandit->realized_losses.size() != n) throw InvalidArgument("Trajectory: loss history must cover 1..n");
    }
}

} // namespace

Trajectory::Trajectory(Vector observations, SideInfo side_info)
    : observations_(std::move(observations)), side_info_(std::move(side_info))
{
    if (observations_.empty()) throw EmptyTrajectory("Trajectory: no observations");
    if (observations_.size() < 2) throw InvalidArgument("Trajectory: need n >= 2");
    check_side_info(observations_.size(), side_info_);
}

Trajectory Trajectory::with_observations(Vector observations) const
{
    return Trajectory(std::move(observations), side_info_);
}

Trajectory Trajectory::with_side_info(SideInfo side_info) const
{
    return Trajectory(observations_, std::move(side_info));
}

// ---------------------------------------------------------------------------

void AssumptionConstants::validate() const
{
    if (!(lipschitz > 0.0) || !(diameter > 0.0)) throw InvalidArgument("assumption constants: L and M must be positive");
    if (lipschitz * diameter < 1.0 - 1e-12) throw InvalidArgument("assumption constants: need L*M >= 1");
    if (regime == Regime::Bounded) {
        if (!(epsilon > 0.0) || !(std::log(epsilon) < -1.0))
            throw InvalidArgument("assumption constants: need 0 < epsilon < 1/e");
    } else if (!(tail_scale >= 1.0)) {
        throw InvalidArgument("assumption constants: need B >= 1");
    }
}

double AssumptionConstants::scale() const
{
    const double lm = lipschitz * diameter;
    return regime == Regime::Bounded ? lm + 2.0 * std::log(1.0 / epsilon) : lm + tail_scale;
}

double AssumptionConstants::log_ratio_bound(std::size_t n) const
{
    return regime == Regime::Bounded ? 2.0 * std::log(1.0 / epsilon)
                                     : tail_scale * std::log(static_cast<double>(n));
}

// ---------------------------------------------------------------------------

ThetaSpace::ThetaSpace(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper))
{
    if (lower_.size() != upper_.size()) throw InvalidArgument("ThetaSpace: bound size mismatch");
    for (std::size_t i = 0; i < lower_.size(); ++i)
        if (lower_[i] > upper_[i]) throw InvalidArgument("ThetaSpace: empty box");
}

ThetaSpace& ThetaSpace::with_equality(AffineEquality equality)
{
    if (equality.coefficients.size() != dim()) throw InvalidArgument("ThetaSpace: equality dimension mismatch");
    equality_ = std::move(equality);
    return *this;
}

ThetaSpace& ThetaSpace::with_constraint(std::string name, Slack slack)
{
    constraints_.emplace_back(std::move(name), std::move(slack));
    return *this;
}

std::optional<std::string> ThetaSpace::violation(std::span<const double> theta, double tol) const
{
    if (theta.size() != dim()) {
        return "dimension " + std::to_string(theta.size()) + " != " + std::to_string(dim());
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i]) || theta[i] < lower_[i] - tol || theta[i] > upper_[i] + tol) {
            std::ostringstream os;
            os << "coordinate " << i << " = " << theta[i] << " outside [" << lower_[i] << ", " << upper_[i] << "]";
            return os.str();
        }
    }
    if (equality_) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) lhs += equality_->coefficients[i] * theta[i];
        if (std::abs(lhs - equality_->rhs) > tol * std::max(1.0, std::abs(equality_->rhs))) {
            std::ostringstream os;
            os << "equality constraint: " << lhs << " != " << equality_->rhs;
            return os.str();
        }
    }
    for (const auto& [name, slack] : constraints_) {
        const double s = slack(theta);
        if (!(s >= -tol)) return name + " violated by " + std::to_string(-s);
    }
    return std::nullopt;
}

bool ThetaSpace::contains(std::span<const double> theta, double tol) const
{
    return !violation(theta, tol).has_value();
}

void ThetaSpace::require(std::span<const double> theta, double tol) const
{
    if (auto why = violation(theta, tol)) throw ParameterOutsideModel("parameter outside model: " + *why);
}

// ---------------------------------------------------------------------------

SampleSpace SampleSpace::finite(std::size_t symbols)
{
    if (symbols == 0) throw InvalidArgument("SampleSpace: empty alphabet");
    return SampleSpace{symbols, {}};
}

SampleSpace SampleSpace::unit_interval(Vector breakpoints)
{
    std::sort(breakpoints.begin(), breakpoints.end());
    if (breakpoints.empty() || breakpoints.front() != 0.0) breakpoints.insert(breakpoints.begin(), 0.0);
    if (breakpoints.back() != 1.0) breakpoints.push_back(1.0);
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    return SampleSpace{0, std::move(breakpoints)};
}

namespace {

EvaluationGrid grid_from_breaks(const Vector& breaks)
{
    EvaluationGrid grid;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double width = breaks[i + 1] - breaks[i];
        if (width <= 0.0) continue;
        grid.points.push_back(0.5 * (breaks[i] + breaks[i + 1]));
        grid.weights.push_back(width);
    }
    return grid;
}

} // namespace

EvaluationGrid evaluation_grid(const SampleSpace& a, const SampleSpace& b)
{
    if (a.discrete() != b.discrete()) throw InvalidArgument("evaluation_grid: mixed discrete/continuous spaces");
    if (a.discrete()) {
        if (a.symbols != b.symbols) throw InvalidArgument("evaluation_grid: alphabet sizes differ");
        return evaluation_grid(a);
    }
    Vector breaks = a.breakpoints;
    breaks.insert(breaks.end(), b.breakpoints.begin(), b.breakpoints.end());
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    return grid_from_breaks(breaks);
}

EvaluationGrid evaluation_grid(const SampleSpace& space)
{
    if (!space.discrete()) return grid_from_breaks(space.breakpoints);
    EvaluationGrid grid;
    grid.points.resize(space.symbols);
    grid.weights.assign(space.symbols, 1.0);
    for (std::size_t k = 0; k < space.symbols; ++k) grid.points[k] = static_cast<double>(k);
    return grid;
}

EvaluationGrid refine(const EvaluationGrid& grid, bool discrete)
{
    if (discrete) return grid;
    EvaluationGrid out;
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const double half = 0.5 * grid.weights[i];
        out.points.push_back(grid.points[i] - 0.5 * half);
        out.points.push_back(grid.points[i] + 0.5 * half);
        out.weights.push_back(half);
        out.weights.push_back(half);
    }
    return out;
}

// ---------------------------------------------------------------------------

LogDensityTable::LogDensityTable(std::size_t steps, std::size_t points)
    : steps_(steps), points_(points), values_(steps * points, 0.0)
{
}

std::span<const double> LogDensityTable::row(std::size_t step) const
{
    return std::span<const double>(values_).subspan(step * points_, points_);
}

Oracle::Oracle(std::shared_ptr<const Model> model, Vector theta) : model_(std::move(model)), theta_(std::move(theta))
{
    if (!model_) throw InvalidArgument("Oracle: null model");
    model_->theta_space().require(theta_);
}

LogDensityTable Oracle::log_density_table(const Trajectory& traj, std::span<const double> points) const
{
    return model_->log_density_table(theta_, traj, points);
}

// ---------------------------------------------------------------------------

double log_density(const Model& model, std::span<const double> theta, const Trajectory& traj, std::size_t t, double x)
{
    if (t < 1 || t > traj.n()) throw InvalidArgument("log_density: step out of range");
    const double point[1] = {x};
    const LogDensityTable table = model.log_density_table(theta, traj, point);
    return table(t - 1, 0);
}

double partial_log_likelihood(const Model& model, std::span<const double> theta, const Trajectory& traj)
{
    model.theta_space().require(theta);
    const Vector terms = model.log_likelihood_terms(theta, traj);
    double sum = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (!std::isfinite(terms[t]))
            throw NonFiniteDensity("non-finite log density at step " + std::to_string(t + 1) + " of model " + model.id());
        sum += terms[t];
    }
    return sum;
}

double normalization_error(const Model& model, std::span<const double> theta, const Trajectory& traj)
{
    const EvaluationGrid grid = evaluation_grid(model.sample_space());
    const LogDensityTable table = model.log_density_table(theta, traj, grid.points);
    double worst = 0.0;
    for (std::size_t t = 0; t < table.steps(); ++t) {
        double mass = 0.0;
        for (std::size_t j = 0; j < grid.points.size(); ++j) mass += grid.weights[j] * std::exp(table(t, j));
        worst = std::max(worst, std::abs(mass - 1.0));
    }
    return worst;
}

// ---------------------------------------------------------------------------

bool BoundsReport::ok() const
{
    if (model_violations > 0 || oracle_violations > 0) return false;
    return std::none_of(tails.begin(), tails.end(), [](const TailCheck& c) { return c.flagged; });
}

BoundsReport check_assumption_bounds(
    const Model& model, const Trajectory& traj, std::span<const Vector> theta_sample, const Oracle* oracle)
{
    const AssumptionConstants& k = model.constants();
    BoundsReport report;
    report.regime = k.regime;
    report.model_min = std::numeric_limits<double>::infinity();
    report.model_max = -std::numeric_limits<double>::infinity();

    const double lo = k.regime == Regime::Bounded ? k.epsilon * (1.0 - 1e-12) : 0.0;
    const double hi = k.regime == Regime::Bounded ? (1.0 / k.epsilon) * (1.0 + 1e-12) : 0.0;
    auto out_of_range = [&](double p) { return k.regime == Regime::Bounded && (p < lo || p > hi); };

    // Per-step spread of log p_{theta,t}(X_t) across the sample, for the tail check.
    Vector step_min(traj.n(), std::numeric_limits<double>::infinity());
    Vector step_max(traj.n(), -std::numeric_limits<double>::infinity());
    auto track = [&](const Vector& terms) {
        for (std::size_t t = 0; t < terms.size(); ++t) {
            step_min[t] = std::min(step_min[t], terms[t]);
            step_max[t] = std::max(step_max[t], terms[t]);
        }
    };

    for (const Vector& theta : theta_sample) {
        const Vector terms = model.log_likelihood_terms(theta, traj);
        track(terms);
        for (double lp : terms) {
            const double p = std::exp(lp);
            report.model_min = std::min(report.model_min, p);
            report.model_max = std::max(report.model_max, p);
            if (out_of_range(p)) ++report.model_violations;
        }
    }
    if (oracle) {
        const Vector terms = oracle->model().log_likelihood_terms(oracle->theta(), traj);
        track(terms);
        double mn = std::numeric_limits<double>::infinity();
        double mx = -mn;
        for (double lp : terms) {
            const double p = std::exp(lp);
            mn = std::min(mn, p);
            mx = std::max(mx, p);
            if (out_of_range(p)) ++report.oracle_violations;
        }
        report.oracle_min = mn;
        report.oracle_max = mx;
    }

    if (k.regime == Regime::Unbounded) {
        for (double y : {1.0, 2.0, 3.0, 4.0, 5.0}) {
            std::size_t exceed = 0;
            for (std::size_t t = 0; t < traj.n(); ++t)
                if (step_max[t] - step_min[t] >= k.tail_scale * y) ++exceed;
            TailCheck check;
            check.y = y;
            check.exceedance = static_cast<double>(exceed) / static_cast<double>(traj.n());
            check.bound = std::exp(-y);
            check.flagged = check.exceedance > check.bound;
            report.tails.push_back(check);
        }
    }
    return report;
}

double estimate_lipschitz(const Model& model, const Trajectory& traj, std::span<const std::pair<Vector, Vector>> pairs)
{
    const NormId norm = model.constants().norm;
    double best = 0.0;
    for (const auto& [delta, theta] : pairs) {
        const double dist = norm_distance(norm, delta, theta);
        const Vector a = model.log_likelihood_terms(delta, traj);
        const Vector b = model.log_likelihood_terms(theta, traj);
        double gap = 0.0;
        for (std::size_t t = 0; t < a.size(); ++t) gap = std::max(gap, std::abs(a[t] - b[t]));
        if (dist == 0.0) {
            if (gap != 0.0) throw ZeroDistance("estimate_lipschitz: identical parameters give different densities");
            continue;
        }
        best = std::max(best, gap / dist);
    }
    return best;
}

} // namespace penlik
