#include "penlik/neuro.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "penlik/error.hpp"
#include "penlik/optimize.hpp"

namespace penlik {

std::string_view to_string(NeuroVariant variant)
{
    return variant == NeuroVariant::Hawkes ? "hawkes" : "gl";
}

NeuroVariant parse_variant(std::string_view text)
{
    if (text == "hawkes") return NeuroVariant::Hawkes;
    if (text == "gl") return NeuroVariant::GL;
    throw InvalidArgument("unknown neuro variant '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

RateFunction RateFunction::linear(double baseline)
{
    return RateFunction(Kind::Linear, baseline);
}

RateFunction RateFunction::sigmoid(double offset)
{
    return RateFunction(Kind::Sigmoid, offset);
}

double RateFunction::operator()(double x) const
{
    if (kind_ == Kind::Linear) return parameter_ + x;
    const double z = x + parameter_;
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double RateFunction::derivative(double x) const
{
    if (kind_ == Kind::Linear) return 1.0;
    const double s = (*this)(x);
    return s * (1.0 - s);
}

double RateFunction::inverse(double p) const
{
    if (kind_ == Kind::Linear) return p - parameter_;
    if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("sigmoid inverse: p must lie in (0, 1)");
    return std::log(p / (1.0 - p)) - parameter_;
}

double RateFunction::lipschitz() const
{
    return kind_ == Kind::Linear ? 1.0 : 0.25;
}

// ---------------------------------------------------------------------------

double NetworkParameters::weight(std::size_t i, std::size_t j, std::size_t u) const
{
    return weights.at((i * neurons + j) * lag + (u - 1));
}

Vector NetworkParameters::incoming(std::size_t i) const
{
    Vector out(neurons * lag);
    for (std::size_t j = 0; j < neurons; ++j)
        for (std::size_t u = 1; u <= lag; ++u) out[j * lag + (u - 1)] = weight(i, j, u);
    return out;
}

void NetworkParameters::validate(double epsilon) const
{
    if (neurons == 0 || lag == 0) throw InvalidArgument("network: need neurons and lag");
    if (weights.size() != neurons * neurons * lag) throw InvalidArgument("network: weight array has the wrong size");
    if (rates.size() != neurons) throw InvalidArgument("network: one rate function per neuron");
    for (std::size_t i = 0; i < neurons; ++i) {
        double pos = 0.0, neg = 0.0;
        for (std::size_t j = 0; j < neurons; ++j)
            for (std::size_t u = 1; u <= lag; ++u) {
                const double w = weight(i, j, u);
                (w > 0.0 ? pos : neg) += w;
            }
        const double lo = rates[i](neg), hi = rates[i](pos);
        if (lo < epsilon || hi > 1.0 - epsilon) {
            std::ostringstream os;
            os << "neuron " << i << ": reachable rates [" << lo << ", " << hi << "] leave [" << epsilon << ", "
               << 1.0 - epsilon << "]";
            throw RateOutOfRange(os.str());
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

// Projects the nonnegative entries `values` onto {x >= 0, sum x <= budget}.
void cap_l1(std::vector<double*>& values, double budget)
{
    double sum = 0.0;
    for (const double* v : values) sum += *v;
    if (sum <= budget) return;
    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (const double* v : values) sorted.push_back(*v);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumulative += sorted[j];
        const double candidate = (cumulative - budget) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) tau = candidate;
    }
    for (double* v : values) *v = std::max(*v - tau, 0.0);
}

} // namespace

NeuroModel::NeuroModel(std::size_t target, std::vector<std::size_t> neighborhood, std::size_t lag, NeuroVariant variant,
    RateFunction rate, double epsilon)
    : target_(target), neighborhood_(std::move(neighborhood)), lag_(lag), variant_(variant), rate_(rate), epsilon_(epsilon)
{
    if (neighborhood_.empty() || lag == 0) throw InvalidArgument("NeuroModel: empty neighborhood or zero lag");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidArgument("NeuroModel: epsilon must lie in (0, 1/2)");
    const double base = rate_(0.0);
    if (base < epsilon || base > 1.0 - epsilon) throw InvalidArgument("NeuroModel: phi(0) outside [eps, 1 - eps]");
    positive_budget_ = rate_.inverse(1.0 - epsilon);
    negative_budget_ = -rate_.inverse(epsilon);

    constants_.regime = Regime::Bounded;
    constants_.epsilon = epsilon;
    constants_.lipschitz = 2.0 * rate_.lipschitz() / epsilon;
    constants_.diameter = std::abs(rate_.inverse(epsilon)) + std::abs(rate_.inverse(1.0 - epsilon));
    constants_.norm = NormId::L1;
    if (constants_.lipschitz * constants_.diameter < 1.0) constants_.lipschitz = 1.0 / constants_.diameter;
    constants_.validate();

    space_ = ThetaSpace(Vector(dim(), -negative_budget_), Vector(dim(), positive_budget_));
    const double pos_budget = positive_budget_, neg_budget = negative_budget_;
    space_.with_constraint("excitatory mass", [pos_budget](std::span<const double> theta) {
        double s = 0.0;
        for (double v : theta) s += std::max(v, 0.0);
        return pos_budget - s;
    });
    space_.with_constraint("inhibitory mass", [neg_budget](std::span<const double> theta) {
        double s = 0.0;
        for (double v : theta) s += std::max(-v, 0.0);
        return neg_budget - s;
    });
}

std::string NeuroModel::id() const
{
    std::string out = "neuro-v";
    for (std::size_t k = 0; k < neighborhood_.size(); ++k) {
        if (k > 0) out += '_';
        out += std::to_string(neighborhood_[k]);
    }
    return out + "-a" + std::to_string(lag_);
}

int NeuroModel::last_spike_before(const SpikeRaster& raster, int t) const
{
    for (int s = std::min(t - 1, raster.last_time()); s >= raster.first_time(); --s)
        if (raster.spike(target_, s)) return s;
    return raster.first_time() - 1;
}

double NeuroModel::linear_predictor(std::span<const double> theta, const SpikeRaster& raster, int t) const
{
    if (t - static_cast<int>(lag_) < raster.first_time() || t > raster.last_time())
        throw InsufficientHistory("neuro: raster does not cover the lag window of step " + std::to_string(t));
    std::size_t depth = lag_;
    if (variant_ == NeuroVariant::GL) {
        const int last = last_spike_before(raster, t);
        depth = std::min<std::size_t>(lag_, static_cast<std::size_t>(t - last));
    }
    double eta = 0.0;
    for (std::size_t v = 0; v < neighborhood_.size(); ++v)
        for (std::size_t u = 1; u <= depth; ++u)
            if (raster.spike(neighborhood_[v], t - static_cast<int>(u))) eta += theta[v * lag_ + (u - 1)];
    return eta;
}

double NeuroModel::spike_prob(std::span<const double> theta, const SpikeRaster& raster, int t) const
{
    return rate_(linear_predictor(theta, raster, t));
}

std::vector<std::uint8_t> NeuroModel::design(const SpikeRaster& raster, std::size_t n) const
{
    if (1 - static_cast<int>(lag_) < raster.first_time() || static_cast<int>(n) > raster.last_time())
        throw InsufficientHistory("neuro: raster does not cover the model lag");
    for (std::size_t j : neighborhood_)
        if (j >= raster.neurons()) throw InvalidArgument("neuro: neighborhood neuron outside the raster");
    if (target_ >= raster.neurons()) throw InvalidArgument("neuro: target neuron outside the raster");

    const std::size_t d = dim();
    std::vector<std::uint8_t> z(n * d, 0);
    int last = raster.first_time() - 1;
    for (int s = raster.first_time(); s <= 0; ++s)
        if (raster.spike(target_, s)) last = s;
    for (std::size_t step = 0; step < n; ++step) {
        const int t = static_cast<int>(step) + 1;
        std::size_t depth = lag_;
        if (variant_ == NeuroVariant::GL) depth = std::min<std::size_t>(lag_, static_cast<std::size_t>(t - last));
        for (std::size_t v = 0; v < neighborhood_.size(); ++v)
            for (std::size_t u = 1; u <= depth; ++u)
                z[step * d + v * lag_ + (u - 1)] = raster.spike(neighborhood_[v], t - static_cast<int>(u)) ? 1 : 0;
        if (raster.spike(target_, t)) last = t;
    }
    return z;
}

void NeuroModel::check_history(const Trajectory& traj) const
{
    const auto* raster = std::get_if<SpikeRaster>(&traj.side_info());
    if (!raster) throw InsufficientHistory("neuro: trajectory carries no spike raster");
    if (target_ >= raster->neurons()) throw InvalidArgument("neuro: target neuron outside the raster");
    for (std::size_t t = 1; t <= traj.n(); ++t) {
        const double x = traj.at(t);
        if ((x != 0.0 && x != 1.0) || (x == 1.0) != raster->spike(target_, static_cast<int>(t)))
            throw InconsistentHistory("neuro: observations disagree with the raster at step " + std::to_string(t));
    }
}

Vector NeuroModel::log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const
{
    check_history(traj);
    const auto& raster = traj.side<SpikeRaster>();
    const std::size_t n = traj.n(), d = dim();
    const auto z = design(raster, n);
    Vector out(n);
    for (std::size_t t = 0; t < n; ++t) {
        double eta = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            if (z[t * d + k]) eta += theta[k];
        const double p = rate_(eta);
        out[t] = traj.observations()[t] == 1.0 ? std::log(p) : std::log1p(-p);
    }
    return out;
}

LogDensityTable NeuroModel::log_density_table(
    std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const
{
    check_history(traj);
    const auto& raster = traj.side<SpikeRaster>();
    const std::size_t n = traj.n(), d = dim();
    const auto z = design(raster, n);
    LogDensityTable table(n, points.size());
    for (std::size_t t = 0; t < n; ++t) {
        double eta = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            if (z[t * d + k]) eta += theta[k];
        const double p = rate_(eta);
        for (std::size_t j = 0; j < points.size(); ++j) {
            if (points[j] == 1.0)
                table(t, j) = std::log(p);
            else if (points[j] == 0.0)
                table(t, j) = std::log1p(-p);
            else
                throw InvalidArgument("neuro: evaluation point outside {0, 1}");
        }
    }
    return table;
}

double NeuroModel::objective(std::span<const double> theta, std::span<const std::uint8_t> z,
    std::span<const double> labels, std::span<double> grad) const
{
    const std::size_t d = dim(), n = labels.size();
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double eta = 0.0;
        for (std::size_t k = 0; k < d; ++k)
            if (z[t * d + k]) eta += theta[k];
        const double p = rate_(eta);
        if (!(p > 0.0 && p < 1.0)) return -std::numeric_limits<double>::infinity();
        const double y = labels[t];
        total += y * std::log(p) + (1.0 - y) * std::log1p(-p);
        const double slope = rate_.derivative(eta) * (y / p - (1.0 - y) / (1.0 - p));
        for (std::size_t k = 0; k < d; ++k)
            if (z[t * d + k]) grad[k] += slope;
    }
    const double scale = 1.0 / static_cast<double>(n);
    for (double& g : grad) g *= scale;
    return total * scale;
}

void NeuroModel::project(std::span<double> theta) const
{
    std::vector<double*> pos, neg;
    std::vector<double> magnitude(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        magnitude[k] = std::abs(theta[k]);
        if (theta[k] > 0.0) pos.push_back(&magnitude[k]);
        if (theta[k] < 0.0) neg.push_back(&magnitude[k]);
    }
    cap_l1(pos, positive_budget_);
    cap_l1(neg, negative_budget_);
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = theta[k] > 0.0 ? magnitude[k] : -magnitude[k];
}

Vector NeuroModel::fit(std::span<const std::uint8_t> z, std::span<const double> labels, std::span<const double> start) const
{
    const SmoothObjective f = [&](std::span<const double> theta, std::span<double> grad) {
        return objective(theta, z, labels, grad);
    };
    const Projection proj = [&](std::span<double> theta) { project(theta); };
    AscentOptions options;
    options.max_iter = 5000;
    options.tol = 1e-10;
    Vector initial(dim(), 0.0);
    if (start.size() == dim() && space_.contains(start)) initial.assign(start.begin(), start.end());
    return projected_gradient_ascent(f, proj, std::move(initial), options).theta;
}

Vector NeuroModel::maximum_likelihood(const Trajectory& traj, Philox&) const
{
    check_history(traj);
    const auto z = design(traj.side<SpikeRaster>(), traj.n());
    return fit(z, traj.observations());
}

Vector NeuroModel::minimize_oracle_loss(
    const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox&) const
{
    check_history(traj);
    const double spike[1] = {1.0};
    const LogDensityTable truth = oracle.log_density_table(traj, spike);
    Vector labels(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t) labels[t] = std::exp(truth(t, 0));
    const auto z = design(traj.side<SpikeRaster>(), traj.n());
    return fit(z, labels, start);
}

Vector NeuroModel::random_parameter(Philox& rng) const
{
    Vector theta(dim());
    double pos = 0.0, neg = 0.0;
    for (double& v : theta) {
        v = uniform(rng, -negative_budget_, positive_budget_);
        if (v > 0.0)
            pos += v;
        else
            neg -= v;
    }
    const double pos_scale = pos > positive_budget_ ? uniform01(rng) * positive_budget_ / pos : 1.0;
    const double neg_scale = neg > negative_budget_ ? uniform01(rng) * negative_budget_ / neg : 1.0;
    for (double& v : theta) v *= v > 0.0 ? pos_scale : neg_scale;
    return theta;
}

// ---------------------------------------------------------------------------

Trajectory neuro_trajectory(const SpikeRaster& raster, std::size_t target)
{
    if (raster.last_time() < 2) throw InvalidArgument("neuro_trajectory: raster must reach time 2");
    Vector xs(static_cast<std::size_t>(raster.last_time()));
    for (int t = 1; t <= raster.last_time(); ++t) xs[static_cast<std::size_t>(t - 1)] = raster.spike(target, t) ? 1.0 : 0.0;
    return Trajectory(std::move(xs), raster);
}

NeuroModel true_neuro_model(const NetworkParameters& params, std::size_t target, NeuroVariant variant, double epsilon)
{
    std::vector<std::size_t> all(params.neurons);
    for (std::size_t j = 0; j < params.neurons; ++j) all[j] = j;
    return NeuroModel(target, std::move(all), params.lag, variant, params.rates.at(target), epsilon);
}

SpikeRaster simulate_network(const NetworkParameters& params, NeuroVariant variant, std::size_t n, std::size_t window,
    double epsilon, Philox& rng, const std::vector<std::vector<std::uint8_t>>* initial_window)
{
    params.validate(epsilon);
    if (window < params.lag) throw InvalidArgument("simulate_network: window shorter than the true lag");
    const std::size_t neurons = params.neurons;
    const int w = static_cast<int>(window);
    if (initial_window) {
        if (initial_window->size() != neurons) throw InvalidArgument("simulate_network: initial window needs one row per neuron");
        for (const auto& row : *initial_window)
            if (row.size() != window) throw InvalidArgument("simulate_network: initial window rows must have `window` entries");
    }
    SpikeRaster raster(neurons, -w, static_cast<int>(n));
    auto history = [&](std::size_t j, int s) -> bool {
        if (s >= -w) return raster.spike(j, s);
        if (initial_window && s >= -2 * w) return (*initial_window)[j][static_cast<std::size_t>(s + 2 * w)] != 0;
        return false;
    };
    const int never = std::numeric_limits<int>::min() / 2;
    std::vector<int> last(neurons, never);
    if (initial_window) {
        for (std::size_t j = 0; j < neurons; ++j)
            for (int s = -2 * w; s < -w; ++s)
                if (history(j, s)) last[j] = s;
    }

    std::vector<std::uint8_t> fired(neurons);
    for (int t = -w; t <= static_cast<int>(n); ++t) {
        for (std::size_t i = 0; i < neurons; ++i) {
            std::size_t depth = params.lag;
            if (variant == NeuroVariant::GL && last[i] != never)
                depth = std::min<std::size_t>(params.lag, static_cast<std::size_t>(t - last[i]));
            double eta = 0.0;
            for (std::size_t j = 0; j < neurons; ++j)
                for (std::size_t u = 1; u <= depth; ++u)
                    if (history(j, t - static_cast<int>(u))) eta += params.weight(i, j, u);
            fired[i] = bernoulli(rng, params.rates[i](eta)) ? 1 : 0;
        }
        for (std::size_t i = 0; i < neurons; ++i) {
            raster.set(i, t, fired[i] != 0);
            if (fired[i]) last[i] = t;
        }
    }
    return raster;
}

SpikeRaster simulate_network(const NetworkParameters& params, NeuroVariant variant, std::size_t n, std::size_t window,
    double epsilon, std::uint64_t seed)
{
    Philox rng(seed, 0);
    return simulate_network(params, variant, n, window, epsilon, rng);
}

Vector neuro_mle(const NeuroModel& model, const Trajectory& traj)
{
    Philox unused(0, 0);
    return model.maximum_likelihood(traj, unused);
}

double average_square_distance(
    const NetworkParameters& truth, const NeuroModel& model, std::span<const double> theta, const Trajectory& traj)
{
    const NeuroModel reference = true_neuro_model(truth, model.target(), model.variant(), model.epsilon());
    const Vector truth_theta = truth.incoming(model.target());
    const auto& raster = traj.side<SpikeRaster>();
    const std::size_t n = traj.n();
    const auto za = reference.design(raster, n);
    const auto zb = model.design(raster, n);
    const std::size_t da = reference.dim(), db = model.dim();
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double a = 0.0, b = 0.0;
        for (std::size_t k = 0; k < da; ++k)
            if (za[t * da + k]) a += truth_theta[k];
        for (std::size_t k = 0; k < db; ++k)
            if (zb[t * db + k]) b += theta[k];
        total += (a - b) * (a - b);
    }
    return total / static_cast<double>(n);
}

DistanceSandwich distance_sandwich(const RateFunction& rate, double lo, double hi)
{
    if (hi < lo) std::swap(lo, hi);
    if (rate.kind() == RateFunction::Kind::Sigmoid) {
        const double peak = std::clamp(-rate.parameter(), lo, hi);
        return {0.5 * std::min(rate.derivative(lo), rate.derivative(hi)), 0.5 * rate.derivative(peak)};
    }
    const double plo = rate(lo), phi = rate(hi);
    if (!(plo > 0.0 && phi < 1.0)) throw InvalidArgument("distance_sandwich: predictor range leaves (0, 1)");
    // Pinsker below, chi-square above.
    return {2.0, 1.0 / std::min(plo * (1.0 - plo), phi * (1.0 - phi))};
}

// ---------------------------------------------------------------------------

void write_raster_csv(const SpikeRaster& raster, std::ostream& out)
{
    out << "neuron";
    for (int t = raster.first_time(); t <= raster.last_time(); ++t) out << ',' << t;
    out << '\n';
    for (std::size_t i = 0; i < raster.neurons(); ++i) {
        out << i;
        for (int t = raster.first_time(); t <= raster.last_time(); ++t) out << ',' << (raster.spike(i, t) ? '1' : '0');
        out << '\n';
    }
    if (!out) throw IoFailure("write_raster_csv: stream error");
}

SpikeRaster read_raster_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw IoFailure("read_raster_csv: missing header");
    std::vector<int> times;
    {
        std::istringstream header(line);
        std::string cell;
        std::getline(header, cell, ',');
        if (cell != "neuron") throw IoFailure("read_raster_csv: header must start with 'neuron'");
        while (std::getline(header, cell, ',')) times.push_back(std::stoi(cell));
    }
    if (times.empty()) throw IoFailure("read_raster_csv: no time columns");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (times[k] != times[k - 1] + 1) throw IoFailure("read_raster_csv: time columns must be consecutive");

    std::vector<std::vector<std::uint8_t>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');
        if (std::stoul(cell) != rows.size()) throw IoFailure("read_raster_csv: neuron rows out of order");
        std::vector<std::uint8_t> spikes;
        while (std::getline(row, cell, ',')) {
            if (cell != "0" && cell != "1") throw IoFailure("read_raster_csv: entries must be 0 or 1");
            spikes.push_back(cell == "1" ? 1 : 0);
        }
        if (spikes.size() != times.size()) throw IoFailure("read_raster_csv: ragged row");
        rows.push_back(std::move(spikes));
    }
    if (rows.empty()) throw IoFailure("read_raster_csv: no neurons");
    SpikeRaster raster(rows.size(), times.front(), times.back());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < times.size(); ++k) raster.set(i, times[k], rows[i][k] != 0);
    return raster;
}

} // namespace penlik
