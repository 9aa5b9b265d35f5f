#include "penlik/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "penlik/error.hpp"
#include "penlik/optimize.hpp"

namespace penlik {

void repair_probability_row(std::span<double> row, double lo, double hi)
{
    const double len = static_cast<double>(row.size());
    if (len * lo > 1.0 + 1e-12 || len * hi < 1.0 - 1e-12) throw NoFeasibleInit("probability row box is empty");
    for (int pass = 0; pass < 4; ++pass) {
        double sum = 0.0;
        for (double& v : row) {
            v = std::clamp(std::isfinite(v) ? v : lo, lo, hi);
            sum += v;
        }
        const double gap = 1.0 - sum;
        if (gap == 0.0) return;
        double room = 0.0;
        for (double v : row) room += gap > 0.0 ? hi - v : v - lo;
        if (room <= 0.0) return;
        const double share = gap / room;
        for (double& v : row) v += share * (gap > 0.0 ? hi - v : v - lo);
    }
    for (double& v : row) v = std::clamp(v, lo, hi);
}

namespace {

double checked_log_n(std::size_t horizon)
{
    if (horizon < 2) throw InvalidArgument("HmmModel: horizon must be at least 2");
    return std::log(static_cast<double>(horizon));
}

std::size_t symbol_of(double x, std::size_t alphabet)
{
    if (!(x >= 0.0) || x != std::floor(x) || x >= static_cast<double>(alphabet))
        throw InvalidArgument("hmm: observation outside the alphabet");
    return static_cast<std::size_t>(x);
}

// Dense parameter storage used by the recursions.
struct Dense {
    std::size_t h = 0;
    std::size_t k = 0;
    Vector pi;
    Vector q; // h x h
    Vector e; // h x k
};

Dense densify(const HmmParameters& p)
{
    Dense d;
    d.h = p.initial.size();
    d.k = p.emission.front().size();
    d.pi = p.initial;
    for (const auto& row : p.transition) d.q.insert(d.q.end(), row.begin(), row.end());
    for (const auto& row : p.emission) d.e.insert(d.e.end(), row.begin(), row.end());
    return d;
}

// Runs the normalized forward recursion. `on_step(t, predictive_state)` sees
// the state distribution before X_t is observed.
template <typename OnStep>
void forward(const Dense& d, std::span<const std::size_t> xs, OnStep&& on_step)
{
    Vector pred = d.pi, filt(d.h);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        on_step(t, std::span<const double>(pred));
        double c = 0.0;
        for (std::size_t i = 0; i < d.h; ++i) {
            filt[i] = pred[i] * d.e[i * d.k + xs[t]];
            c += filt[i];
        }
        for (std::size_t j = 0; j < d.h; ++j) pred[j] = 0.0;
        for (std::size_t i = 0; i < d.h; ++i) {
            const double w = filt[i] / c;
            for (std::size_t j = 0; j < d.h; ++j) pred[j] += w * d.q[i * d.h + j];
        }
    }
}

std::vector<std::size_t> symbols(const Trajectory& traj, std::size_t alphabet)
{
    std::vector<std::size_t> xs(traj.n());
    for (std::size_t t = 0; t < traj.n(); ++t) xs[t] = symbol_of(traj.observations()[t], alphabet);
    return xs;
}

double predictive(const Dense& d, std::span<const double> state, std::size_t x)
{
    double p = 0.0;
    for (std::size_t i = 0; i < d.h; ++i) p += state[i] * d.e[i * d.k + x];
    return p;
}

// One Baum-Welch pass: returns the log-likelihood at `d` and writes the
// unprojected M-step into `next`.
double baum_welch_step(const Dense& d, std::span<const std::size_t> xs, HmmParameters& next)
{
    const std::size_t n = xs.size(), h = d.h, k = d.k;
    std::vector<double> alpha(n * h), scale(n);
    Vector pred = d.pi;
    double loglik = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double c = 0.0;
        for (std::size_t i = 0; i < h; ++i) {
            alpha[t * h + i] = pred[i] * d.e[i * k + xs[t]];
            c += alpha[t * h + i];
        }
        scale[t] = c;
        loglik += std::log(c);
        for (std::size_t i = 0; i < h; ++i) alpha[t * h + i] /= c;
        std::fill(pred.begin(), pred.end(), 0.0);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < h; ++j) pred[j] += alpha[t * h + i] * d.q[i * h + j];
    }

    Vector beta(h, 1.0), beta_prev(h), gamma(h), trans(h * h, 0.0), emit(h * k, 0.0), weighted(h);
    for (std::size_t tt = n; tt-- > 0;) {
        double norm = 0.0;
        for (std::size_t i = 0; i < h; ++i) {
            gamma[i] = alpha[tt * h + i] * beta[i];
            norm += gamma[i];
        }
        for (std::size_t i = 0; i < h; ++i) emit[i * k + xs[tt]] += gamma[i] / norm;
        if (tt == 0) {
            next.initial.assign(h, 0.0);
            for (std::size_t i = 0; i < h; ++i) next.initial[i] = gamma[i] / norm;
            break;
        }
        // Transitions from tt-1 into tt.
        for (std::size_t j = 0; j < h; ++j) weighted[j] = d.e[j * k + xs[tt]] * beta[j] / scale[tt];
        for (std::size_t i = 0; i < h; ++i) {
            const double a = alpha[(tt - 1) * h + i];
            double b = 0.0;
            for (std::size_t j = 0; j < h; ++j) {
                const double xi = a * d.q[i * h + j] * weighted[j];
                trans[i * h + j] += xi;
                b += d.q[i * h + j] * weighted[j];
            }
            beta_prev[i] = b;
        }
        beta.swap(beta_prev);
    }

    next.transition.assign(h, Vector(h));
    next.emission.assign(h, Vector(k));
    for (std::size_t i = 0; i < h; ++i) {
        double rs = 0.0, es = 0.0;
        for (std::size_t j = 0; j < h; ++j) rs += trans[i * h + j];
        for (std::size_t x = 0; x < k; ++x) es += emit[i * k + x];
        for (std::size_t j = 0; j < h; ++j) next.transition[i][j] = rs > 0.0 ? trans[i * h + j] / rs : 1.0 / static_cast<double>(h);
        for (std::size_t x = 0; x < k; ++x) next.emission[i][x] = es > 0.0 ? emit[i * k + x] / es : 1.0 / static_cast<double>(k);
    }
    return loglik;
}

double hmm_loglik(const Dense& d, std::span<const std::size_t> xs)
{
    double total = 0.0;
    forward(d, xs, [&](std::size_t t, std::span<const double> state) { total += std::log(predictive(d, state, xs[t])); });
    return total;
}

} // namespace

// ---------------------------------------------------------------------------

HmmModel::HmmModel(std::size_t states, std::size_t alphabet, std::size_t horizon, double c_q, double alpha)
    : states_(states), alphabet_(alphabet), horizon_(horizon), c_q_(c_q), alpha_(alpha)
{
    if (states == 0 || alphabet < 2) throw InvalidArgument("HmmModel: need h >= 1 and |X| >= 2");
    if (!(c_q > 0.0) || !(alpha > 0.0)) throw InvalidArgument("HmmModel: c_q and alpha must be positive");
    const double log_n = checked_log_n(horizon);
    const double box = c_q * log_n;
    if (box < 1.0) throw NoFeasibleInit("HmmModel: need c_q log n >= 1 for a nonempty transition box");
    const double h = static_cast<double>(states);
    lower_ = 1.0 / (box * h);
    upper_ = std::min(1.0, box / h);
    floor_ = std::pow(static_cast<double>(horizon), -alpha);
    if (floor_ * static_cast<double>(alphabet) > 1.0) throw NoFeasibleInit("HmmModel: emission floor too high for the alphabet");

    // Every predictive and true density is at least n^{-alpha}/(c log n).
    const double tail = std::log(box) + alpha * log_n;
    constants_.regime = Regime::Unbounded;
    constants_.tail_scale = std::max(1.0, 2.0 * tail);
    constants_.lipschitz = 1.0;
    constants_.diameter = 1.0;
    constants_.norm = NormId::Sup;
    constants_.validate();

    Vector lo, hi;
    const std::size_t free_rows = states_ + 1;
    for (std::size_t r = 0; r < free_rows; ++r) {
        for (std::size_t j = 0; j + 1 < states_; ++j) {
            lo.push_back(lower_);
            hi.push_back(upper_);
        }
    }
    for (std::size_t i = 0; i < states_; ++i) {
        for (std::size_t x = 0; x + 1 < alphabet_; ++x) {
            lo.push_back(floor_);
            hi.push_back(1.0);
        }
    }
    space_ = ThetaSpace(lo, hi);
    const std::size_t hs = states_, ks = alphabet_;
    const double row_lo = lower_, row_hi = upper_, em_lo = floor_;
    space_.with_constraint("implied last entries", [hs, ks, row_lo, row_hi, em_lo](std::span<const double> theta) {
        double slack = std::numeric_limits<double>::infinity();
        std::size_t pos = 0;
        for (std::size_t r = 0; r <= hs; ++r) {
            double s = 0.0;
            for (std::size_t j = 0; j + 1 < hs; ++j) s += theta[pos++];
            const double last = 1.0 - s;
            slack = std::min({slack, last - row_lo, row_hi - last});
        }
        for (std::size_t i = 0; i < hs; ++i) {
            double s = 0.0;
            for (std::size_t x = 0; x + 1 < ks; ++x) s += theta[pos++];
            slack = std::min(slack, 1.0 - s - em_lo);
        }
        return slack;
    });
}

std::string HmmModel::id() const
{
    return "hmm-" + std::to_string(states_);
}

std::size_t HmmModel::dim() const
{
    return states_ * (alphabet_ - 1) + states_ * states_ - 1;
}

Vector HmmModel::pack(const HmmParameters& params) const
{
    Vector theta;
    theta.reserve(dim());
    for (std::size_t j = 0; j + 1 < states_; ++j) theta.push_back(params.initial.at(j));
    for (std::size_t i = 0; i < states_; ++i)
        for (std::size_t j = 0; j + 1 < states_; ++j) theta.push_back(params.transition.at(i).at(j));
    for (std::size_t i = 0; i < states_; ++i)
        for (std::size_t x = 0; x + 1 < alphabet_; ++x) theta.push_back(params.emission.at(i).at(x));
    return theta;
}

HmmParameters HmmModel::unpack(std::span<const double> theta) const
{
    if (theta.size() != dim()) throw InvalidArgument("HmmModel::unpack: wrong dimension");
    HmmParameters p;
    std::size_t pos = 0;
    auto read_row = [&](std::size_t width) {
        Vector row(width);
        double s = 0.0;
        for (std::size_t j = 0; j + 1 < width; ++j) {
            row[j] = theta[pos++];
            s += row[j];
        }
        row[width - 1] = 1.0 - s;
        return row;
    };
    p.initial = read_row(states_);
    for (std::size_t i = 0; i < states_; ++i) p.transition.push_back(read_row(states_));
    for (std::size_t i = 0; i < states_; ++i) p.emission.push_back(read_row(alphabet_));
    return p;
}

void HmmModel::repair(HmmParameters& params) const
{
    repair_probability_row(params.initial, lower_, upper_);
    for (auto& row : params.transition) repair_probability_row(row, lower_, upper_);
    for (auto& row : params.emission) repair_probability_row(row, floor_, 1.0);
}

HmmModel HmmModel::with_lipschitz(double lipschitz) const
{
    HmmModel copy = *this;
    // Assumption 2 needs L M >= 1 and M = 1 here.
    copy.constants_.lipschitz = std::max(1.0, lipschitz);
    return copy;
}

Vector HmmModel::log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const
{
    const Dense d = densify(unpack(theta));
    const auto xs = symbols(traj, alphabet_);
    Vector out(traj.n());
    forward(d, xs, [&](std::size_t t, std::span<const double> state) { out[t] = std::log(predictive(d, state, xs[t])); });
    return out;
}

LogDensityTable HmmModel::log_density_table(
    std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const
{
    const Dense d = densify(unpack(theta));
    const auto xs = symbols(traj, alphabet_);
    std::vector<std::size_t> pts(points.size());
    for (std::size_t j = 0; j < points.size(); ++j) pts[j] = symbol_of(points[j], alphabet_);
    LogDensityTable table(traj.n(), points.size());
    Vector row(alphabet_);
    forward(d, xs, [&](std::size_t t, std::span<const double> state) {
        for (std::size_t x = 0; x < alphabet_; ++x) row[x] = std::log(predictive(d, state, x));
        for (std::size_t j = 0; j < pts.size(); ++j) table(t, j) = row[pts[j]];
    });
    return table;
}

Vector HmmModel::maximum_likelihood(const Trajectory& traj, Philox& rng) const
{
    return hmm_em_fit(*this, traj, em_, rng);
}

Vector HmmModel::random_parameter(Philox& rng) const
{
    HmmParameters p;
    auto draw = [&](std::size_t width, double lo, double hi) {
        Vector row(width);
        double s = 0.0;
        for (double& v : row) {
            v = uniform(rng, lo, hi);
            s += v;
        }
        for (double& v : row) v /= s;
        return row;
    };
    p.initial = draw(states_, lower_, upper_);
    for (std::size_t i = 0; i < states_; ++i) p.transition.push_back(draw(states_, lower_, upper_));
    for (std::size_t i = 0; i < states_; ++i) p.emission.push_back(draw(alphabet_, floor_, 1.0));
    repair(p);
    return pack(p);
}

Vector HmmModel::minimize_oracle_loss(
    const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const
{
    // Minimizes the cross-entropy against the true predictives, which differs
    // from K_n by a theta-free constant. Finite-difference gradients, starting
    // from `start` or from a fresh likelihood fit.
    const EvaluationGrid grid = evaluation_grid(oracle.sample_space(), sample_space());
    const LogDensityTable truth = oracle.log_density_table(traj, grid.points);
    const auto xs = symbols(traj, alphabet_);
    const double n = static_cast<double>(traj.n());
    Vector weights(truth.steps() * alphabet_);
    for (std::size_t t = 0; t < truth.steps(); ++t)
        for (std::size_t j = 0; j < grid.points.size(); ++j)
            weights[t * alphabet_ + symbol_of(grid.points[j], alphabet_)] = std::exp(truth(t, j));

    auto value = [&](std::span<const double> theta) {
        const Dense d = densify(unpack(theta));
        double total = 0.0;
        forward(d, xs, [&](std::size_t t, std::span<const double> state) {
            for (std::size_t x = 0; x < alphabet_; ++x) total += weights[t * alphabet_ + x] * std::log(predictive(d, state, x));
        });
        return total / n;
    };
    const SmoothObjective objective = [&](std::span<const double> theta, std::span<double> grad) {
        const Vector g = finite_difference_gradient(value, theta, 1e-7);
        std::copy(g.begin(), g.end(), grad.begin());
        return value(theta);
    };
    const Projection project = [&](std::span<double> theta) {
        HmmParameters p = unpack(theta);
        repair(p);
        const Vector packed = pack(p);
        std::copy(packed.begin(), packed.end(), theta.begin());
    };

    Vector initial = start.size() == dim() ? Vector(start.begin(), start.end()) : maximum_likelihood(traj, rng);
    AscentOptions options;
    options.max_iter = oracle_fit_iterations_;
    options.tol = 1e-8;
    options.initial_step = 0.1;
    return projected_gradient_ascent(objective, project, std::move(initial), options).theta;
}

// ---------------------------------------------------------------------------

LogDensityTable hmm_conditional_densities(const HmmModel& model, std::span<const double> theta, const Trajectory& traj)
{
    model.theta_space().require(theta);
    Vector points(model.alphabet());
    std::iota(points.begin(), points.end(), 0.0);
    return model.log_density_table(theta, traj, points);
}

Vector hmm_em_fit(const HmmModel& model, const Trajectory& traj, const EmOptions& options, Philox& rng)
{
    const auto xs = symbols(traj, model.alphabet());
    const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
    Vector best_theta;
    double best_loglik = -std::numeric_limits<double>::infinity();

    for (std::size_t r = 0; r < restarts; ++r) {
        Philox stream = rng.split(r);
        HmmParameters params = model.unpack(model.random_parameter(stream));
        HmmParameters kept = params;
        double kept_loglik = -std::numeric_limits<double>::infinity();
        double previous = -std::numeric_limits<double>::infinity();
        for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
            HmmParameters next;
            const double loglik = baum_welch_step(densify(params), xs, next);
            if (loglik > kept_loglik) {
                kept_loglik = loglik;
                kept = params;
            }
            if (std::isfinite(previous) && std::abs(loglik - previous) < options.tol * std::abs(previous)) break;
            previous = loglik;
            model.repair(next);
            params = std::move(next);
        }
        const double last = hmm_loglik(densify(params), xs);
        if (last > kept_loglik) {
            kept_loglik = last;
            kept = params;
        }
        if (kept_loglik > best_loglik) {
            best_loglik = kept_loglik;
            best_theta = model.pack(kept);
        }
    }
    return best_theta;
}

HmmSample sample_hmm(const HmmModel& model, std::span<const double> theta, std::size_t n, Philox& rng)
{
    model.theta_space().require(theta);
    const HmmParameters p = model.unpack(theta);
    Vector xs(n);
    std::vector<std::size_t> hidden(n);
    std::size_t state = categorical(rng, p.initial);
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) state = categorical(rng, p.transition[state]);
        hidden[t] = state;
        xs[t] = static_cast<double>(categorical(rng, p.emission[state]));
    }
    return HmmSample{Trajectory(std::move(xs)), std::move(hidden)};
}

HmmSample sample_hmm(const HmmModel& model, std::span<const double> theta, std::size_t n, std::uint64_t seed)
{
    Philox rng(seed, 0);
    return sample_hmm(model, theta, n, rng);
}

double pilot_lipschitz(const HmmModel& model, const Trajectory& pilot, std::size_t pairs, Philox& rng)
{
    std::vector<std::pair<Vector, Vector>> sample;
    sample.reserve(pairs);
    for (std::size_t i = 0; i < pairs; ++i) {
        Vector theta = model.random_parameter(rng);
        Vector delta;
        if (i % 2 == 0) {
            delta = model.random_parameter(rng);
        } else {
            delta = theta;
            for (double& v : delta) v += uniform(rng, -1e-3, 1e-3);
            HmmParameters p = model.unpack(delta);
            model.repair(p);
            delta = model.pack(p);
        }
        sample.emplace_back(std::move(delta), std::move(theta));
    }
    return estimate_lipschitz(model, pilot, sample);
}

} // namespace penlik
