#include "penlik/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "penlik/error.hpp"

namespace penlik {

ScalarOptimum golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol)
{
    if (hi < lo) throw InvalidArgument("golden_section_max: empty interval");
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    ScalarOptimum best{c, fc};
    if (fd > best.value) best = {d, fd};
    for (double end : {lo, hi}) {
        const double fe = f(end);
        if (fe > best.value) best = {end, fe};
    }
    return best;
}

ScalarOptimum grid_golden_max(const std::function<double(double)>& f, double lo, double hi, std::size_t points)
{
    if (hi <= lo) return {lo, f(lo)};
    points = std::max<std::size_t>(points, 3);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    ScalarOptimum best{lo, f(lo)};
    std::size_t best_index = 0;
    for (std::size_t i = 1; i < points; ++i) {
        const double x = i + 1 == points ? hi : lo + step * static_cast<double>(i);
        const double v = f(x);
        if (v > best.value) {
            best = {x, v};
            best_index = i;
        }
    }
    const double a = best_index == 0 ? lo : lo + step * static_cast<double>(best_index - 1);
    const double b = best_index + 1 >= points ? hi : lo + step * static_cast<double>(best_index + 1);
    const ScalarOptimum refined = golden_section_max(f, a, b);
    return refined.value > best.value ? refined : best;
}

AscentResult projected_gradient_ascent(
    const SmoothObjective& objective, const Projection& project, Vector start, const AscentOptions& options)
{
    const std::size_t dim = start.size();
    project(start);
    Vector grad(dim), trial(dim), trial_grad(dim);
    AscentResult result;
    result.theta = std::move(start);
    result.value = objective(result.theta, grad);
    double step = options.initial_step;

    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        result.iterations = iter + 1;
        bool accepted = false;
        double moved = 0.0;
        for (int shrink = 0; shrink < 60; ++shrink) {
            for (std::size_t i = 0; i < dim; ++i) trial[i] = result.theta[i] + step * grad[i];
            project(trial);
            double inner = 0.0, sq = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double d = trial[i] - result.theta[i];
                inner += grad[i] * d;
                sq += d * d;
            }
            if (sq == 0.0) {
                result.converged = true;
                return result;
            }
            const double value = objective(trial, trial_grad);
            if (std::isfinite(value) && value >= result.value + inner - sq / (2.0 * step)) {
                moved = std::sqrt(sq) / step;
                const double gain = value - result.value;
                result.theta.swap(trial);
                grad.swap(trial_grad);
                result.value = value;
                accepted = true;
                if (moved < options.tol || gain <= 1e-15 * std::max(1.0, std::abs(value))) {
                    result.converged = true;
                    return result;
                }
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            result.converged = true;
            return result;
        }
        step *= 1.5;
    }
    return result;
}

void project_capped_simplex(std::span<double> x, double lo, double hi, double total)
{
    const double n = static_cast<double>(x.size());
    if (n * lo > total * (1 + 1e-12) || n * hi < total * (1 - 1e-12))
        throw InvalidArgument("project_capped_simplex: empty feasible set");
    auto mass = [&](double shift) {
        double s = 0.0;
        for (double v : x) s += std::clamp(v - shift, lo, hi);
        return s;
    };
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    double a = *mn - hi, b = *mx - lo; // mass(a) = n*hi >= total, mass(b) = n*lo <= total
    for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
        const double mid = 0.5 * (a + b);
        (mass(mid) > total ? a : b) = mid;
    }
    const double shift = 0.5 * (a + b);
    for (double& v : x) v = std::clamp(v - shift, lo, hi);
    // Spread the remaining rounding error over the free coordinates.
    double rest = total - std::accumulate(x.begin(), x.end(), 0.0);
    std::size_t free_count = 0;
    for (double v : x)
        if (v > lo && v < hi) ++free_count;
    if (free_count > 0 && rest != 0.0) {
        const double each = rest / static_cast<double>(free_count);
        for (double& v : x)
            if (v > lo && v < hi) v = std::clamp(v + each, lo, hi);
    }
}

Vector finite_difference_gradient(const std::function<double(std::span<const double>)>& f, std::span<const double> x, double step)
{
    Vector point(x.begin(), x.end()), grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        point[i] = x[i] + step;
        const double up = f(point);
        point[i] = x[i] - step;
        const double down = f(point);
        point[i] = x[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

} // namespace penlik
