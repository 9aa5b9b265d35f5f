#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "penlik/core.hpp"

namespace penlik {

struct ScalarOptimum {
    double argmax = 0.0;
    double value = 0.0;
};

// Golden-section search for a maximum of f on [lo, hi].
ScalarOptimum golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

// Evaluates f on `points` equally spaced nodes of [lo, hi], then refines by
// golden section on the two cells around the best node.
ScalarOptimum grid_golden_max(const std::function<double(double)>& f, double lo, double hi, std::size_t points);

// Objective returning f(theta) and writing the gradient into `grad`.
using SmoothObjective = std::function<double(std::span<const double> theta, std::span<double> grad)>;
using Projection = std::function<void(std::span<double> theta)>;

struct AscentOptions {
    std::size_t max_iter = 2000;
    double tol = 1e-10; // on the gradient-mapping norm
    double initial_step = 1.0;
};

struct AscentResult {
    Vector theta;
    double value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

// Projected gradient ascent with a backtracking sufficient-increase test.
AscentResult projected_gradient_ascent(
    const SmoothObjective& objective, const Projection& project, Vector start, const AscentOptions& options = {});

// Euclidean projection onto {lo <= x_i <= hi, sum x_i = total}.
void project_capped_simplex(std::span<double> x, double lo, double hi, double total);

// Central finite-difference gradient of a scalar function.
Vector finite_difference_gradient(const std::function<double(std::span<const double>)>& f, std::span<const double> x, double step);

} // namespace penlik
