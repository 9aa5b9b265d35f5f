#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "penlik/rng.hpp"

namespace penlik {

using Vector = std::vector<double>;

enum class Regime { Bounded, Unbounded };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

// Norm used on the parameter set of a model.
enum class NormId { Sup, L1 };

std::string_view to_string(NormId norm);
double norm_distance(NormId norm, std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Trajectories

// Binary spike raster over a fixed set of neurons and the times
// first_time..last_time (inclusive). Time 0 and below form the observed
// history window that precedes the first modelled step.
class SpikeRaster {
public:
    SpikeRaster() = default;
    SpikeRaster(std::size_t neurons, int first_time, int last_time);

    [[nodiscard]] std::size_t neurons() const { return neurons_; }
    [[nodiscard]] int first_time() const { return first_time_; }
    [[nodiscard]] int last_time() const { return last_time_; }
    [[nodiscard]] std::size_t times() const { return static_cast<std::size_t>(last_time_ - first_time_ + 1); }
    [[nodiscard]] bool covers(int t) const { return t >= first_time_ && t <= last_time_; }

    [[nodiscard]] bool spike(std::size_t neuron, int t) const;
    void set(std::size_t neuron, int t, bool value);

    bool operator==(const SpikeRaster&) const = default;

private:
    std::size_t index(std::size_t neuron, int t) const;

    std::size_t neurons_ = 0;
    int first_time_ = 0;
    int last_time_ = -1;
    std::vector<std::uint8_t> spikes_;
};

struct Covariates {
    std::vector<Vector> values; // one row per step 1..n
};

struct BanditHistory {
    Vector realized_losses; // loss received at each step 1..n
};

using SideInfo = std::variant<std::monostate, Covariates, SpikeRaster, BanditHistory>;

// Observed sequence X_1..X_n together with whatever part of the filtration a
// family conditions on. Discrete observations are stored as integral values.
class Trajectory {
public:
    Trajectory(Vector observations, SideInfo side_info = {});

    [[nodiscard]] std::size_t n() const { return observations_.size(); }
    [[nodiscard]] std::span<const double> observations() const { return observations_; }
    // 1-based access, matching the time index of the process.
    [[nodiscard]] double at(std::size_t t) const { return observations_.at(t - 1); }
    [[nodiscard]] const SideInfo& side_info() const { return side_info_; }

    template <typename T>
    [[nodiscard]] const T& side() const;

    [[nodiscard]] Trajectory with_observations(Vector observations) const;
    [[nodiscard]] Trajectory with_side_info(SideInfo side_info) const;

private:
    Vector observations_;
    SideInfo side_info_;
};

// ---------------------------------------------------------------------------
// Model contract

struct AssumptionConstants {
    Regime regime = Regime::Bounded;
    double epsilon = 0.0; // bounded regime: densities in [epsilon, 1/epsilon]
    double tail_scale = 1.0; // unbounded regime: B_m
    double lipschitz = 1.0; // L_m
    double diameter = 1.0; // M_m
    NormId norm = NormId::Sup;

    // Throws InvalidArgument when an assumption's side condition fails.
    void validate() const;
    // A_m as used by the penalty and the residual terms.
    [[nodiscard]] double scale() const;
    // F^inf_m: the bound on log-ratios used by the variance functional.
    [[nodiscard]] double log_ratio_bound(std::size_t n) const;
};

struct AffineEquality {
    Vector coefficients;
    double rhs = 0.0;
};

// Feasible set of a model: a box, at most one affine equality, and any
// number of family-specific constraints expressed as slack functions
// (feasible iff slack >= 0).
class ThetaSpace {
public:
    using Slack = std::function<double(std::span<const double>)>;

    ThetaSpace() = default;
    ThetaSpace(Vector lower, Vector upper);

    ThetaSpace& with_equality(AffineEquality equality);
    ThetaSpace& with_constraint(std::string name, Slack slack);

    [[nodiscard]] std::size_t dim() const { return lower_.size(); }
    [[nodiscard]] std::span<const double> lower() const { return lower_; }
    [[nodiscard]] std::span<const double> upper() const { return upper_; }
    [[nodiscard]] const std::optional<AffineEquality>& equality() const { return equality_; }

    [[nodiscard]] std::optional<std::string> violation(std::span<const double> theta, double tol = 1e-9) const;
    [[nodiscard]] bool contains(std::span<const double> theta, double tol = 1e-9) const;
    // Throws ParameterOutsideModel.
    void require(std::span<const double> theta, double tol = 1e-9) const;

private:
    Vector lower_;
    Vector upper_;
    std::optional<AffineEquality> equality_;
    std::vector<std::pair<std::string, Slack>> constraints_;
};

// Either a finite alphabet {0, ..., symbols-1} with counting measure, or the
// unit interval with Lebesgue measure, in which case every density of the
// model is constant between consecutive breakpoints.
struct SampleSpace {
    std::size_t symbols = 0;
    Vector breakpoints;

    [[nodiscard]] bool discrete() const { return symbols > 0; }
    static SampleSpace finite(std::size_t symbols);
    static SampleSpace unit_interval(Vector breakpoints);
};

// Points of the sample space with their measure. For discrete spaces every
// symbol with weight one; for the unit interval the midpoints of the common
// refinement of two breakpoint sets, weighted by cell length.
struct EvaluationGrid {
    Vector points;
    Vector weights;
};

EvaluationGrid evaluation_grid(const SampleSpace& a, const SampleSpace& b);
EvaluationGrid evaluation_grid(const SampleSpace& space);
// Splits every continuous cell in two; identity for discrete grids.
EvaluationGrid refine(const EvaluationGrid& grid, bool discrete);

// Row-major steps x points matrix of log conditional densities.
class LogDensityTable {
public:
    LogDensityTable() = default;
    LogDensityTable(std::size_t steps, std::size_t points);

    [[nodiscard]] std::size_t steps() const { return steps_; }
    [[nodiscard]] std::size_t points() const { return points_; }
    double& operator()(std::size_t step, std::size_t point) { return values_[step * points_ + point]; }
    double operator()(std::size_t step, std::size_t point) const { return values_[step * points_ + point]; }
    [[nodiscard]] std::span<const double> row(std::size_t step) const;

private:
    std::size_t steps_ = 0;
    std::size_t points_ = 0;
    Vector values_;
};

class Oracle;

// A parametric family {p^m_theta : theta in Theta_m} of predictable
// conditional densities. Implementations are immutable and their evaluators
// read only the part of the trajectory that precedes each step.
class Model {
public:
    virtual ~Model() = default;

    [[nodiscard]] virtual std::string id() const = 0;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual const AssumptionConstants& constants() const = 0;
    [[nodiscard]] virtual const ThetaSpace& theta_space() const = 0;
    [[nodiscard]] virtual SampleSpace sample_space() const = 0;

    // log p^m_{theta,t}(X_t) for t = 1..n. Theta is assumed feasible.
    [[nodiscard]] virtual Vector log_likelihood_terms(std::span<const double> theta, const Trajectory& traj) const = 0;
    // log p^m_{theta,t}(x) for every step t and every x in `points`.
    [[nodiscard]] virtual LogDensityTable log_density_table(
        std::span<const double> theta, const Trajectory& traj, std::span<const double> points) const = 0;

    [[nodiscard]] virtual Vector maximum_likelihood(const Trajectory& traj, Philox& rng) const = 0;
    // Approximates argmin over Theta_m of K_n(p^m_theta) against the oracle;
    // iterative fits may start from `start`, usually the likelihood fit.
    [[nodiscard]] virtual Vector minimize_oracle_loss(
        const Trajectory& traj, const Oracle& oracle, std::span<const double> start, Philox& rng) const = 0;
    // A feasible parameter drawn at random, for probes and sweeps.
    [[nodiscard]] virtual Vector random_parameter(Philox& rng) const = 0;
};

// The true conditional densities of a simulation, represented as a model
// evaluated at a fixed parameter.
class Oracle {
public:
    Oracle(std::shared_ptr<const Model> model, Vector theta);

    [[nodiscard]] const Model& model() const { return *model_; }
    [[nodiscard]] std::span<const double> theta() const { return theta_; }
    [[nodiscard]] SampleSpace sample_space() const { return model_->sample_space(); }
    [[nodiscard]] LogDensityTable log_density_table(const Trajectory& traj, std::span<const double> points) const;

private:
    std::shared_ptr<const Model> model_;
    Vector theta_;
};

// ---------------------------------------------------------------------------
// Operations shared by every family

// Single evaluator call log p^m_{theta,t}(x), t 1-based.
double log_density(const Model& model, std::span<const double> theta, const Trajectory& traj, std::size_t t, double x);

// l_n(theta) = sum_t log p^m_{theta,t}(X_t).
double partial_log_likelihood(const Model& model, std::span<const double> theta, const Trajectory& traj);

// max_t |sum_x p_t(x) mu(x) - 1|.
double normalization_error(const Model& model, std::span<const double> theta, const Trajectory& traj);

struct TailCheck {
    double y = 0.0;
    double exceedance = 0.0; // fraction of steps whose sup log-ratio exceeds B_m * y
    double bound = 0.0; // e^{-y}
    bool flagged = false;
};

struct BoundsReport {
    Regime regime = Regime::Bounded;
    double model_min = 0.0;
    double model_max = 0.0;
    std::optional<double> oracle_min;
    std::optional<double> oracle_max;
    std::size_t model_violations = 0; // (theta, t) pairs outside [eps, 1/eps]
    std::size_t oracle_violations = 0;
    std::vector<TailCheck> tails; // unbounded regime only

    [[nodiscard]] bool ok() const;
};

BoundsReport check_assumption_bounds(
    const Model& model, const Trajectory& traj, std::span<const Vector> theta_sample, const Oracle* oracle = nullptr);

// max over pairs and t of |log(p_delta,t(X_t) / p_theta,t(X_t))| / ||delta - theta||_m.
double estimate_lipschitz(const Model& model, const Trajectory& traj, std::span<const std::pair<Vector, Vector>> pairs);

template <typename T>
const T& Trajectory::side() const
{
    if (const auto* value = std::get_if<T>(&side_info_)) return *value;
    throw std::bad_variant_access();
}

} // namespace penlik
