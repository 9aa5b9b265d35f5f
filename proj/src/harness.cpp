#include "penlik/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "penlik/bandit.hpp"
#include "penlik/error.hpp"
#include "penlik/histogram.hpp"
#include "penlik/hmm.hpp"
#include "penlik/loss.hpp"
#include "penlik/neuro.hpp"

namespace penlik {

using nlohmann::json;

namespace {

// Root streams; every replication derives its own generator from these.
constexpr std::uint64_t kPilotStream = 1;
constexpr std::uint64_t kCalibrationStream = 2;
constexpr std::uint64_t kHeldOutStream = 3;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// A JSON object whose keys must all be consumed before finish().
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key)
    {
        if (!node_.contains(key)) throw ConfigError(fmt::format("{}: missing key '{}'", path_, key));
        used_.insert(key);
        return node_.at(key);
    }

    template <typename T>
    T get(const std::string& key)
    {
        const json& value = raw(key);
        try {
            return value.get<T>();
        } catch (const json::exception&) {
            throw ConfigError(fmt::format("{}.{}: wrong type", path_, key));
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback)
    {
        return has(key) ? get<T>(key) : fallback;
    }

    Section section(const std::string& key) { return Section(raw(key), path_ + "." + key); }

    [[nodiscard]] const std::string& path() const { return path_; }

    void finish() const
    {
        for (const auto& item : node_.items())
            if (!used_.count(item.key())) throw ConfigError(fmt::format("{}: unknown key '{}'", path_, item.key()));
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

double positive(double value, const std::string& what)
{
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(what + " must be positive and finite");
    return value;
}

// ---------------------------------------------------------------------------
// Families

class HistogramFamily : public Family {
public:
    explicit HistogramFamily(const json& params)
    {
        Section s(params, "model");
        epsilon_ = s.get<double>("epsilon");
        const auto heights = s.get<Vector>("truth");
        bins_ = s.get<std::vector<std::size_t>>("candidates");
        s.finish();
        if (bins_.empty()) throw ConfigError("model.candidates: empty");
        try {
            density_ = std::make_shared<PiecewiseConstantDensity>(heights);
            truth_ = std::make_shared<HistogramModel>(heights.size(), epsilon_);
            truth_->theta_space().require(heights);
            for (std::size_t d : bins_) HistogramModel(d, epsilon_);
        } catch (const Error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
    }

    [[nodiscard]] Regime regime() const override { return Regime::Bounded; }

    [[nodiscard]] std::vector<std::shared_ptr<const Model>> candidates(std::size_t, Philox&) const override
    {
        std::vector<std::shared_ptr<const Model>> out;
        for (std::size_t d : bins_) out.push_back(std::make_shared<HistogramModel>(d, epsilon_));
        return out;
    }

    [[nodiscard]] Simulation simulate(std::size_t n, Philox& rng) const override
    {
        const auto heights = density_->heights();
        return {sample_iid(*density_, n, rng), std::make_shared<Oracle>(truth_, Vector(heights.begin(), heights.end()))};
    }

private:
    double epsilon_ = 0.0;
    std::vector<std::size_t> bins_;
    std::shared_ptr<PiecewiseConstantDensity> density_;
    std::shared_ptr<HistogramModel> truth_;
};

std::vector<Vector> matrix(Section& s, const std::string& key)
{
    return s.get<std::vector<Vector>>(key);
}

class HmmFamily : public Family {
public:
    explicit HmmFamily(const json& params)
    {
        Section s(params, "model");
        alphabet_ = s.get<std::size_t>("alphabet");
        Section truth = s.section("truth");
        truth_.initial = truth.get<Vector>("initial");
        truth_.transition = matrix(truth, "transition");
        truth_.emission = matrix(truth, "emission");
        truth.finish();
        states_ = s.get<std::vector<std::size_t>>("candidates");
        c_q_ = s.get_or("c_q", 2.0);
        alpha_ = s.get_or("alpha", 1.0);
        if (s.has("em")) {
            Section em = s.section("em");
            em_.restarts = em.get_or("restarts", em_.restarts);
            em_.max_iter = em.get_or("max_iter", em_.max_iter);
            em_.tol = em.get_or("tol", em_.tol);
            em.finish();
        }
        oracle_iterations_ = s.get_or<std::size_t>("oracle_fit_iterations", 40);
        if (s.has("lipschitz")) {
            const json& value = s.raw("lipschitz");
            if (value.is_number()) {
                lipschitz_ = positive(value.get<double>(), "model.lipschitz");
            } else if (!(value.is_string() && value.get<std::string>() == "pilot")) {
                throw ConfigError("model.lipschitz: expected a number or \"pilot\"");
            }
        }
        pilot_pairs_ = s.get_or<std::size_t>("pilot_pairs", 200);
        s.finish();
        if (states_.empty()) throw ConfigError("model.candidates: empty");
        if (truth_.initial.empty() || truth_.transition.size() != truth_.initial.size()
            || truth_.emission.size() != truth_.initial.size())
            throw ConfigError("model.truth: inconsistent number of hidden states");
        for (const auto& row : truth_.emission)
            if (row.size() != alphabet_) throw ConfigError("model.truth.emission: rows must have one entry per symbol");
    }

    [[nodiscard]] Regime regime() const override { return Regime::Unbounded; }

    [[nodiscard]] std::vector<std::shared_ptr<const Model>> candidates(std::size_t n, Philox& rng) const override
    {
        std::optional<Trajectory> pilot;
        std::vector<HmmModel> models;
        Vector lipschitz(states_.size(), lipschitz_.value_or(0.0));
        for (std::size_t i = 0; i < states_.size(); ++i) {
            HmmModel model(states_[i], alphabet_, n, c_q_, alpha_);
            model.set_em_options(em_);
            model.set_oracle_fit_iterations(oracle_iterations_);
            if (!lipschitz_) {
                if (!pilot) {
                    Philox sim = rng.split(0);
                    pilot = simulate(n, sim).trajectory;
                }
                Philox probe = rng.split(i + 1);
                lipschitz[i] = pilot_lipschitz(model, *pilot, pilot_pairs_, probe);
            }
            models.push_back(std::move(model));
        }
        // A model with h states contains the smaller ones up to the boxes, so its
        // constant is at least theirs; the pilot estimates are only lower bounds.
        std::vector<std::shared_ptr<const Model>> out;
        for (std::size_t i = 0; i < states_.size(); ++i) {
            double envelope = lipschitz[i];
            for (std::size_t j = 0; j < states_.size(); ++j)
                if (states_[j] <= states_[i]) envelope = std::max(envelope, lipschitz[j]);
            out.push_back(std::make_shared<HmmModel>(models[i].with_lipschitz(envelope)));
        }
        return out;
    }

    [[nodiscard]] Simulation simulate(std::size_t n, Philox& rng) const override
    {
        auto model = std::make_shared<HmmModel>(truth_.initial.size(), alphabet_, n, c_q_, alpha_);
        Vector theta = model->pack(truth_);
        if (auto why = model->theta_space().violation(theta))
            throw ConfigError(fmt::format("model.truth is outside the HMM parameter set at n = {}: {}", n, *why));
        HmmSample sample = sample_hmm(*model, theta, n, rng);
        return {std::move(sample.trajectory), std::make_shared<Oracle>(model, std::move(theta))};
    }

private:
    std::size_t alphabet_ = 0;
    HmmParameters truth_;
    std::vector<std::size_t> states_;
    double c_q_ = 2.0;
    double alpha_ = 1.0;
    EmOptions em_;
    std::size_t oracle_iterations_ = 40;
    std::optional<double> lipschitz_;
    std::size_t pilot_pairs_ = 200;
};

RateFunction parse_rate(Section s)
{
    const auto kind = s.get<std::string>("kind");
    RateFunction rate = RateFunction::sigmoid();
    if (kind == "sigmoid") {
        rate = RateFunction::sigmoid(s.get_or("offset", 0.0));
    } else if (kind == "linear") {
        rate = RateFunction::linear(s.get<double>("baseline"));
    } else {
        throw ConfigError(s.path() + ".kind: expected \"sigmoid\" or \"linear\"");
    }
    s.finish();
    return rate;
}

class NeuroFamily : public Family {
public:
    explicit NeuroFamily(const json& params)
    {
        Section s(params, "model");
        truth_.neurons = s.get<std::size_t>("neurons");
        truth_.lag = s.get<std::size_t>("lag");
        const RateFunction rate = parse_rate(s.section("rate"));
        truth_.rates.assign(truth_.neurons, rate);
        truth_.weights = s.get<Vector>("weights");
        epsilon_ = s.get<double>("epsilon");
        target_ = s.get<std::size_t>("target");
        window_ = s.get<std::size_t>("window");
        try {
            variant_ = parse_variant(s.get<std::string>("variant"));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("model.variant: ") + e.what());
        }
        const json& list = s.raw("candidates");
        if (!list.is_array() || list.empty()) throw ConfigError("model.candidates: expected a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            Section c(list[i], fmt::format("model.candidates[{}]", i));
            specs_.push_back({c.get<std::vector<std::size_t>>("neighborhood"), c.get<std::size_t>("lag")});
            c.finish();
        }
        s.finish();
        if (target_ >= truth_.neurons) throw ConfigError("model.target: no such neuron");
        if (window_ < truth_.lag) throw ConfigError("model.window must be at least the true lag");
        try {
            truth_.validate(epsilon_);
            truth_model_ = std::make_shared<NeuroModel>(true_neuro_model(truth_, target_, variant_, epsilon_));
            for (const auto& spec : specs_) {
                if (spec.lag > window_) throw ConfigError("model.candidates: lag exceeds the history window");
                for (std::size_t v : spec.neighborhood)
                    if (v >= truth_.neurons) throw ConfigError("model.candidates: neighborhood names an unknown neuron");
                NeuroModel(target_, spec.neighborhood, spec.lag, variant_, rate, epsilon_);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
    }

    [[nodiscard]] Regime regime() const override { return Regime::Bounded; }

    [[nodiscard]] std::vector<std::shared_ptr<const Model>> candidates(std::size_t, Philox&) const override
    {
        std::vector<std::shared_ptr<const Model>> out;
        for (const auto& spec : specs_)
            out.push_back(std::make_shared<NeuroModel>(target_, spec.neighborhood, spec.lag, variant_, truth_.rates[target_], epsilon_));
        return out;
    }

    [[nodiscard]] Simulation simulate(std::size_t n, Philox& rng) const override
    {
        const SpikeRaster raster = simulate_network(truth_, variant_, n, window_, epsilon_, rng);
        return {neuro_trajectory(raster, target_), std::make_shared<Oracle>(truth_model_, truth_.incoming(target_))};
    }

private:
    struct CandidateSpec {
        std::vector<std::size_t> neighborhood;
        std::size_t lag = 1;
    };

    NetworkParameters truth_;
    NeuroVariant variant_ = NeuroVariant::Hawkes;
    double epsilon_ = 0.0;
    std::size_t target_ = 0;
    std::size_t window_ = 0;
    std::vector<CandidateSpec> specs_;
    std::shared_ptr<NeuroModel> truth_model_;
};

class Exp3Family : public Family {
public:
    explicit Exp3Family(const json& params)
    {
        Section s(params, "model");
        config_.arms = s.get<std::size_t>("arms");
        config_.horizon_scale = s.get<double>("T");
        config_.rate_min = s.get<double>("rate_min");
        config_.rate_max = s.get<double>("rate_max");
        config_.losses = s.get<Vector>("losses");
        config_.epsilon = s.get<double>("epsilon");
        theta_ = s.get<double>("theta");
        s.finish();
        try {
            config_.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
        if (theta_ < config_.rate_min || theta_ > config_.rate_max) throw ConfigError("model.theta outside [rate_min, rate_max]");
    }

    [[nodiscard]] Regime regime() const override { return Regime::Bounded; }
    [[nodiscard]] std::optional<std::size_t> natural_size() const override { return config_.truncation(); }

    [[nodiscard]] std::vector<std::shared_ptr<const Model>> candidates(std::size_t n, Philox&) const override
    {
        return {std::make_shared<Exp3RateModel>(config_, n)};
    }

    [[nodiscard]] Simulation simulate(std::size_t n, Philox& rng) const override
    {
        Exp3Run run = simulate_exp3(config_, theta_, rng);
        auto truth = std::make_shared<Exp3RateModel>(config_, n);
        return {std::move(run.trajectory), std::make_shared<Oracle>(truth, Vector{theta_})};
    }

private:
    Exp3Config config_;
    double theta_ = 1.0;
};

class PartitionFamily : public Family {
public:
    explicit PartitionFamily(const json& params)
    {
        Section s(params, "model");
        actions_ = s.get<std::size_t>("actions");
        settings_.horizon_scale = s.get<double>("T");
        settings_.rate_min = s.get<double>("rate_min");
        settings_.rate_max = s.get<double>("rate_max");
        settings_.epsilon = s.get<double>("epsilon");
        Section truth = s.section("truth");
        truth_cells_ = truth.get<std::size_t>("cells");
        theta_ = truth.get<Vector>("theta");
        truth.finish();
        cells_ = s.get<std::vector<std::size_t>>("candidates");
        steps_ = s.get_or<std::size_t>("steps", 0);
        s.finish();
        if (cells_.empty()) throw ConfigError("model.candidates: empty");
        try {
            const Exp3PartitionModel truth_model = model(truth_cells_, 2);
            truth_model.theta_space().require(theta_);
            for (std::size_t c : cells_) static_cast<void>(model(c, 2));
        } catch (const Error& e) {
            throw ConfigError(std::string("model: ") + e.what());
        }
        if (*natural_size() < 2) throw ConfigError("model: truncation of the true partition is below 2 steps");
    }

    [[nodiscard]] Regime regime() const override { return Regime::Bounded; }

    [[nodiscard]] std::optional<std::size_t> natural_size() const override
    {
        return steps_ > 0 ? steps_ : model(truth_cells_, 2).truncation();
    }

    [[nodiscard]] std::vector<std::shared_ptr<const Model>> candidates(std::size_t n, Philox&) const override
    {
        std::vector<std::shared_ptr<const Model>> out;
        for (std::size_t c : cells_) out.push_back(std::make_shared<Exp3PartitionModel>(model(c, n)));
        return out;
    }

    [[nodiscard]] Simulation simulate(std::size_t n, Philox& rng) const override
    {
        auto truth = std::make_shared<Exp3PartitionModel>(model(truth_cells_, n));
        PartitionRun run = simulate_partition_learner(*truth, theta_, rng, n);
        return {std::move(run.trajectory), std::make_shared<Oracle>(truth, theta_)};
    }

private:
    [[nodiscard]] Exp3PartitionModel model(std::size_t cells, std::size_t n) const
    {
        PartitionSettings settings = settings_;
        settings.horizon = n;
        return Exp3PartitionModel(Partition::regular(actions_, cells), settings);
    }

    std::size_t actions_ = 0;
    PartitionSettings settings_;
    std::size_t truth_cells_ = 1;
    Vector theta_;
    std::vector<std::size_t> cells_;
    std::size_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Execution

template <typename Body>
void parallel_for(std::size_t count, std::size_t jobs, const Body& body)
{
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
    for (auto& worker : workers) worker.join();
}

struct Task {
    std::size_t size_index = 0;
    std::size_t replication = 0;
};

struct TaskResult {
    std::optional<ReplicationOutcome> outcome;
    std::string error;
};

std::vector<TaskResult> run_tasks(const Family& family, const std::vector<std::vector<std::shared_ptr<const Model>>>& candidates,
    const std::vector<std::size_t>& sizes, const std::vector<Task>& tasks, std::uint64_t seed, std::uint64_t stream, bool oracle,
    std::size_t jobs)
{
    std::vector<TaskResult> results(tasks.size());
    const Philox root(seed, stream);
    parallel_for(tasks.size(), jobs, [&](std::size_t i) {
        const Task& task = tasks[i];
        Philox rng = root.split(task.size_index).split(task.replication);
        try {
            results[i].outcome = replicate(family, candidates[task.size_index], sizes[task.size_index], oracle, rng);
        } catch (const std::exception& e) {
            results[i].error = e.what();
        }
    });
    return results;
}

struct Prepared {
    std::unique_ptr<Family> family;
    std::vector<std::size_t> sizes;
    std::vector<std::vector<std::shared_ptr<const Model>>> candidates;
    std::uint64_t seed = 1;
    std::size_t replications = 0;
};

Prepared prepare(const ExperimentConfig& config, const RunOptions& options)
{
    Prepared out;
    out.family = make_family(config.family, config.model);
    if (config.regime && *config.regime != out.family->regime())
        throw ConfigError(fmt::format("regime: family '{}' is {}", config.family, to_string(out.family->regime())));
    out.sizes = config.sizes;
    if (auto natural = out.family->natural_size()) {
        if (!out.sizes.empty() && (out.sizes.size() != 1 || out.sizes[0] != *natural))
            throw ConfigError(fmt::format("n: family '{}' fixes n = {}", config.family, *natural));
        out.sizes = {*natural};
    }
    if (out.sizes.empty()) throw ConfigError("n: missing");
    out.seed = options.seed.value_or(config.seed);
    out.replications = options.replications.value_or(config.replications);
    const Philox pilot(out.seed, kPilotStream);
    for (std::size_t s = 0; s < out.sizes.size(); ++s) {
        Philox rng = pilot.split(s);
        out.candidates.push_back(out.family->candidates(out.sizes[s], rng));
    }
    return out;
}

CalibrationResult calibrate(const ExperimentConfig& config, const Prepared& prepared, std::size_t jobs)
{
    const CalibrationSettings& settings = *config.calibration;
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < prepared.sizes.size(); ++s)
        for (std::size_t r = 0; r < settings.replications; ++r) tasks.push_back({s, r});
    const auto results = run_tasks(*prepared.family, prepared.candidates, prepared.sizes, tasks, prepared.seed,
        kCalibrationStream, true, jobs);
    std::vector<ReplicationOutcome> outcomes;
    for (const auto& r : results)
        if (r.outcome) outcomes.push_back(*r.outcome);
    return calibrate_constant(outcomes, prepared.family->regime(), config.kappa, settings.grid, config.x, settings.target);
}

double median(Vector values)
{
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::string clean_message(std::string text)
{
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return text;
}

std::string number(double value) { return fmt::format("{:.17g}", value); }

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& text)
{
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) throw IoFailure("ledger: bad number '" + text + "'");
    return value;
}

std::size_t parse_index(const std::string& text)
{
    const double value = parse_double(text);
    if (!(value >= 0.0) || value != std::floor(value)) throw IoFailure("ledger: bad index '" + text + "'");
    return static_cast<std::size_t>(value);
}

constexpr const char* kModelColumns[] = {"loglik", "pen", "res", "crit", "fitted_loss", "best_loss"};
constexpr std::size_t kFixedColumns = 11;

} // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig parse_config(const json& document)
{
    ExperimentConfig config;
    Section s(document, "config");
    config.name = s.get<std::string>("name");
    config.family = s.get<std::string>("family");
    config.model = s.raw("model");
    if (s.has("regime")) {
        try {
            config.regime = parse_regime(s.get<std::string>("regime"));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("regime: ") + e.what());
        }
    }
    config.kappa = s.get<double>("kappa");
    if (!(config.kappa > 0.0 && config.kappa <= 1.0)) throw ConfigError("kappa must lie in (0, 1]");
    config.x = positive(s.get<double>("x"), "x");

    Section penalty = s.section("penalty");
    if (penalty.has("constant") == penalty.has("calibrate"))
        throw ConfigError("penalty: give exactly one of 'constant' and 'calibrate'");
    if (penalty.has("constant")) {
        config.c_constant = positive(penalty.get<double>("constant"), "penalty.constant");
    } else {
        Section cal = penalty.section("calibrate");
        CalibrationSettings settings;
        if (cal.has("grid") == cal.has("log_grid")) throw ConfigError("penalty.calibrate: give exactly one of 'grid' and 'log_grid'");
        if (cal.has("grid")) {
            settings.grid = cal.get<Vector>("grid");
        } else {
            Section lg = cal.section("log_grid");
            const double lo = positive(lg.get<double>("min"), "log_grid.min");
            const double hi = positive(lg.get<double>("max"), "log_grid.max");
            const auto points = lg.get<std::size_t>("points");
            lg.finish();
            if (!(hi > lo) || points < 2) throw ConfigError("penalty.calibrate.log_grid: need min < max and at least 2 points");
            for (std::size_t i = 0; i < points; ++i)
                settings.grid.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(points - 1)));
        }
        settings.replications = cal.get_or("replications", settings.replications);
        settings.target = cal.get_or("target", settings.target);
        cal.finish();
        if (settings.grid.empty()) throw ConfigError("penalty.calibrate.grid: empty");
        for (std::size_t i = 0; i < settings.grid.size(); ++i) {
            positive(settings.grid[i], "penalty.calibrate.grid entries");
            if (i > 0 && !(settings.grid[i] > settings.grid[i - 1])) throw ConfigError("penalty.calibrate.grid must be increasing");
        }
        if (settings.replications == 0) throw ConfigError("penalty.calibrate.replications must be positive");
        if (!(settings.target > 0.0 && settings.target <= 1.0)) throw ConfigError("penalty.calibrate.target must lie in (0, 1]");
        config.calibration = settings;
    }
    penalty.finish();

    if (s.has("n")) {
        const json& n = s.raw("n");
        try {
            config.sizes = n.is_array() ? n.get<std::vector<std::size_t>>() : std::vector<std::size_t>{n.get<std::size_t>()};
        } catch (const json::exception&) {
            throw ConfigError("n: expected a positive integer or an array of them");
        }
        for (std::size_t v : config.sizes)
            if (v < 2) throw ConfigError("n: every size must be at least 2");
    }
    config.replications = s.get<std::size_t>("replications");
    config.seed = s.get<std::uint64_t>("seed");
    config.oracle = s.get_or("oracle", true);
    if (config.calibration && !config.oracle) throw ConfigError("penalty.calibrate needs oracle mode");
    if (s.has("outputs")) {
        Section out = s.section("outputs");
        config.outputs.ledger = out.get_or("ledger", config.outputs.ledger);
        config.outputs.summary = out.get_or("summary", config.outputs.summary);
        config.outputs.risk = out.get_or("risk", config.outputs.risk);
        out.finish();
    }
    s.finish();
    // Family parameters are checked here too, before any computation.
    const auto family = make_family(config.family, config.model);
    if (config.regime && *config.regime != family->regime())
        throw ConfigError(fmt::format("regime: family '{}' is {}", config.family, to_string(family->regime())));
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open config " + path.string());
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return parse_config(document);
}

std::unique_ptr<Family> make_family(const std::string& name, const json& params)
{
    if (name == "histogram") return std::make_unique<HistogramFamily>(params);
    if (name == "hmm") return std::make_unique<HmmFamily>(params);
    if (name == "neuro") return std::make_unique<NeuroFamily>(params);
    if (name == "exp3") return std::make_unique<Exp3Family>(params);
    if (name == "exp3_partition") return std::make_unique<PartitionFamily>(params);
    throw ConfigError("family: unknown family '" + name + "'");
}

// ---------------------------------------------------------------------------
// Runs

ReplicationOutcome replicate(const Family& family, const std::vector<std::shared_ptr<const Model>>& candidates,
    std::size_t n, bool oracle, Philox& rng)
{
    Philox sim_rng = rng.split(0);
    const Philox fit_root = rng.split(1);
    const Philox oracle_root = rng.split(2);
    const Simulation sim = family.simulate(n, sim_rng);
    ReplicationOutcome outcome;
    outcome.n = sim.trajectory.n();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Model& model = *candidates[i];
        Philox fit_rng = fit_root.split(i);
        const Vector theta = model.maximum_likelihood(sim.trajectory, fit_rng);
        ModelOutcome row;
        row.model = summarize(model);
        row.mean_log_likelihood = partial_log_likelihood(model, theta, sim.trajectory) / static_cast<double>(outcome.n);
        if (oracle) {
            row.fitted_loss = stochastic_kl(model, theta, sim.oracle.get(), sim.trajectory).kl;
            Philox oracle_rng = oracle_root.split(i);
            const Vector best = model.minimize_oracle_loss(sim.trajectory, *sim.oracle, theta, oracle_rng);
            row.best_loss = std::min(row.fitted_loss, stochastic_kl(model, best, sim.oracle.get(), sim.trajectory).kl);
        } else {
            row.fitted_loss = kNaN;
            row.best_loss = kNaN;
        }
        outcome.models.push_back(std::move(row));
    }
    return outcome;
}

CalibrationResult run_calibration(const ExperimentConfig& config, const RunOptions& options)
{
    if (!config.calibration) throw ConfigError("penalty: the config does not request calibration");
    const Prepared prepared = prepare(config, options);
    return calibrate(config, prepared, options.jobs);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    const Prepared prepared = prepare(config, options);
    ExperimentResult result;
    OracleLedger& ledger = result.ledger;
    ledger.name = config.name;
    ledger.regime = prepared.family->regime();
    ledger.kappa = config.kappa;
    ledger.x = config.x;
    ledger.oracle = config.oracle;
    for (const auto& model : prepared.candidates.front()) {
        ledger.model_ids.push_back(model->id());
        ledger.dims.push_back(model->dim());
    }
    if (config.calibration) {
        result.calibration = calibrate(config, prepared, options.jobs);
        ledger.c_constant = result.calibration->c_constant;
    } else {
        ledger.c_constant = *config.c_constant;
    }

    std::vector<Task> tasks;
    for (std::size_t s = 0; s < prepared.sizes.size(); ++s)
        for (std::size_t r = 0; r < prepared.replications; ++r) tasks.push_back({s, r});
    const auto results = run_tasks(*prepared.family, prepared.candidates, prepared.sizes, tasks, prepared.seed,
        kHeldOutStream, config.oracle, options.jobs);

    for (std::size_t i = 0; i < tasks.size(); ++i) {
        LedgerRow row;
        row.n = prepared.sizes[tasks[i].size_index];
        row.replication = tasks[i].replication;
        if (!results[i].outcome) {
            row.failed = true;
            row.error = clean_message(results[i].error);
            row.selected_loss = row.lhs = row.oracle_term = row.residual_selected = row.rhs = kNaN;
            row.models.assign(ledger.model_ids.size(), {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN});
            ledger.rows.push_back(std::move(row));
            continue;
        }
        const ReplicationOutcome& outcome = *results[i].outcome;
        const PenaltySpec spec{ledger.regime, config.kappa, ledger.c_constant, outcome.n};
        const InequalityCheck check = evaluate_oracle_inequality(outcome, spec, config.x);
        row.selected = check.selection.selected;
        row.selected_loss = check.selected_loss;
        row.lhs = check.lhs;
        row.oracle_term = check.oracle_term;
        row.oracle_model = check.oracle_model;
        row.residual_selected = check.residual_selected;
        row.rhs = check.rhs;
        row.violated = check.violated;
        for (std::size_t m = 0; m < outcome.models.size(); ++m) {
            const ModelOutcome& mo = outcome.models[m];
            row.models.push_back({mo.mean_log_likelihood, check.penalties[m], check.residuals[m],
                check.selection.rows[m].criterion, mo.fitted_loss, mo.best_loss});
        }
        ledger.rows.push_back(std::move(row));
    }
    for (const auto& models : prepared.candidates)
        for (const auto& model : models) result.models.push_back(summarize(*model));
    result.summaries = summarize_ledger(ledger, result.models);
    return result;
}

// ---------------------------------------------------------------------------
// Summaries and files

std::vector<SizeSummary> summarize_ledger(const OracleLedger& ledger, std::span<const ModelSummary> models)
{
    const std::size_t count = ledger.model_ids.size();
    std::vector<std::size_t> sizes;
    for (const auto& row : ledger.rows)
        if (std::find(sizes.begin(), sizes.end(), row.n) == sizes.end()) sizes.push_back(row.n);

    std::vector<SizeSummary> out;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        SizeSummary summary;
        summary.n = sizes[s];
        summary.selection_frequency.assign(count, 0.0);
        std::size_t violations = 0;
        Vector selected_losses;
        std::vector<Vector> fitted(count);
        Vector best_mean(count, 0.0);
        Vector pen(count, kNaN);
        for (const auto& row : ledger.rows) {
            if (row.n != summary.n) continue;
            ++summary.replications;
            if (row.failed) {
                ++summary.failed;
                continue;
            }
            summary.selection_frequency[row.selected] += 1.0;
            if (row.violated) ++violations;
            selected_losses.push_back(row.selected_loss);
            for (std::size_t m = 0; m < count; ++m) {
                fitted[m].push_back(row.models[m].fitted_loss);
                best_mean[m] += row.models[m].best_loss;
                pen[m] = row.models[m].penalty;
            }
        }
        const double ok = static_cast<double>(summary.replications - summary.failed);
        for (double& f : summary.selection_frequency) f = ok > 0.0 ? f / ok : kNaN;
        summary.violation_rate = ledger.oracle && ok > 0.0 ? static_cast<double>(violations) / ok : kNaN;
        summary.mean_selected_loss = ok > 0.0 ? std::accumulate(selected_losses.begin(), selected_losses.end(), 0.0) / ok : kNaN;
        summary.median_selected_loss = median(selected_losses);
        for (std::size_t m = 0; m < count; ++m) summary.median_fitted_loss.push_back(median(fitted[m]));
        summary.expectation_lhs = (1.0 - ledger.kappa) * summary.mean_selected_loss;

        summary.complexity = summary.budget = summary.expectation_rhs = kNaN;
        if (models.size() == sizes.size() * count && ok > 0.0) {
            const auto block = models.subspan(s * count, count);
            const double sigma = complexity_sum(block).value;
            summary.complexity = sigma;
            summary.budget = 1.0 - failure_budget(ledger.regime, summary.n, sigma, ledger.x);
            double scale_bound = 0.0;
            double tail_bound = 0.0;
            double epsilon = 1.0;
            for (const auto& m : block) {
                scale_bound = std::max(scale_bound, m.constants.scale());
                tail_bound = std::max(tail_bound, m.constants.tail_scale);
                epsilon = std::min(epsilon, m.constants.epsilon);
            }
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t m = 0; m < count; ++m)
                best = std::min(best, (1.0 + ledger.kappa) * best_mean[m] / ok + 2.0 * pen[m]);
            const PenaltySpec spec{ledger.regime, ledger.kappa, ledger.c_constant, summary.n};
            summary.expectation_rhs = best + expectation_residual(sigma, scale_bound, tail_bound, epsilon, spec);
        }
        out.push_back(std::move(summary));
    }
    return out;
}

void write_ledger_csv(const OracleLedger& ledger, std::ostream& out)
{
    out << "# name=" << ledger.name << '\n';
    out << "# regime=" << to_string(ledger.regime) << '\n';
    out << "# kappa=" << number(ledger.kappa) << '\n';
    out << "# x=" << number(ledger.x) << '\n';
    out << "# c_constant=" << number(ledger.c_constant) << '\n';
    out << "# oracle=" << (ledger.oracle ? 1 : 0) << '\n';
    out << "# models=";
    for (std::size_t m = 0; m < ledger.model_ids.size(); ++m) out << (m ? " " : "") << ledger.model_ids[m] << '/' << ledger.dims[m];
    out << '\n';
    out << "n,replication,failed,selected,selected_loss,lhs,oracle_term,oracle_model,residual_selected,rhs,violated";
    for (const auto& id : ledger.model_ids)
        for (const char* column : kModelColumns) out << ',' << id << ':' << column;
    out << ",error\n";
    for (const auto& row : ledger.rows) {
        out << row.n << ',' << row.replication << ',' << (row.failed ? 1 : 0) << ',';
        out << (row.failed ? "" : ledger.model_ids.at(row.selected)) << ',' << number(row.selected_loss) << ','
            << number(row.lhs) << ',' << number(row.oracle_term) << ',' << (row.failed ? "" : ledger.model_ids.at(row.oracle_model))
            << ',' << number(row.residual_selected) << ',' << number(row.rhs) << ',' << (row.violated ? 1 : 0);
        for (const auto& m : row.models)
            out << ',' << number(m.mean_log_likelihood) << ',' << number(m.penalty) << ',' << number(m.residual) << ','
                << number(m.criterion) << ',' << number(m.fitted_loss) << ',' << number(m.best_loss);
        out << ',' << row.error << '\n';
    }
    if (!out) throw IoFailure("failed writing the ledger");
}

OracleLedger read_ledger_csv(std::istream& in)
{
    OracleLedger ledger;
    std::string line;
    std::map<std::string, std::string> meta;
    while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoFailure("ledger: bad metadata line '" + line + "'");
        meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
    }
    for (const char* key : {"name", "regime", "kappa", "x", "c_constant", "oracle", "models"})
        if (!meta.count(key)) throw IoFailure(std::string("ledger: missing metadata '") + key + "'");
    ledger.name = meta["name"];
    ledger.regime = parse_regime(meta["regime"]);
    ledger.kappa = parse_double(meta["kappa"]);
    ledger.x = parse_double(meta["x"]);
    ledger.c_constant = parse_double(meta["c_constant"]);
    ledger.oracle = meta["oracle"] == "1";
    std::istringstream models(meta["models"]);
    std::string token;
    while (models >> token) {
        const auto slash = token.rfind('/');
        if (slash == std::string::npos) throw IoFailure("ledger: bad model entry '" + token + "'");
        ledger.model_ids.push_back(token.substr(0, slash));
        ledger.dims.push_back(parse_index(token.substr(slash + 1)));
    }
    const std::size_t count = ledger.model_ids.size();
    const std::size_t width = kFixedColumns + 6 * count + 1;
    if (split_csv(line).size() != width) throw IoFailure("ledger: header does not match the model list");
    const auto model_index = [&](const std::string& id) {
        const auto it = std::find(ledger.model_ids.begin(), ledger.model_ids.end(), id);
        if (it == ledger.model_ids.end()) throw IoFailure("ledger: unknown model '" + id + "'");
        return static_cast<std::size_t>(it - ledger.model_ids.begin());
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != width) throw IoFailure("ledger: row has the wrong number of fields");
        LedgerRow row;
        row.n = parse_index(f[0]);
        row.replication = parse_index(f[1]);
        row.failed = f[2] == "1";
        if (!row.failed) {
            row.selected = model_index(f[3]);
            row.oracle_model = model_index(f[7]);
        }
        row.selected_loss = parse_double(f[4]);
        row.lhs = parse_double(f[5]);
        row.oracle_term = parse_double(f[6]);
        row.residual_selected = parse_double(f[8]);
        row.rhs = parse_double(f[9]);
        row.violated = f[10] == "1";
        for (std::size_t m = 0; m < count; ++m) {
            const std::size_t base = kFixedColumns + 6 * m;
            row.models.push_back({parse_double(f[base]), parse_double(f[base + 1]), parse_double(f[base + 2]),
                parse_double(f[base + 3]), parse_double(f[base + 4]), parse_double(f[base + 5])});
        }
        row.error = f.back();
        ledger.rows.push_back(std::move(row));
    }
    return ledger;
}

std::size_t audit_ledger(const OracleLedger& ledger)
{
    std::size_t mismatches = 0;
    for (const auto& row : ledger.rows) {
        if (row.failed || !ledger.oracle) continue;
        double oracle_term = std::numeric_limits<double>::infinity();
        for (const auto& m : row.models)
            oracle_term = std::min(oracle_term, (1.0 + ledger.kappa) * m.best_loss + 2.0 * m.penalty + m.residual);
        const double lhs = (1.0 - ledger.kappa) * row.models[row.selected].fitted_loss;
        const double rhs = oracle_term + row.models[row.selected].residual;
        if ((lhs > rhs) != row.violated) ++mismatches;
    }
    return mismatches;
}

json summary_json(const ExperimentResult& result)
{
    const OracleLedger& ledger = result.ledger;
    json out;
    out["name"] = ledger.name;
    out["regime"] = std::string(to_string(ledger.regime));
    out["kappa"] = ledger.kappa;
    out["x"] = ledger.x;
    out["c_constant"] = ledger.c_constant;
    out["calibrated"] = result.calibration.has_value();
    out["oracle"] = ledger.oracle;
    out["replications"] = ledger.rows.size();
    if (result.calibration) {
        json curve = json::array();
        for (const auto& p : result.calibration->curve)
            curve.push_back({{"c_constant", p.c_constant}, {"coverage", p.coverage}, {"mean_risk", p.mean_risk}});
        out["calibration"] = curve;
    }
    json sizes = json::array();
    for (const auto& s : result.summaries) {
        json entry;
        entry["n"] = s.n;
        entry["replications"] = s.replications;
        entry["failed"] = s.failed;
        entry["violation_rate"] = s.violation_rate;
        entry["complexity"] = s.complexity;
        entry["budget"] = s.budget;
        entry["mean_selected_loss"] = s.mean_selected_loss;
        entry["median_selected_loss"] = s.median_selected_loss;
        entry["expectation_lhs"] = s.expectation_lhs;
        entry["expectation_rhs"] = s.expectation_rhs;
        json freq = json::object();
        for (std::size_t m = 0; m < ledger.model_ids.size(); ++m) freq[ledger.model_ids[m]] = s.selection_frequency[m];
        entry["selection_frequency"] = freq;
        sizes.push_back(entry);
    }
    out["sizes"] = sizes;
    return out;
}

void write_risk_csv(const ExperimentResult& result, std::ostream& out)
{
    out << "n,model,dim,median_loss\n";
    const OracleLedger& ledger = result.ledger;
    for (const auto& s : result.summaries) {
        out << s.n << ",selected,," << number(s.median_selected_loss) << '\n';
        for (std::size_t m = 0; m < ledger.model_ids.size(); ++m)
            out << s.n << ',' << ledger.model_ids[m] << ',' << ledger.dims[m] << ',' << number(s.median_fitted_loss[m]) << '\n';
    }
    if (!out) throw IoFailure("failed writing the risk table");
}

void emit_reports(const ExperimentResult& result, const OutputPaths& paths, const std::filesystem::path& directory)
{
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoFailure("cannot create " + directory.string() + ": " + ec.message());
    const auto open = [&](const std::string& name) {
        std::ofstream file(directory / name, std::ios::binary);
        if (!file) throw IoFailure("cannot open " + (directory / name).string());
        return file;
    };
    {
        auto file = open(paths.ledger);
        write_ledger_csv(result.ledger, file);
    }
    {
        auto file = open(paths.summary);
        file << summary_json(result).dump(2) << '\n';
        if (!file) throw IoFailure("failed writing the summary");
    }
    {
        auto file = open(paths.risk);
        write_risk_csv(result, file);
    }
}

// ---------------------------------------------------------------------------
// Lemma sweeps

bool LemmaSweepResult::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const SweepCount& c) { return c.violations == 0; });
}

namespace {

void add_variance_rows(SweepCount& count, const VarianceLemmaReport& report)
{
    count.instances += report.rows.size();
    count.violations += report.violations;
    count.worst_ratio = std::max(count.worst_ratio, report.max_ratio);
}

Vector random_density(Philox& rng, std::size_t size)
{
    Vector p(size);
    double total = 0.0;
    for (double& v : p) {
        v = -std::log(1.0 - uniform01(rng)) + 1e-3;
        total += v;
    }
    for (double& v : p) v /= total;
    return p;
}

template <typename MakeInstance>
void sweep_family(SweepCount& count, std::size_t instances, std::size_t per_trajectory, Philox& rng, const MakeInstance& make)
{
    std::size_t done = 0;
    for (std::uint64_t k = 0; done < instances; ++k) {
        Philox local = rng.split(k);
        const auto [model, oracle, trajectory] = make(local);
        std::vector<Vector> thetas;
        const std::size_t batch = std::min(per_trajectory, instances - done);
        for (std::size_t i = 0; i < batch; ++i) thetas.push_back(model->random_parameter(local));
        add_variance_rows(count, check_variance_lemma(*model, thetas, oracle.get(), trajectory));
        done += batch;
    }
}

} // namespace

LemmaSweepResult run_lemma_sweeps(std::uint64_t seed, std::size_t instances)
{
    LemmaSweepResult result;
    const Philox root(seed, 7);
    using Instance = std::tuple<std::shared_ptr<const Model>, std::shared_ptr<const Oracle>, Trajectory>;

    {
        SweepCount count{"variance lemma: histogram"};
        Philox rng = root.split(0);
        sweep_family(count, instances, 50, rng, [](Philox& r) -> Instance {
            const std::size_t truth_bins = 1 + uniform_index(r, 6);
            const std::size_t bins = 1 + uniform_index(r, 8);
            const double eps = 0.05;
            auto truth = std::make_shared<HistogramModel>(truth_bins, eps);
            const Vector heights = truth->random_parameter(r);
            Trajectory traj = sample_iid(PiecewiseConstantDensity(heights), 64, r);
            return {std::make_shared<HistogramModel>(bins, eps), std::make_shared<Oracle>(truth, heights), std::move(traj)};
        });
        result.checks.push_back(count);
    }
    {
        SweepCount count{"variance lemma: hmm"};
        Philox rng = root.split(1);
        sweep_family(count, instances, 25, rng, [](Philox& r) -> Instance {
            const std::size_t n = 64;
            const std::size_t alphabet = 2 + uniform_index(r, 3);
            auto truth = std::make_shared<HmmModel>(1 + uniform_index(r, 3), alphabet, n);
            const Vector theta = truth->random_parameter(r);
            Trajectory traj = sample_hmm(*truth, theta, n, r).trajectory;
            return {std::make_shared<HmmModel>(1 + uniform_index(r, 3), alphabet, n), std::make_shared<Oracle>(truth, theta),
                std::move(traj)};
        });
        result.checks.push_back(count);
    }
    {
        SweepCount count{"variance lemma: neuro"};
        Philox rng = root.split(2);
        sweep_family(count, instances, 25, rng, [](Philox& r) -> Instance {
            const double eps = 0.05;
            NetworkParameters params;
            params.neurons = 2;
            params.lag = 2;
            params.rates.assign(2, RateFunction::sigmoid(-0.5));
            params.weights.resize(8);
            for (double& w : params.weights) w = uniform(r, -0.6, 0.6);
            const SpikeRaster raster = simulate_network(params, NeuroVariant::Hawkes, 128, 2, eps, r);
            auto truth = std::make_shared<NeuroModel>(true_neuro_model(params, 0, NeuroVariant::Hawkes, eps));
            const std::size_t lag = 1 + uniform_index(r, 2);
            std::vector<std::size_t> hood = uniform01(r) < 0.5 ? std::vector<std::size_t>{0} : std::vector<std::size_t>{0, 1};
            auto model = std::make_shared<NeuroModel>(0, hood, lag, NeuroVariant::Hawkes, RateFunction::sigmoid(-0.5), eps);
            return {model, std::make_shared<Oracle>(truth, params.incoming(0)), neuro_trajectory(raster, 0)};
        });
        result.checks.push_back(count);
    }
    {
        SweepCount count{"variance lemma: bandit"};
        Philox rng = root.split(3);
        sweep_family(count, instances, 25, rng, [](Philox& r) -> Instance {
            Exp3Config config;
            config.arms = 2 + uniform_index(r, 3);
            config.horizon_scale = 1e4;
            config.rate_min = 0.5;
            config.rate_max = 2.0;
            config.epsilon = 0.5 / static_cast<double>(config.arms);
            for (std::size_t k = 0; k < config.arms; ++k) config.losses.push_back(uniform01(r));
            auto model = std::make_shared<Exp3RateModel>(config, config.truncation());
            const double theta = uniform(r, config.rate_min, config.rate_max);
            Exp3Run run = simulate_exp3(config, theta, r);
            return {model, std::make_shared<Oracle>(model, Vector{theta}), std::move(run.trajectory)};
        });
        result.checks.push_back(count);
    }
    {
        SweepCount count{"log-ratio/Hellinger"};
        Philox rng = root.split(4);
        const double lambdas[] = {0.5, 0.1, 0.01};
        for (std::size_t i = 0; i < 10 * instances; ++i) {
            const std::size_t size = 2 + uniform_index(rng, 8);
            const Vector p = random_density(rng, size);
            const Vector q = random_density(rng, size);
            for (double lambda : lambdas) {
                const LemmaPair pair = check_logratio_hellinger(p, q, lambda);
                ++count.instances;
                if (!pair.holds) ++count.violations;
                if (pair.rhs > 0.0) count.worst_ratio = std::max(count.worst_ratio, pair.lhs / pair.rhs);
            }
        }
        result.checks.push_back(count);
    }
    {
        SweepCount count{"Hellinger-KL"};
        Philox rng = root.split(5);
        for (std::size_t i = 0; i < instances; ++i) {
            const std::size_t steps = 1 + uniform_index(rng, 20);
            const std::size_t size = 2 + uniform_index(rng, 6);
            LogDensityTable truth(steps, size);
            LogDensityTable cand(steps, size);
            for (std::size_t t = 0; t < steps; ++t) {
                const Vector p = random_density(rng, size);
                const Vector q = random_density(rng, size);
                for (std::size_t j = 0; j < size; ++j) {
                    truth(t, j) = std::log(p[j]);
                    cand(t, j) = std::log(q[j]);
                }
            }
            const Vector weights(size, 1.0);
            double kl = 0.0;
            for (double v : conditional_kl(truth, cand, weights)) kl += v;
            kl /= static_cast<double>(steps);
            const double h2 = hellinger_from_tables(truth, cand, weights);
            ++count.instances;
            if (2.0 * h2 > kl * (1.0 + 1e-12)) ++count.violations;
            if (kl > 0.0) count.worst_ratio = std::max(count.worst_ratio, 2.0 * h2 / kl);
        }
        result.checks.push_back(count);
    }
    return result;
}

} // namespace penlik
