#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "penlik/core.hpp"
#include "penlik/selection.hpp"

namespace penlik {

// ---------------------------------------------------------------------------
// Configuration

struct CalibrationSettings {
    Vector grid; // increasing values of C
    std::size_t replications = 50;
    double target = 0.95; // required coverage on the calibration replications
};

struct OutputPaths {
    std::string ledger = "ledger.csv";
    std::string summary = "summary.json";
    std::string risk = "risk.csv";
};

struct ExperimentConfig {
    std::string name;
    std::string family; // histogram | hmm | neuro | exp3 | exp3_partition
    nlohmann::json model; // family parameters, validated by the family adapter
    std::optional<Regime> regime; // checked against the family when given
    double kappa = 0.5;
    double x = 3.0;
    std::optional<double> c_constant;
    std::optional<CalibrationSettings> calibration;
    std::vector<std::size_t> sizes; // values of n; empty when the family fixes n
    std::size_t replications = 100;
    std::uint64_t seed = 1;
    bool oracle = true;
    OutputPaths outputs;
};

// Throws ConfigError on unknown keys, missing keys and invalid values.
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Families

struct Simulation {
    Trajectory trajectory;
    std::shared_ptr<const Oracle> oracle;
};

class Family {
public:
    virtual ~Family() = default;

    [[nodiscard]] virtual Regime regime() const = 0;
    // Families whose trajectory length is dictated by their own parameters.
    [[nodiscard]] virtual std::optional<std::size_t> natural_size() const { return std::nullopt; }
    // Candidate models for trajectories of length n; `rng` feeds pilot runs.
    [[nodiscard]] virtual std::vector<std::shared_ptr<const Model>> candidates(std::size_t n, Philox& rng) const = 0;
    [[nodiscard]] virtual Simulation simulate(std::size_t n, Philox& rng) const = 0;
};

std::unique_ptr<Family> make_family(const std::string& name, const nlohmann::json& params);

// ---------------------------------------------------------------------------
// Ledger

struct LedgerModelColumns {
    double mean_log_likelihood = 0.0;
    double penalty = 0.0;
    double residual = 0.0;
    double criterion = 0.0;
    double fitted_loss = 0.0;
    double best_loss = 0.0;
};

struct LedgerRow {
    std::size_t n = 0;
    std::size_t replication = 0;
    bool failed = false;
    std::size_t selected = 0;
    double selected_loss = 0.0;
    double lhs = 0.0;
    double oracle_term = 0.0;
    std::size_t oracle_model = 0;
    double residual_selected = 0.0;
    double rhs = 0.0;
    bool violated = false;
    std::vector<LedgerModelColumns> models;
    std::string error;
};

struct OracleLedger {
    std::string name;
    Regime regime = Regime::Bounded;
    double kappa = 0.5;
    double x = 3.0;
    double c_constant = 1.0;
    bool oracle = true;
    std::vector<std::string> model_ids;
    std::vector<std::size_t> dims;
    std::vector<LedgerRow> rows;
};

struct SizeSummary {
    std::size_t n = 0;
    std::size_t replications = 0;
    std::size_t failed = 0;
    double violation_rate = 0.0;
    double complexity = 0.0;
    double budget = 0.0; // probability level of the high-probability bound
    Vector selection_frequency; // per model, over successful replications
    double mean_selected_loss = 0.0;
    double median_selected_loss = 0.0;
    double expectation_lhs = 0.0; // (1 - kappa) mean K_n(p~)
    double expectation_rhs = 0.0;
    Vector median_fitted_loss; // per model
};

struct ExperimentResult {
    OracleLedger ledger;
    std::optional<CalibrationResult> calibration;
    std::vector<ModelSummary> models; // per size, in ledger order (sizes x models)
    std::vector<SizeSummary> summaries;
};

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
    std::size_t jobs = 0; // 0 = hardware concurrency
};

// The C-independent outcome of one replication (fits and oracle losses).
ReplicationOutcome replicate(const Family& family, const std::vector<std::shared_ptr<const Model>>& candidates,
    std::size_t n, bool oracle, Philox& rng);

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
// Runs only the calibration replications.
CalibrationResult run_calibration(const ExperimentConfig& config, const RunOptions& options = {});

// Summaries recomputed from the stored ledger columns.
std::vector<SizeSummary> summarize_ledger(const OracleLedger& ledger, std::span<const ModelSummary> models);

void write_ledger_csv(const OracleLedger& ledger, std::ostream& out);
OracleLedger read_ledger_csv(std::istream& in);
nlohmann::json summary_json(const ExperimentResult& result);
void write_risk_csv(const ExperimentResult& result, std::ostream& out);

// Writes the ledger, summary and risk files under `directory`.
void emit_reports(const ExperimentResult& result, const OutputPaths& paths, const std::filesystem::path& directory);

// Recomputes every violation flag from the stored columns; returns the
// number of rows whose stored flag disagrees.
std::size_t audit_ledger(const OracleLedger& ledger);

// ---------------------------------------------------------------------------
// Lemma sweeps

struct SweepCount {
    std::string name;
    std::size_t instances = 0;
    std::size_t violations = 0;
    double worst_ratio = 0.0; // largest lhs / rhs seen
};

struct LemmaSweepResult {
    std::vector<SweepCount> checks;
    [[nodiscard]] bool ok() const;
};

// Variance lemma per family, the log-ratio/Hellinger inequality and 2h^2 <= K.
LemmaSweepResult run_lemma_sweeps(std::uint64_t seed, std::size_t instances);

} // namespace penlik
