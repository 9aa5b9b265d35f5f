#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "penlik/error.hpp"
#include "penlik/harness.hpp"

namespace {

constexpr int kValidationFailure = 2;
constexpr int kThresholdFailure = 3;

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
    std::string out_dir = ".";
    std::size_t jobs = 0;
};

penlik::RunOptions run_options(const CommonFlags& flags) { return {flags.seed, flags.replications, flags.jobs}; }

void print_summary(const penlik::ExperimentResult& result)
{
    const auto& ledger = result.ledger;
    std::cout << fmt::format("{}: regime {}, C = {:.6g}{}\n", ledger.name, penlik::to_string(ledger.regime), ledger.c_constant,
        result.calibration ? " (calibrated)" : "");
    for (const auto& s : result.summaries) {
        const std::string rate = ledger.oracle ? fmt::format("{:.4f}", s.violation_rate) : "n/a (oracle off)";
        std::cout << fmt::format("  n = {}: {} replications, {} failed, violation rate {}\n", s.n, s.replications, s.failed, rate);
        for (std::size_t m = 0; m < ledger.model_ids.size(); ++m)
            std::cout << fmt::format("    {:<16} selected {:.3f}\n", ledger.model_ids[m], s.selection_frequency[m]);
    }
}

int cmd_run(const std::string& config_path, const CommonFlags& flags)
{
    const auto config = penlik::load_config(config_path);
    const auto result = penlik::run_experiment(config, run_options(flags));
    penlik::emit_reports(result, config.outputs, flags.out_dir);
    print_summary(result);
    return 0;
}

int cmd_calibrate(const std::string& config_path, const CommonFlags& flags)
{
    const auto config = penlik::load_config(config_path);
    const auto calibration = penlik::run_calibration(config, run_options(flags));
    nlohmann::json out;
    out["name"] = config.name;
    out["c_constant"] = calibration.c_constant;
    out["curve"] = nlohmann::json::array();
    for (const auto& p : calibration.curve) {
        out["curve"].push_back({{"c_constant", p.c_constant}, {"coverage", p.coverage}, {"mean_risk", p.mean_risk}});
        std::cout << fmt::format("C = {:<12.6g} coverage {:.4f} mean risk {:.6g}\n", p.c_constant, p.coverage, p.mean_risk);
    }
    std::filesystem::create_directories(flags.out_dir);
    std::ofstream file(std::filesystem::path(flags.out_dir) / "calibration.json");
    file << out.dump(2) << '\n';
    if (!file) throw penlik::IoFailure("failed writing calibration.json");
    std::cout << fmt::format("calibrated C = {:.6g}\n", calibration.c_constant);
    return 0;
}

int cmd_check_lemmas(const CommonFlags& flags)
{
    const std::size_t instances = flags.replications.value_or(1000);
    const auto result = penlik::run_lemma_sweeps(flags.seed.value_or(1), instances);
    for (const auto& c : result.checks)
        std::cout << fmt::format("{:<28} {:>7} instances {:>4} violations  worst ratio {:.4f}\n", c.name, c.instances,
            c.violations, c.worst_ratio);
    return result.ok() ? 0 : kThresholdFailure;
}

int cmd_report(const std::string& ledger_path)
{
    std::ifstream in(ledger_path);
    if (!in) throw penlik::IoFailure("cannot open " + ledger_path);
    penlik::ExperimentResult result;
    result.ledger = penlik::read_ledger_csv(in);
    result.summaries = penlik::summarize_ledger(result.ledger, {});
    print_summary(result);
    const std::size_t mismatches = penlik::audit_ledger(result.ledger);
    if (mismatches > 0) {
        std::cerr << fmt::format("{} rows have a violation flag that the stored columns do not reproduce\n", mismatches);
        return kValidationFailure;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Penalized likelihood model selection experiments"};
    app.require_subcommand(1);
    CommonFlags flags;
    std::string config_path;
    std::string ledger_path;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", flags.seed, "Override the config seed");
        sub->add_option("--replications", flags.replications, "Override the number of replications");
        sub->add_option("--out-dir", flags.out_dir, "Directory for output files");
        sub->add_option("--jobs", flags.jobs, "Worker threads (0 = all cores)");
    };
    auto* run = app.add_subcommand("run", "Run an experiment and write the ledger, summary and risk files");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    add_common(run);
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate the penalty constant only");
    calibrate->add_option("config", config_path, "Experiment config (JSON)")->required();
    add_common(calibrate);
    auto* lemmas = app.add_subcommand("check-lemmas", "Sweep the loss inequalities over random instances");
    add_common(lemmas);
    auto* report = app.add_subcommand("report", "Summarize and audit a ledger CSV");
    report->add_option("ledger", ledger_path, "Ledger CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidationFailure;
    }

    try {
        if (*run) return cmd_run(config_path, flags);
        if (*calibrate) return cmd_calibrate(config_path, flags);
        if (*lemmas) return cmd_check_lemmas(flags);
        return cmd_report(ledger_path);
    } catch (const penlik::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const penlik::InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
