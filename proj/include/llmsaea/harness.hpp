#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "llmsaea/orchestrator.hpp"
#include "llmsaea/stats.hpp"

namespace llmsaea {

struct ProblemRef {
    std::string name; // classical name or file:<path>
    std::size_t dim = 10;
};

/// Batch of runs over a (problem x strategy) grid.
struct ExperimentSpec {
    std::vector<ProblemRef> problems;
    std::vector<std::string> strategies;
    std::size_t runs_per_cell = 20;
    std::size_t max_evaluations = 1000;
    std::size_t population_size = 100;
    std::uint64_t base_seed = 1;
    std::filesystem::path output_dir = "results";
    BackendKind backend = BackendKind::Mock;
    Hyperparameters hyper;
    ChatConfig chat;
    std::optional<std::filesystem::path> transcript;
    std::size_t workers = 0; // 0 = hardware concurrency
};

void validate(const ExperimentSpec& spec);

/// The "full" preset (N=100, 1000 FEs, 20 runs) and the desk-scale preset
/// (300 FEs, 10 runs) over the five classical 10-D problems.
ExperimentSpec preset(std::string_view name);

Hyperparameters parse_hyperparameters(const nlohmann::json& doc, Hyperparameters base = {});
ChatConfig parse_chat_config(const nlohmann::json& doc, ChatConfig base = {});
ExperimentSpec parse_experiment_spec(const nlohmann::json& doc);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

struct RunOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_value = 0.0;
    double final_error = 0.0;
    std::vector<double> best_curve; // best-so-far error per FE
    RunTrace trace;
};

struct ResultCell {
    ProblemRef problem;
    std::string strategy;
    std::vector<RunOutcome> runs;
    std::vector<double> errors; // successful runs only, seed order
    Summary summary;
    bool complete = true;
    bool raw_values = false;    // optimum unknown, errors are raw best values
    std::vector<double> mean_curve;
};

struct ExperimentResult {
    std::vector<ResultCell> cells; // problem-major, strategy-minor
    const ResultCell& cell(std::string_view problem, std::size_t dim, std::string_view strategy) const;
};

/// Executes every run on a worker pool and, when output_dir is non-empty,
/// writes summary.csv, errors.csv, ranks.csv, convergence/*.csv and traces/*.csv.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* progress = nullptr);

void write_experiment(const ExperimentSpec& spec, const ExperimentResult& result);

/// Function error of a final value, checked to be non-negative within 1e-9 when the optimum is exact.
double function_error(double value, std::optional<double> optimum);

struct InvariantCheck {
    std::string name;
    bool passed;
    std::string detail;
};

/// Bookkeeping and loop-contract checks over a finished run.
std::vector<InvariantCheck> check_run_invariants(const RunConfig& config, const RunTrace& trace);

struct Series {
    std::string label;
    std::vector<double> values;
};

/// Line chart of convergence curves (x = FEs, log-scaled y) as SVG.
std::string render_convergence_svg(const std::vector<Series>& series, std::string_view title);

/// Reads every convergence CSV of an experiment directory and writes one SVG per problem.
std::vector<std::filesystem::path> plot_convergence(const std::filesystem::path& experiment_dir,
                                                    const std::filesystem::path& out_dir);

std::string cell_slug(const ProblemRef& problem, std::string_view strategy);

} // namespace llmsaea
