#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "llmsaea/harness.hpp"

using namespace llmsaea;

namespace {

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("'" + path + "' is not valid JSON");
    return doc;
}

struct RunOptions {
    std::string problem = "Ellipsoid";
    std::size_t dim = 10;
    std::string strategy = "mock";
    std::size_t n = 100;
    std::size_t mfes = 1000;
    std::uint64_t seed = 1;
    std::string backend = "mock";
    std::string transcript;
    std::string config;
    std::string out;
};

int do_run(const RunOptions& o)
{
    RunConfig cfg;
    cfg.problem = std::make_shared<const Problem>(make_problem(o.problem, o.dim));
    cfg.population_size = o.n;
    cfg.max_evaluations = o.mfes;
    cfg.seed = o.seed;
    cfg.strategy = StrategySpec::parse(o.strategy);
    cfg.backend = parse_backend(o.backend);
    if (!o.config.empty()) {
        const auto doc = read_json(o.config);
        cfg.hyper = parse_hyperparameters(doc.value("hyper", nlohmann::json()));
        cfg.chat = parse_chat_config(doc.value("chat", nlohmann::json()));
    }
    if (!o.transcript.empty())
        cfg.transcript = o.transcript;

    const RunTrace trace = run(cfg);
    if (!o.out.empty())
        write_trace_csv(trace, std::filesystem::path(o.out));

    const auto& best = trace.best();
    fmt::print("problem {} ({}D), strategy {}, seed {}\n", cfg.problem->name(), o.dim, cfg.strategy.name(), o.seed);
    fmt::print("evaluations {}  iterations {}  best f = {:.10e}", trace.archive.size(), trace.iterations, best.f);
    if (auto opt = cfg.problem->optimum_value())
        fmt::print("  error = {:.10e}", function_error(best.f, opt));
    fmt::print("\n");
    fmt::print("action  S        V        T\n");
    for (const auto& a : kActions) {
        const auto& s = stats_of(trace.stats, a.id);
        fmt::print("{:<7} {:<8.4f} {:<8.4f} {}\n", a.id, s.score, s.frequency, s.count);
    }
    if (trace.training_failures + trace.scoring_fallbacks + trace.decision_fallbacks > 0)
        fmt::print("training failures {}  scoring fallbacks {}  decision fallbacks {}\n", trace.training_failures,
                   trace.scoring_fallbacks, trace.decision_fallbacks);

    bool ok = true;
    for (const auto& c : check_run_invariants(cfg, trace)) {
        if (!c.passed) {
            ok = false;
            fmt::print(stderr, "invariant violated: {} {}\n", c.name, c.detail);
        }
    }
    return ok ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Surrogate-assisted evolutionary optimizer with LLM-guided model selection"};
    app.require_subcommand(1);

    RunOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "Single optimization run");
    run_cmd->add_option("--problem", run_opts.problem, "Classical name or file:<path.json>");
    run_cmd->add_option("--dim", run_opts.dim, "Dimension for classical problems");
    run_cmd->add_option("--strategy", run_opts.strategy,
                        "llm, mock, llm_no_src, llm_src_certain_only, llm_single_expert, fixed:<1-8>, seq, random, "
                        "alter, qlearning");
    run_cmd->add_option("--n", run_opts.n, "Population size");
    run_cmd->add_option("--mfes", run_opts.mfes, "Evaluation budget");
    run_cmd->add_option("--seed", run_opts.seed);
    run_cmd->add_option("--backend", run_opts.backend, "llm or mock");
    run_cmd->add_option("--transcript", run_opts.transcript, "JSONL transcript of chat exchanges");
    run_cmd->add_option("--config", run_opts.config, "JSON file with hyper and chat sections");
    run_cmd->add_option("--out", run_opts.out, "Trace CSV path");

    std::string bench_config, bench_preset = "desk", bench_out, bench_backend;
    std::size_t bench_workers = 0, bench_runs = 0;
    auto* bench_cmd = app.add_subcommand("bench", "Experiment grid over problems and strategies");
    bench_cmd->add_option("--config", bench_config, "Experiment JSON");
    bench_cmd->add_option("--preset", bench_preset, "full or desk (used without --config)");
    bench_cmd->add_option("--out", bench_out, "Output directory");
    bench_cmd->add_option("--workers", bench_workers, "Parallel runs (0 = all cores)");
    bench_cmd->add_option("--runs", bench_runs, "Override runs per cell");
    bench_cmd->add_option("--backend", bench_backend, "Override backend (llm or mock)");

    std::string plot_in, plot_out;
    auto* plot_cmd = app.add_subcommand("plot", "Convergence SVGs from a bench output directory");
    plot_cmd->add_option("--input", plot_in, "Bench output directory")->required();
    plot_cmd->add_option("--out", plot_out, "SVG directory (default <input>/plots)");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check an experiment JSON or a shifted-rotated problem file");
    validate_cmd->add_option("file", validate_path)->required()->check(CLI::ExistingFile);
    bool validate_skip_runs = false;
    validate_cmd->add_flag("--no-runs", validate_skip_runs, "Only parse, skip the short invariant-checking runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return do_run(run_opts);

        if (*bench_cmd) {
            ExperimentSpec spec = bench_config.empty() ? preset(bench_preset) : load_experiment_spec(bench_config);
            if (!bench_out.empty())
                spec.output_dir = bench_out;
            if (bench_workers)
                spec.workers = bench_workers;
            if (bench_runs)
                spec.runs_per_cell = bench_runs;
            if (!bench_backend.empty())
                spec.backend = parse_backend(bench_backend);
            const auto result = run_experiment(spec, &std::cerr);
            bool complete = true;
            for (const auto& c : result.cells) {
                complete = complete && c.complete;
                if (!c.errors.empty())
                    fmt::print("{:<12} {:>3}D  {:<22} mean {:.4e}  std {:.4e}  median {:.4e}{}\n", c.problem.name,
                               c.problem.dim, c.strategy, c.summary.mean, c.summary.std, c.summary.median,
                               c.complete ? "" : "  (incomplete)");
            }
            fmt::print("results written to {}\n", spec.output_dir.string());
            return complete ? 0 : 4;
        }

        if (*plot_cmd) {
            const std::filesystem::path out = plot_out.empty() ? std::filesystem::path(plot_in) / "plots" : std::filesystem::path(plot_out);
            for (const auto& p : plot_convergence(plot_in, out))
                fmt::print("{}\n", p.string());
            return 0;
        }

        if (*validate_cmd) {
            const auto doc = read_json(validate_path);
            std::vector<std::pair<std::string, std::size_t>> problems;
            std::vector<std::string> strategies{"mock"};
            Hyperparameters hyper;
            if (doc.contains("base")) {
                std::ifstream in(validate_path);
                std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
                const auto spec = parse_shifted_rotated(text);
                fmt::print("problem file ok: {} {}D\n", spec.name, spec.dim);
                problems.push_back({"file:" + validate_path, spec.dim});
            } else {
                const auto spec = parse_experiment_spec(doc);
                fmt::print("experiment ok: {} problems x {} strategies x {} runs, {} FEs, N = {}\n",
                           spec.problems.size(), spec.strategies.size(), spec.runs_per_cell, spec.max_evaluations,
                           spec.population_size);
                for (const auto& p : spec.problems)
                    problems.push_back({p.name, p.dim});
                strategies = spec.strategies;
                hyper = spec.hyper;
            }
            if (validate_skip_runs)
                return 0;

            // short mock runs of every cell, checked against the loop and bookkeeping invariants
            bool ok = true;
            for (const auto& [name, dim] : problems)
                for (const auto& s : strategies) {
                    RunConfig cfg;
                    cfg.problem = std::make_shared<const Problem>(make_problem(name, dim));
                    cfg.population_size = 10;
                    cfg.max_evaluations = 30;
                    cfg.strategy = StrategySpec::parse(s);
                    cfg.hyper = hyper;
                    const auto trace = run(cfg);
                    std::size_t failed = 0;
                    for (const auto& check : check_run_invariants(cfg, trace))
                        if (!check.passed) {
                            ++failed;
                            fmt::print("  {} {}D {}: {} ({})\n", name, dim, s, check.name, check.detail);
                        }
                    ok = ok && failed == 0;
                    fmt::print("invariants {} {}D {}: {}\n", name, dim, s, failed == 0 ? "ok" : "FAILED");
                }
            return ok ? 0 : 3;
        }
    } catch (const ConfigError& e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
