#include "llmsaea/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <iostream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace llmsaea {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& doc, std::initializer_list<std::string_view> known, std::string_view where)
{
    for (const auto& [key, _] : doc.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
}

std::string sanitize(std::string_view s)
{
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return out;
}

} // namespace

void validate(const ExperimentSpec& spec)
{
    if (spec.problems.empty())
        throw ConfigError("experiment: no problems listed");
    if (spec.strategies.empty())
        throw ConfigError("experiment: no strategies listed");
    if (spec.runs_per_cell < 1)
        throw ConfigError("experiment: runs_per_cell must be at least 1");
    if (spec.population_size < 4 || spec.max_evaluations < spec.population_size)
        throw ConfigError("experiment: need N >= 4 and MFEs >= N");
    for (const auto& s : spec.strategies)
        (void)StrategySpec::parse(s);
    validate(spec.hyper.de);
    validate(spec.chat);
}

ExperimentSpec preset(std::string_view name)
{
    ExperimentSpec spec;
    for (const char* p : {"Ellipsoid", "Rosenbrock", "Ackley", "Griewank", "Rastrigin"})
        spec.problems.push_back({p, 10});
    spec.strategies = {"mock", "random", "seq", "alter", "qlearning"};
    if (name == "full") {
        spec.runs_per_cell = 20;
        spec.max_evaluations = 1000;
        spec.population_size = 100;
    } else if (name == "desk") {
        spec.runs_per_cell = 10;
        spec.max_evaluations = 300;
        spec.population_size = 100;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected full or desk)");
    }
    return spec;
}

Hyperparameters parse_hyperparameters(const json& doc, Hyperparameters h)
{
    if (doc.is_null())
        return h;
    if (!doc.is_object())
        throw ConfigError("hyper: expected an object");
    reject_unknown_keys(doc,
                        {"de", "gp", "lcb_beta", "levels", "ei_sigma_floor", "prs_degree", "knn_k", "qlearning", "mock"},
                        "hyper");
    try {
        if (doc.contains("de")) {
            const auto& de = doc["de"];
            h.de.scale_factor = de.value("F", h.de.scale_factor);
            h.de.crossover_rate = de.value("CR", h.de.crossover_rate);
        }
        if (doc.contains("gp")) {
            const auto& gp = doc["gp"];
            h.gp.restarts = gp.value("restarts", h.gp.restarts);
            h.gp.max_evaluations = gp.value("max_evaluations", h.gp.max_evaluations);
            h.gp.probe_evaluations = gp.value("probe_evaluations", h.gp.probe_evaluations);
            if (gp.contains("lengthscale_bounds")) {
                const auto b = gp["lengthscale_bounds"].get<std::vector<double>>();
                if (b.size() != 2 || !(b[0] > 0.0 && b[0] < b[1]))
                    throw ConfigError("hyper.gp.lengthscale_bounds must be [lo, hi] with 0 < lo < hi");
                h.gp.min_lengthscale = b[0];
                h.gp.max_lengthscale = b[1];
            }
            if (gp.contains("signal_variance_bounds")) {
                const auto b = gp["signal_variance_bounds"].get<std::vector<double>>();
                if (b.size() != 2 || !(b[0] > 0.0 && b[0] < b[1]))
                    throw ConfigError("hyper.gp.signal_variance_bounds must be [lo, hi] with 0 < lo < hi");
                h.gp.min_signal_variance = b[0];
                h.gp.max_signal_variance = b[1];
            }
            h.gp.initial_nugget = gp.value("initial_nugget", h.gp.initial_nugget);
            h.gp.max_nugget = gp.value("max_nugget", h.gp.max_nugget);
        }
        h.infill.lcb_beta = doc.value("lcb_beta", h.infill.lcb_beta);
        h.infill.levels = doc.value("levels", h.infill.levels);
        h.infill.ei_sigma_floor = doc.value("ei_sigma_floor", h.infill.ei_sigma_floor);
        h.prs_degree = doc.value("prs_degree", h.prs_degree);
        h.knn_k = doc.value("knn_k", h.knn_k);
        if (doc.contains("qlearning")) {
            h.qlearning_epsilon = doc["qlearning"].value("epsilon", h.qlearning_epsilon);
            h.qlearning_alpha = doc["qlearning"].value("alpha", h.qlearning_alpha);
        }
        if (doc.contains("mock")) {
            const auto& m = doc["mock"];
            if (m.contains("policy"))
                h.mock_policy = parse_mock_policy(m["policy"].get<std::string>());
            h.mock_epsilon = m.value("epsilon", h.mock_epsilon);
            h.calibrated_min_trials = m.value("min_trials", h.calibrated_min_trials);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("hyper: ") + e.what());
    }
    if (h.prs_degree != 1 && h.prs_degree != 2)
        throw ConfigError("hyper.prs_degree must be 1 or 2");
    return h;
}

ChatConfig parse_chat_config(const json& doc, ChatConfig c)
{
    if (doc.is_null())
        return c;
    reject_unknown_keys(doc, {"endpoint", "model", "temperature", "max_retries", "timeout_s", "api_key_env"}, "chat");
    try {
        c.endpoint = doc.value("endpoint", c.endpoint);
        c.model = doc.value("model", c.model);
        c.temperature = doc.value("temperature", c.temperature);
        c.max_retries = doc.value("max_retries", c.max_retries);
        c.timeout_seconds = doc.value("timeout_s", c.timeout_seconds);
        c.api_key_env = doc.value("api_key_env", c.api_key_env);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("chat: ") + e.what());
    }
    validate(c);
    return c;
}

ExperimentSpec parse_experiment_spec(const json& doc)
{
    if (!doc.is_object())
        throw ConfigError("experiment spec must be a JSON object");
    reject_unknown_keys(doc,
                        {"preset", "problems", "strategies", "runs", "mfes", "n", "seed", "output", "backend", "hyper",
                         "chat", "transcript", "workers"},
                        "experiment");
    ExperimentSpec spec = doc.contains("preset") ? preset(doc["preset"].get<std::string>()) : ExperimentSpec{};
    try {
        if (doc.contains("problems")) {
            spec.problems.clear();
            for (const auto& p : doc["problems"]) {
                if (p.is_string())
                    spec.problems.push_back({p.get<std::string>(), 10});
                else
                    spec.problems.push_back({p.at("name").get<std::string>(), p.value("dim", std::size_t{10})});
            }
        }
        if (doc.contains("strategies"))
            spec.strategies = doc["strategies"].get<std::vector<std::string>>();
        spec.runs_per_cell = doc.value("runs", spec.runs_per_cell);
        spec.max_evaluations = doc.value("mfes", spec.max_evaluations);
        spec.population_size = doc.value("n", spec.population_size);
        spec.base_seed = doc.value("seed", spec.base_seed);
        if (doc.contains("output"))
            spec.output_dir = doc["output"].get<std::string>();
        if (doc.contains("backend"))
            spec.backend = parse_backend(doc["backend"].get<std::string>());
        if (doc.contains("transcript") && !doc["transcript"].is_null())
            spec.transcript = doc["transcript"].get<std::string>();
        spec.workers = doc.value("workers", spec.workers);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment: ") + e.what());
    }
    spec.hyper = parse_hyperparameters(doc.value("hyper", json()), spec.hyper);
    spec.chat = parse_chat_config(doc.value("chat", json()), spec.chat);
    validate(spec);
    return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open experiment spec '" + path.string() + "'");
    const json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw ConfigError("experiment spec '" + path.string() + "' is not valid JSON");
    return parse_experiment_spec(doc);
}

double function_error(double value, std::optional<double> optimum)
{
    if (!optimum)
        return value;
    const double err = value - *optimum;
    if (err < -1e-9)
        throw std::logic_error(fmt::format("negative function error {} (value {}, optimum {})", err, value, *optimum));
    return err;
}

const ResultCell& ExperimentResult::cell(std::string_view problem, std::size_t dim, std::string_view strategy) const
{
    for (const auto& c : cells)
        if (c.problem.name == problem && c.problem.dim == dim && c.strategy == strategy)
            return c;
    throw std::out_of_range(fmt::format("no result cell {}/{}D/{}", problem, dim, strategy));
}

std::string cell_slug(const ProblemRef& problem, std::string_view strategy)
{
    std::string pname = problem.name;
    if (pname.starts_with("file:"))
        pname = std::filesystem::path(pname.substr(5)).stem().string();
    return fmt::format("{}_{}D__{}", sanitize(pname), problem.dim, sanitize(strategy));
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* progress)
{
    validate(spec);

    std::vector<std::shared_ptr<const Problem>> problems;
    for (const auto& p : spec.problems)
        problems.push_back(std::make_shared<const Problem>(make_problem(p.name, p.dim)));

    ExperimentResult result;
    for (std::size_t pi = 0; pi < spec.problems.size(); ++pi)
        for (const auto& s : spec.strategies) {
            ResultCell cell;
            cell.problem = spec.problems[pi];
            cell.strategy = s;
            cell.raw_values = !problems[pi]->optimum_value().has_value();
            cell.runs.resize(spec.runs_per_cell);
            result.cells.push_back(std::move(cell));
        }

    struct Job {
        std::size_t cell;
        std::size_t run;
        std::size_t problem;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < result.cells.size(); ++c)
        for (std::size_t r = 0; r < spec.runs_per_cell; ++r)
            jobs.push_back({c, r, c / spec.strategies.size()});

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
            const Job& job = jobs[j];
            ResultCell& cell = result.cells[job.cell];
            RunOutcome& out = cell.runs[job.run];
            out.seed = spec.base_seed + job.run;
            try {
                RunConfig cfg;
                cfg.problem = problems[job.problem];
                cfg.population_size = spec.population_size;
                cfg.max_evaluations = spec.max_evaluations;
                cfg.seed = out.seed;
                cfg.strategy = StrategySpec::parse(cell.strategy);
                cfg.backend = spec.backend;
                cfg.hyper = spec.hyper;
                cfg.chat = spec.chat;
                cfg.transcript = spec.transcript;
                out.trace = run(cfg);
                const auto optimum = cfg.problem->optimum_value();
                out.best_curve.reserve(out.trace.rows.size());
                for (const auto& row : out.trace.rows)
                    out.best_curve.push_back(function_error(row.best_so_far, optimum));
                out.final_value = out.trace.best().f;
                out.final_error = function_error(out.final_value, optimum);
                out.ok = true;
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
            }
            const std::size_t finished = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                *progress << fmt::format("[{}/{}] {} {}D {} seed {}: {}\n", finished, jobs.size(), cell.problem.name,
                                         cell.problem.dim, cell.strategy, out.seed,
                                         out.ok ? fmt::format("error {:.6e}", out.final_error) : "FAILED: " + out.error);
            }
        }
    };

    std::size_t workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, jobs.size());
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < workers; ++w)
            pool.emplace_back(worker);
        worker();
    }

    for (auto& cell : result.cells) {
        std::vector<std::vector<double>*> curves;
        for (auto& r : cell.runs) {
            if (r.ok) {
                cell.errors.push_back(r.final_error);
                curves.push_back(&r.best_curve);
            } else {
                cell.complete = false;
                std::cerr << fmt::format("warning: {} {}D {} seed {} failed: {}\n", cell.problem.name, cell.problem.dim,
                                         cell.strategy, r.seed, r.error);
            }
        }
        if (!cell.errors.empty())
            cell.summary = summarize(cell.errors);
        if (!curves.empty()) {
            cell.mean_curve.assign(spec.max_evaluations, 0.0);
            for (std::size_t fe = 0; fe < spec.max_evaluations; ++fe) {
                double acc = 0.0;
                for (const auto* c : curves)
                    acc += fe < c->size() ? (*c)[fe] : c->back();
                cell.mean_curve[fe] = acc / static_cast<double>(curves.size());
            }
        }
    }
    if (!spec.output_dir.empty())
        write_experiment(spec, result);
    return result;
}

void write_experiment(const ExperimentSpec& spec, const ExperimentResult& result)
{
    namespace fs = std::filesystem;
    const fs::path root = spec.output_dir;
    fs::create_directories(root / "convergence");
    fs::create_directories(root / "traces");

    const std::string& reference = spec.strategies.front();
    std::ofstream summary(root / "summary.csv");
    summary << fmt::format("problem,dim,strategy,runs,failed,mean,std,median,best,vs_{},p_value,metric\n",
                           sanitize(reference));
    std::ofstream errors(root / "errors.csv");
    errors << "problem,dim,strategy,seed,final_value,final_error\n";

    // mean rank by mean error, per problem
    std::map<std::string, double> rank_sum;
    std::map<std::string, std::size_t> rank_count;

    for (std::size_t pi = 0; pi < spec.problems.size(); ++pi) {
        const std::size_t first = pi * spec.strategies.size();
        const auto* ref = &result.cells[first];
        double best_mean = std::numeric_limits<double>::infinity();
        std::vector<double> means;
        for (std::size_t si = 0; si < spec.strategies.size(); ++si) {
            const auto& c = result.cells[first + si];
            const double m = c.errors.empty() ? std::numeric_limits<double>::infinity() : c.summary.mean;
            means.push_back(m);
            best_mean = std::min(best_mean, m);
        }
        const auto ranks = average_ranks(means);
        for (std::size_t si = 0; si < spec.strategies.size(); ++si) {
            const auto& c = result.cells[first + si];
            rank_sum[c.strategy] += ranks[si];
            ++rank_count[c.strategy];

            std::string verdict = "NA", p = "";
            if (si != 0 && !c.errors.empty() && !ref->errors.empty()) {
                // '+' means the reference strategy is significantly better than this one
                const auto test = rank_sum_test(ref->errors, c.errors);
                verdict = std::string(1, to_symbol(test.verdict));
                p = fmt::format("{:.6g}", test.p_value);
            }
            const std::size_t failed = static_cast<std::size_t>(
                std::count_if(c.runs.begin(), c.runs.end(), [](const RunOutcome& r) { return !r.ok; }));
            summary << fmt::format("{},{},{},{},{},{:.6e},{:.6e},{:.6e},{},{},{},{}\n", c.problem.name, c.problem.dim,
                                   c.strategy, c.errors.size(), failed, c.summary.mean, c.summary.std,
                                   c.summary.median, (!c.errors.empty() && c.summary.mean == best_mean) ? "*" : "",
                                   verdict, p, c.raw_values ? "raw_value" : "error");

            for (const auto& r : c.runs) {
                if (!r.ok)
                    continue;
                errors << fmt::format("{},{},{},{},{:.17g},{:.17g}\n", c.problem.name, c.problem.dim, c.strategy,
                                      r.seed, r.final_value, r.final_error);
                write_trace_csv(r.trace, root / "traces" / fmt::format("{}__seed{}.csv", cell_slug(c.problem, c.strategy), r.seed));
            }
            std::ofstream conv(root / "convergence" / (cell_slug(c.problem, c.strategy) + ".csv"));
            conv << "fe,mean_best_error\n";
            for (std::size_t fe = 0; fe < c.mean_curve.size(); ++fe)
                conv << fmt::format("{},{:.17g}\n", fe + 1, c.mean_curve[fe]);
        }
    }

    std::ofstream ranks(root / "ranks.csv");
    ranks << "strategy,mean_rank\n";
    for (const auto& s : spec.strategies)
        ranks << fmt::format("{},{:.4f}\n", s, rank_sum[s] / static_cast<double>(rank_count[s]));
}

std::vector<InvariantCheck> check_run_invariants(const RunConfig& config, const RunTrace& trace)
{
    std::vector<InvariantCheck> checks;
    auto add = [&](std::string name, bool ok, std::string detail) {
        checks.push_back({std::move(name), ok, std::move(detail)});
    };

    add("archive length equals evaluations",
        trace.archive.size() == trace.rows.size() && trace.archive.size() <= config.max_evaluations,
        fmt::format("archive {} rows {} budget {}", trace.archive.size(), trace.rows.size(), config.max_evaluations));
    add("budget fully used", trace.archive.size() == config.max_evaluations,
        fmt::format("{} of {}", trace.archive.size(), config.max_evaluations));

    bool monotone = true;
    for (std::size_t i = 1; i < trace.rows.size(); ++i)
        monotone = monotone && trace.rows[i].best_so_far <= trace.rows[i - 1].best_so_far;
    add("best-so-far non-increasing", monotone, "");

    bool best_ok = true;
    for (const auto& s : trace.archive)
        best_ok = best_ok && s.f >= trace.best().f;
    add("best indexes archive minimum", best_ok, fmt::format("best f = {:.6e}", trace.best().f));

    std::size_t total = 0;
    for (const auto& s : trace.stats)
        total += s.count;
    add("selection counts sum to executed actions", total == trace.iterations,
        fmt::format("sum T = {}, executed = {}", total, trace.iterations));

    // V_a = T_a / t with t the iteration counter after the last update
    bool freq_ok = true;
    const double t_now = static_cast<double>(trace.iterations + 1);
    for (const auto& s : trace.stats)
        freq_ok = freq_ok && (trace.iterations == 0 ? s.frequency == 0.0 : s.frequency == static_cast<double>(s.count) / t_now);
    add("frequency equals count over iteration", freq_ok, "");

    std::array<std::vector<double>, kActionCount> scores;
    for (const auto& r : trace.rows)
        if (r.action != 0 && r.score)
            scores[static_cast<std::size_t>(r.action - 1)].push_back(*r.score);
    double worst = 0.0;
    for (std::size_t a = 0; a < kActionCount; ++a) {
        const double mean = scores[a].empty()
                                ? 0.0
                                : std::accumulate(scores[a].begin(), scores[a].end(), 0.0) / static_cast<double>(scores[a].size());
        worst = std::max(worst, std::abs(mean - trace.stats[a].score));
        if (scores[a].size() != trace.stats[a].count)
            worst = std::numeric_limits<double>::infinity();
    }
    add("average score equals mean of assigned scores", worst <= 1e-12, fmt::format("max deviation {:.3e}", worst));

    bool in_box = true;
    for (const auto& s : trace.archive)
        in_box = in_box && config.problem->contains(s.x);
    add("all evaluated points inside the box", in_box, "");
    return checks;
}

// ---------------------------------------------------------------- plotting

std::string render_convergence_svg(const std::vector<Series>& series, std::string_view title)
{
    constexpr double width = 820, height = 520, left = 80, right = 200, top = 40, bottom = 60;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    constexpr double floor_value = 1e-30;

    std::size_t max_len = 1;
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        max_len = std::max(max_len, s.values.size());
        for (double v : s.values) {
            const double l = std::log10(std::max(v, floor_value));
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo)
        hi = lo + 1.0;

    auto px = [&](double i) { return left + plot_w * (max_len > 1 ? i / static_cast<double>(max_len - 1) : 0.0); };
    auto py = [&](double v) {
        const double l = std::log10(std::max(v, floor_value));
        return top + plot_h * (1.0 - (l - lo) / (hi - lo));
    };

    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                              "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000", "#aec7e8"};
    std::ostringstream svg;
    svg << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">)",
                       width, height)
        << '\n';
    svg << fmt::format(R"(<rect x="0" y="0" width="{}" height="{}" fill="white"/>)", width, height) << '\n';
    svg << fmt::format(R"(<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>)", left + plot_w / 2, title)
        << '\n';
    svg << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)", left, top, plot_w,
                       plot_h)
        << '\n';
    for (double e = lo; e <= hi; e += std::max(1.0, std::floor((hi - lo) / 8.0))) {
        const double y = top + plot_h * (1.0 - (e - lo) / (hi - lo));
        svg << fmt::format(R"(<line x1="{}" y1="{:.1f}" x2="{}" y2="{:.1f}" stroke="#dddddd"/>)", left, y, left + plot_w, y)
            << '\n';
        svg << fmt::format(R"(<text x="{}" y="{:.1f}" text-anchor="end">1e{}</text>)", left - 6, y + 4, e) << '\n';
    }
    for (int k = 0; k <= 5; ++k) {
        const double i = static_cast<double>(max_len - 1) * k / 5.0;
        svg << fmt::format(R"(<text x="{:.1f}" y="{}" text-anchor="middle">{:.0f}</text>)", px(i), top + plot_h + 18,
                           i + 1)
            << '\n';
    }
    svg << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">FEs</text>)", left + plot_w / 2, height - 16) << '\n';
    svg << fmt::format(R"svg(<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">mean best function error</text>)svg",
                       top + plot_h / 2, top + plot_h / 2)
        << '\n';

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % std::size(palette)];
        std::string points;
        const std::size_t stride = std::max<std::size_t>(1, s.values.size() / 600);
        for (std::size_t i = 0; i < s.values.size(); i += stride)
            points += fmt::format("{:.1f},{:.1f} ", px(static_cast<double>(i)), py(s.values[i]));
        if (!s.values.empty())
            points += fmt::format("{:.1f},{:.1f}", px(static_cast<double>(s.values.size() - 1)), py(s.values.back()));
        svg << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>)", color, points) << '\n';
        const double ly = top + 14.0 + 18.0 * static_cast<double>(k);
        svg << fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>)", left + plot_w + 12,
                           ly - 4, left + plot_w + 36, ly - 4, color)
            << '\n';
        svg << fmt::format(R"(<text x="{}" y="{}">{}</text>)", left + plot_w + 42, ly, s.label) << '\n';
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::filesystem::path> plot_convergence(const std::filesystem::path& experiment_dir,
                                                    const std::filesystem::path& out_dir)
{
    namespace fs = std::filesystem;
    const fs::path conv = experiment_dir / "convergence";
    if (!fs::is_directory(conv))
        throw ConfigError("no convergence directory under '" + experiment_dir.string() + "'");

    std::map<std::string, std::vector<Series>> by_problem;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(conv))
        if (entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const std::string stem = path.stem().string();
        const auto split = stem.find("__");
        if (split == std::string::npos)
            continue;
        Series s;
        s.label = stem.substr(split + 2);
        std::ifstream in(path);
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma != std::string::npos)
                s.values.push_back(std::stod(line.substr(comma + 1)));
        }
        by_problem[stem.substr(0, split)].push_back(std::move(s));
    }

    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    for (const auto& [problem, series] : by_problem) {
        const fs::path out = out_dir / (problem + ".svg");
        std::ofstream(out) << render_convergence_svg(series, problem);
        written.push_back(out);
    }
    return written;
}

} // namespace llmsaea
