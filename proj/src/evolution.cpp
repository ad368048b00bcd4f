#include "llmsaea/evolution.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace llmsaea {

Population select_top(std::span<const EvaluatedSolution> archive, std::size_t n)
{
    std::vector<std::size_t> order(archive.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (archive[a].f != archive[b].f)
            return archive[a].f < archive[b].f;
        return archive[a].index < archive[b].index;
    });
    Population pop;
    const std::size_t keep = std::min(n, archive.size());
    pop.members.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k)
        pop.members.push_back(archive[order[k]]);
    return pop;
}

void validate(const DEConfig& config)
{
    if (!(config.scale_factor > 0.0 && config.scale_factor <= 1.0))
        throw ConfigError(fmt::format("DE scale factor must lie in (0, 1], got {}", config.scale_factor));
    if (!(config.crossover_rate >= 0.0 && config.crossover_rate <= 1.0))
        throw ConfigError(fmt::format("DE crossover rate must lie in [0, 1], got {}", config.crossover_rate));
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::span<const double> lower,
                                                 std::span<const double> upper, Rng& rng)
{
    if (n < 1)
        throw std::invalid_argument("latin_hypercube: n must be at least 1");
    const std::size_t d = lower.size();
    std::vector<std::vector<double>> points(n, std::vector<double>(d));
    std::vector<std::size_t> strata(n);
    for (std::size_t j = 0; j < d; ++j) {
        std::iota(strata.begin(), strata.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(strata[i], strata[rng.index(i + 1)]);
        const double width = upper[j] - lower[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n);
            points[i][j] = std::min(lower[j] + u * width, upper[j]);
        }
    }
    return points;
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n, const Problem& problem, std::uint64_t seed)
{
    Rng rng(seed);
    return latin_hypercube(n, problem.lower(), problem.upper(), rng);
}

double repair(double value, double lower, double upper, Rng& rng)
{
    if (value >= lower && value <= upper)
        return value;
    return lower + rng.uniform() * (upper - lower);
}

namespace {

// Two distinct indices, both different from `self`.
std::pair<std::size_t, std::size_t> draw_pair(std::size_t n, std::size_t self, Rng& rng)
{
    std::size_t r1 = rng.index(n - 1);
    if (r1 >= self)
        ++r1;
    std::size_t r2 = rng.index(n - 2);
    const std::size_t lo = std::min(self, r1), hi = std::max(self, r1);
    if (r2 >= lo)
        ++r2;
    if (r2 >= hi)
        ++r2;
    return {r1, r2};
}

std::vector<double> make_trial(std::span<const double> parent, std::span<const double> best,
                               std::span<const double> a, std::span<const double> b, const DEConfig& config,
                               std::span<const double> lower, std::span<const double> upper, Rng& rng)
{
    const std::size_t d = parent.size();
    const std::size_t j_rand = rng.index(d);
    std::vector<double> trial(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double mutant = best[j] + config.scale_factor * (a[j] - b[j]);
        const bool take = rng.uniform() <= config.crossover_rate || j == j_rand;
        trial[j] = take ? mutant : parent[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (lower[j] == upper[j])
            trial[j] = lower[j];
        else
            trial[j] = repair(trial[j], lower[j], upper[j], rng);
    }
    return trial;
}

} // namespace

std::vector<std::vector<double>> de_offspring(const Population& population, const DEConfig& config,
                                              const Problem& problem, Rng& rng)
{
    const std::size_t n = population.size();
    if (n < 3)
        throw std::invalid_argument(fmt::format("de_offspring: population of {} is too small (need 3)", n));
    const auto& best = population.best().x;
    std::vector<std::vector<double>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto [r1, r2] = draw_pair(n, i, rng);
        out.push_back(make_trial(population.members[i].x, best, population.members[r1].x, population.members[r2].x,
                                 config, problem.lower(), problem.upper(), rng));
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> bounding_box(const Population& population)
{
    if (population.empty())
        throw std::invalid_argument("bounding_box: empty population");
    std::vector<double> lb = population.members.front().x;
    std::vector<double> ub = lb;
    for (const auto& m : population.members)
        for (std::size_t j = 0; j < lb.size(); ++j) {
            lb[j] = std::min(lb[j], m.x[j]);
            ub[j] = std::max(ub[j], m.x[j]);
        }
    return {std::move(lb), std::move(ub)};
}

LocalSearchResult local_search_de(const ScalarField& predict, std::span<const double> region_lb,
                                  std::span<const double> region_ub, std::size_t pop_size, std::size_t budget,
                                  std::uint64_t seed, const DEConfig& config)
{
    if (region_lb.size() != region_ub.size() || region_lb.empty())
        throw std::invalid_argument("local_search_de: region bounds mismatch");
    for (std::size_t j = 0; j < region_lb.size(); ++j)
        if (region_lb[j] > region_ub[j])
            throw std::invalid_argument("local_search_de: region lower bound exceeds upper bound");
    if (pop_size < 1 || budget < pop_size)
        throw std::invalid_argument("local_search_de: budget must cover the initial population");

    Rng rng(seed);
    auto xs = latin_hypercube(pop_size, region_lb, region_ub, rng);
    std::vector<double> fs(pop_size);
    std::size_t evals = 0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < pop_size; ++i) {
        fs[i] = predict(xs[i]);
        ++evals;
        if (fs[i] < fs[best])
            best = i;
    }

    if (pop_size >= 3) {
        while (evals < budget) {
            for (std::size_t i = 0; i < pop_size && evals < budget; ++i) {
                const auto [r1, r2] = draw_pair(pop_size, i, rng);
                auto trial = make_trial(xs[i], xs[best], xs[r1], xs[r2], config, region_lb, region_ub, rng);
                const double ft = predict(trial);
                ++evals;
                if (ft <= fs[i]) {
                    xs[i] = std::move(trial);
                    fs[i] = ft;
                    if (ft < fs[best])
                        best = i;
                }
            }
        }
    }
    return {xs[best], fs[best], evals};
}

} // namespace llmsaea
