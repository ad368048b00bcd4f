#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "llmsaea/infill.hpp"

using namespace llmsaea;

namespace {

double wavy(std::span<const double> x)
{
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        s += std::sin(3.0 * x[j]) + 0.5 * x[j] * x[j] * static_cast<double>(j + 1);
    return s;
}

Population make_population(std::size_t n, std::size_t d, Rng& rng)
{
    std::vector<EvaluatedSolution> archive;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(d);
        for (double& v : x)
            v = rng.uniform(-2.0, 2.0);
        const double f = wavy(x);
        archive.push_back({std::move(x), f, i});
    }
    return select_top(archive, n);
}

InfillContext make_context(const Population& pop, std::size_t n_off, Rng& rng)
{
    InfillContext ctx;
    ctx.population = pop;
    ctx.best_value = pop.best().f;
    for (std::size_t i = 0; i < n_off; ++i) {
        std::vector<double> x(pop.dim());
        for (double& v : x)
            v = rng.uniform(-2.0, 2.0);
        ctx.offspring.push_back(std::move(x));
    }
    for (const auto& m : pop.members)
        ctx.archive_inputs.push_back(m.x);
    return ctx;
}

template <typename F>
std::size_t first_argmin(std::size_t n, F score)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (score(i) < score(best))
            best = i;
    return best;
}

} // namespace

TEST_CASE("expected improvement closed form")
{
    CHECK(expected_improvement(0.0, 0.0, 1.0) == 1.0);
    CHECK(expected_improvement(2.0, 0.0, 1.0) == 0.0);
    CHECK(expected_improvement(0.0, 1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));

    std::mt19937_64 eng(17);
    std::normal_distribution<double> normal;
    const double triples[10][3] = {{0.0, 1.0, 0.0},  {1.0, 0.5, 0.0},  {-1.0, 2.0, 0.0}, {3.0, 1.0, 1.0},
                                   {0.2, 0.1, 0.25}, {5.0, 3.0, -1.0}, {0.0, 1e-3, 1e-3}, {-2.0, 0.7, -2.5},
                                   {10.0, 4.0, 12.0}, {0.0, 0.25, 1.0}};
    for (const auto& t : triples) {
        const double mu = t[0], sd = t[1], best = t[2];
        const int samples = 1000000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double imp = std::max(best - (mu + sd * normal(eng)), 0.0);
            sum += imp;
            sum2 += imp * imp;
        }
        const double mean = sum / samples;
        const double se = std::sqrt((sum2 / samples - mean * mean) / samples);
        CHECK(std::abs(expected_improvement(mu, sd, best) - mean) <= 3.0 * se + 1e-15);
    }
}

TEST_CASE("GP-based selectors against brute force")
{
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const auto pop = make_population(20, 3, rng);
        const auto ctx = make_context(pop, 20, rng);
        const auto gp = GPModel::fit(TrainingSet::from_population(pop), {}, static_cast<std::uint64_t>(rep));
        const double beta = rep % 2 ? 2.0 : 0.5;
        auto lcb = [&](std::size_t i) {
            const auto p = gp.predict(ctx.offspring[i]);
            return p.mean - beta * p.std;
        };
        auto ei = [&](std::size_t i) {
            const auto p = gp.predict(ctx.offspring[i]);
            return -expected_improvement(p.mean, p.std, ctx.best_value);
        };
        CHECK(lcb_select(gp, ctx, beta) == first_argmin(ctx.offspring.size(), lcb));
        CHECK(ei_select(gp, ctx) == first_argmin(ctx.offspring.size(), ei));
        CHECK(lcb_select(gp, ctx, 0.0) ==
              prescreen_select([&](std::span<const double> x) { return gp.predict_mean(x); }, ctx));
    }
}

TEST_CASE("EI with zero spread breaks ties toward the first offspring")
{
    Rng rng(2);
    const auto pop = make_population(10, 2, rng);
    auto ctx = make_context(pop, 1, rng);
    // duplicates of training points have (near) zero std and mean equal to the target
    ctx.offspring = {pop.members[5].x, pop.members[7].x, pop.members[6].x};
    const auto gp = GPModel::fit(TrainingSet::from_population(pop), {}, 0);
    CHECK(ei_select(gp, ctx, 1e-2) == 0);
}

TEST_CASE("prescreening")
{
    InfillContext ctx;
    ctx.offspring = {{0.5}};
    CHECK(prescreen_select([](std::span<const double>) { return 1.0; }, ctx) == 0);
    ctx.offspring = {{0.5}, {0.1}, {0.9}};
    CHECK(prescreen_select([](std::span<const double>) { return 1.0; }, ctx) == 0);
    CHECK(prescreen_select([](std::span<const double> x) { return std::abs(x[0] - 0.8); }, ctx) == 2);
    ctx.offspring.clear();
    CHECK_THROWS_AS(prescreen_select([](std::span<const double>) { return 1.0; }, ctx), std::invalid_argument);
}

TEST_CASE("quality levels")
{
    CHECK(level_of_rank(0, 100, 4) == 1);
    CHECK(level_of_rank(24, 100, 4) == 1);
    CHECK(level_of_rank(25, 100, 4) == 2);
    CHECK(level_of_rank(99, 100, 4) == 4);
    CHECK(level_of_rank(2, 10, 4) == 1);
    CHECK(level_of_rank(3, 10, 4) == 2);
}

TEST_CASE("L1 selectors against brute force")
{
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        const auto pop = make_population(24, 3, rng);
        const auto ctx = make_context(pop, 24, rng);
        const auto knn = KnnModel::fit(TrainingSet::from_population(pop), 5);

        // population is sorted, so rank r holds level r*4/24 + 1
        const auto scaled = [&](std::span<const double> x) { return knn.data().normalize(x); };
        auto level_of = [&](const std::vector<double>& x) {
            const auto u = scaled(x);
            std::vector<std::pair<double, std::size_t>> dist;
            for (std::size_t r = 0; r < pop.size(); ++r)
                dist.push_back({(knn.data().normalize(pop.members[r].x) - u).norm(), r});
            std::stable_sort(dist.begin(), dist.end(), [](auto a, auto b) { return a.first < b.first; });
            if (dist[0].first == 0.0)
                return dist[0].second * 4 / 24 + 1;
            double votes[5] = {0, 0, 0, 0, 0};
            for (int k = 0; k < 5; ++k)
                votes[dist[k].second * 4 / 24 + 1] += 1.0 / dist[k].first;
            std::size_t w = 1;
            for (std::size_t l = 2; l <= 4; ++l)
                if (votes[l] > votes[w])
                    w = l;
            return w;
        };
        std::vector<std::size_t> levels;
        for (const auto& x : ctx.offspring)
            levels.push_back(level_of(x));
        const std::size_t top = *std::min_element(levels.begin(), levels.end());
        auto restricted = [&](auto score) {
            return first_argmin(ctx.offspring.size(), [&](std::size_t i) {
                return levels[i] == top ? score(i) : std::numeric_limits<double>::infinity();
            });
        };
        const std::size_t exploit = restricted([&](std::size_t i) { return knn.predict(ctx.offspring[i]); });
        const std::size_t explore = restricted([&](std::size_t i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& a : ctx.archive_inputs) {
                double s = 0.0;
                for (std::size_t j = 0; j < a.size(); ++j)
                    s += (a[j] - ctx.offspring[i][j]) * (a[j] - ctx.offspring[i][j]);
                nearest = std::min(nearest, std::sqrt(s));
            }
            return -nearest;
        });
        for (std::size_t i = 0; i < ctx.offspring.size(); ++i)
            CHECK(predict_level(knn, ctx.offspring[i], 4) == levels[i]);
        CHECK(l1_exploit_select(knn, ctx, 4) == exploit);
        CHECK(l1_explore_select(knn, ctx, 4) == explore);
    }
}

TEST_CASE("L1 explore avoids an archived point")
{
    Rng rng(3);
    const auto pop = make_population(12, 2, rng);
    auto ctx = make_context(pop, 1, rng);
    // both offspring sit next to the best member; the first one is exactly on it
    const auto& b = pop.best().x;
    ctx.offspring = {b, {b[0] + 1e-3, b[1]}};
    const auto knn = KnnModel::fit(TrainingSet::from_population(pop), 3);
    REQUIRE(predict_level(knn, ctx.offspring[0], 4) == 1);
    REQUIRE(predict_level(knn, ctx.offspring[1], 4) == 1);
    CHECK(l1_explore_select(knn, ctx, 4) == 1);
    CHECK(l1_exploit_select(knn, ctx, 4) == 0);
}

TEST_CASE("local search selection")
{
    std::vector<EvaluatedSolution> one{{{0.3, -0.2}, 1.0, 0}};
    const auto single = select_top(one, 1);
    const auto field = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
    CHECK(local_search_select(field, single, 1, 2, 5) == std::vector<double>{0.3, -0.2});

    Rng rng(6);
    const auto pop = make_population(30, 4, rng);
    const auto [lo, hi] = bounding_box(pop);
    const auto x = local_search_select(wavy, pop, 30, 4, 7);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(x[j] >= lo[j]);
        CHECK(x[j] <= hi[j]);
    }
    CHECK(wavy(x) <= pop.best().f);
}
