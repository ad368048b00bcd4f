#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "llmsaea/evolution.hpp"

using namespace llmsaea;

namespace {

Population random_population(std::size_t n, std::size_t d, double lo, double hi, Rng& rng)
{
    std::vector<EvaluatedSolution> archive;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(d);
        for (double& v : x)
            v = rng.uniform(lo, hi);
        archive.push_back({x, rng.uniform(), i});
    }
    return select_top(archive, n);
}

Problem box_problem(std::size_t d, double lo, double hi)
{
    return Problem("box", std::vector<double>(d, lo), std::vector<double>(d, hi),
                   [](std::span<const double>) { return 0.0; });
}

} // namespace

TEST_CASE("select_top orders by value then evaluation order")
{
    std::vector<EvaluatedSolution> archive{
        {{0.0}, 3.0, 0}, {{1.0}, 1.0, 1}, {{2.0}, 2.0, 2}, {{3.0}, 1.0, 3}, {{4.0}, 0.5, 4}};
    const auto pop = select_top(archive, 3);
    REQUIRE(pop.size() == 3);
    CHECK(pop.members[0].index == 4);
    CHECK(pop.members[1].index == 1);
    CHECK(pop.members[2].index == 3);
    CHECK(select_top(archive, 10).size() == 5);
}

TEST_CASE("latin hypercube stratification")
{
    SUBCASE("two points in one dimension")
    {
        Rng rng(1);
        const std::vector<double> lo{0.0}, hi{1.0};
        auto pts = latin_hypercube(2, lo, hi, rng);
        std::sort(pts.begin(), pts.end());
        CHECK(pts[0][0] >= 0.0);
        CHECK(pts[0][0] < 0.5);
        CHECK(pts[1][0] >= 0.5);
        CHECK(pts[1][0] <= 1.0);
    }
    SUBCASE("one point per stratum per dimension")
    {
        for (std::size_t n : {5u, 17u, 100u}) {
            const auto p = make_classical("Ackley", 3);
            const auto pts = latin_hypercube(n, p, 42);
            REQUIRE(pts.size() == n);
            for (std::size_t j = 0; j < 3; ++j) {
                std::vector<int> hist(n, 0);
                for (const auto& x : pts) {
                    const double u = (x[j] - p.lower()[j]) / (p.upper()[j] - p.lower()[j]);
                    ++hist[std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)))];
                }
                CHECK(std::all_of(hist.begin(), hist.end(), [](int c) { return c == 1; }));
            }
        }
    }
    SUBCASE("deterministic per seed")
    {
        const auto p = make_classical("Ellipsoid", 4);
        CHECK(latin_hypercube(20, p, 9) == latin_hypercube(20, p, 9));
        CHECK(latin_hypercube(20, p, 9) != latin_hypercube(20, p, 10));
    }
}

TEST_CASE("repair")
{
    Rng rng(2);
    CHECK(repair(0.3, 0.0, 1.0, rng) == 0.3);
    CHECK(repair(0.0, 0.0, 1.0, rng) == 0.0);
    CHECK(repair(1.0, 0.0, 1.0, rng) == 1.0);
    const double r = repair(1.7, 0.0, 1.0, rng);
    CHECK(r >= 0.0);
    CHECK(r < 1.0);

    double sum = 0.0;
    for (int k = 0; k < 10000; ++k)
        sum += repair(k % 2 ? 1.5 : -0.5, 0.0, 1.0, rng);
    CHECK(std::abs(sum / 10000.0 - 0.5) < 0.05);
}

TEST_CASE("DE mutant arithmetic")
{
    // best [1,1]; the other two members are [2,0] and [0,2]
    std::vector<EvaluatedSolution> archive{{{1.0, 1.0}, 0.0, 0}, {{2.0, 0.0}, 1.0, 1}, {{0.0, 2.0}, 2.0, 2}};
    const auto pop = select_top(archive, 3);
    const auto problem = box_problem(2, -5.0, 5.0);
    DEConfig cfg{0.5, 1.0};
    std::set<std::vector<double>> seen;
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(s);
        const auto off = de_offspring(pop, cfg, problem, rng);
        REQUIRE(off.size() == 3);
        const bool ok = off[0] == std::vector<double>{2.0, 0.0} || off[0] == std::vector<double>{0.0, 2.0};
        CHECK(ok);
        seen.insert(off[0]);
    }
    CHECK(seen.size() == 2);
}

TEST_CASE("DE crossover degenerate rates")
{
    Rng data_rng(4);
    const auto pop = random_population(12, 6, -1.0, 1.0, data_rng);
    const auto problem = box_problem(6, -100.0, 100.0);
    const auto& best = pop.best().x;

    // every possible mutant for parent i
    auto mutants = [&](std::size_t i) {
        std::vector<std::vector<double>> out;
        for (std::size_t a = 0; a < pop.size(); ++a)
            for (std::size_t b = 0; b < pop.size(); ++b) {
                if (a == b || a == i || b == i)
                    continue;
                std::vector<double> v(6);
                for (std::size_t j = 0; j < 6; ++j)
                    v[j] = best[j] + 0.5 * (pop.members[a].x[j] - pop.members[b].x[j]);
                out.push_back(v);
            }
        return out;
    };

    SUBCASE("CR = 1 copies the mutant")
    {
        Rng rng(7);
        const auto off = de_offspring(pop, {0.5, 1.0}, problem, rng);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto ms = mutants(i);
            CHECK(std::find(ms.begin(), ms.end(), off[i]) != ms.end());
        }
    }
    SUBCASE("CR = 0 changes exactly one coordinate")
    {
        Rng rng(8);
        const auto off = de_offspring(pop, {0.5, 0.0}, problem, rng);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            std::size_t changed = 0, where = 0;
            for (std::size_t j = 0; j < 6; ++j)
                if (off[i][j] != pop.members[i].x[j]) {
                    ++changed;
                    where = j;
                }
            REQUIRE(changed == 1);
            const auto ms = mutants(i);
            CHECK(std::any_of(ms.begin(), ms.end(), [&](const auto& m) { return m[where] == off[i][where]; }));
        }
    }
}

TEST_CASE("DE offspring stay in the box")
{
    Rng rng(13);
    for (int rep = 0; rep < 50; ++rep) {
        const auto problem = make_classical("Rosenbrock", 5);
        const auto pop = random_population(10, 5, -2.048, 2.048, rng);
        for (double cr : {0.0, 0.5, 0.9, 1.0}) {
            const auto off = de_offspring(pop, {1.0, cr}, problem, rng);
            REQUIRE(off.size() == pop.size());
            for (const auto& x : off)
                CHECK(problem.contains(x));
        }
    }
}

TEST_CASE("DE needs three members and is reproducible")
{
    Rng rng(1);
    const auto problem = box_problem(2, 0.0, 1.0);
    CHECK_THROWS_AS(de_offspring(random_population(2, 2, 0.0, 1.0, rng), {}, problem, rng), std::invalid_argument);

    const auto pop = random_population(8, 2, 0.0, 1.0, rng);
    Rng a(99), b(99);
    CHECK(de_offspring(pop, {}, problem, a) == de_offspring(pop, {}, problem, b));
    CHECK_THROWS_AS(validate(DEConfig{0.0, 0.9}), ConfigError);
    CHECK_THROWS_AS(validate(DEConfig{0.5, 1.5}), ConfigError);
}

TEST_CASE("bounding box")
{
    std::vector<EvaluatedSolution> one{{{3.0, -1.0}, 0.0, 0}};
    const auto [l1, u1] = bounding_box(select_top(one, 1));
    CHECK(l1 == std::vector<double>{3.0, -1.0});
    CHECK(u1 == std::vector<double>{3.0, -1.0});

    std::vector<EvaluatedSolution> two{{{0.0, 2.0}, 0.0, 0}, {{1.0, 1.0}, 1.0, 1}};
    const auto [l2, u2] = bounding_box(select_top(two, 2));
    CHECK(l2 == std::vector<double>{0.0, 1.0});
    CHECK(u2 == std::vector<double>{1.0, 2.0});

    Rng rng(5);
    const auto pop = random_population(20, 4, -3.0, 3.0, rng);
    const auto [lo, hi] = bounding_box(pop);
    for (std::size_t j = 0; j < 4; ++j) {
        double mn = 1e300, mx = -1e300;
        for (const auto& m : pop.members) {
            mn = std::min(mn, m.x[j]);
            mx = std::max(mx, m.x[j]);
        }
        CHECK(lo[j] == mn);
        CHECK(hi[j] == mx);
    }
}

TEST_CASE("local search DE")
{
    const auto sq = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x)
            s += v * v;
        return s;
    };
    const std::vector<double> lo(5, -1.0), hi(5, 1.0);

    SUBCASE("convex bowl")
    {
        const auto res = local_search_de(sq, lo, hi, 50, 1500, 3);
        CHECK(res.value <= 1e-3);
        CHECK(res.evaluations <= 1500);
        CHECK(res.value == sq(res.x));
    }
    SUBCASE("collapsed region returns the point")
    {
        const std::vector<double> p{0.25, -0.5, 0.0, 1.0, 0.75};
        const auto res = local_search_de(sq, p, p, 20, 200, 1);
        CHECK(res.x == p);
    }
    SUBCASE("budget equal to the population size keeps the best initial point")
    {
        const auto res = local_search_de(sq, lo, hi, 30, 30, 11);
        Rng rng(11);
        const auto init = latin_hypercube(30, lo, hi, rng);
        double best = 1e300;
        for (const auto& x : init)
            best = std::min(best, sq(x));
        CHECK(res.evaluations == 30);
        CHECK(res.value == best);
    }
    SUBCASE("reproducible")
    {
        CHECK(local_search_de(sq, lo, hi, 20, 500, 77).x == local_search_de(sq, lo, hi, 20, 500, 77).x);
    }
}
