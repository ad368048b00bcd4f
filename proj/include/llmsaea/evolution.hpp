#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "llmsaea/problem.hpp"
#include "llmsaea/rng.hpp"

namespace llmsaea {

/// A decision vector with its true objective value.
struct EvaluatedSolution {
    std::vector<double> x;
    double f = 0.0;
    std::size_t index = 0; // 0-based evaluation order
};

/// Top-N slice of the archive, best first. Ties keep the earlier evaluation first.
struct Population {
    std::vector<EvaluatedSolution> members;

    std::size_t size() const { return members.size(); }
    bool empty() const { return members.empty(); }
    const EvaluatedSolution& best() const { return members.front(); }
    std::size_t dim() const { return members.empty() ? 0 : members.front().x.size(); }
};

Population select_top(std::span<const EvaluatedSolution> archive, std::size_t n);

struct DEConfig {
    double scale_factor = 0.5;
    double crossover_rate = 0.9;
};

void validate(const DEConfig& config);

/// Stratified sample: per dimension, exactly one point in each of the n
/// equal-width strata, strata permuted independently per dimension.
std::vector<std::vector<double>> latin_hypercube(std::size_t n, const Problem& problem, std::uint64_t seed);
std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::span<const double> lower,
                                                 std::span<const double> upper, Rng& rng);

/// Out-of-range values are resampled uniformly in [lower, upper).
double repair(double value, double lower, double upper, Rng& rng);

/// DE/best/1 mutation with binomial crossover and uniform repair, one trial
/// per parent. Random draws per parent: r1, r2, j_rand, then one crossover
/// draw per coordinate, then any repair draws.
std::vector<std::vector<double>> de_offspring(const Population& population, const DEConfig& config,
                                              const Problem& problem, Rng& rng);

std::pair<std::vector<double>, std::vector<double>> bounding_box(const Population& population);

using ScalarField = std::function<double(std::span<const double>)>;

struct LocalSearchResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
};

/// Minimizes `predict` inside [region_lb, region_ub] with a DE of the same
/// operators as de_offspring and greedy one-to-one replacement. The initial
/// population counts against `budget`. Coordinates with lb == ub stay fixed.
LocalSearchResult local_search_de(const ScalarField& predict, std::span<const double> region_lb,
                                  std::span<const double> region_ub, std::size_t pop_size, std::size_t budget,
                                  std::uint64_t seed, const DEConfig& config = {});

} // namespace llmsaea
