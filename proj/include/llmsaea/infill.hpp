#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "llmsaea/evolution.hpp"
#include "llmsaea/gp.hpp"
#include "llmsaea/surrogates.hpp"

namespace llmsaea {

/// Everything an infill criterion may look at when picking the next point.
struct InfillContext {
    std::vector<std::vector<double>> offspring; // DE trials, inside the problem box
    Population population;
    std::vector<std::vector<double>> archive_inputs;
    double best_value = 0.0; // min over archive targets
};

struct InfillConfig {
    double lcb_beta = 2.0;
    std::size_t levels = 4;
    double ei_sigma_floor = 1e-12;
};

/// Closed-form expected improvement for minimization.
double expected_improvement(double mean, double std, double best, double sigma_floor = 1e-12);

/// Each selector returns the index into ctx.offspring; ties go to the lowest index.
std::size_t lcb_select(const GPModel& gp, const InfillContext& ctx, double beta = 2.0);
std::size_t ei_select(const GPModel& gp, const InfillContext& ctx, double sigma_floor = 1e-12);
std::size_t prescreen_select(const ScalarField& predict, const InfillContext& ctx);

/// Quality level (1 = best) of each population rank when n members are split into `levels` equal tiers.
std::size_t level_of_rank(std::size_t rank, std::size_t n, std::size_t levels);

/// Level predicted for x by an inverse-distance-weighted vote of the k nearest
/// training points of `knn`; exact hits take that point's level, vote ties go to the better level.
std::size_t predict_level(const KnnModel& knn, std::span<const double> x, std::size_t levels);

std::size_t l1_exploit_select(const KnnModel& knn, const InfillContext& ctx, std::size_t levels = 4);
std::size_t l1_explore_select(const KnnModel& knn, const InfillContext& ctx, std::size_t levels = 4);

/// Minimizes the surrogate over the population bounding box with a
/// 100*dim + 1000 evaluation DE budget.
std::vector<double> local_search_select(const ScalarField& predict, const Population& population,
                                        std::size_t de_pop_size, std::size_t dim, std::uint64_t seed);

} // namespace llmsaea
