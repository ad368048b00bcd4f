#include "llmsaea/infill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace llmsaea {

namespace {

void require_offspring(const InfillContext& ctx)
{
    if (ctx.offspring.empty())
        throw std::invalid_argument("infill: no offspring to select from");
}

template <typename Score>
std::size_t argmin_over(const std::vector<std::size_t>& candidates, Score score)
{
    std::size_t best = candidates.front();
    double best_score = score(best);
    for (std::size_t c : candidates) {
        const double s = score(c);
        if (s < best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    return idx;
}

// Offspring predicted at the best level present among them.
std::vector<std::size_t> best_level_offspring(const KnnModel& knn, const InfillContext& ctx, std::size_t levels)
{
    require_offspring(ctx);
    std::vector<std::size_t> level(ctx.offspring.size());
    std::size_t top = levels + 1;
    for (std::size_t i = 0; i < ctx.offspring.size(); ++i) {
        level[i] = predict_level(knn, ctx.offspring[i], levels);
        top = std::min(top, level[i]);
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < level.size(); ++i)
        if (level[i] == top)
            out.push_back(i);
    return out;
}

} // namespace

double expected_improvement(double mean, double std, double best, double sigma_floor)
{
    const double gap = best - mean;
    if (std < sigma_floor)
        return std::max(gap, 0.0);
    const double z = gap / std;
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return gap * cdf + std * pdf;
}

std::size_t lcb_select(const GPModel& gp, const InfillContext& ctx, double beta)
{
    require_offspring(ctx);
    if (beta < 0.0)
        throw std::invalid_argument("lcb_select: beta must be non-negative");
    return argmin_over(all_indices(ctx.offspring.size()), [&](std::size_t i) {
        const auto p = gp.predict(ctx.offspring[i]);
        return p.mean - beta * p.std;
    });
}

std::size_t ei_select(const GPModel& gp, const InfillContext& ctx, double sigma_floor)
{
    require_offspring(ctx);
    return argmin_over(all_indices(ctx.offspring.size()), [&](std::size_t i) {
        const auto p = gp.predict(ctx.offspring[i]);
        return -expected_improvement(p.mean, p.std, ctx.best_value, sigma_floor);
    });
}

std::size_t prescreen_select(const ScalarField& predict, const InfillContext& ctx)
{
    require_offspring(ctx);
    return argmin_over(all_indices(ctx.offspring.size()), [&](std::size_t i) { return predict(ctx.offspring[i]); });
}

std::size_t level_of_rank(std::size_t rank, std::size_t n, std::size_t levels)
{
    return rank * levels / n + 1;
}

std::size_t predict_level(const KnnModel& knn, std::span<const double> x, std::size_t levels)
{
    const auto& y = knn.data().raw_targets();
    const std::size_t n = knn.data().size();

    // rank of every training point by target, ties by training order
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y[static_cast<Eigen::Index>(a)] < y[static_cast<Eigen::Index>(b)];
    });
    std::vector<std::size_t> level(n);
    for (std::size_t r = 0; r < n; ++r)
        level[order[r]] = level_of_rank(r, n, levels);

    const auto nn = knn.neighbors(x);
    if (nn.front().distance == 0.0)
        return level[nn.front().index];
    std::vector<double> votes(levels + 1, 0.0);
    for (const auto& nb : nn)
        votes[level[nb.index]] += 1.0 / nb.distance;
    std::size_t winner = 1;
    for (std::size_t l = 2; l <= levels; ++l)
        if (votes[l] > votes[winner])
            winner = l;
    return winner;
}

std::size_t l1_exploit_select(const KnnModel& knn, const InfillContext& ctx, std::size_t levels)
{
    const auto candidates = best_level_offspring(knn, ctx, levels);
    return argmin_over(candidates, [&](std::size_t i) { return knn.predict(ctx.offspring[i]); });
}

std::size_t l1_explore_select(const KnnModel& knn, const InfillContext& ctx, std::size_t levels)
{
    const auto candidates = best_level_offspring(knn, ctx, levels);
    return argmin_over(candidates, [&](std::size_t i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& a : ctx.archive_inputs) {
            double s = 0.0;
            for (std::size_t j = 0; j < a.size(); ++j) {
                const double diff = a[j] - ctx.offspring[i][j];
                s += diff * diff;
            }
            nearest = std::min(nearest, std::sqrt(s));
        }
        return -nearest;
    });
}

std::vector<double> local_search_select(const ScalarField& predict, const Population& population,
                                        std::size_t de_pop_size, std::size_t dim, std::uint64_t seed)
{
    const auto [lb, ub] = bounding_box(population);
    const std::size_t budget = 100 * dim + 1000;
    return local_search_de(predict, lb, ub, std::min(de_pop_size, budget), budget, seed).x;
}

} // namespace llmsaea
