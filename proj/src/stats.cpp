#include "llmsaea/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace llmsaea {

double median(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("median of empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Summary summarize(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("summary of empty sample");
    Summary s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    s.median = median(values);
    return s;
}

std::vector<double> average_ranks(std::span<const double> values)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

char to_symbol(Verdict v)
{
    switch (v) {
    case Verdict::Better: return '+';
    case Verdict::Worse: return '-';
    case Verdict::Equal: break;
    }
    return '=';
}

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b, double alpha)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("rank_sum_test: both samples must be non-empty");
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto ranks = average_ranks(pooled);

    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double n = na + nb;

    RankSumResult r;
    r.rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
    r.u = r.rank_sum_a - na * (na + 1.0) / 2.0;

    // tie correction: sum over tie groups of (t^3 - t)
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i])
            ++j;
        const double t = static_cast<double>(j - i + 1);
        ties += t * t * t - t;
        i = j + 1;
    }
    const double variance = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if (!(variance > 0.0)) {
        r.z = 0.0;
        r.p_value = 1.0;
        r.verdict = Verdict::Equal;
        return r;
    }
    r.z = (r.u - na * nb / 2.0) / std::sqrt(variance);
    r.p_value = std::erfc(std::abs(r.z) / std::numbers::sqrt2);
    if (r.p_value < alpha)
        r.verdict = r.z < 0.0 ? Verdict::Better : Verdict::Worse;
    return r;
}

} // namespace llmsaea
