#pragma once

#include <span>
#include <vector>

namespace llmsaea {

struct Summary {
    double mean = 0.0;
    double std = 0.0; // sample standard deviation, 0 for a single value
    double median = 0.0;
};

Summary summarize(std::span<const double> values);
double median(std::span<const double> values);

/// Average ranks (1-based) of the pooled values, ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

enum class Verdict { Better, Equal, Worse };
char to_symbol(Verdict v);

struct RankSumResult {
    double rank_sum_a = 0.0; // sum of pooled ranks of sample a
    double u = 0.0;          // Mann-Whitney U of sample a
    double z = 0.0;
    double p_value = 1.0;
    Verdict verdict = Verdict::Equal;
};

/// Two-sided Wilcoxon rank-sum test, normal approximation with tie
/// correction. Better means sample a has significantly lower values.
RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

} // namespace llmsaea
