#pragma once

#include "llmsaea/experts.hpp"

namespace test_support {

inline llmsaea::ActionTable snapshot_stats()
{
    llmsaea::ActionTable t{};
    const double scores[8] = {7.5, 3.25, 0.0, 5.0, 1.0, 0.0, 2.5, 9.0};
    const std::size_t counts[8] = {12, 4, 0, 8, 2, 0, 6, 9};
    std::size_t total = 0;
    for (std::size_t c : counts)
        total += c;
    for (std::size_t i = 0; i < 8; ++i) {
        t[i].score = scores[i];
        t[i].count = counts[i];
        t[i].frequency = static_cast<double>(counts[i]) / static_cast<double>(total + 1);
    }
    return t;
}

} // namespace test_support
