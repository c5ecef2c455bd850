#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cars::detail {

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = lo + 1 < sorted.size() ? lo + 1 : sorted.size() - 1;
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace cars::detail
