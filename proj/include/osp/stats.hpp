#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "osp/errors.hpp"

namespace osp {

// Percentile with linear interpolation at rank p*(n-1) over sorted values.
// This one convention is used for HC aggregation, medians and IQRs alike.
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw OspError(Errc::EmptyList, "percentile of empty list");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, p);
}

}  // namespace osp
