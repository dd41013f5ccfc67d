/**
 * @file stats.hpp
 * @brief Rank statistics and run summaries.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace prenas {

/// 1-based ranks; tied values share the mean of their positional ranks.
inline std::vector<double> average_ranks(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("average_ranks: empty input");
    for (double x : xs)
        if (!std::isfinite(x)) throw std::invalid_argument("average_ranks: non-finite input");

    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });

    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Pearson correlation of average ranks. std::nullopt when either side has
/// no rank variance.
inline std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman: length mismatch");
    if (xs.size() < 2) return std::nullopt;
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double mean = (static_cast<double>(xs.size()) + 1.0) / 2.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    return spearman(std::span<const double>(xs), std::span<const double>(ys));
}

/// round-half-up(q * (n - 1)), clamped to [0, n - 1].
inline std::size_t quantile_index(std::size_t n, double q) {
    if (n == 0) throw std::invalid_argument("quantile_index: n must be >= 1");
    const double pos = std::floor(q * static_cast<double>(n - 1) + 0.5);
    if (!(pos > 0.0)) return 0;
    return std::min(static_cast<std::size_t>(pos), n - 1);
}

struct RunSummary {
    double mean = 0;
    double std = 0;  // sample standard deviation
    double min = 0;
    double max = 0;
    std::size_t n = 0;
};

inline RunSummary summarize_runs(std::span<const double> finals) {
    if (finals.empty()) throw std::invalid_argument("summarize_runs: empty input");
    RunSummary s;
    s.n = finals.size();
    s.mean = std::accumulate(finals.begin(), finals.end(), 0.0) / static_cast<double>(s.n);
    double ss = 0;
    for (double x : finals) ss += (x - s.mean) * (x - s.mean);
    s.std = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

}  // namespace prenas
