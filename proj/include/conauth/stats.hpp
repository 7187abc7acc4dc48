#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace conauth {

inline double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// population standard deviation (divide by n)
inline double population_std(std::span<const double> xs) {
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

inline double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

/// percentile by linear interpolation on sorted order statistics,
/// zero-based position p/100 * (n-1)
inline double percentile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile_sorted: empty input");
    if (sorted.size() == 1) return sorted[0];
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median_sorted(std::span<const double> sorted) {
    if (sorted.empty()) throw std::invalid_argument("median_sorted: empty input");
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

/// trapezoid rule on a uniform grid of n points over [a, b]
inline double integrate_trapezoid(const std::function<double(double)>& f, double a, double b,
                                  std::size_t n) {
    if (n < 2) throw std::invalid_argument("integrate_trapezoid: need at least 2 points");
    const double dx = (b - a) / static_cast<double>(n - 1);
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i + 1 < n; ++i) s += f(a + dx * static_cast<double>(i));
    return s * dx;
}

}  // namespace conauth
