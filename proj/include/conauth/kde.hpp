#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "conauth/stats.hpp"

namespace conauth {

/// One-dimensional Gaussian kernel density estimate with Silverman's
/// bandwidth h = 0.9 * min(sd, IQR/1.34) * n^(-1/5). The bandwidth is floored
/// at 1e-3 so grid integrals of very concentrated score distributions stay
/// well resolved.
class Kde1D {
public:
    static Kde1D fit(std::vector<double> samples) {
        if (samples.size() < 2) throw std::invalid_argument("Kde1D::fit: need >= 2 samples");
        Kde1D kde;
        const double sd = sample_std(samples);
        std::vector<double> sorted = samples;
        std::sort(sorted.begin(), sorted.end());
        const double iqr = percentile_sorted(sorted, 75.0) - percentile_sorted(sorted, 25.0);
        double spread = sd;
        if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
        double h = 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
        kde.bandwidth_ = std::max(h, 1e-3);
        kde.samples_ = std::move(samples);
        return kde;
    }

    double pdf(double x) const {
        const double inv_h = 1.0 / bandwidth_;
        double s = 0.0;
        for (double xi : samples_) {
            const double u = (x - xi) * inv_h;
            s += std::exp(-0.5 * u * u);
        }
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        return s * inv_sqrt_2pi * inv_h / static_cast<double>(samples_.size());
    }

    double bandwidth() const { return bandwidth_; }
    std::size_t size() const { return samples_.size(); }

private:
    std::vector<double> samples_;
    double bandwidth_ = 1e-3;
};

}  // namespace conauth
