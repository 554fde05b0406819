#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lem/matrix.hpp"

namespace lem {

struct PowerLawFit {
    double exponent = 0.0;   // decay exponent gamma for density ~ a^(-gamma)
    double slope = 0.0;      // raw log-log slope (= -exponent)
    std::size_t bins_used = 0;
};

// Fits a power law to the distribution of positive sample amplitudes.
// Samples are binned into `n_bins` logarithmic bins spanning the observed
// min/max; empty bins are dropped. The fit regresses log(count / bin width)
// against log(bin center), i.e. frequency density per unit amplitude, and
// returns the negated slope as the decay exponent.
inline PowerLawFit fit_power_law(const std::vector<double>& samples, std::size_t n_bins = 20) {
    require(samples.size() >= 2, "fit_power_law: need at least 2 samples");
    double lo = samples[0], hi = samples[0];
    for (double s : samples) {
        require(s > 0.0 && std::isfinite(s), "fit_power_law: samples must be positive and finite");
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (!(hi > lo)) throw std::runtime_error("fit_power_law: degenerate fit (all samples identical)");
    require(n_bins >= 2, "fit_power_law: need at least 2 bins");

    const double log_lo = std::log(lo);
    const double log_hi = std::log(hi);
    const double bin_w = (log_hi - log_lo) / static_cast<double>(n_bins);

    std::vector<std::size_t> counts(n_bins, 0);
    for (double s : samples) {
        auto b = static_cast<std::size_t>((std::log(s) - log_lo) / bin_w);
        if (b >= n_bins) b = n_bins - 1;  // s == hi lands here
        counts[b]++;
    }

    // least squares on (log center, log density) over nonempty bins
    std::vector<double> xs, ys;
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (counts[b] == 0) continue;
        const double edge_lo = std::exp(log_lo + bin_w * static_cast<double>(b));
        const double edge_hi = std::exp(log_lo + bin_w * static_cast<double>(b + 1));
        const double center = std::sqrt(edge_lo * edge_hi);
        const double density = static_cast<double>(counts[b]) / (edge_hi - edge_lo);
        xs.push_back(std::log(center));
        ys.push_back(std::log(density));
    }
    if (xs.size() < 2) throw std::runtime_error("fit_power_law: degenerate fit (<2 nonempty bins)");

    PowerLawFit fit;
    fit.bins_used = xs.size();
    fit.slope = [&] {
        const auto n = static_cast<double>(xs.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sx += xs[i];
            sy += ys[i];
            sxx += xs[i] * xs[i];
            sxy += xs[i] * ys[i];
        }
        const double denom = n * sxx - sx * sx;
        if (denom == 0.0) throw std::runtime_error("fit_power_law: degenerate fit");
        return (n * sxy - sx * sy) / denom;
    }();
    fit.exponent = -fit.slope;
    return fit;
}

// Generic least-squares slope of y against x; used by the gradient-scaling
// study for its log-log regression.
inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    require(xs.size() == ys.size() && xs.size() >= 2, "least_squares_slope: need >= 2 points");
    const auto n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    require(denom != 0.0, "least_squares_slope: degenerate x values");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace lem
