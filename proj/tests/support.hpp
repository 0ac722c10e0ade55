#pragma once

// Small generators and statistics shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "noma/random.hpp"
#include "noma/signal_model.hpp"

namespace noma::testing {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Two-sided Kolmogorov-Smirnov statistic of `xs` against the standard normal.
inline double ks_statistic(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = normal_cdf(xs[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

// Asymptotic critical value at the 0.001 level.
inline double ks_critical_001(std::size_t n) { return 1.9495 / std::sqrt(static_cast<double>(n)); }

inline Complex random_complex(RandomStream& rng, double scale = 1.0) {
    return {scale * rng.normal(), scale * rng.normal()};
}

inline Complex unit_phasor(RandomStream& rng) { return std::polar(1.0, rng.uniform(-kPi, kPi)); }

// Samples sitting exactly on the four QPSK points scaled by h, in random order.
inline std::vector<IqSample> noiseless_qpsk(Complex h, int n, RandomStream& rng,
                                            std::vector<int>* symbols = nullptr) {
    std::vector<IqSample> out;
    for (int i = 0; i < n; ++i) {
        const int s = i < 4 ? i : rng.uniform_index(4);
        if (symbols) symbols->push_back(s);
        out.push_back(h * Qpsk::point(s));
    }
    return out;
}

}  // namespace noma::testing
