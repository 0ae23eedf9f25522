#pragma once

// Direct, unoptimized transcriptions used as reference values by the tests.

#include "coreselect/kmedoids.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

using coreselect::DistanceMatrix;

inline std::vector<double> silhouette(const DistanceMatrix& d, const std::vector<std::uint32_t>& assignment) {
    const std::size_t n = d.size();
    const std::uint32_t k = *std::max_element(assignment.begin(), assignment.end()) + 1;
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sum(k, 0.0);
        std::vector<double> count(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            sum[assignment[j]] += d(i, j);
            count[assignment[j]] += 1.0;
        }
        const auto own = assignment[i];
        if (count[own] == 0.0) continue;
        const double a = sum[own] / count[own];
        double b = std::numeric_limits<double>::infinity();
        for (std::uint32_t c = 0; c < k; ++c)
            if (c != own && count[c] > 0.0) b = std::min(b, sum[c] / count[c]);
        const double denom = std::max(a, b);
        s[i] = denom == 0.0 ? 0.0 : (b - a) / denom;
    }
    return s;
}

inline double mean(const std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

/// Smallest total deviation over every pair of medoids.
inline double best_two_medoid_cost(const DistanceMatrix& d) {
    const std::size_t n = d.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) cost += std::min(d(i, a), d(i, b));
            best = std::min(best, cost);
        }
    return best;
}

/// n!/(x_1!...x_K!) * prod p_k^x_k with explicit factorials.
inline double multinomial_pmf(const std::vector<std::size_t>& x, const std::vector<double>& p) {
    auto factorial = [](std::size_t m) {
        double f = 1.0;
        for (std::size_t i = 2; i <= m; ++i) f *= static_cast<double>(i);
        return f;
    };
    std::size_t n = 0;
    for (auto v : x) n += v;
    double result = factorial(n);
    for (std::size_t k = 0; k < x.size(); ++k) result *= std::pow(p[k], static_cast<double>(x[k])) / factorial(x[k]);
    return result;
}

}  // namespace oracle
