#pragma once

#include <vector>

namespace desgrada {

struct WeightedPoint {
    double value = 0.0;
    double weight = 0.0;
};

// Exact first Wasserstein distance between two finite empirical distributions
// on the real line, via sorted-quantile integration of |F_a^{-1} - F_b^{-1}|.
// Weights must be non-negative with positive total; they are normalized
// internally. Symmetric, and zero iff the (normalized) distributions match.
double wasserstein_1d(const std::vector<WeightedPoint>& a, const std::vector<WeightedPoint>& b);

// Convenience overload for uniformly weighted samples.
double wasserstein_1d(const std::vector<double>& a, const std::vector<double>& b);

} // namespace desgrada
