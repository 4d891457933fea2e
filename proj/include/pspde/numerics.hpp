#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pspde {

/// Gauss-Hermite rule for the weight exp(-x^2) on the real line.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to sqrt(pi)
};

/// n-point rule by Newton iteration on the orthonormal Hermite recurrence.
GaussHermiteRule gauss_hermite(std::size_t n);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace pspde
