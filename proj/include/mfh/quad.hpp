#pragma once

#include <vector>

namespace mfh {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Cached n-point rule; thread-safe.
const GaussRule& gauss_legendre(int n);

/// Chebyshev-Lobatto nodes cos(pi i / (n-1)) mapped to [a, b], i = 0..n-1.
std::vector<double> chebyshev_lobatto(int n, double a, double b);

/// Barycentric interpolation through Chebyshev-Lobatto nodes on [a, b].
/// `values[i]` belongs to chebyshev_lobatto(n, a, b)[i].
double chebyshev_interpolate(const std::vector<double>& values, double a, double b, double x);

/// Barycentric weights for evaluating at many points: returns the n weights
/// w_i such that f(x) = sum_i w_i values[i].
std::vector<double> chebyshev_weights(int n, double a, double b, double x);

}  // namespace mfh
