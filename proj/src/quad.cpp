#include "mfh/quad.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "mfh/error.hpp"

namespace mfh {

namespace {

GaussRule build_rule(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1 || n > 512) throw RangeError("gauss_legendre: n out of range");
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

std::vector<double> chebyshev_lobatto(int n, double a, double b) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = 0.5 * (a + b);
    return out;
  }
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) out[i] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(pi * i / (n - 1));
  return out;
}

std::vector<double> chebyshev_weights(int n, double a, double b, double x) {
  std::vector<double> w(n, 0.0);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  const auto nodes = chebyshev_lobatto(n, a, b);
  double denom = 0.0;
  for (int i = 0; i < n; ++i) {
    if (x == nodes[i]) {
      std::fill(w.begin(), w.end(), 0.0);
      w[i] = 1.0;
      return w;
    }
    const double c = ((i == 0 || i == n - 1) ? 0.5 : 1.0) * ((i % 2) ? -1.0 : 1.0);
    w[i] = c / (x - nodes[i]);
    denom += w[i];
  }
  for (auto& v : w) v /= denom;
  return w;
}

double chebyshev_interpolate(const std::vector<double>& values, double a, double b, double x) {
  const auto w = chebyshev_weights(static_cast<int>(values.size()), a, b, x);
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += w[i] * values[i];
  return s;
}

}  // namespace mfh
