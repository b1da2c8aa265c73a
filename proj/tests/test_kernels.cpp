#include <catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mfh/core.hpp"
#include "mfh/error.hpp"
#include "mfh/kernels.hpp"

using namespace mfh;
using Catch::Approx;

namespace {

// Cov(X_d(1, h1), X_d(1, h2)) over the whole half-line. In time form the
// spatial integral is a Beta function of |s - s'|, so the double time
// integral is elementary.
double cross_cov_oracle(int d, double h1, double h2) {
  const double a1 = kernel_exponent(d, h1), a2 = kernel_exponent(d, h2);
  const double b1 = boost::math::beta(a1 + 1.0, -a1 - a2 - 1.0);
  const double b2 = boost::math::beta(a2 + 1.0, -a1 - a2 - 1.0);
  const double g = h1 + h2 - 2.0;
  return boost::math::factorial<double>(d) * (std::pow(b1, d) + std::pow(b2, d)) / ((g + 1.0) * (g + 2.0));
}

// Mandelbrot-Van Ness normalisation of fBm for the unnormalised kernel.
double fbm_constant(double h) {
  return std::pow(std::tgamma(h + 0.5), 2) / (std::tgamma(2 * h + 1) * std::sin(kPi * h)) / std::pow(h - 0.5, 2);
}

}  // namespace

TEST_CASE("kernel_eval closed forms") {
  const double x1[] = {0.5};
  CHECK(kernel_eval(1, 0.75, 1.0, x1) == Approx(std::pow(0.5, -0.75)).epsilon(1e-15));
  CHECK(kernel_eval(1, 0.75, 1.0, x1) == Approx(1.681792).epsilon(1e-6));
  const double x2[] = {1.0, 1.0};
  CHECK(kernel_eval(2, 0.8, 2.0, x2) == 1.0);
  const double x3[] = {2.5, 0.0, -1.0};
  CHECK(kernel_eval(3, 0.7, 2.0, x3) == 0.0);
  const double xs[] = {1.0, 0.2};
  CHECK_THROWS_AS(kernel_eval(2, 0.7, 1.0, xs), SingularEvaluation);
}

TEST_CASE("integrated kernel: antiderivative and edge cases") {
  const double x0[] = {0.0};
  CHECK(integrated_kernel(1, 0.75, 1.0, x0) == 4.0);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double q = ts.integrate([](double s) { return std::pow(s, -0.75); }, 0.0, 1.0);
  CHECK(std::abs(q - 4.0) / 4.0 < 1e-6);

  const double xn[] = {-0.7};
  CHECK(integrated_kernel(1, 0.75, 0.0, xn) == 0.0);
  const double xt[] = {1.2, 3.0};
  CHECK(integrated_kernel(2, 0.75, 1.0, xt) == 0.0);
  const double tie[] = {0.3, 0.3};
  CHECK(std::isinf(integrated_kernel(2, 0.75, 1.0, tie)));
}

TEST_CASE("integrated kernel d = 2 and 3 against adaptive quadrature") {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (double h : {0.6, 0.75, 0.9}) {
    const double a2 = kernel_exponent(2, h), a3 = kernel_exponent(3, h);
    // the complement argument keeps s - x_max accurate at the singular end
    const double ref2 = ts.integrate(
        [&](double s, double sc) {
          const double gap = sc < 0 ? -sc : s - 0.2;
          return std::pow(gap, a2) * std::pow(s + 0.4, a2);
        },
        0.2, 1.0);
    const double ref3 = ts.integrate(
        [&](double s, double sc) {
          const double gap = sc < 0 ? -sc : s - 0.3;
          return std::pow(gap, a3) * std::pow(gap + 0.1, a3) * std::pow(s + 0.4, a3);
        },
        0.3, 1.0);
    const double x2[] = {-0.4, 0.2};
    const double x3[] = {-0.4, 0.2, 0.3};
    CHECK(integrated_kernel(2, h, 1.0, x2) == Approx(ref2).epsilon(1e-8));
    CHECK(integrated_kernel(3, h, 1.0, x3) == Approx(ref3).epsilon(1e-8));
  }
}

TEST_CASE("variance at t = 1 matches the Beta-function closed form") {
  for (int d = 1; d <= 3; ++d)
    for (double h : {0.6, 0.75, 0.9}) {
      const double q = covariance_quadrature(d, 1.0, h, 1.0, h);
      CHECK(q == Approx(cross_cov_oracle(d, h, h)).epsilon(1e-6));
    }
  for (double h : {0.55, 0.7, 0.95}) CHECK(covariance_quadrature(1, 1.0, h, 1.0, h) == Approx(fbm_constant(h)).epsilon(1e-6));
}

TEST_CASE("cross covariance in h matches the closed form") {
  for (int d = 1; d <= 3; ++d) {
    CHECK(covariance_quadrature(d, 1.0, 0.65, 1.0, 0.85) == Approx(cross_cov_oracle(d, 0.65, 0.85)).epsilon(1e-6));
    CHECK(covariance_quadrature(d, 1.0, 0.7, 1.0, 0.71) == Approx(cross_cov_oracle(d, 0.7, 0.71)).epsilon(1e-6));
  }
}

TEST_CASE("covariance vanishes at time zero") {
  CHECK(covariance_quadrature(2, 0.0, 0.75, 1.0, 0.75) == 0.0);
  CHECK(covariance_quadrature(1, 0.7, 0.75, 0.0, 0.6) == 0.0);
}

TEST_CASE("d = 1 covariance is the fBm covariance") {
  for (double h : {0.6, 0.75, 0.9}) {
    const double c = covariance_quadrature(1, 1.0, h, 1.0, h);
    for (auto [t, u] : {std::pair{0.3, 0.8}, std::pair{1.0, 0.25}, std::pair{0.6, 0.6}}) {
      const double ref = 0.5 * c * (std::pow(t, 2 * h) + std::pow(u, 2 * h) - std::pow(std::abs(t - u), 2 * h));
      CHECK(std::abs(covariance_quadrature(1, t, h, u, h) - ref) <= 1e-3 * std::abs(ref));
    }
  }
  const double r = covariance_quadrature(1, 2.0, 0.75, 2.0, 0.75) / covariance_quadrature(1, 1.0, 0.75, 1.0, 0.75);
  CHECK(r == Approx(std::pow(2.0, 1.5)).epsilon(1e-6));
}

TEST_CASE("increment norms have stationary self-similar increments") {
  CHECK(l2_increment_norm(2, 0.4, 0.7, 0.4, 0.7) == 0.0);
  for (int d = 1; d <= 3; ++d)
    for (double h : {0.6, 0.8}) {
      const double c = covariance_quadrature(d, 1.0, h, 1.0, h);
      for (auto [t, u] : {std::pair{0.5, 0.51}, std::pair{0.2, 0.9}, std::pair{0.75, 0.5}}) {
        const double ref = std::sqrt(c) * std::pow(std::abs(t - u), h);
        CHECK(std::abs(l2_increment_norm(d, t, h, u, h) - ref) <= 1e-3 * ref);
      }
    }
}

TEST_CASE("increment norm in h agrees with the closed form and is Lipschitz") {
  for (int d = 1; d <= 2; ++d) {
    const double v1 = cross_cov_oracle(d, 0.7, 0.7), v2 = cross_cov_oracle(d, 0.8, 0.8), c = cross_cov_oracle(d, 0.7, 0.8);
    CHECK(l2_increment_norm(d, 1.0, 0.7, 1.0, 0.8) == Approx(std::sqrt(v1 + v2 - 2 * c)).epsilon(1e-6));
  }
  // c2 from a sweep over pairs h1 < h2 in [0.68, 0.72], then the bound at Δh = 0.01
  std::vector<double> dh, v;
  const int n = 21;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k) {
      const double a = 0.68 + 0.04 * i / (n - 1), b = 0.68 + 0.04 * k / (n - 1);
      dh.push_back(b - a);
      v.push_back(l2_increment_norm(1, 1.0, a, 1.0, b));
    }
  double sxy = 0, sxx = 0, my = 0;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    sxy += dh[i] * v[i];
    sxx += dh[i] * dh[i];
    my += v[i] / dh.size();
  }
  const double c2 = sxy / sxx;
  double res = 0, tot = 0;
  for (std::size_t i = 0; i < dh.size(); ++i) {
    res += std::pow(v[i] - c2 * dh[i], 2);
    tot += std::pow(v[i] - my, 2);
  }
  CHECK(1 - res / tot >= 0.99);
  CHECK(l2_increment_norm(1, 1.0, 0.7, 1.0, 0.71) <= c2 * 0.01);
}

TEST_CASE("midpoint scheme agrees with the substitution scheme on a box") {
  QuadratureGrid g;
  g.x_min = -8.0;
  const double sub = covariance_quadrature(1, 1.0, 0.75, 1.0, 0.75, g);
  const double mid = detail::covariance_midpoint(1, 1.0, 0.75, 1.0, 0.75, -8.0, 400);
  CHECK(mid == Approx(sub).epsilon(2e-2));
}

TEST_CASE("k_factor and beta_tail against adaptive quadrature") {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double s = 1.0, sp = 0.7, as = -0.6, bs = -0.7;
  const double ref = ts.integrate(
      [&](double x, double xc) {
        const double gap = xc > 0 ? xc : sp - x;
        return std::pow(gap + (s - sp), as) * std::pow(gap, bs);
      },
      -3.0, sp);
  CHECK(detail::k_factor(s, sp, s - sp, as, bs, -3.0, sp) == Approx(ref).epsilon(1e-9));
  const double bt = ts.integrate([](double w) { return std::pow(w, -0.4) * std::pow(1 + w, -1.3); }, 0.5, 20.0);
  CHECK(detail::beta_tail(-0.4, -1.3, 0.5, 20.0) == Approx(bt).epsilon(1e-9));
}

TEST_CASE("decomposition norms") {
  const auto H = constant_hurst(0.75);
  const auto n1 = decomposition_norms(2, 6, 10, 1.0, H);
  CHECK(n1.hat == 0.0);
  // the localised and far parts split the increment orthogonally
  const double full = l2_increment_norm(2, 10.0 / 64, 0.75, 11.0 / 64, 0.75);
  CHECK(n1.tilde * n1.tilde + n1.check * n1.check == Approx(full * full).epsilon(1e-5));
  const auto n4 = decomposition_norms(2, 6, 10, 4.0, H);
  const auto n16 = decomposition_norms(2, 6, 10, 16.0, H);
  CHECK(n4.check < n1.check);
  CHECK(n16.check < n4.check);
  const auto S = make_hurst(HurstKind::Sinusoidal, {0.75, 0.15, 2 * kPi});
  CHECK(decomposition_norms(2, 6, 10, 1.0, S).hat > 0.0);
}
