#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mfh/error.hpp"
#include "mfh/kernels.hpp"
#include "mfh/rng.hpp"
#include "mfh/spectral.hpp"

using namespace mfh;
using Catch::Approx;

namespace {

SpectralModel diagonal_model(std::vector<double> lambda) {
  SpectralModel m;
  m.grid = SpectralGrid::uniform(0.0, 1.0, static_cast<int>(lambda.size()));
  m.eigenvalues = std::move(lambda);
  m.eigenvectors.assign(m.eigenvalues.size() * m.eigenvalues.size(), 0.0);
  for (double l : m.eigenvalues) m.frobenius_sq += l * l;
  return m;
}

// E[(chi^2_k)^{-r}] by integrating the density.
double chi2_negative_moment(int k, double r) {
  const double lc = -(k / 2.0) * std::log(2.0) - std::lgamma(k / 2.0);
  auto f = [&](double x) { return std::exp(lc + (k / 2.0 - 1.0 - r) * std::log(x) - x / 2.0); };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(f, 0.0, 1.0) + es.integrate(f, 1.0, std::numeric_limits<double>::infinity());
}

std::pair<double, double> mean_se(const std::vector<double>& v) {
  double m = 0, m2 = 0;
  for (double x : v) m += x;
  m /= v.size();
  for (double x : v) m2 += (x - m) * (x - m);
  return {m, std::sqrt(m2 / (v.size() - 1.0) / v.size())};
}

const SpectralModel& rosenblatt() {
  static const SpectralModel m = increment_model(1.0, 0.75, 0.0, 0.75, 256);
  return m;
}

}  // namespace

TEST_CASE("rank-one kernel has a single unit eigenvalue") {
  const auto grid = SpectralGrid::uniform(0.0, 1.0, 64);
  double norm = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) norm += grid.weights[i] * std::pow(std::sin(3 * grid.nodes[i]) + 0.2, 2);
  auto e = [&](double x) { return (std::sin(3 * x) + 0.2) / std::sqrt(norm); };
  const auto m = spectral_decompose([&](double x, double y) { return e(x) * e(y); }, grid, "rank-one");
  CHECK(m.eigenvalues[0] == Approx(1.0).epsilon(1e-12));
  for (std::size_t j = 1; j < m.size(); ++j) CHECK(std::abs(m.eigenvalues[j]) < 1e-12);
  CHECK(m.numerical_rank() == 1);
  // eigenvector is e up to sign
  const double sgn = m.eigenvector(0, 10) > 0 ? 1.0 : -1.0;
  CHECK(sgn * m.eigenvector(0, 10) * (e(grid.nodes[10]) > 0 ? 1 : -1) == Approx(std::abs(e(grid.nodes[10]))).epsilon(1e-10));
}

TEST_CASE("asymmetric kernels are rejected") {
  const auto grid = SpectralGrid::uniform(0.0, 1.0, 8);
  CHECK_THROWS_AS(spectral_decompose([](double x, double y) { return x * y * y; }, grid), ValidationError);
}

TEST_CASE("Frobenius identity for the Rosenblatt increment kernel") {
  const auto& m = rosenblatt();
  // independent double sum of f^2 over the cell-average matrix
  const auto F = increment_kernel_matrix(1.0, 0.75, 0.0, 0.75, m.grid);
  const std::size_t n = m.grid.size();
  double direct = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) direct += F[i * n + j] * F[i * n + j] * m.grid.weights[i] * m.grid.weights[j];
  CHECK(m.sum_sq() == Approx(direct).epsilon(1e-10));
  CHECK(m.frobenius_sq == Approx(direct).epsilon(1e-12));
  // the discretisation captures most of the continuum norm Var/2
  const double cont = 0.5 * covariance_quadrature(2, 1.0, 0.75, 1.0, 0.75);
  CHECK(m.sum_sq() / cont > 0.98);
  CHECK(m.sum_sq() / cont <= 1.0 + 1e-9);
  CHECK(std::abs(m.eigenvalues[2]) > 1e-6 * std::abs(m.eigenvalues[0]));
  for (std::size_t j = 1; j < m.size(); ++j) CHECK(std::abs(m.eigenvalues[j]) <= std::abs(m.eigenvalues[j - 1]));
}

TEST_CASE("spectrum is stable under refinement") {
  CHECK(spectrum_resolution_change(1.0, 0.75, 0.0, 0.75, 128) < 0.02);
}

TEST_CASE("chi-square sampling") {
  const auto zero = diagonal_model({0.0, 0.0, 0.0});
  for (double v : sample_chaos2(zero, 100, 1)) CHECK(v == 0.0);
  for (double v : malliavin_norm_samples(zero, 100, 1)) CHECK(v == 0.0);

  const auto one = diagonal_model({1.0});
  const auto s = sample_chaos2(one, 20000, 2);
  const auto g = malliavin_norm_samples(one, 20000, 2);
  double m3 = 0, g2 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i] >= -1.0);
    m3 += s[i] * s[i] * s[i];
    CHECK(g[i] * g[i] / 4.0 - 1.0 == Approx(s[i]).margin(1e-12));  // G = 2|Z| paired with Z^2 - 1
    g2 += g[i] * g[i];
  }
  CHECK(m3 > 0.0);
  CHECK(g2 / g.size() == Approx(4.0).epsilon(0.05));
}

TEST_CASE("isometry and Malliavin norm moments for the Rosenblatt increment") {
  const auto& m = rosenblatt();
  const std::size_t n = 100000;
  const auto s = sample_chaos2(m, n, 7);
  const auto g = malliavin_norm_samples(m, n, 7);
  std::vector<double> sq(n), g2(n);
  for (std::size_t i = 0; i < n; ++i) {
    sq[i] = s[i] * s[i];
    g2[i] = g[i] * g[i];
  }
  const auto [v, vse] = mean_se(sq);
  CHECK(std::abs(v - 2.0 * m.sum_sq()) <= 3.0 * vse);
  const auto [mg, gse] = mean_se(g2);
  CHECK(std::abs(mg - 4.0 * m.sum_sq()) <= 3.0 * gse);
}

TEST_CASE("negative moments of the Malliavin norm") {
  const double r = 1.25;
  CHECK_THROWS_AS(negative_moment_estimate(diagonal_model({1.0, 0.0, 0.0}), std::vector<double>{1.0, 2.0}, r),
                  InsufficientRank);

  // three equal eigenvalues: G = 2 (chi^2_3)^{1/2}
  const double oracle3 = std::pow(2.0, -2 * r) * chi2_negative_moment(3, r);
  CHECK(oracle3 == Approx(std::pow(2.0, -3 * r) * std::tgamma(1.5 - r) / std::tgamma(1.5)).epsilon(1e-8));
  const auto m3 = diagonal_model({1.0, 1.0, 1.0});
  const auto g3 = malliavin_norm_samples(m3, 1000000, 3);
  const auto e3 = negative_moment_estimate(m3, g3, r);
  CHECK(std::isfinite(e3.estimate));
  CHECK(e3.estimate == Approx(oracle3).epsilon(0.1));

  // with twelve terms the estimator and its standard error both have finite
  // variance, so the error shrinks like 1/sqrt(n)
  const double oracle12 = std::pow(2.0, -2 * r) * chi2_negative_moment(12, r);
  const auto m12 = diagonal_model(std::vector<double>(12, 1.0));
  std::vector<double> se;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    const auto g = malliavin_norm_samples(m12, n, 4);
    const auto e = negative_moment_estimate(m12, g, r);
    CHECK(std::abs(e.estimate - oracle12) <= 4.0 * e.stderr_);
    se.push_back(e.stderr_);
  }
  CHECK(se[0] / se[1] == Approx(std::sqrt(10.0)).epsilon(0.35));
  CHECK(se[1] / se[2] == Approx(std::sqrt(10.0)).epsilon(0.35));

  // G is homogeneous of degree one in λ
  const auto m12x2 = diagonal_model(std::vector<double>(12, 2.0));
  const auto a = negative_moment_estimate(m12, malliavin_norm_samples(m12, 5000, 9), r);
  const auto b = negative_moment_estimate(m12x2, malliavin_norm_samples(m12x2, 5000, 9), r);
  CHECK(b.estimate == Approx(a.estimate / std::pow(2.0, 2.5)).epsilon(1e-12));
}

TEST_CASE("small-ball curves") {
  // |U| for U uniform on [-1, 1] has P(|U| <= x) = x
  std::vector<double> u(200000);
  const NormalStream ns(5, Stream::Misc, 0);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 2.0 * ns.uniform(i) - 1.0;
  const auto c = small_ball_curve(u, log_grid(1e-3, 1.0, 16));
  REQUIRE(c.fit);
  CHECK(c.fit->slope == Approx(1.0).margin(0.03));
  const auto beyond = small_ball_curve(u, std::vector<double>{2.0});
  CHECK(beyond.points[0].p == 1.0);
  CHECK(beyond.points[0].lo <= 1.0);
  CHECK_THROWS_AS(small_ball_curve(u, std::vector<double>{0.5, 0.1}), ValidationError);
  const auto few = small_ball_curve(std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{1.0});
  CHECK(few.undersampled);
}

TEST_CASE("Rosenblatt small-ball exponent is close to one") {
  const auto& m = rosenblatt();
  const auto c = small_ball_curve_2(m, log_grid(0.01, 3.0, 24), 200000, 11);
  REQUIRE(c.fit);
  CHECK(c.fit->slope == Approx(1.0).margin(0.15));
}

TEST_CASE("spectral model files round trip and are checksummed") {
  const auto m = increment_model(1.0, 0.7, 0.5, 0.8, 32);
  const auto dir = std::filesystem::temp_directory_path() / "mfh_test_spectral";
  std::filesystem::create_directories(dir);
  save_model(m, dir / "m");
  const auto back = load_model(dir / "m");
  CHECK(back.eigenvalues == m.eigenvalues);
  CHECK(back.eigenvectors == m.eigenvectors);
  CHECK(back.grid.edges == m.grid.edges);
  CHECK(back.kernel_id == m.kernel_id);
  {
    std::fstream f(dir / "m.vectors.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(17);
    f.put('\x7f');
  }
  CHECK_THROWS(load_model(dir / "m"));
  std::filesystem::remove_all(dir);
}
