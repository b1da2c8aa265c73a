#include <catch_amalgamated.hpp>

#include <cmath>

#include "mfh/chaos.hpp"
#include "mfh/error.hpp"
#include "mfh/kernels.hpp"
#include "mfh/parallel.hpp"

using namespace mfh;
using Catch::Approx;

namespace {

// Tiny driver over [-1, 1] without far field, where the tuple sum can be
// enumerated directly.
DiscretizationParams tiny() {
  DiscretizationParams d;
  d.n_grid = 8;
  d.x_min = -1.0;
  d.far_extent = 1.0;
  return d;
}

double midpoint(const BrownianDriver& drv, std::size_t j) { return drv.x_min + (j + 0.5) * drv.dx; }

double brute_force(int d, double h, double t, const BrownianDriver& drv) {
  const std::size_t n = drv.increments.size();
  double acc = 0.0;
  if (d == 1) {
    for (std::size_t a = 0; a < n; ++a) {
      const double x[] = {midpoint(drv, a)};
      acc += integrated_kernel(1, h, t, x) * drv.increments[a];
    }
  } else if (d == 2) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        const double x[] = {midpoint(drv, a), midpoint(drv, b)};
        acc += 2.0 * integrated_kernel(2, h, t, x) * drv.increments[a] * drv.increments[b];
      }
  } else {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        for (std::size_t c = b + 1; c < n; ++c) {
          const double x[] = {midpoint(drv, a), midpoint(drv, b), midpoint(drv, c)};
          acc += 6.0 * integrated_kernel(3, h, t, x) * drv.increments[a] * drv.increments[b] * drv.increments[c];
        }
  }
  return acc;
}

}  // namespace

TEST_CASE("simulated field equals the brute-force tuple sum") {
  const auto disc = tiny();
  const std::vector<double> hs{0.6, 0.75, 0.9};
  for (int d = 1; d <= 3; ++d) {
    FieldSimulator sim(d, hs, disc, 1.0);
    for (std::uint64_t rep : {0u, 5u}) {
      const auto drv = make_driver(disc, rep);
      const auto v = sim.run(drv);
      for (std::size_t r : {3u, 8u})
        for (std::size_t k = 0; k < hs.size(); ++k) {
          const double ref = brute_force(d, hs[k], r / 8.0, drv);
          const double tol = d == 1 ? 1e-13 : 1e-5;
          CHECK(std::abs(v[r * hs.size() + k] - ref) <= tol * std::max(1.0, std::abs(ref)));
        }
    }
  }
}

TEST_CASE("second moment matches exhaustive enumeration of the discrete form") {
  // E[X^2] = sum_{a<b} (2 Gbar_ab)^2 dx^2 for independent increments of variance dx
  const auto disc = tiny();
  const double h = 0.75;
  const auto drv0 = make_driver(disc, 0);
  const std::size_t n = drv0.increments.size();
  double exact = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double x[] = {midpoint(drv0, a), midpoint(drv0, b)};
      exact += std::pow(2.0 * integrated_kernel(2, h, 1.0, x), 2) * drv0.dx * drv0.dx;
    }
  const std::vector<double> hs{h};
  FieldSimulator sim(2, hs, disc, 1.0);
  const std::size_t reps = 100000;
  std::vector<double> sq(reps);
  parallel_for(reps, [&](std::size_t r) {
    const double v = sim.run(r)[sim.steps()];
    sq[r] = v * v;
  });
  double m = 0, m2 = 0;
  for (double s : sq) {
    m += s;
    m2 += s * s;
  }
  m /= reps;
  const double se = std::sqrt((m2 / reps - m * m) / reps);
  CHECK(std::abs(m - exact) <= 3.0 * se);
}

TEST_CASE("field vanishes at t = 0 and is deterministic") {
  DiscretizationParams disc;
  disc.n_grid = 64;
  const std::vector<double> t{0.0, 0.5, 1.0}, hs{0.6, 0.9};
  for (int d = 1; d <= 3; ++d) {
    const auto f = simulate_field(d, t, hs, disc, 2);
    CHECK(f.at(0, 0) == 0.0);
    CHECK(f.at(0, 1) == 0.0);
    const auto g = simulate_field(d, t, hs, disc, 2);
    CHECK(f.values == g.values);
  }
}

TEST_CASE("replicas do not depend on the thread count") {
  DiscretizationParams disc;
  disc.n_grid = 64;
  disc.n_paths = 6;
  const std::vector<double> t{0.25, 1.0}, hs{0.7};
  set_thread_count(1);
  const auto a = simulate_field_replicas(2, t, hs, disc);
  set_thread_count(3);
  const auto b = simulate_field_replicas(2, t, hs, disc);
  set_thread_count(1);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
  CHECK(a[0].values != a[1].values);
}

TEST_CASE("sign flip is exact") {
  DiscretizationParams disc;
  disc.n_grid = 64;
  const std::vector<double> t{0.0, 0.25, 0.5, 1.0}, hs{0.6, 0.75, 0.9};
  for (int d = 1; d <= 3; ++d) {
    const auto f = simulate_field(d, t, hs, disc, 11);
    const auto g = sign_flip_transform(f);
    bool same = true;
    for (std::size_t i = 0; i < f.values.size(); ++i) same = same && g.values[i] == (d % 2 ? -f.values[i] : f.values[i]);
    CHECK(same);
  }
}

TEST_CASE("constant-H path is the field column at that h") {
  DiscretizationParams disc;
  disc.n_grid = 128;
  const auto t = dyadic_grid(5);
  const std::vector<double> hs{0.7};
  for (int d = 1; d <= 2; ++d) {
    const auto p = simulate_mfh_path(d, constant_hurst(0.7), t, disc, 4);
    const auto f = simulate_field(d, t, hs, disc, 4);
    CHECK(p.values == f.column(0));
    CHECK(p.values[0] == 0.0);
  }
}

TEST_CASE("varying-H path matches direct evaluation at each H(t)") {
  DiscretizationParams disc;
  disc.n_grid = 256;
  const auto t = dyadic_grid(5);
  const auto H = make_hurst(HurstKind::Sinusoidal, {0.75, 0.15, 2 * kPi});
  for (int d = 1; d <= 2; ++d) {
    const auto p = simulate_mfh_path(d, H, t, disc, 1);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 1; i < t.size(); i += 5) {
      const std::vector<double> hh{H(t[i])};
      FieldSimulator sim(d, hh, disc, 1.0);
      const auto v = sim.run(1);
      const double direct = v[static_cast<std::size_t>(t[i] * disc.n_grid)];
      worst = std::max(worst, std::abs(p.values[i] - direct));
      scale = std::max(scale, std::abs(direct));
    }
    CHECK(worst <= 1e-8 * scale);
  }
}

TEST_CASE("times off the driver lattice are rejected") {
  DiscretizationParams disc;
  disc.n_grid = 64;
  const std::vector<double> t{0.0, 0.3}, hs{0.7};
  CHECK_THROWS_AS(simulate_field(1, t, hs, disc), GridMismatch);
}

TEST_CASE("budget and desk caps") {
  DiscretizationParams disc;
  disc.n_grid = 1024;
  const std::vector<double> t{1.0}, hs{0.7};
  CHECK_THROWS_AS(simulate_field(3, t, hs, disc), BudgetExceeded);
  disc.n_grid = 64;
  disc.work_budget = 10.0;
  CHECK_THROWS_AS(simulate_field(1, t, hs, disc), BudgetExceeded);
}

TEST_CASE("exact fBm sampler") {
  const std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  CHECK(exact_fbm_path(0.7, std::vector<double>{0.0}, 1).values[0] == 0.0);
  const FbmOracle o(0.7, t);
  CHECK(o.c_h() == Approx(covariance_quadrature(1, 1.0, 0.7, 1.0, 0.7)).epsilon(1e-12));
  CHECK(o.covariance(0.3, 0.8) ==
        Approx(0.5 * o.c_h() * (std::pow(0.3, 1.4) + std::pow(0.8, 1.4) - std::pow(0.5, 1.4))).epsilon(1e-14));
  const std::size_t n = 20000;
  double s2 = 0, s4 = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = o.sample(3, r).values.back();
    s2 += v * v;
    s4 += v * v * v * v;
  }
  const double var = s2 / n, se = std::sqrt((s4 / n - var * var) / n);
  CHECK(std::abs(var - o.c_h()) <= 3 * se);

  // Brownian case: disjoint increments are uncorrelated
  const FbmOracle bm(0.5, t);
  CHECK(bm.c_h() == 1.0);
  double sxy = 0, sxx = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto p = bm.sample(5, r);
    const double a = p.values[2] - p.values[1], b = p.values[4] - p.values[3];
    sxy += a * b;
    sxx += a * a * b * b;
  }
  CHECK(std::abs(sxy / n) <= 3 * std::sqrt(sxx / n / n));
}
