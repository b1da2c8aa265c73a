#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "mfh/analysis.hpp"
#include "mfh/chaos.hpp"
#include "mfh/error.hpp"

using namespace mfh;
using Catch::Approx;

namespace {

SamplePath make_path(const std::vector<double>& t, auto&& f) {
  SamplePath p;
  p.times = t;
  for (double x : t) p.values.push_back(f(x));
  return p;
}

// Leader by definition: sup |X(u) - X(v)| over dyadic λ' ⊆ 3λ_{j,k}, scales j..J.
double leader_oracle(const SamplePath& p, int j, std::int64_t k, int J) {
  const double lo = std::ldexp(static_cast<double>(k - 1), -j), hi = std::ldexp(static_cast<double>(k + 2), -j);
  double best = 0.0;
  for (int s = j; s <= J; ++s) {
    const double w = std::ldexp(1.0, -s);
    for (std::int64_t m = 0; (m + 1) * w <= p.times.back() + 1e-15; ++m) {
      const double a = m * w, b = a + w;
      if (a < lo - 1e-15 || b > hi + 1e-15) continue;
      const auto ia = std::lower_bound(p.times.begin(), p.times.end(), a - 1e-15) - p.times.begin();
      const auto ib = std::lower_bound(p.times.begin(), p.times.end(), b - 1e-15) - p.times.begin();
      best = std::max(best, std::abs(p.values[ib] - p.values[ia]));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("oscillation is max minus min over the window") {
  const auto p = make_path({0.0, 0.5, 1.0}, [](double t) { return t == 0.5 ? 2.0 : t; });
  CHECK(oscillation(p, 0.0, 1.0) == 2.0);
  CHECK(oscillation(p, 0.6, 1.0) == 0.0);
  CHECK_THROWS_AS(oscillation(p, 0.6, 0.9), EmptyWindow);

  const auto g = dyadic_grid(8);
  const auto q = exact_fbm_path(0.7, g, 3);
  for (auto [a, b] : {std::pair{0.1, 0.3}, std::pair{0.45, 0.9}, std::pair{0.0, 1.0}}) {
    double best = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t k = 0; k < g.size(); ++k)
        if (g[i] >= a && g[i] <= b && g[k] >= a && g[k] <= b) best = std::max(best, q.values[i] - q.values[k]);
    CHECK(oscillation(q, a, b) == best);
  }
}

TEST_CASE("leaders agree with the direct definition") {
  const auto q = exact_fbm_path(0.65, dyadic_grid(7), 8);
  const auto p = build_leaders(q, 2, 7);
  for (int j = 2; j <= 7; ++j)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(p.leaders_at(j).size()); ++k)
      CHECK(p.leaders_at(j)[k] == leader_oracle(q, j, k, 7));
}

TEST_CASE("leaders need the full dyadic lattice") {
  auto t = dyadic_grid(6);
  t.erase(t.begin() + 5);
  const auto q = make_path(t, [](double x) { return x; });
  CHECK_THROWS_AS(build_leaders(q, 1, 6), GridMismatch);
  CHECK_THROWS_AS(build_leaders(make_path(dyadic_grid(6), [](double x) { return x; }), 1, 7), GridMismatch);
}

TEST_CASE("Hölder estimates on deterministic paths") {
  const auto g = dyadic_grid(12);
  const auto line = build_leaders(make_path(g, [](double t) { return 3 * t; }), 2, 12);
  const auto pw = pointwise_holder_estimate(line, 0.37);
  CHECK(pw.slope == Approx(1.0).margin(0.01));
  CHECK(uniform_holder_estimate(line, 0.0, 1.0).slope == Approx(1.0).margin(0.01));

  // a jump has no Hölder regularity
  const auto jump = build_leaders(make_path(g, [](double t) { return t < 0.3 ? 0.0 : 1.0; }), 2, 12);
  CHECK(std::abs(uniform_holder_estimate(jump, 0.0, 1.0).slope) < 0.05);

  const auto flat = build_leaders(make_path(g, [](double) { return 0.0; }), 2, 12);
  CHECK_THROWS_AS(pointwise_holder_estimate(flat, 0.5), DegenerateEstimate);
  CHECK_THROWS_AS(uniform_holder_estimate(flat, 0.0, 1.0), DegenerateEstimate);
}

TEST_CASE("Hölder estimates track the fBm exponent") {
  // same seed, so the two paths share their driving noise
  const auto lo = build_leaders(exact_fbm_path(0.6, dyadic_grid(11), 21), 1, 11);
  const auto hi = build_leaders(exact_fbm_path(0.8, dyadic_grid(11), 21), 1, 11);
  const double ulo = uniform_holder_estimate(lo, 0.0, 1.0).slope, uhi = uniform_holder_estimate(hi, 0.0, 1.0).slope;
  CHECK(uhi - ulo == Approx(0.2).margin(0.08));
  double pw = 0.0;
  for (double t0 : {0.2, 0.4, 0.6, 0.8}) pw += pointwise_holder_estimate(hi, t0).slope / 4;
  CHECK(pw == Approx(0.8).margin(0.15));
  // the sup over positions only lowers the exponent
  CHECK(uhi <= pw + 0.02);
}

TEST_CASE("modulus curve on exact fBm") {
  const auto q = exact_fbm_path(0.7, dyadic_grid(11), 33);
  const auto c = modulus_ratio_curve(q, 0.25, 0.75, 0.7, 1, 2, 10);
  CHECK(c.size() == 9);
  CHECK(c.front().r == 0.25);
  CHECK(curve_peak_to_median(c) < 3.0);
  CHECK(curve_growth_per_3_scales(c) == Approx(1.0).margin(0.35));
  // normalising by r^{h + 0.1} scales point j by 2^{0.1 j}
  const auto over = modulus_ratio_curve(q, 0.25, 0.75, 0.8, 1, 2, 10);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(over[i].value == Approx(c[i].value * std::exp2(0.1 * c[i].j)));
  CHECK(curve_growth_per_3_scales(over) / curve_growth_per_3_scales(c) == Approx(std::exp2(0.3)));
}

TEST_CASE("LIL statistic") {
  const auto g = dyadic_grid(10);
  const auto flat = make_path(g, [](double) { return 0.0; });
  CHECK_THROWS_AS(lil_statistic(flat, 0.5, 0.7, 1, 3, 8), RangeError);
  for (const auto& pt : lil_statistic(flat, 0.5, 0.7, 1, 4, 8)) CHECK(pt.value == 0.0);
  const auto line = make_path(g, [](double t) { return t; });
  const auto c = lil_statistic(line, 0.5, 0.7, 2, 4, 8);
  for (const auto& pt : c) CHECK(pt.value == Approx(2 * pt.r / (std::pow(pt.r, 0.7) * std::log(std::log(1 / pt.r)))));
  const auto rm = running_max(c);
  CHECK(std::is_sorted(rm.begin(), rm.end()));
}

TEST_CASE("box counting") {
  const auto g = dyadic_grid(12);
  const auto line = make_path(g, [](double t) { return t; });
  std::vector<double> eps;
  for (int k = 4; k <= 10; ++k) eps.push_back(std::ldexp(1.0, -k));
  // each column of width ε meets exactly two boxes
  const auto n = box_counts(line, 0.0, 1.0, eps);
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(n[i] == Approx(2.0 / eps[i]));
  CHECK(box_counting_dimension(line, 0.0, 1.0, eps).slope == Approx(1.0).margin(0.05));
  const std::vector<double> tiny{1e-4, 1e-3, 1e-2};
  CHECK_THROWS_AS(box_counts(line, 0.0, 1.0, tiny), RangeError);

  // rougher paths have steeper box counts; coupled through the seed
  const std::vector<double> coarse(eps.begin(), eps.end() - 1);
  const double rough = box_counting_dimension(exact_fbm_path(0.6, dyadic_grid(11), 2), 0.0, 1.0, coarse).slope;
  const double smooth = box_counting_dimension(exact_fbm_path(0.8, dyadic_grid(11), 2), 0.0, 1.0, coarse).slope;
  CHECK(rough > smooth);
  CHECK(smooth > 1.0);
  CHECK(rough < 1.4 + 0.05);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> x{4, 1, 3, 2};
  const std::vector<double> q{0.0, 0.5, 1.0, 0.25};
  const auto v = quantiles(x, q);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 2.5);
  CHECK(v[2] == 4.0);
  CHECK(v[3] == 1.75);
  CHECK_THROWS_AS(quantiles({}, q), ValidationError);
}

TEST_CASE("LASS report snaps t0 and checks the window") {
  DiscretizationParams disc;
  disc.n_grid = 64;
  disc.n_paths = 40;
  const auto H = constant_hurst(0.7);
  const std::vector<double> eps{0.25, 0.125}, tg{0.5, 1.0};
  const auto r = lass_test(1, H, 0.3, eps, tg, disc);
  CHECK(r.t0 * 64 == std::round(r.t0 * 64));
  CHECK(std::abs(r.t0 - 0.3) <= 0.5 / 64);
  CHECK(r.scales.size() == 2);
  CHECK(r.h_t0 == 0.7);
  const std::vector<double> wide{0.9};
  CHECK_THROWS_AS(lass_test(1, H, 0.3, wide, tg, disc), RangeError);
}
