#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "mfh/core.hpp"
#include "mfh/error.hpp"
#include "mfh/io.hpp"
#include "mfh/parallel.hpp"
#include "mfh/quad.hpp"
#include "mfh/rng.hpp"
#include "mfh/serialize.hpp"

using namespace mfh;
using Catch::Approx;

TEST_CASE("constant hurst function") {
  const auto H = constant_hurst(0.75);
  for (double t : {0.0, 0.3, 1.0, 7.5}) CHECK(H(t) == 0.75);
  CHECK(H.h_min() == 0.75);
  CHECK(H.h_max() == 0.75);
  CHECK(H.is_constant());
}

TEST_CASE("sinusoidal hurst function") {
  const auto H = make_hurst(HurstKind::Sinusoidal, {0.75, 0.15, 2 * kPi});
  CHECK(H(0.0) == Approx(0.75).margin(1e-15));
  CHECK(H(0.25) == Approx(0.9).margin(1e-15));
  CHECK(H.h_min() == Approx(0.6).margin(1e-12));
  CHECK(H.h_max() == Approx(0.9).margin(1e-12));
}

TEST_CASE("hurst values outside (1/2, 1) are rejected") {
  CHECK_THROWS_AS(constant_hurst(0.4), RangeError);
  CHECK_THROWS_AS(constant_hurst(1.0), RangeError);
  CHECK_THROWS_AS(make_hurst(HurstKind::Sinusoidal, {0.75, 0.3, 1.0}), RangeError);
  CHECK_THROWS_AS(make_hurst(HurstKind::Sinusoidal, {0.75, 0.1}), ValidationError);
}

TEST_CASE("affine clamped and table hurst functions") {
  const auto A = make_hurst(HurstKind::AffineClamped, {0.5, 0.5, 0.6, 0.9});
  CHECK(A(0.0) == 0.6);
  CHECK(A(0.5) == Approx(0.75));
  CHECK(A(1.0) == 0.9);
  const auto T = make_hurst(HurstKind::CustomTable, {0.0, 0.6, 1.0, 0.8});
  CHECK(T(0.5) == Approx(0.7));
  CHECK(T(2.0) == 0.8);
}

TEST_CASE("dyadic intervals are half-open") {
  CHECK(dyadic_of_point(0.3, 2).k == 1);
  for (int j : {0, 1, 5, 12}) CHECK(dyadic_of_point(0.0, j).k == 0);
  CHECK(dyadic_of_point(0.5, 1).k == 1);
  const DyadicIndex l{3, 0};
  CHECK(l.neighbourhood() == std::vector<std::int64_t>{0, 1});
  const DyadicIndex m{3, 4};
  CHECK(m.neighbourhood() == std::vector<std::int64_t>{3, 4, 5});
  CHECK(m.left() == 0.5);
  CHECK(m.right() == 0.625);
}

TEST_CASE("fit_line recovers an exact line") {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto r = fit_line(x, y);
  CHECK(r.slope == Approx(2.0));
  CHECK(r.intercept == Approx(1.0));
  CHECK(r.r_squared == Approx(1.0));
  const std::vector<double> two{1, 2};
  CHECK_THROWS_AS(fit_line(two, two), DegenerateEstimate);
}

TEST_CASE("normal stream is a pure function of its counter") {
  const NormalStream a(42, Stream::Driver, 7), b(42, Stream::Driver, 7), c(42, Stream::Driver, 8);
  CHECK(a.normal(1234) == b.normal(1234));
  CHECK(a.normal(1234) != c.normal(1234));
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = a.normal(i);
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("gauss-legendre and chebyshev helpers") {
  const auto& g = gauss_legendre(8);
  double acc = 0;
  for (std::size_t i = 0; i < g.x.size(); ++i) acc += g.w[i] * std::pow(g.x[i], 14);
  CHECK(acc == Approx(2.0 / 15.0).epsilon(1e-14));
  const auto nodes = chebyshev_lobatto(12, 0.55, 0.95);
  std::vector<double> v;
  for (double x : nodes) v.push_back(std::exp(3 * x));
  CHECK(chebyshev_interpolate(v, 0.55, 0.95, 0.7123) == Approx(std::exp(3 * 0.7123)).epsilon(1e-12));
}

TEST_CASE("pairwise sum and parallel loops are deterministic") {
  std::vector<double> v(10001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i);
  const double s1 = pairwise_sum(v.data(), v.size());
  std::vector<double> out(v.size());
  set_thread_count(3);
  parallel_for(v.size(), [&](std::size_t i) { out[i] = v[i] * 2; });
  set_thread_count(1);
  CHECK(pairwise_sum(out.data(), out.size()) == 2 * s1);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) {
    if (i == 5) throw RangeError("boom");
  }));
}

TEST_CASE("discretisation parameters are validated") {
  DiscretizationParams d;
  CHECK_NOTHROW(d.validate());
  d.x_min = 0.5;
  CHECK_THROWS_AS(d.validate(), RangeError);
  d = {};
  d.far_extent = 0.5;
  CHECK_THROWS_AS(d.validate(), RangeError);
}

TEST_CASE("sample path CSV and sidecar round trip bit-exactly") {
  SamplePath p;
  p.times = {0.0, 0.1, 1.0 / 3.0, 1.0};
  p.values = {0.0, -1e-300, 2.0 / 7.0, 12345.678901234567};
  p.meta.d = 2;
  p.meta.hurst = make_hurst(HurstKind::Sinusoidal, {0.75, 0.15, 2 * kPi});
  p.meta.seed = 99;
  p.meta.replica = 4;
  const auto dir = std::filesystem::temp_directory_path() / "mfh_test_core_io";
  std::filesystem::create_directories(dir);
  write_path(p, dir / "p");
  const auto q = read_path(dir / "p");
  CHECK(q.times == p.times);
  CHECK(q.values == p.values);
  CHECK(q.meta.d == 2);
  CHECK(q.meta.seed == 99);
  CHECK(q.meta.replica == 4);
  CHECK(q.meta.hurst.params() == p.meta.hurst.params());
  CHECK(q.meta.disc.far_extent == p.meta.disc.far_extent);
  std::filesystem::remove_all(dir);
}

TEST_CASE("field matrix CSV layout") {
  GeneratorFieldSample f;
  f.times = {0.0, 0.5, 1.0};
  f.h_values = {0.6, 0.9};
  f.values = {0, 0, 1.5, -2.5, 3.25, 4.125};
  const auto dir = std::filesystem::temp_directory_path() / "mfh_test_core_field";
  std::filesystem::create_directories(dir);
  write_field(f, dir / "f.csv");
  const auto text = read_text(dir / "f.csv");
  CHECK(text.rfind("t\\h,0.6,0.9\n", 0) == 0);
  const auto g = read_field(dir / "f.csv");
  CHECK(g.values == f.values);
  CHECK(g.h_values == f.h_values);
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv parser names the malformed row") {
  try {
    parse_csv("a,b\n1,2\n3,oops\n");
    FAIL("expected MalformedCsv");
  } catch (const MalformedCsv& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
