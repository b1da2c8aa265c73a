#include "mfh/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <unistd.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mfh/analysis.hpp"
#include "mfh/chaos.hpp"
#include "mfh/error.hpp"
#include "mfh/io.hpp"
#include "mfh/kernels.hpp"
#include "mfh/parallel.hpp"
#include "mfh/serialize.hpp"
#include "mfh/spectral.hpp"

namespace mfh {

using nlohmann::json;

namespace {

std::string tag(const char* key, double v) { return std::string(key) + "=" + format_double(v); }

std::vector<double> dvec(const json& j) { return j.get<std::vector<double>>(); }

DiscretizationParams disc_of(const json& c) {
  DiscretizationParams d;
  d.n_grid = c.at("n_grid").get<int>();
  d.x_min = c.value("x_min", d.x_min);
  d.seed = c.at("seed").get<std::uint64_t>();
  d.n_paths = c.value("replicas", 1);
  d.desk_caps = c.value("desk_caps", true);
  return d;
}

HurstFunction sinusoid(const json& c) {
  return make_hurst(HurstKind::Sinusoidal, dvec(c.at("sin_params")));
}

double mean_of(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()) / x.size(); }

/// Sample variance and the standard error of that variance estimate.
std::pair<double, double> var_and_se(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = mean_of(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double c = (v - m) * (v - m);
    m2 += c;
    m4 += c * c;
  }
  m2 /= n;
  m4 /= n;
  return {m2 * n / (n - 1.0), std::sqrt(std::max(0.0, m4 - m2 * m2) / n)};
}

double percentile(std::vector<double> x, double p) {
  const std::vector<double> q{p};
  return quantiles(std::move(x), q)[0];
}

// ---------------------------------------------------------------- pipelines

Statistics kernel_oracle(const json& c) {
  const double h = c.at("h").get<double>();
  const double t = c.at("t").get<double>();
  const double x0 = 0.0;
  const double exact = integrated_kernel(1, h, t, std::span<const double>(&x0, 1));
  boost::math::quadrature::tanh_sinh<double> ts;
  auto f = [&](double s) {
    const double xs[1] = {x0};
    return s > x0 ? kernel_eval(1, h, s, xs) : 0.0;
  };
  const double quad = ts.integrate(f, 0.0, t, 1e-14);
  const double target = c.at("closed_form").get<double>();
  return {{"exact_abs_error", std::abs(exact - target)},
          {"quadrature_rel_error", std::abs(quad - exact) / exact},
          {"value", exact}};
}

Statistics isometry_variance(const json& c) {
  auto disc = disc_of(c);
  const auto hs = dvec(c.at("h_list"));
  const auto ds = c.at("d_list").get<std::vector<int>>();
  const std::size_t reps = c.at("replicas").get<std::size_t>();
  Statistics st;
  for (int d : ds) {
    FieldSimulator sim(d, hs, disc, 1.0);
    std::vector<double> vals(reps * hs.size());
    parallel_for(reps, [&](std::size_t r) {
      const auto v = sim.run(r);
      for (std::size_t k = 0; k < hs.size(); ++k) vals[r * hs.size() + k] = v[sim.steps() * hs.size() + k];
    });
    for (std::size_t k = 0; k < hs.size(); ++k) {
      std::vector<double> col(reps);
      for (std::size_t r = 0; r < reps; ++r) col[r] = vals[r * hs.size() + k];
      const auto [var, se] = var_and_se(col);
      const double q = covariance_quadrature(d, 1.0, hs[k], 1.0, hs[k]);
      const std::string key = "d=" + std::to_string(d) + " " + tag("h", hs[k]);
      st["z " + key] = (var - q) / se;
      st["var " + key] = var;
      st["quad " + key] = q;
    }
  }
  return st;
}

Statistics self_similarity(const json& c) {
  Statistics st;
  const auto ts = dvec(c.at("t_list"));
  for (int d : c.at("d_list").get<std::vector<int>>())
    for (double h : dvec(c.at("h_list"))) {
      std::vector<double> x, y;
      for (double t : ts) {
        x.push_back(std::log(t));
        y.push_back(std::log(covariance_quadrature(d, t, h, t, h)));
      }
      st["slope d=" + std::to_string(d) + " " + tag("h", h)] = fit_line(x, y).slope;
    }
  return st;
}

Statistics d1_law(const json& c) {
  auto disc = disc_of(c);
  const double h = c.at("h").get<double>();
  const int j_max = c.at("j_max").get<int>();
  const auto grid = dyadic_grid(j_max);
  const auto paths = simulate_mfh_replicas(1, constant_hurst(h), grid, disc);
  const auto ct = dvec(c.at("cov_times"));
  std::vector<std::size_t> idx;
  for (double t : ct) idx.push_back(static_cast<std::size_t>(std::llround(std::ldexp(t, j_max))));

  const FbmOracle oracle(h, ct);
  const double n = static_cast<double>(paths.size());
  double worst = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      std::vector<double> xa, xb;
      for (const auto& p : paths) {
        xa.push_back(p.values[idx[a]]);
        xb.push_back(p.values[idx[b]]);
      }
      const double ma = mean_of(xa), mb = mean_of(xb);
      std::vector<double> prod(paths.size());
      for (std::size_t r = 0; r < paths.size(); ++r) prod[r] = (xa[r] - ma) * (xb[r] - mb);
      const double cov = mean_of(prod) * n / (n - 1.0);
      const double se = std::sqrt(var_and_se(prod).first / n);
      worst = std::max(worst, std::abs(cov - oracle.covariance(ct[a], ct[b])) / se);
    }
  std::vector<double> slopes(paths.size());
  const int j_min = c.at("j_min").get<int>();
  const double t0 = c.at("t0").get<double>();
  parallel_for(paths.size(), [&](std::size_t r) {
    slopes[r] = pointwise_holder_estimate(build_leaders(paths[r], j_min, j_max), t0).slope;
  });
  return {{"max_cov_z", worst}, {"mean_pointwise_slope", mean_of(slopes)}};
}

Statistics l2_bounds(const json& c) {
  Statistics st;
  const double t0 = c.at("t0").get<double>(), h0 = c.at("h0").get<double>();
  const int n = c.at("n").get<int>();
  const auto dts = log_grid(c.at("dt_lo").get<double>(), c.at("dt_hi").get<double>(), n);
  std::vector<double> dhs(n);
  const double dh_lo = c.at("dh_lo").get<double>(), dh_hi = c.at("dh_hi").get<double>();
  for (int i = 0; i < n; ++i) dhs[i] = dh_lo + (dh_hi - dh_lo) * i / (n - 1);

  auto through_origin = [](const std::vector<double>& x, const std::vector<double>& y) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += x[i] * y[i];
      sxx += x[i] * x[i];
    }
    const double c = sxy / sxx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
    double res = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      res += (y[i] - c * x[i]) * (y[i] - c * x[i]);
      tot += (y[i] - my) * (y[i] - my);
    }
    return std::pair{c, 1.0 - res / tot};
  };

  for (int d : c.at("d_list").get<std::vector<int>>()) {
    const std::string sd = "d=" + std::to_string(d);
    std::vector<double> xt, yt, xh, yh;
    for (double dt : dts) {
      xt.push_back(std::pow(dt, h0));
      yt.push_back(l2_increment_norm(d, t0, h0, t0 + dt, h0));
    }
    for (double dh : dhs) {
      xh.push_back(dh);
      yh.push_back(l2_increment_norm(d, t0, h0, t0, h0 + dh));
    }
    const auto [c1, r1] = through_origin(xt, yt);
    const auto [c2, r2] = through_origin(xh, yh);
    std::vector<double> ratio(static_cast<std::size_t>(n) * n);
    parallel_for(ratio.size(), [&](std::size_t i) {
      const double dt = dts[i / n], dh = dhs[i % n];
      ratio[i] = l2_increment_norm(d, t0, h0, t0 + dt, h0 + dh) / (c1 * std::pow(dt, h0) + c2 * dh);
    });
    st["c1 " + sd] = c1;
    st["c2 " + sd] = c2;
    st["r2_dt " + sd] = r1;
    st["r2_dh " + sd] = r2;
    st["max_mixed_ratio " + sd] = *std::max_element(ratio.begin(), ratio.end());
    st["min_mixed_ratio " + sd] = *std::min_element(ratio.begin(), ratio.end());
  }
  return st;
}

Statistics decomposition(const json& c) {
  const int d = c.at("d").get<int>(), j = c.at("j").get<int>();
  const auto k = c.at("k").get<std::int64_t>();
  const auto H = constant_hurst(c.at("h").get<double>());
  std::vector<double> lx, ly;
  double lo = 1e300, hi = 0.0;
  for (double M : dvec(c.at("M_list"))) {
    const auto nrm = decomposition_norms(d, j, k, M, H);
    lx.push_back(std::log(M));
    ly.push_back(std::log(nrm.check));
    const double tot = nrm.tilde * nrm.tilde + nrm.check * nrm.check;
    lo = std::min(lo, tot);
    hi = std::max(hi, tot);
  }
  const auto S = sinusoid(c);
  return {{"check_slope", fit_line(lx, ly).slope},
          {"hat_constant", decomposition_norms(d, j, k, 1.0, H).hat},
          {"hat_sinusoidal", decomposition_norms(d, j, k, 1.0, S).hat},
          {"total_spread", (hi - lo) / hi}};
}

Statistics decomposition_probe(const json& c) {
  const auto nrm = decomposition_norms(c.at("d").get<int>(), c.at("j").get<int>(), c.at("k").get<std::int64_t>(),
                                       c.at("M").get<double>(), constant_hurst(c.at("h").get<double>()));
  return {{"norm_tilde", nrm.tilde}, {"norm_check", nrm.check}, {"norm_hat", nrm.hat}};
}

Statistics variance_constant(const json& c) {
  QuadDiagnostics diag;
  const int d = c.at("d").get<int>();
  const double h = c.at("h").get<double>();
  const double v = covariance_quadrature(d, 1.0, h, 1.0, h, {}, &diag);
  return {{"c_h", v}, {"c_h_stderr", std::abs(diag.refined - diag.value)}, {"refined_change", diag.relative_change}};
}

Statistics variance_scaling_d1(const json& c) {
  const double h = c.at("h").get<double>();
  const double r = covariance_quadrature(1, 2.0, h, 2.0, h) / covariance_quadrature(1, 1.0, h, 1.0, h);
  return {{"ratio_error", std::abs(r / std::pow(2.0, 2.0 * h) - 1.0)}};
}

std::vector<SamplePath> constant_paths(const json& c, int d, double h, int j_grid) {
  auto disc = disc_of(c);
  return simulate_mfh_replicas(d, constant_hurst(h), dyadic_grid(j_grid), disc);
}

Statistics modulus(const json& c) {
  const double h = c.at("h").get<double>(), shift = c.at("shift").get<double>();
  const int j_lo = c.at("j_lo").get<int>(), j_hi = c.at("j_hi").get<int>();
  const auto paths = constant_paths(c, 1, h, c.at("j_grid").get<int>());
  std::vector<double> peak(paths.size()), growth(paths.size());
  parallel_for(paths.size(), [&](std::size_t r) {
    peak[r] = curve_peak_to_median(modulus_ratio_curve(paths[r], 0.0, 1.0, h, 1, j_lo, j_hi));
    growth[r] = curve_growth_per_3_scales(modulus_ratio_curve(paths[r], 0.0, 1.0, h - shift, 1, j_lo, j_hi));
  });
  return {{"blowup_replicas", static_cast<double>(std::count_if(peak.begin(), peak.end(), [](double v) { return v > 3.0; }))},
          {"misnormalised_growing_replicas",
           static_cast<double>(std::count_if(growth.begin(), growth.end(), [](double v) { return v >= 2.0; }))},
          {"mean_misnormalised_growth", mean_of(growth)},
          {"median_peak_to_median", percentile(peak, 0.5)}};
}

Statistics pointwise(const json& c) {
  const auto H = sinusoid(c);
  auto disc = disc_of(c);
  const int j_min = c.at("j_min").get<int>(), j_max = c.at("j_max").get<int>();
  const auto paths = simulate_mfh_replicas(1, H, dyadic_grid(j_max), disc);
  const auto t0s = dvec(c.at("t0_list"));
  std::vector<double> est(paths.size() * (t0s.size() + 1));
  parallel_for(paths.size(), [&](std::size_t r) {
    const auto L = build_leaders(paths[r], j_min, j_max);
    for (std::size_t i = 0; i < t0s.size(); ++i) est[r * (t0s.size() + 1) + i] = pointwise_holder_estimate(L, t0s[i]).slope;
    est[r * (t0s.size() + 1) + t0s.size()] = uniform_holder_estimate(L, 0.0, 1.0).slope;
  });
  Statistics st;
  for (std::size_t i = 0; i <= t0s.size(); ++i) {
    std::vector<double> col;
    for (std::size_t r = 0; r < paths.size(); ++r) col.push_back(est[r * (t0s.size() + 1) + i]);
    if (i < t0s.size()) {
      st["pointwise " + tag("t0", t0s[i])] = mean_of(col);
      st["target " + tag("t0", t0s[i])] = H(t0s[i]);
    } else {
      st["uniform"] = mean_of(col);
    }
  }
  return st;
}

Statistics lil(const json& c) {
  const double h = c.at("h").get<double>(), t0 = c.at("t0").get<double>();
  const int j_lo = c.at("j_lo").get<int>(), j_hi = c.at("j_hi").get<int>();
  const auto paths = constant_paths(c, 1, h, c.at("j_grid").get<int>());
  std::vector<double> rm(paths.size());
  parallel_for(paths.size(),
               [&](std::size_t r) { rm[r] = running_max(lil_statistic(paths[r], t0, h, 1, j_lo, j_hi)).back(); });
  const double med = percentile(rm, 0.5);
  const double outliers =
      static_cast<double>(std::count_if(rm.begin(), rm.end(), [&](double v) { return v > 10.0 * med; })) / rm.size();
  return {{"median", med},
          {"p5_over_median", percentile(rm, 0.05) / med},
          {"p95_over_median", percentile(rm, 0.95) / med},
          {"outlier_fraction", outliers}};
}

Statistics lass(const json& c) {
  auto disc = disc_of(c);
  const auto eps = dvec(c.at("eps_list"));
  const auto tg = dvec(c.at("t_grid"));
  const auto rep = lass_test(c.at("d").get<int>(), sinusoid(c), c.at("t0").get<double>(), eps, tg, disc,
                             c.at("control_shift").get<double>());
  Statistics st;
  for (const auto& s : rep.scales) {
    st["cov_error " + tag("eps", s.eps)] = s.cov_error;
    st["control_error " + tag("eps", s.eps)] = s.control_error;
    st["decile_error " + tag("eps", s.eps)] = s.decile_error;
  }
  st["monotone"] = rep.monotone ? 1.0 : 0.0;
  st["control_ratio_smallest_eps"] = rep.scales.back().control_error / rep.scales.back().cov_error;
  st["t0_snapped"] = rep.t0;
  return st;
}

Statistics box_dimension(const json& c) {
  Statistics st;
  auto run = [&](const json& sub, int d) {
    json cc = c;
    cc.update(sub);
    const auto paths = constant_paths(cc, d, sub.at("h").get<double>(), sub.at("j_grid").get<int>());
    const auto eps = dvec(sub.at("eps_list"));
    std::vector<double> s(paths.size());
    parallel_for(paths.size(), [&](std::size_t r) { s[r] = box_counting_dimension(paths[r], 0.0, 1.0, eps).slope; });
    return mean_of(s);
  };
  st["slope d=1"] = run(c.at("d1"), 1);
  st["slope d=2"] = run(c.at("d2"), 2);
  SamplePath line;
  line.times = dyadic_grid(c.at("line").at("j_grid").get<int>());
  line.values = line.times;
  st["slope line"] = box_counting_dimension(line, 0.0, 1.0, dvec(c.at("line").at("eps_list"))).slope;
  return st;
}

Statistics spectral(const json& c) {
  const auto model = increment_model(c.at("t").get<double>(), c.at("h").get<double>(), c.at("u").get<double>(),
                                     c.at("h").get<double>(), c.at("n_uniform").get<int>());
  const auto n = c.at("samples").get<std::size_t>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const auto x = sample_chaos2(model, n, seed);
  const auto g = malliavin_norm_samples(model, n, seed);
  const double s2 = model.sum_sq();
  const auto [var, se] = var_and_se(x);
  std::vector<double> g2(n);
  for (std::size_t i = 0; i < n; ++i) g2[i] = g[i] * g[i];
  const double mg2 = mean_of(g2);
  const double se_g2 = std::sqrt(var_and_se(g2).first / n);
  const double cont = 0.5 * std::pow(l2_increment_norm(2, c.at("t").get<double>(), c.at("h").get<double>(),
                                                       c.at("u").get<double>(), c.at("h").get<double>()),
                                     2);
  return {{"frobenius_rel_error", std::abs(s2 - model.frobenius_sq) / model.frobenius_sq},
          {"z_var_chaos2", (var - 2.0 * s2) / se},
          {"z_mean_g2", (mg2 - 4.0 * s2) / se_g2},
          {"lambda3_over_lambda1", std::abs(model.eigenvalues[2] / model.eigenvalues[0])},
          {"continuum_capture", s2 / cont},
          {"numerical_rank", static_cast<double>(model.numerical_rank())}};
}

/// x grid spanning the sample quantiles of |X| from p_lo to p_hi.
std::vector<double> quantile_x_grid(const std::vector<double>& s, double p_lo, double p_hi, int n) {
  std::vector<double> a(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) a[i] = std::abs(s[i]);
  const std::vector<double> ps{p_lo, p_hi};
  const auto q = quantiles(a, ps);
  return log_grid(q[0], q[1], n);
}

Statistics small_ball(const json& c) {
  const double h = c.at("h").get<double>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const auto model = increment_model(1.0, h, 0.0, h, c.at("n_uniform").get<int>());
  const auto s2 = sample_chaos2(model, c.at("samples_d2").get<std::size_t>(), seed);
  const auto x2 = quantile_x_grid(s2, 5e-4, 0.2, 24);
  const auto c2 = small_ball_curve(s2, x2);

  json c3 = c;
  c3["n_grid"] = c.at("n_grid_d3");
  c3["replicas"] = c.at("samples_d3");
  auto disc = disc_of(c3);
  const std::vector<double> tt{0.0, 1.0}, hh{h};
  FieldSimulator sim(3, hh, disc, 1.0);
  std::vector<double> s3(disc.n_paths);
  parallel_for(s3.size(), [&](std::size_t r) { s3[r] = sim.run(r)[sim.steps()]; });
  const auto x3 = quantile_x_grid(s3, 5e-4, 0.2, 16);
  const auto c3c = small_ball_curve(s3, x3);
  if (!c2.fit || !c3c.fit) throw DegenerateEstimate("small-ball curve has too few points in [1e-3, 1e-1]");
  return {{"slope d=2", c2.fit->slope}, {"slope d=3", c3c.fit->slope},
          {"r2 d=2", c2.fit->r_squared}, {"r2 d=3", c3c.fit->r_squared}};
}

Statistics symmetries(const json& c) {
  const auto hs = dvec(c.at("h_list"));
  DiscretizationParams disc;
  disc.n_grid = c.at("n_grid").get<int>();
  disc.x_min = c.at("x_min").get<double>();
  disc.seed = c.at("seed").get<std::uint64_t>();
  const auto tg = dyadic_grid(c.at("j_grid").get<int>());
  double flips = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const auto f = simulate_field(d, tg, hs, disc, 7);
    const auto g = sign_flip_transform(f);
    const double sgn = d % 2 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
      if (g.values[i] != sgn * f.values[i]) flips += 1.0;
  }

  const auto dir = std::filesystem::temp_directory_path() /
                   ("mfh-symmetry-" + std::to_string(disc.seed) + "-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  double serial = 0.0, rerun = 0.0;
  {
    auto H = make_hurst(HurstKind::Sinusoidal, {0.75, 0.15, 2 * kPi});
    const auto p = simulate_mfh_path(2, H, tg, disc, 3);
    write_path(p, dir / "path");
    const auto q = read_path(dir / "path");
    for (std::size_t i = 0; i < p.size(); ++i)
      if (q.times[i] != p.times[i] || q.values[i] != p.values[i]) serial += 1.0;
    if (q.meta.seed != p.meta.seed || q.meta.d != p.meta.d || q.meta.disc.n_grid != p.meta.disc.n_grid ||
        q.meta.disc.x_min != p.meta.disc.x_min || q.meta.hurst.params() != p.meta.hurst.params())
      serial += 1.0;
    write_path(simulate_mfh_path(2, H, tg, disc, 3), dir / "again");
    if (read_text(dir / "path.csv") != read_text(dir / "again.csv")) rerun += 1.0;
    if (read_text(dir / "path.meta.json") != read_text(dir / "again.meta.json")) rerun += 1.0;
  }
  {
    const auto e = find_experiment("kernel-oracle");
    if (run_experiment(e).to_json().dump() != run_experiment(e).to_json().dump()) rerun += 1.0;
  }
  std::filesystem::remove_all(dir);
  return {{"sign_flip_mismatches", flips}, {"serialization_mismatches", serial}, {"rerun_mismatches", rerun}};
}

const std::map<std::string, Pipeline>& registry() {
  static const std::map<std::string, Pipeline> r{
      {"kernel-oracle", kernel_oracle},
      {"isometry-variance", isometry_variance},
      {"self-similarity", self_similarity},
      {"d1-law", d1_law},
      {"l2-bounds", l2_bounds},
      {"decomposition", decomposition},
      {"uniform-modulus", modulus},
      {"pointwise-exponent", pointwise},
      {"lil", lil},
      {"lass", lass},
      {"box-dimension", box_dimension},
      {"spectral-identities", spectral},
      {"small-ball", small_ball},
      {"exact-symmetries", symmetries},
      {"decomposition-norm", decomposition_probe},
      {"variance-constant", variance_constant},
      {"variance-scaling-d1", variance_scaling_d1},
  };
  return r;
}

Criterion within(std::string id, std::string stat, double target, double tol) {
  return {std::move(id), std::move(stat), "within", target, tol};
}
Criterion cmp(std::string id, std::string stat, const char* op, double target) {
  return {std::move(id), std::move(stat), op, target, 0.0};
}

constexpr std::uint64_t kSeed = 0x4845524DULL;

}  // namespace

std::vector<std::string> pipeline_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

const Pipeline& pipeline(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ValidationError("unknown experiment '" + name + "'");
  return it->second;
}

std::vector<Experiment> acceptance_experiments() {
  const std::vector<double> h3{0.6, 0.75, 0.9};
  const json sin = std::vector<double>{0.75, 0.15, 2 * kPi};
  std::vector<Experiment> out;

  out.push_back({"kernel-oracle",
                 {{"h", 0.75}, {"t", 1.0}, {"closed_form", 4.0}},
                 {cmp("exact", "exact_abs_error", "le", 0.0), cmp("quadrature", "quadrature_rel_error", "le", 1e-6)},
                 "value"});

  {
    Experiment e{"isometry-variance",
                 {{"n_grid", 1024}, {"x_min", -8.0}, {"seed", kSeed}, {"replicas", 2000}, {"desk_caps", false},
                  {"d_list", {1, 2, 3}}, {"h_list", h3}},
                 {},
                 "z d=1 h=0.75"};
    for (int d = 1; d <= 3; ++d)
      for (double h : h3) {
        const std::string k = "d=" + std::to_string(d) + " " + tag("h", h);
        e.criteria.push_back(within("var " + k, "z " + k, 0.0, 3.0));
      }
    out.push_back(e);
  }
  {
    Experiment e{"self-similarity",
                 {{"d_list", {1, 2, 3}}, {"h_list", h3},
                  {"t_list", {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0}}},
                 {},
                 "slope d=2 h=0.75"};
    for (int d = 1; d <= 3; ++d)
      for (double h : h3) {
        const std::string k = "d=" + std::to_string(d) + " " + tag("h", h);
        e.criteria.push_back(within("scaling " + k, "slope " + k, 2 * h, 0.02));
      }
    out.push_back(e);
  }
  out.push_back({"d1-law",
                 {{"n_grid", 1024}, {"x_min", -8.0}, {"seed", kSeed}, {"replicas", 2000}, {"h", 0.7},
                  {"j_min", 4}, {"j_max", 10}, {"t0", 0.5},
                  {"cov_times", {0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0}}},
                 {cmp("covariance", "max_cov_z", "le", 3.0), within("pointwise", "mean_pointwise_slope", 0.7, 0.05)},
                 "mean_pointwise_slope"});
  {
    Experiment e{"l2-bounds",
                 {{"d_list", {1, 2}}, {"t0", 0.5}, {"h0", 0.75}, {"n", 20}, {"dt_lo", 1e-3}, {"dt_hi", 0.25},
                  {"dh_lo", 0.005}, {"dh_hi", 0.1}},
                 {},
                 "max_mixed_ratio d=2"};
    for (int d = 1; d <= 2; ++d) {
      const std::string k = "d=" + std::to_string(d);
      e.criteria.push_back(cmp("c1 fit " + k, "r2_dt " + k, "ge", 0.99));
      e.criteria.push_back(cmp("c2 fit " + k, "r2_dh " + k, "ge", 0.99));
      e.criteria.push_back(cmp("mixed " + k, "max_mixed_ratio " + k, "le", 1.1));
    }
    out.push_back(e);
  }
  out.push_back({"decomposition",
                 {{"d", 2}, {"j", 6}, {"k", 10}, {"h", 0.75}, {"M_list", {1, 2, 4, 8, 16}}, {"sin_params", sin}},
                 {within("check slope", "check_slope", -0.125, 0.05), cmp("hat constant", "hat_constant", "le", 0.0),
                  cmp("hat sinusoidal", "hat_sinusoidal", "gt", 0.0)},
                 "check_slope"});
  out.push_back({"uniform-modulus",
                 {{"n_grid", 4096}, {"x_min", -8.0}, {"seed", kSeed}, {"replicas", 100}, {"h", 0.7}, {"shift", 0.1},
                  {"j_lo", 4}, {"j_hi", 12}, {"j_grid", 12}},
                 {cmp("bounded", "blowup_replicas", "le", 5.0),
                  cmp("misnormalised", "misnormalised_growing_replicas", "ge", 95.0)},
                 "median_peak_to_median"});
  {
    Experiment e{"pointwise-exponent",
                 {{"n_grid", 4096}, {"x_min", -8.0}, {"seed", kSeed}, {"replicas", 100}, {"sin_params", sin},
                  {"j_min", 6}, {"j_max", 12}, {"t0_list", {0.25, 0.5, 0.75}}},
                 {},
                 "uniform"};
    const auto H = make_hurst(HurstKind::Sinusoidal, dvec(sin));
    for (double t0 : {0.25, 0.5, 0.75})
      e.criteria.push_back(within("pointwise " + tag("t0", t0), "pointwise " + tag("t0", t0), H(t0), 0.07));
    e.criteria.push_back(within("uniform", "uniform", 0.6, 0.07));
    out.push_back(e);
  }
  out.push_back({"lil",
                 {{"n_grid", 4096}, {"x_min", -8.0}, {"seed", kSeed}, {"replicas", 200}, {"h", 0.7}, {"t0", 0.5},
                  {"j_lo", 4}, {"j_hi", 12}, {"j_grid", 12}},
                 {cmp("bounded below", "p5_over_median", "gt", 0.01), cmp("outliers", "outlier_fraction", "le", 0.05)},
                 "median"});
  out.push_back({"lass",
                 {{"n_grid", 4096}, {"x_min", -8.0}, {"seed", kSeed}, {"replicas", 2000}, {"d", 1}, {"sin_params", sin},
                  {"t0", 0.3}, {"eps_list", {0.25, 0.0625, 0.015625}}, {"t_grid", {0.25, 0.5, 0.75, 1.0}},
                  {"control_shift", 0.1}},
                 {cmp("monotone", "monotone", "ge", 1.0), cmp("control", "control_ratio_smallest_eps", "ge", 3.0)},
                 "control_ratio_smallest_eps"});
  {
    std::vector<double> e1, e2, el;
    for (int j = 4; j <= 11; ++j) e1.push_back(std::ldexp(1.0, -j));
    for (int j = 3; j <= 9; ++j) e2.push_back(std::ldexp(1.0, -j));
    el = e1;
    out.push_back({"box-dimension",
                   {{"x_min", -8.0}, {"seed", kSeed}, {"replicas", 100},
                    {"d1", {{"n_grid", 4096}, {"h", 0.7}, {"j_grid", 12}, {"eps_list", e1}}},
                    {"d2", {{"n_grid", 1024}, {"h", 0.75}, {"j_grid", 10}, {"eps_list", e2}}},
                    {"line", {{"j_grid", 12}, {"eps_list", el}}},
                    {"n_grid", 1024}},
                   {within("d=1", "slope d=1", 1.3, 0.15), within("d=2", "slope d=2", 1.25, 0.2),
                    within("line", "slope line", 1.0, 0.05)},
                   "slope d=1"});
  }
  out.push_back({"spectral-identities",
                 {{"t", 1.0}, {"u", 0.0}, {"h", 0.75}, {"n_uniform", 256}, {"samples", 100000}, {"seed", kSeed}},
                 {cmp("frobenius", "frobenius_rel_error", "le", 1e-6), within("variance", "z_var_chaos2", 0.0, 3.0),
                  within("malliavin", "z_mean_g2", 0.0, 3.0), cmp("lambda3", "lambda3_over_lambda1", "gt", 1e-6)},
                 "lambda3_over_lambda1"});
  out.push_back({"small-ball",
                 {{"h", 0.75}, {"n_uniform", 256}, {"samples_d2", 1000000}, {"samples_d3", 20000}, {"n_grid", 128},
                  {"n_grid_d3", 128}, {"x_min", -8.0}, {"seed", kSeed}},
                 {within("d=2", "slope d=2", 1.0, 0.15), cmp("d=3", "slope d=3", "ge", 1.0 / 3.0 - 0.1)},
                 "slope d=2"});
  out.push_back({"exact-symmetries",
                 {{"n_grid", 64}, {"x_min", -2.0}, {"seed", kSeed}, {"j_grid", 6}, {"h_list", h3}},
                 {cmp("sign flip", "sign_flip_mismatches", "le", 0.0),
                  cmp("serialization", "serialization_mismatches", "le", 0.0),
                  cmp("rerun", "rerun_mismatches", "le", 0.0)},
                 "sign_flip_mismatches"});
  return out;
}

std::vector<Experiment> all_experiments() {
  auto out = acceptance_experiments();
  out.push_back({"decomposition-norm",
                 {{"d", 2}, {"j", 6}, {"k", 10}, {"M", 1.0}, {"h", 0.75}},
                 {cmp("positive", "norm_check", "gt", 0.0)},
                 "norm_check"});
  out.push_back({"variance-constant", {{"d", 1}, {"h", 0.75}}, {cmp("positive", "c_h", "gt", 0.0)}, "c_h"});
  out.push_back({"variance-scaling-d1", {{"h", 0.75}}, {cmp("ratio", "ratio_error", "le", 1e-3)}, "ratio_error"});
  return out;
}

Experiment find_experiment(const std::string& name) {
  for (auto& e : all_experiments())
    if (e.name == name) return e;
  throw ValidationError("unknown experiment '" + name + "'");
}

std::string config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

VerdictReport run_experiment(const Experiment& e) {
  if (e.criteria.empty()) throw ValidationError("experiment '" + e.name + "' has no criteria");
  const auto& pipe = pipeline(e.name);
  const auto start = std::chrono::steady_clock::now();
  VerdictReport rep;
  rep.name = e.name;
  rep.config = e.config;
  rep.config_hash = config_hash(e.config);
  rep.seed = e.config.value("seed", std::uint64_t{0});
  rep.statistics = pipe(e.config);
  rep.pass = true;
  for (const auto& c : e.criteria) {
    const auto it = rep.statistics.find(c.statistic);
    if (it == rep.statistics.end())
      throw ValidationError("experiment '" + e.name + "' does not produce statistic '" + c.statistic + "'");
    const double v = it->second;
    bool ok = false;
    if (c.comparator == "within") ok = std::abs(v - c.target) <= c.tol;
    else if (c.comparator == "le") ok = v <= c.target;
    else if (c.comparator == "ge") ok = v >= c.target;
    else if (c.comparator == "lt") ok = v < c.target;
    else if (c.comparator == "gt") ok = v > c.target;
    else throw ValidationError("unknown comparator '" + c.comparator + "'");
    rep.results.push_back({c, v, ok});
    rep.pass = rep.pass && ok;
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

json VerdictReport::to_json(bool include_wall_time) const {
  json crit = json::array();
  for (const auto& r : results)
    crit.push_back({{"id", r.criterion.id},
                    {"statistic", r.criterion.statistic},
                    {"comparator", r.criterion.comparator},
                    {"value", r.value},
                    {"target", r.criterion.target},
                    {"tol", r.criterion.tol},
                    {"pass", r.pass}});
  json j{{"name", name},
         {"pass", pass},
         {"criteria", crit},
         {"statistics", statistics},
         {"provenance",
          {{"library_version", kLibraryVersion}, {"config_hash", config_hash}, {"seed", seed}, {"config", config}}}};
  if (include_wall_time) j["provenance"]["wall_seconds"] = wall_seconds;
  return j;
}

std::string VerdictReport::table() const {
  std::ostringstream os;
  os << name << (pass ? "  PASS" : "  FAIL") << "  (" << std::fixed << std::setprecision(1) << wall_seconds << " s)\n";
  for (const auto& r : results) {
    os << "  " << (r.pass ? "pass" : "FAIL") << "  " << std::left << std::setw(28) << r.criterion.id << std::right
       << " value " << std::setw(12) << std::setprecision(6) << std::defaultfloat << r.value << "  "
       << r.criterion.comparator << " " << r.criterion.target;
    if (r.criterion.comparator == "within") os << " ± " << r.criterion.tol;
    os << "\n";
  }
  return os.str();
}

std::string sweep(const std::string& param, const std::vector<double>& values, const Experiment& tmpl) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  if (!tmpl.config.contains(param))
    throw ValidationError("parameter '" + param + "' is not part of experiment '" + tmpl.name + "'");
  const auto& pipe = pipeline(tmpl.name);
  std::ostringstream os;
  os << "param,value,norm,stderr\n";
  for (double v : values) {
    json cfg = tmpl.config;
    cfg[param] = cfg[param].is_number_integer() && v == std::floor(v) ? json(static_cast<std::int64_t>(v)) : json(v);
    const auto st = pipe(cfg);
    const auto it = st.find(tmpl.headline);
    if (it == st.end()) throw ValidationError("headline statistic '" + tmpl.headline + "' missing");
    const auto se = st.find(tmpl.headline + "_stderr");
    os << param << "," << format_double(v) << "," << format_double(it->second) << ","
       << format_double(se == st.end() ? 0.0 : se->second) << "\n";
  }
  return os.str();
}

}  // namespace mfh
