#include "mfh/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "mfh/chaos.hpp"
#include "mfh/error.hpp"
#include "mfh/kernels.hpp"

namespace mfh {

namespace {

void check_path(const SamplePath& p) {
  if (p.times.empty() || p.times.size() != p.values.size()) throw ValidationError("path is empty or ragged");
}

/// [first, last) sample indices with t in [a, b].
std::pair<std::size_t, std::size_t> window(const SamplePath& p, double a, double b) {
  const auto lo = std::lower_bound(p.times.begin(), p.times.end(), a) - p.times.begin();
  const auto hi = std::upper_bound(p.times.begin(), p.times.end(), b) - p.times.begin();
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(std::max(lo, hi))};
}

/// Sliding max of osc over windows [t_i - r, t_i + r] for t_i in [a, b].
double sup_window_osc(const SamplePath& p, double a, double b, double r) {
  const auto& t = p.times;
  const auto& v = p.values;
  std::deque<std::size_t> mx, mn;
  std::size_t lo = 0, hi = 0;
  double best = -1.0;
  for (std::size_t c = 0; c < t.size(); ++c) {
    if (t[c] < a || t[c] > b) continue;
    while (hi < t.size() && t[hi] <= t[c] + r) {
      while (!mx.empty() && v[mx.back()] <= v[hi]) mx.pop_back();
      while (!mn.empty() && v[mn.back()] >= v[hi]) mn.pop_back();
      mx.push_back(hi);
      mn.push_back(hi);
      ++hi;
    }
    while (t[lo] < t[c] - r) ++lo;
    while (mx.front() < lo) mx.pop_front();
    while (mn.front() < lo) mn.pop_front();
    best = std::max(best, v[mx.front()] - v[mn.front()]);
  }
  if (best < 0.0) throw EmptyWindow("no sample in the window range");
  return best;
}

double median_of(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

EstimatorReport fit_scales(const std::vector<int>& js, const std::vector<double>& values, const char* what) {
  std::vector<double> x, y;
  bool any = false;
  for (std::size_t i = 0; i < js.size(); ++i) {
    if (values[i] > 0.0) {
      x.push_back(-js[i]);
      y.push_back(std::log2(values[i]));
      any = true;
    }
  }
  if (!any) throw DegenerateEstimate(std::string(what) + ": every leader in the fit range is 0");
  auto rep = fit_line(x, y);
  rep.fit_range = {static_cast<double>(js.front()), static_cast<double>(js.back())};
  return rep;
}

std::pair<int, int> resolve_fit(const LeaderPyramid& p, std::optional<std::pair<int, int>> fit) {
  auto f = fit.value_or(default_fit_range(p));
  if (f.first < p.j_min || f.second > p.j_max || f.second - f.first < 2)
    throw RangeError("fit range must lie in [j_min, j_max] and span >= 3 scales");
  return f;
}

}  // namespace

double oscillation(const SamplePath& path, double a, double b) {
  check_path(path);
  const auto [lo, hi] = window(path, a, b);
  if (lo >= hi) {
    std::ostringstream os;
    os << "no sample falls in [" << a << ", " << b << "]";
    throw EmptyWindow(os.str());
  }
  const auto [mn, mx] = std::minmax_element(path.values.begin() + lo, path.values.begin() + hi);
  return *mx - *mn;
}

LeaderPyramid build_leaders(const SamplePath& path, int j_min, int j_max) {
  check_path(path);
  if (j_min < 0 || j_max < j_min) throw RangeError("need 0 <= j_min <= j_max");
  if (j_max > 40) throw RangeError("j_max too large");
  const double scale = std::ldexp(1.0, j_max);
  const auto K = static_cast<std::int64_t>(std::floor(path.times.back() * scale));
  if (path.times.front() != 0.0 || K < (std::int64_t{1} << (j_max - j_min)))
    throw GridMismatch("path must start at 0 and cover at least one interval of scale j_min");
  std::vector<double> v(K + 1);
  std::size_t idx = 0;
  for (std::int64_t k = 0; k <= K; ++k) {
    const double tk = std::ldexp(static_cast<double>(k), -j_max);
    while (idx < path.times.size() && path.times[idx] < tk) ++idx;
    if (idx == path.times.size() || path.times[idx] != tk) {
      std::ostringstream os;
      os << "dyadic point " << tk << " (scale " << j_max << ") is missing from the path grid";
      throw GridMismatch(os.str());
    }
    v[k] = path.values[idx];
  }

  LeaderPyramid p;
  p.j_min = j_min;
  p.j_max = j_max;
  const int levels = j_max - j_min + 1;
  p.increments.resize(levels);
  p.nested.resize(levels);
  p.leaders.resize(levels);
  for (int j = j_max; j >= j_min; --j) {
    const std::int64_t stride = std::int64_t{1} << (j_max - j);
    const std::int64_t n = K / stride;
    auto& inc = p.increments[j - j_min];
    auto& nest = p.nested[j - j_min];
    inc.resize(n);
    nest.resize(n);
    for (std::int64_t k = 0; k < n; ++k) {
      inc[k] = std::abs(v[(k + 1) * stride] - v[k * stride]);
      double m = inc[k];
      if (j < j_max) {
        const auto& child = p.nested[j + 1 - j_min];
        for (std::int64_t c = 2 * k; c <= 2 * k + 1; ++c)
          if (c < static_cast<std::int64_t>(child.size())) m = std::max(m, child[c]);
      }
      nest[k] = m;
    }
    auto& lead = p.leaders[j - j_min];
    lead.resize(n);
    for (std::int64_t k = 0; k < n; ++k) {
      double m = nest[k];
      if (k > 0) m = std::max(m, nest[k - 1]);
      if (k + 1 < n) m = std::max(m, nest[k + 1]);
      lead[k] = m;
    }
  }
  return p;
}

std::pair<int, int> default_fit_range(const LeaderPyramid& p) {
  return {std::min(p.j_min + 2, p.j_max - 3), p.j_max - 1};
}

EstimatorReport pointwise_holder_estimate(const LeaderPyramid& p, double t0, std::optional<std::pair<int, int>> fit) {
  if (p.j_max - p.j_min + 1 < 5) throw RangeError("pointwise estimate needs a pyramid spanning >= 5 scales");
  if (!(t0 >= 0.0)) throw RangeError("t0 must be >= 0");
  const auto [lo, hi] = resolve_fit(p, fit);
  std::vector<int> js;
  std::vector<double> vals;
  for (int j = lo; j <= hi; ++j) {
    const auto& L = p.leaders_at(j);
    auto k = static_cast<std::int64_t>(std::floor(std::ldexp(t0, j)));
    k = std::min<std::int64_t>(k, static_cast<std::int64_t>(L.size()) - 1);
    js.push_back(j);
    vals.push_back(L[k]);
  }
  return fit_scales(js, vals, "pointwise Hölder estimate");
}

EstimatorReport uniform_holder_estimate(const LeaderPyramid& p, double a, double b,
                                        std::optional<std::pair<int, int>> fit) {
  if (p.j_max - p.j_min + 1 < 5) throw RangeError("uniform estimate needs a pyramid spanning >= 5 scales");
  if (!(b > a)) throw RangeError("uniform estimate needs a < b");
  const auto [lo, hi] = resolve_fit(p, fit);
  std::vector<int> js;
  std::vector<double> vals;
  for (int j = lo; j <= hi; ++j) {
    const auto& L = p.leaders_at(j);
    double m = -1.0;
    for (std::size_t k = 0; k < L.size(); ++k) {
      const double left = std::ldexp(static_cast<double>(k), -j);
      if (left >= a && left < b) m = std::max(m, L[k]);
    }
    if (m < 0.0) continue;
    js.push_back(j);
    vals.push_back(m);
  }
  if (js.empty()) throw EmptyWindow("no dyadic interval starts inside [a, b)");
  return fit_scales(js, vals, "uniform Hölder estimate");
}

std::vector<CurvePoint> modulus_ratio_curve(const SamplePath& path, double a, double b, double h_min, int d,
                                            int j_lo, int j_hi) {
  check_path(path);
  if (j_lo < 1 || j_hi < j_lo) throw RangeError("modulus curve needs 1 <= j_lo <= j_hi");
  std::vector<CurvePoint> out;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double r = std::ldexp(1.0, -j);
    const double norm = std::pow(r, h_min) * (d > 0 ? std::pow(std::log(1.0 / r), 0.5 * d) : 1.0);
    out.push_back({j, r, sup_window_osc(path, a, b, r) / norm});
  }
  return out;
}

double curve_peak_to_median(const std::vector<CurvePoint>& c) {
  if (c.empty()) throw ValidationError("empty curve");
  std::vector<double> v;
  double mx = 0.0;
  for (const auto& p : c) {
    v.push_back(p.value);
    mx = std::max(mx, p.value);
  }
  const double med = median_of(v);
  if (!(med > 0.0)) throw DegenerateEstimate("curve median is 0");
  return mx / med;
}

double curve_growth_per_3_scales(const std::vector<CurvePoint>& c) {
  std::vector<double> x, y;
  for (const auto& p : c) {
    if (!(p.value > 0.0)) throw DegenerateEstimate("curve has a zero value");
    x.push_back(p.j);
    y.push_back(std::log2(p.value));
  }
  return std::exp2(3.0 * fit_line(x, y).slope);
}

std::vector<CurvePoint> lil_statistic(const SamplePath& path, double t0, double h_t0, int d, int j_lo, int j_hi) {
  check_path(path);
  if (j_lo < 4) throw RangeError("LIL statistic needs j >= 4 so that log log 1/r > 0");
  if (j_hi < j_lo) throw RangeError("LIL statistic needs j_lo <= j_hi");
  std::vector<CurvePoint> out;
  for (int j = j_lo; j <= j_hi; ++j) {
    const double r = std::ldexp(1.0, -j);
    const double norm = std::pow(r, h_t0) * std::pow(std::log(std::log(1.0 / r)), 0.5 * d);
    out.push_back({j, r, oscillation(path, t0 - r, t0 + r) / norm});
  }
  return out;
}

std::vector<double> running_max(const std::vector<CurvePoint>& c) {
  std::vector<double> out;
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& p : c) out.push_back(m = std::max(m, p.value));
  return out;
}

std::vector<double> quantiles(std::vector<double> x, std::span<const double> q) {
  if (x.empty()) throw ValidationError("quantiles of an empty sample");
  std::sort(x.begin(), x.end());
  std::vector<double> out;
  for (double p : q) {
    const double h = (x.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    out.push_back(x[lo] + (h - lo) * (x[hi] - x[lo]));
  }
  return out;
}

LassReport lass_test(int d, const HurstFunction& H, double t0, std::span<const double> eps_list,
                     std::span<const double> t_grid, const DiscretizationParams& disc, double control_shift) {
  if (eps_list.empty() || t_grid.empty()) throw ValidationError("LASS test needs eps and t grids");
  if (disc.n_paths < 2) throw ValidationError("LASS test needs n_paths >= 2");
  LassReport rep;
  rep.t0 = std::round(t0 * disc.n_grid) / disc.n_grid;
  rep.h_t0 = H(rep.t0);
  const double h = rep.h_t0;
  const double h_ctl = std::min(h + control_shift, 0.99);
  const double t_top = *std::max_element(t_grid.begin(), t_grid.end());
  const double e_top = *std::max_element(eps_list.begin(), eps_list.end());
  if (rep.t0 + e_top * t_top > disc.t_max) throw RangeError("t0 + max(eps) max(t) exceeds t_max");

  std::vector<double> times{rep.t0};
  for (double e : eps_list)
    for (double t : t_grid) times.push_back(rep.t0 + e * t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (times.front() > 0.0) times.insert(times.begin(), 0.0);
  const auto paths = simulate_mfh_replicas(d, H, times, disc);
  auto at = [&](const SamplePath& p, double t) {
    const auto it = std::lower_bound(p.times.begin(), p.times.end(), t);
    return p.values[it - p.times.begin()];
  };

  const std::size_t m = t_grid.size();
  std::vector<double> theo(m * m), ctl(m * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k <= i; ++k) {
      theo[i * m + k] = theo[k * m + i] = covariance_quadrature(d, t_grid[i], h, t_grid[k], h);
      ctl[i * m + k] = ctl[k * m + i] = covariance_quadrature(d, t_grid[i], h_ctl, t_grid[k], h_ctl);
    }

  // reference marginal of the tangent at t = max t_grid
  DiscretizationParams ref = disc;
  ref.seed = disc.seed ^ 0x5441'4E47'454E'54ULL;
  const double t_ref = t_top;
  std::vector<double> ref_vals;
  {
    const std::vector<double> tt{0.0, t_ref};
    const std::vector<double> hh{h};
    const auto fields = simulate_field_replicas(d, tt, hh, ref);
    for (const auto& f : fields) ref_vals.push_back(f.at(1, 0));
  }
  const std::vector<double> deciles{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const auto q_ref = quantiles(ref_vals, deciles);
  const double sd_ref = std::sqrt(theo[(m - 1) * m + (m - 1)]);
  std::size_t i_top = std::max_element(t_grid.begin(), t_grid.end()) - t_grid.begin();

  const double n = static_cast<double>(paths.size());
  for (double e : eps_list) {
    std::vector<double> Y(paths.size() * m);
    for (std::size_t p = 0; p < paths.size(); ++p) {
      const double base = at(paths[p], rep.t0);
      for (std::size_t i = 0; i < m; ++i)
        Y[p * m + i] = std::pow(e, -h) * (at(paths[p], rep.t0 + e * t_grid[i]) - base);
    }
    std::vector<double> mean(m, 0.0);
    for (std::size_t p = 0; p < paths.size(); ++p)
      for (std::size_t i = 0; i < m; ++i) mean[i] += Y[p * m + i] / n;
    LassScale s;
    s.eps = e;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k <= i; ++k) {
        double c = 0.0;
        for (std::size_t p = 0; p < paths.size(); ++p) c += (Y[p * m + i] - mean[i]) * (Y[p * m + k] - mean[k]);
        c /= n - 1.0;
        s.cov_error = std::max(s.cov_error, std::abs(c - theo[i * m + k]) / std::abs(theo[i * m + k]));
        s.control_error = std::max(s.control_error, std::abs(c - ctl[i * m + k]) / std::abs(ctl[i * m + k]));
      }
    std::vector<double> y1;
    for (std::size_t p = 0; p < paths.size(); ++p) y1.push_back(Y[p * m + i_top]);
    const auto q = quantiles(y1, deciles);
    for (std::size_t i = 0; i < q.size(); ++i) s.decile_error = std::max(s.decile_error, std::abs(q[i] - q_ref[i]) / sd_ref);
    rep.scales.push_back(s);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.scales.size(); ++i)
    rep.monotone = rep.monotone && rep.scales[i].cov_error < rep.scales[i - 1].cov_error;
  return rep;
}

std::vector<double> box_counts(const SamplePath& path, double a, double b, std::span<const double> eps_list) {
  check_path(path);
  if (!(b > a)) throw RangeError("box counting needs a < b");
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < path.times.size(); ++i) step = std::min(step, path.times[i] - path.times[i - 1]);
  std::vector<double> out;
  for (double eps : eps_list) {
    if (!(eps >= 2.0 * step * (1.0 - 1e-12))) {
      std::ostringstream os;
      os << "box size " << eps << " is below 2 grid steps (" << 2.0 * step << ")";
      throw RangeError(os.str());
    }
    const auto cols = static_cast<std::int64_t>(std::ceil((b - a) / eps - 1e-9));
    double total = 0.0;
    std::size_t i = std::lower_bound(path.times.begin(), path.times.end(), a) - path.times.begin();
    for (std::int64_t c = 0; c < cols; ++c) {
      const double hi = std::min(a + (c + 1) * eps, b);
      const bool last = c + 1 == cols;
      double mn = std::numeric_limits<double>::infinity(), mx = -mn;
      // half-open [lo, hi); the final column keeps b
      while (i < path.times.size() && (path.times[i] < hi || (last && path.times[i] <= b))) {
        mn = std::min(mn, path.values[i]);
        mx = std::max(mx, path.values[i]);
        ++i;
      }
      if (mx >= mn) total += std::ceil((mx - mn) / eps) + 1.0;
    }
    out.push_back(total);
  }
  return out;
}

EstimatorReport box_counting_dimension(const SamplePath& path, double a, double b, std::span<const double> eps_list) {
  if (eps_list.size() < 3) throw ValidationError("box counting needs at least 3 box sizes");
  const auto n = box_counts(path, a, b, eps_list);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n.size(); ++i) {
    x.push_back(std::log(1.0 / eps_list[i]));
    y.push_back(std::log(n[i]));
  }
  auto rep = fit_line(x, y);
  const auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  rep.fit_range = {*lo, *hi};
  return rep;
}

}  // namespace mfh
