#include "mfh/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfh/error.hpp"

namespace mfh {

std::string to_string(HurstKind kind) {
  switch (kind) {
    case HurstKind::Constant: return "constant";
    case HurstKind::AffineClamped: return "affine-clamped";
    case HurstKind::Sinusoidal: return "sinusoidal";
    case HurstKind::CustomTable: return "custom-table";
  }
  return "constant";
}

HurstKind hurst_kind_from_string(const std::string& name) {
  if (name == "constant") return HurstKind::Constant;
  if (name == "affine-clamped" || name == "affine") return HurstKind::AffineClamped;
  if (name == "sinusoidal" || name == "sin") return HurstKind::Sinusoidal;
  if (name == "custom-table" || name == "table") return HurstKind::CustomTable;
  throw ValidationError("unknown hurst kind '" + name +
                        "' (constant | affine-clamped | sinusoidal | custom-table)");
}

namespace {

bool admissible(double h) { return h > 0.5 && h < 1.0; }

void check_range(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi)) || !admissible(lo) || !admissible(hi)) {
    std::ostringstream os;
    os.precision(17);
    os << "hurst range [" << lo << ", " << hi << "] is not inside (0.5, 1)";
    throw RangeError(os.str());
  }
}

}  // namespace

HurstFunction make_hurst(HurstKind kind, std::vector<double> params) {
  HurstFunction f;
  f.kind_ = kind;
  switch (kind) {
    case HurstKind::Constant: {
      if (params.size() != 1) throw ValidationError("constant hurst takes {h}");
      f.h_min_ = f.h_max_ = params[0];
      f.declared_gamma_ = 1.0;
      break;
    }
    case HurstKind::AffineClamped: {
      if (params.size() != 4) throw ValidationError("affine-clamped hurst takes {a, b, lo, hi}");
      const double lo = params[2], hi = params[3];
      if (!(lo <= hi)) throw ValidationError("affine-clamped hurst needs lo <= hi");
      // clamp bounds are the range unless the line never reaches them on t >= 0
      const double a = params[0], b = params[1];
      double rmin = lo, rmax = hi;
      if (b == 0.0) {
        rmin = rmax = std::clamp(a, lo, hi);
      } else if (b > 0.0) {
        rmin = std::clamp(a, lo, hi);
      } else {
        rmax = std::clamp(a, lo, hi);
      }
      f.h_min_ = rmin;
      f.h_max_ = rmax;
      f.declared_gamma_ = 1.0;
      break;
    }
    case HurstKind::Sinusoidal: {
      if (params.size() != 3) throw ValidationError("sinusoidal hurst takes {a, b, c}");
      const double a = params[0], b = params[1], c = params[2];
      f.h_min_ = c == 0.0 || b == 0.0 ? a : a - std::abs(b);
      f.h_max_ = c == 0.0 || b == 0.0 ? a : a + std::abs(b);
      f.declared_gamma_ = 1.0;
      break;
    }
    case HurstKind::CustomTable: {
      if (params.size() < 2 || params.size() % 2 != 0)
        throw ValidationError("custom-table hurst takes {t0, v0, t1, v1, ...}");
      double lo = params[1], hi = params[1];
      for (std::size_t i = 0; i < params.size(); i += 2) {
        if (i > 0 && !(params[i] > params[i - 2]))
          throw ValidationError("custom-table knots must be strictly increasing in t");
        lo = std::min(lo, params[i + 1]);
        hi = std::max(hi, params[i + 1]);
      }
      f.h_min_ = lo;
      f.h_max_ = hi;
      f.declared_gamma_ = 1.0;
      break;
    }
  }
  check_range(f.h_min_, f.h_max_);
  f.params_ = std::move(params);
  return f;
}

double HurstFunction::eval(double t) const {
  const auto& p = params_;
  switch (kind_) {
    case HurstKind::Constant: return p[0];
    case HurstKind::AffineClamped: return std::clamp(p[0] + p[1] * t, p[2], p[3]);
    case HurstKind::Sinusoidal: return p[0] + p[1] * std::sin(p[2] * t);
    case HurstKind::CustomTable: {
      const std::size_t n = p.size() / 2;
      if (t <= p[0]) return p[1];
      if (t >= p[2 * (n - 1)]) return p[2 * n - 1];
      std::size_t i = 1;
      while (p[2 * i] < t) ++i;
      const double t0 = p[2 * i - 2], v0 = p[2 * i - 1], t1 = p[2 * i], v1 = p[2 * i + 1];
      const double w = (t - t0) / (t1 - t0);
      return v0 + w * (v1 - v0);
    }
  }
  return p[0];
}

namespace {

template <class Pick>
double extremum_on(const HurstFunction& f, double a, double b, Pick pick) {
  if (b < a) std::swap(a, b);
  double best = f(a);
  constexpr int kSamples = 4096;
  for (int i = 1; i <= kSamples; ++i) best = pick(best, f(a + (b - a) * i / kSamples));
  if (f.kind() == HurstKind::CustomTable) {
    const auto& p = f.params();
    for (std::size_t i = 0; i < p.size(); i += 2)
      if (p[i] >= a && p[i] <= b) best = pick(best, p[i + 1]);
  }
  if (f.kind() == HurstKind::Sinusoidal && f.params()[2] != 0.0) {
    // extrema of sin(c t) sit at c t = pi/2 + m pi
    const double c = f.params()[2];
    const double lo = std::min(c * a, c * b), hi = std::max(c * a, c * b);
    for (double m = std::ceil((lo - kPi / 2) / kPi); kPi / 2 + m * kPi <= hi; m += 1.0)
      best = pick(best, f((kPi / 2 + m * kPi) / c));
  }
  return best;
}

}  // namespace

double HurstFunction::min_on(double a, double b) const {
  if (is_constant()) return h_min_;
  return extremum_on(*this, a, b, [](double x, double y) { return std::min(x, y); });
}

double HurstFunction::max_on(double a, double b) const {
  if (is_constant()) return h_max_;
  return extremum_on(*this, a, b, [](double x, double y) { return std::max(x, y); });
}

std::string HurstFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(kind_) << "(";
  for (std::size_t i = 0; i < params_.size(); ++i) os << (i ? "," : "") << params_[i];
  os << ")";
  return os.str();
}

double DyadicIndex::left() const { return std::ldexp(static_cast<double>(k), -j); }
double DyadicIndex::right() const { return std::ldexp(static_cast<double>(k + 1), -j); }

std::vector<std::int64_t> DyadicIndex::neighbourhood() const {
  std::vector<std::int64_t> out;
  for (std::int64_t q = k - 1; q <= k + 1; ++q)
    if (q >= 0) out.push_back(q);
  return out;
}

DyadicIndex dyadic_of_point(double t, int j) {
  if (!(t >= 0.0) || j < 0) throw RangeError("dyadic_of_point needs t >= 0 and j >= 0");
  // scaling by 2^j is exact, so floor gives the half-open cell
  return {j, static_cast<std::int64_t>(std::floor(std::ldexp(t, j)))};
}

void DiscretizationParams::validate() const {
  if (n_grid < 2) throw RangeError("n_grid must be >= 2");
  if (!(x_min < 0.0)) throw RangeError("x_min must be < 0");
  if (!(t_max > 0.0)) throw RangeError("t_max must be > 0");
  if (n_paths < 1) throw RangeError("n_paths must be >= 1");
  if (!(far_extent >= 1.0)) throw RangeError("far_extent must be >= 1");
  if (!(far_ratio > 1.0)) throw RangeError("far_ratio must be > 1");
  if (h_nodes < 1) throw RangeError("h_nodes must be >= 1");
  const double cells_neg = -x_min * n_grid, cells_pos = t_max * n_grid;
  if (cells_neg != std::floor(cells_neg) || cells_pos != std::floor(cells_pos))
    throw RangeError("x_min and t_max must be multiples of 1/n_grid");
}

void SamplePath::validate() const {
  if (times.size() != values.size()) throw ValidationError("times and values differ in length");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(values[i])) throw ValidationError("non-finite path value");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw ValidationError("path times must be strictly increasing");
  }
  if (!times.empty() && times[0] == 0.0 && values[0] != 0.0)
    throw ValidationError("path must start at 0");
}

std::vector<double> GeneratorFieldSample::column(std::size_t hi) const {
  std::vector<double> out(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = at(i, hi);
  return out;
}

EstimatorReport fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw DegenerateEstimate("fit_line needs at least 3 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DegenerateEstimate("fit_line: abscissae are all equal");
  EstimatorReport r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - r.intercept - r.slope * x[i];
    sse += e * e;
  }
  r.stderr_ = std::sqrt(std::max(0.0, sse / (n - 2) / sxx));
  r.r_squared = syy > 0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  r.fit_range = {*lo, *hi};
  r.n_points = static_cast<int>(n);
  return r;
}

}  // namespace mfh
