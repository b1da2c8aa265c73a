#include "mfh/kernels.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mfh/error.hpp"
#include "mfh/quad.hpp"

namespace mfh {

namespace bq = boost::math::quadrature;

double factorial(int d) {
  double f = 1.0;
  for (int i = 2; i <= d; ++i) f *= i;
  return f;
}

std::string to_string(QuadScheme s) {
  return s == QuadScheme::Substitution ? "substitution" : "midpoint-graded";
}

QuadScheme quad_scheme_from_string(const std::string& name) {
  if (name == "substitution") return QuadScheme::Substitution;
  if (name == "midpoint-graded") return QuadScheme::MidpointGraded;
  throw ValidationError("unknown quadrature scheme '" + name + "' (substitution | midpoint-graded)");
}

void QuadratureGrid::validate() const {
  if (x_min && !(*x_min < 0.0)) throw RangeError("quadrature x_min must be < 0");
  if (!(x_max > 0.0)) throw RangeError("quadrature x_max must be > 0");
  if (n_cells < 8) throw RangeError("quadrature n_cells must be >= 8");
  if (!(tolerance > 0.0 && tolerance < 1e-2)) throw RangeError("quadrature tolerance must be in (0, 1e-2)");
}

double QuadratureGrid::effective_x_min(double t) const {
  if (x_min) return *x_min;
  if (scheme == QuadScheme::Substitution) return -std::numeric_limits<double>::infinity();
  return -16.0 * (t + 1.0);
}

namespace {

void check_args(int d, double h) {
  if (d < 1) throw RangeError("chaos order d must be >= 1");
  if (!(h > 0.5 && h < 1.0)) throw RangeError("hurst value must lie in (0.5, 1)");
}

}  // namespace

double kernel_eval(int d, double h, double s, std::span<const double> x) {
  check_args(d, h);
  if (static_cast<int>(x.size()) != d) throw ValidationError("kernel_eval: x must have d coordinates");
  for (double xl : x)
    if (xl > s) return 0.0;
  for (double xl : x)
    if (xl == s) throw SingularEvaluation("kernel evaluated on its singular set s = x_l");
  const double a = kernel_exponent(d, h);
  double p = 1.0;
  for (double xl : x) p *= std::pow(s - xl, a);
  return p;
}

double integrated_kernel(int d, double h, double t, std::span<const double> x, int nodes) {
  check_args(d, h);
  if (static_cast<int>(x.size()) != d) throw ValidationError("integrated_kernel: x must have d coordinates");
  if (!(t >= 0.0)) throw RangeError("integrated_kernel needs t >= 0");
  if (t == 0.0) return 0.0;
  std::vector<double> xs(x.begin(), x.end());
  std::sort(xs.begin(), xs.end(), std::greater<>());
  const double m = xs[0];
  if (m >= t) return 0.0;
  if (d == 1) {
    const double beta = h - 0.5;
    if (m >= 0.0) return std::pow(t - m, beta) / beta;
    const double r = -m;
    return std::pow(r, beta) * std::expm1(beta * std::log1p(t / r)) / beta;
  }
  if (xs[1] == m && m >= 0.0) return std::numeric_limits<double>::infinity();

  const double alpha = kernel_exponent(d, h);
  const double p = 1.0 / (1.0 + alpha);
  const double s_lo = std::max(0.0, m);
  const double v_lo = std::pow(s_lo - m, 1.0 / p);
  const double v_hi = std::pow(t - m, 1.0 / p);
  const double delta1 = m - xs[1];
  const double sigma = delta1 > 0.0 ? std::pow(delta1, 1.0 / p) : v_lo;

  // in v the leading factor is absorbed: (s - m)^α ds = p dv
  auto integrand = [&](double v) {
    const double vp = std::pow(v, p);
    double f = p;
    for (int l = 1; l < d; ++l) f *= std::pow(vp + (m - xs[l]), alpha);
    return f;
  };

  const GaussRule& rule = gauss_legendre(std::max(2, nodes));
  double L = 0.5 * std::max(sigma, v_lo);
  L = std::max(L, (v_hi - v_lo) * 0x1.0p-60);
  double cur = v_lo, total = 0.0;
  while (cur < v_hi) {
    double nxt = std::min(v_hi, cur + L);
    if (v_hi - nxt < 0.5 * L) nxt = v_hi;
    const double c = 0.5 * (cur + nxt), hw = 0.5 * (nxt - cur);
    double part = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) part += rule.w[i] * integrand(c + hw * rule.x[i]);
    total += hw * part;
    cur = nxt;
    L *= 2.0;
  }
  return total;
}

namespace {

/// tanh-sinh on [lo, hi]; slivers that tanh-sinh cannot place abscissas in
/// fall back to a short Gauss rule.
template <class F>
double ts_integrate(bq::tanh_sinh<double>& ts, F f, double lo, double hi, double tol) {
  if (!(hi > lo)) return 0.0;
  if (hi - lo <= 1e-9 * std::max(std::abs(lo), std::abs(hi))) {
    const GaussRule& g = gauss_legendre(4);
    const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(c + hw * g.x[i]);
    return hw * s;
  }
  return ts.integrate(f, lo, hi, tol);
}

}  // namespace

namespace detail {

double beta_tail(double a, double b, double w1, double w2) {
  if (!(a > -1.0)) throw RangeError("beta_tail needs a > -1");
  if (!(w2 > w1)) return 0.0;
  // tanh-sinh copes with the y^q endpoint behaviour left by the substitutions
  thread_local bq::tanh_sinh<double> ts(12);
  constexpr double kTol = 1e-12;
  double total = 0.0;
  if (w1 < 1.0) {
    // w = v^{1/(1+a)} turns w^a dw into dv/(1+a)
    const double p = 1.0 / (1.0 + a);
    const double lo = std::pow(std::max(w1, 0.0), 1.0 + a);
    const double hi = std::pow(std::min(w2, 1.0), 1.0 + a);
    auto f = [&](double v) { return std::pow(1.0 + std::pow(v, p), b); };
    if (hi > lo) total += ts_integrate(ts, f, lo, hi, kTol) / (1.0 + a);
  }
  if (w2 > 1.0) {
    const double lo_w = std::max(w1, 1.0);
    const double e1 = -a - b - 1.0;
    if (e1 > 0.0) {
      // z = (lo_w / w)^{e1} maps [lo_w, w2] onto [z_lo, 1] with a bounded integrand
      const double q = 1.0 / e1;
      const double z_lo = std::isinf(w2) ? 0.0 : std::pow(lo_w / w2, e1);
      auto f = [&](double z) { return std::pow(1.0 + std::pow(z, q) / lo_w, b); };
      if (1.0 > z_lo) total += std::pow(lo_w, a + b + 1.0) / e1 * ts_integrate(ts, f, z_lo, 1.0, kTol);
    } else {
      if (std::isinf(w2)) return std::numeric_limits<double>::infinity();
      auto f = [&](double w) { return std::pow(w, a) * std::pow(1.0 + w, b); };
      total += ts_integrate(ts, f, lo_w, w2, kTol);
    }
  }
  return total;
}

double k_factor(double s, double sp, double delta, double as, double bs, double x_lo, double x_hi) {
  const double n = std::min(s, sp);
  if (x_hi > n) x_hi = n;
  if (!(x_hi > x_lo)) return 0.0;
  const double a = s <= sp ? as : bs;
  const double b = s <= sp ? bs : as;
  if (delta == 0.0) {
    if (x_hi >= n) return std::numeric_limits<double>::infinity();
    const double c = a + b + 1.0;
    const double top = std::isinf(x_lo) ? 0.0 : std::pow(n - x_lo, c);
    return (top - std::pow(n - x_hi, c)) / c;
  }
  const double w1 = (n - x_hi) / delta;
  const double w2 = std::isinf(x_lo) ? std::numeric_limits<double>::infinity() : (n - x_lo) / delta;
  return std::pow(delta, a + b + 1.0) * beta_tail(a, b, w1, w2);
}

}  // namespace detail

namespace {

using Integrand = std::function<double(double s, double sp, double delta)>;

struct Integrators {
  bq::tanh_sinh<double> inner{15};
  bq::tanh_sinh<double> outer{15};
};

Integrators& integrators() {
  thread_local Integrators it;
  return it;
}

/// ∫_{s0}^{s1} ds ∫_{p0}^{p1} dsp F(s, sp, |s - sp|), splitting the inner
/// range at the diagonal and the outer range at p0, p1.
double rect_integral(const Integrand& Fraw, double s0, double s1, double p0, double p1, double tol) {
  if (!(s1 > s0) || !(p1 > p0)) return 0.0;
  auto& ig = integrators();
  // nodes a few ulps from the diagonal can round delta to 0 in subnormal
  // territory; that set has measure zero
  auto F = [&](double s, double sp, double delta) {
    const double v = Fraw(s, sp, delta);
    return std::isfinite(v) ? v : 0.0;
  };

  auto inner = [&](double s) {
    double total = 0.0;
    if (s > p0 && s < p1) {
      auto left = [&](double sp, double spc) {
        // right endpoint is s; spc = s - sp there
        const double delta = spc >= 0.0 ? spc : s - sp;
        return F(s, sp, delta);
      };
      auto right = [&](double sp, double spc) {
        const double delta = spc <= 0.0 ? -spc : sp - s;
        return F(s, sp, delta);
      };
      // slivers below tanh-sinh's abscissa spacing carry negligible mass
      const double eps = 1e-13 * std::max({std::abs(p0), std::abs(p1), std::abs(s)});
      if (s - p0 > eps) total += ig.inner.integrate(left, p0, s, tol);
      if (p1 - s > eps) total += ig.inner.integrate(right, s, p1, tol);
    } else {
      auto whole = [&](double sp) { return F(s, sp, std::abs(s - sp)); };
      total += ig.inner.integrate(whole, p0, p1, tol);
    }
    return total;
  };

  std::array<double, 4> cuts{s0, p0, p1, s1};
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double lo = std::max(cuts[i], s0), hi = std::min(cuts[i + 1], s1);
    if (hi > lo) total += ig.outer.integrate(inner, lo, hi, tol * 10);
  }
  return total;
}

/// K(s,s') over (x_lo, min(s,s')) with cached constants on the full line.
class KFactor {
 public:
  KFactor(double as, double bs, double x_lo) : as_(as), bs_(bs), x_lo_(x_lo) {
    if (std::isinf(x_lo_)) {
      c_le_ = detail::beta_tail(as_, bs_, 0.0, std::numeric_limits<double>::infinity());
      c_gt_ = detail::beta_tail(bs_, as_, 0.0, std::numeric_limits<double>::infinity());
    }
  }

  double operator()(double s, double sp, double delta) const {
    if (std::isinf(x_lo_)) {
      if (delta == 0.0) return std::numeric_limits<double>::infinity();
      return std::pow(delta, as_ + bs_ + 1.0) * (s <= sp ? c_le_ : c_gt_);
    }
    return detail::k_factor(s, sp, delta, as_, bs_, x_lo_, std::min(s, sp));
  }

 private:
  double as_, bs_, x_lo_;
  double c_le_ = 0.0, c_gt_ = 0.0;
};

double ipow(double x, int d) {
  double r = x;
  for (int i = 1; i < d; ++i) r *= x;
  return r;
}

double covariance_substitution(int d, double t, double h1, double u, double h2, double x_lo, double tol) {
  const KFactor K(kernel_exponent(d, h1), kernel_exponent(d, h2), x_lo);
  Integrand F = [&](double s, double sp, double delta) { return ipow(K(s, sp, delta), d); };
  return factorial(d) * rect_integral(F, 0.0, t, 0.0, u, tol);
}

}  // namespace

namespace detail {

namespace {

/// Sigmoidal grading clusters cells at both segment ends.
struct GradedCell {
  double x;
  double w;
};

void append_segment(std::vector<GradedCell>& out, double lo, double hi, int n, double q) {
  if (!(hi > lo)) return;
  for (int i = 0; i < n; ++i) {
    const double xi = (i + 0.5) / n;
    const double a = std::pow(xi, q), b = std::pow(1.0 - xi, q);
    const double psi = a / (a + b);
    const double dpsi = q * std::pow(xi * (1.0 - xi), q - 1.0) / ((a + b) * (a + b));
    out.push_back({lo + (hi - lo) * psi, (hi - lo) * dpsi / n});
  }
}

std::vector<GradedCell> graded_mesh(double lo, double hi, const std::vector<double>& breaks, int n, double q) {
  std::vector<double> pts{lo};
  for (double b : breaks)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  std::vector<GradedCell> out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) append_segment(out, pts[i], pts[i + 1], n, q);
  return out;
}

}  // namespace

double covariance_midpoint(int d, double t, double h1, double u, double h2, double x_min, int n_cells) {
  check_args(d, h1);
  check_args(d, h2);
  if (t == 0.0 || u == 0.0) return 0.0;
  const double top = std::max(t, u);
  const std::vector<double> breaks{0.0, std::min(t, u), top};
  // the product of the two kernels behaves like gap^γ as two coordinates merge
  const double gamma = d >= 2 ? 2.0 * (h1 + h2 - 2.0) / d : 0.0;
  const double q = std::clamp(2.0 / (1.0 + gamma), 3.0, 6.0);
  std::vector<double> x(d);

  std::function<double(int, double)> level = [&](int l, double lo) -> double {
    const auto mesh = graded_mesh(lo, top, breaks, n_cells, l == 0 ? 3.0 : q);
    double acc = 0.0;
    for (const auto& c : mesh) {
      // a node that rounds onto the lower coordinate sits on the diagonal
      if (l > 0 && !(c.x > lo)) continue;
      x[l] = c.x;
      if (l + 1 == d) {
        const double g1 = integrated_kernel(d, h1, t, x);
        if (g1 == 0.0) continue;
        acc += c.w * g1 * integrated_kernel(d, h2, u, x);
      } else {
        acc += c.w * level(l + 1, c.x);
      }
    }
    return acc;
  };
  const double simplex = level(0, x_min);
  return factorial(d) * factorial(d) * simplex;
}

}  // namespace detail

double covariance_quadrature(int d, double t, double h1, double u, double h2, const QuadratureGrid& grid,
                             QuadDiagnostics* diag) {
  check_args(d, h1);
  check_args(d, h2);
  grid.validate();
  if (!(t >= 0.0 && u >= 0.0)) throw RangeError("covariance_quadrature needs t, u >= 0");
  if (t == 0.0 || u == 0.0) {
    if (diag) *diag = {};
    return 0.0;
  }
  // canonical argument order makes the result exactly symmetric
  if (std::tie(t, h1) > std::tie(u, h2)) {
    std::swap(t, u);
    std::swap(h1, h2);
  }
  const double x_lo = grid.effective_x_min(std::max(t, u));
  double value = 0.0, refined = 0.0;
  if (grid.scheme == QuadScheme::Substitution) {
    value = covariance_substitution(d, t, h1, u, h2, x_lo, grid.tolerance);
    if (diag) refined = covariance_substitution(d, t, h1, u, h2, x_lo, grid.tolerance * 1e-2);
  } else {
    if (std::isinf(x_lo)) throw RangeError("midpoint-graded scheme needs a finite x_min");
    value = detail::covariance_midpoint(d, t, h1, u, h2, x_lo, grid.n_cells);
    if (diag) refined = detail::covariance_midpoint(d, t, h1, u, h2, x_lo, 2 * grid.n_cells);
  }
  if (diag) {
    diag->value = value;
    diag->refined = refined;
    diag->relative_change = refined != 0.0 ? std::abs(refined - value) / std::abs(refined) : 0.0;
    diag->too_coarse = diag->relative_change > 0.01;
  }
  return value;
}

double l2_increment_norm(int d, double t, double h1, double u, double h2, const QuadratureGrid& grid) {
  check_args(d, h1);
  check_args(d, h2);
  grid.validate();
  if (!(t >= 0.0 && u >= 0.0)) throw RangeError("l2_increment_norm needs t, u >= 0");
  if (t == u && h1 == h2) return 0.0;
  if (std::tie(t, h1) < std::tie(u, h2)) {
    std::swap(t, u);
    std::swap(h1, h2);
  }
  // now t >= u; the kernel difference is A + B with
  // A = ∫_u^t f_{h1} ds and B = ∫_0^u (f_{h1} - f_{h2}) ds
  if (grid.scheme == QuadScheme::MidpointGraded) {
    const double v = covariance_quadrature(d, t, h1, t, h1, grid) + covariance_quadrature(d, u, h2, u, h2, grid) -
                     2.0 * covariance_quadrature(d, t, h1, u, h2, grid);
    return std::sqrt(std::max(0.0, v));
  }
  const double x_lo = grid.effective_x_min(t);
  const double a1 = kernel_exponent(d, h1), a2 = kernel_exponent(d, h2);
  const double tol = grid.tolerance;
  const KFactor K11(a1, a1, x_lo);
  double total = 0.0;
  if (t > u) {
    Integrand aa = [&](double s, double sp, double delta) { return ipow(K11(s, sp, delta), d); };
    total += rect_integral(aa, u, t, u, t, tol);
  }
  if (h1 != h2 && u > 0.0) {
    const KFactor K12(a1, a2, x_lo), K21(a2, a1, x_lo), K22(a2, a2, x_lo);
    if (t > u) {
      Integrand ab = [&](double s, double sp, double delta) {
        return ipow(K11(s, sp, delta), d) - ipow(K12(s, sp, delta), d);
      };
      total += 2.0 * rect_integral(ab, u, t, 0.0, u, tol);
    }
    Integrand bb = [&](double s, double sp, double delta) {
      return ipow(K11(s, sp, delta), d) - ipow(K12(s, sp, delta), d) - ipow(K21(s, sp, delta), d) +
             ipow(K22(s, sp, delta), d);
    };
    total += rect_integral(bb, 0.0, u, 0.0, u, tol);
  }
  return std::sqrt(std::max(0.0, factorial(d) * total));
}

DecompositionNorms decomposition_norms(int d, int j, std::int64_t k, double M, const HurstFunction& H,
                                       const QuadratureGrid& grid) {
  if (j < 0 || k < 0 || k >= (std::int64_t{1} << j)) throw RangeError("decomposition_norms needs 0 <= k < 2^j");
  if (!(M > 0.0)) throw RangeError("decomposition_norms needs M > 0");
  grid.validate();
  const double t1 = std::ldexp(static_cast<double>(k), -j);
  const double t2 = std::ldexp(static_cast<double>(k + 1), -j);
  const double h = H(t2);
  check_args(d, h);
  const double alpha = kernel_exponent(d, h);
  const double x_lo = grid.effective_x_min(t2);
  const double a = std::max((static_cast<double>(k) - M) * std::ldexp(1.0, -j), x_lo);
  const double tol = grid.tolerance;

  DecompositionNorms out;
  Integrand tilde = [&](double s, double sp, double delta) {
    return ipow(detail::k_factor(s, sp, delta, alpha, alpha, a, std::min(s, sp)), d);
  };
  out.tilde = std::sqrt(std::max(0.0, factorial(d) * rect_integral(tilde, t1, t2, t1, t2, tol)));

  // (K_a + T)^d - K_a^d expanded so no large terms cancel
  auto excess = [d](double ka, double tail) {
    double sum = 0.0, binom = 1.0;
    for (int i = 1; i <= d; ++i) {
      binom = binom * (d - i + 1) / i;
      sum += binom * ipow(tail, i) * (d - i > 0 ? ipow(ka, d - i) : 1.0);
    }
    return sum;
  };
  if (a > x_lo) {
    Integrand check = [&](double s, double sp, double delta) {
      const double ka = detail::k_factor(s, sp, delta, alpha, alpha, a, std::min(s, sp));
      const double tail = detail::k_factor(s, sp, delta, alpha, alpha, x_lo, a);
      return excess(ka, tail);
    };
    out.check = std::sqrt(std::max(0.0, factorial(d) * rect_integral(check, t1, t2, t1, t2, tol)));
  }
  if (!std::isinf(x_lo)) {
    Integrand beyond = [&](double s, double sp, double delta) {
      const double kin = detail::k_factor(s, sp, delta, alpha, alpha, x_lo, std::min(s, sp));
      const double tail = detail::k_factor(s, sp, delta, alpha, alpha, -std::numeric_limits<double>::infinity(), x_lo);
      return excess(kin, tail);
    };
    const double tail_norm = std::sqrt(std::max(0.0, factorial(d) * rect_integral(beyond, t1, t2, t1, t2, tol)));
    if (tail_norm > 0.1 * out.check)
      throw TruncationDominates("far tail beyond x_min carries " + std::to_string(tail_norm) +
                                " against a check norm of " + std::to_string(out.check));
  }
  const double h_left = H(t1);
  out.hat = (h_left == h) ? 0.0 : l2_increment_norm(d, t1, h, t1, h_left, grid);
  return out;
}

}  // namespace mfh
