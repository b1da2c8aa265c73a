#pragma once

// Hermite kernels, their time integrals, and L2 inner products by quadrature.
//
// Inner products are computed in time rather than space: for kernels
// G_{t,h}(x) = ∫_0^t prod_l (s - x_l)_+^α ds the inner product over a box
// (x_lo, ∞)^d is ∫∫ K(s, s')^d ds ds' with the one-dimensional
// K(s, s') = ∫_{x_lo}^{min(s,s')} (s - x)^{α1} (s' - x)^{α2} dx.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "mfh/core.hpp"

namespace mfh {

/// Kernel exponent (h - 1)/d - 1/2.
inline double kernel_exponent(int d, double h) { return (h - 1.0) / d - 0.5; }

/// d!
double factorial(int d);

enum class QuadScheme { Substitution, MidpointGraded };

std::string to_string(QuadScheme s);
QuadScheme quad_scheme_from_string(const std::string& name);

/// Spatial truncation and resolution of a covariance quadrature.
///
/// Without an explicit x_min the substitution scheme integrates over the whole
/// half-line and the midpoint-graded scheme truncates at -16 (t + 1).
struct QuadratureGrid {
  std::optional<double> x_min;
  double x_max = std::numeric_limits<double>::infinity();
  int n_cells = 48;
  QuadScheme scheme = QuadScheme::Substitution;
  /// Relative tolerance of the substitution scheme's adaptive rules.
  double tolerance = 1e-10;

  void validate() const;
  /// x_min in effect for a problem whose largest time is t.
  double effective_x_min(double t) const;
};

/// Filled when a caller wants the resolution check.
struct QuadDiagnostics {
  double value = 0.0;
  double refined = 0.0;
  double relative_change = 0.0;
  bool too_coarse = false;
};

/// prod_l (s - x_l)_+^α. Zero when any x_l > s; SingularEvaluation when some
/// x_l == s.
double kernel_eval(int d, double h, double s, std::span<const double> x);

/// G_{t,h}(x) = ∫_0^t f_h(s, x) ds. Exact for d = 1; for d >= 2 a composite
/// Gauss-Legendre rule in v = (s - max x)^{1/(1+α)} on geometric panels with
/// `nodes` points each. +inf when the two largest coordinates tie below t.
double integrated_kernel(int d, double h, double t, std::span<const double> x, int nodes = 10);

/// d! <G_{t,h1}, G_{u,h2}> over (x_min, ∞)^d.
double covariance_quadrature(int d, double t, double h1, double u, double h2,
                             const QuadratureGrid& grid = {}, QuadDiagnostics* diag = nullptr);

/// ||X_d(t,h1) - X_d(u,h2)||_{L2}. The quadratic form is assembled inside one
/// quadrature so the cancellation between nearby arguments happens pointwise.
double l2_increment_norm(int d, double t, double h1, double u, double h2,
                         const QuadratureGrid& grid = {});

struct DecompositionNorms {
  double tilde = 0.0;
  double check = 0.0;
  double hat = 0.0;
};

/// L2 norms of the localized part, far part and Hurst-drift part of the
/// dyadic increment Δ_{j,k} with enlargement M.
DecompositionNorms decomposition_norms(int d, int j, std::int64_t k, double M, const HurstFunction& H,
                                       const QuadratureGrid& grid = {});

namespace detail {

/// ∫_{w1}^{w2} w^a (1 + w)^b dw for a > -1 (and a + b < -1 when w2 = ∞).
double beta_tail(double a, double b, double w1, double w2);

/// ∫_{x_lo}^{x_hi} (s - x)^{as} (s' - x)^{bs} dx for x_hi <= min(s, s').
/// `delta` is |s - s'| supplied by the caller at full precision.
double k_factor(double s, double sp, double delta, double as, double bs, double x_lo, double x_hi);

/// Midpoint-graded spatial scheme, exposed for the scheme comparison.
double covariance_midpoint(int d, double t, double h1, double u, double h2, double x_min, int n_cells);

}  // namespace detail

}  // namespace mfh
