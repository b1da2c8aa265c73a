#pragma once

// Domain types shared by every module: Hurst functions, dyadic indices,
// sample paths, field samples and regression reports.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mfh {

inline constexpr double kPi = 3.14159265358979323846;

enum class HurstKind { Constant, AffineClamped, Sinusoidal, CustomTable };

std::string to_string(HurstKind kind);
HurstKind hurst_kind_from_string(const std::string& name);

/// A map t -> H(t) with values in [h_min, h_max] ⊂ (1/2, 1).
///
/// Parameter layout per kind:
///   Constant       {h}
///   AffineClamped  {a, b, lo, hi}      H(t) = clamp(a + b t, lo, hi)
///   Sinusoidal     {a, b, c}           H(t) = a + b sin(c t)
///   CustomTable    {t0, v0, t1, v1, ...} linear between knots, flat outside
///
/// Instances are immutable; evaluation is pure.
class HurstFunction {
 public:
  HurstFunction() = default;

  double operator()(double t) const { return eval(t); }
  double eval(double t) const;

  HurstKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  double h_min() const { return h_min_; }
  double h_max() const { return h_max_; }
  std::optional<double> declared_gamma() const { return declared_gamma_; }
  bool is_constant() const { return h_min_ == h_max_; }

  /// min of H over [a, b], sampled on a fine grid plus the knots.
  double min_on(double a, double b) const;
  double max_on(double a, double b) const;

  std::string describe() const;

  friend HurstFunction make_hurst(HurstKind kind, std::vector<double> params);

 private:
  HurstKind kind_ = HurstKind::Constant;
  std::vector<double> params_{0.75};
  double h_min_ = 0.75;
  double h_max_ = 0.75;
  std::optional<double> declared_gamma_ = 1.0;
};

/// Builds and validates a Hurst function. Throws RangeError when any value
/// the function can take leaves (1/2, 1).
HurstFunction make_hurst(HurstKind kind, std::vector<double> params);

inline HurstFunction constant_hurst(double h) {
  return make_hurst(HurstKind::Constant, {h});
}

/// Dyadic interval [k 2^-j, (k+1) 2^-j).
struct DyadicIndex {
  int j = 0;
  std::int64_t k = 0;

  double left() const;
  double right() const;
  /// Indices of 3λ at the same scale, clipped at k = 0.
  std::vector<std::int64_t> neighbourhood() const;
  bool operator==(const DyadicIndex&) const = default;
};

/// The unique λ_{j,k} containing t (half-open convention).
DyadicIndex dyadic_of_point(double t, int j);

/// Discretisation of the Brownian driver and Monte Carlo setup.
///
/// The driver lives on uniform cells of width 1/n_grid over [x_min, t_max],
/// extended by geometrically growing far-field cells over
/// [x_min * far_extent, x_min] when far_extent > 1. far_extent = 1 reproduces
/// a hard truncation at x_min.
struct DiscretizationParams {
  int n_grid = 1024;
  double x_min = -8.0;
  double t_max = 1.0;
  double far_extent = 1e300;
  double far_ratio = 1.1;
  std::uint64_t seed = 0x4845524DULL;
  int n_paths = 1;
  /// Chebyshev nodes in h used to evaluate paths with a varying Hurst function.
  int h_nodes = 20;
  /// Upper bound on the estimated floating point work per replica.
  double work_budget = 2e10;
  /// When set, n_grid is capped per chaos order (2^14, 2^10, 2^7, 2^5 for d=1..4).
  bool desk_caps = true;

  void validate() const;
  double dx() const { return 1.0 / n_grid; }
};

struct PathMeta {
  int d = 1;
  HurstFunction hurst;
  DiscretizationParams disc;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

/// Values of X_d^{H(.)} on a sorted time grid.
struct SamplePath {
  std::vector<double> times;
  std::vector<double> values;
  PathMeta meta;

  std::size_t size() const { return times.size(); }
  /// Checks the invariants (sorted, finite, starts at 0 when times[0] = 0).
  void validate() const;
};

/// Row-major (time, h) matrix of one generator-field sample.
struct GeneratorFieldSample {
  std::vector<double> times;
  std::vector<double> h_values;
  std::vector<double> values;
  PathMeta meta;

  double at(std::size_t ti, std::size_t hi) const {
    return values[ti * h_values.size() + hi];
  }
  double& at(std::size_t ti, std::size_t hi) {
    return values[ti * h_values.size() + hi];
  }
  std::vector<double> column(std::size_t hi) const;
};

/// Output of every log-log regression in the library.
struct EstimatorReport {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_ = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> fit_range{0.0, 0.0};
  int n_points = 0;
};

/// Ordinary least squares y = intercept + slope x. Needs >= 3 points.
EstimatorReport fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace mfh
