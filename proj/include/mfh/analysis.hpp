#pragma once

// Path statistics: oscillations, dyadic leaders, Hölder and modulus
// estimators, LIL normalisation, local self-similarity and box counting.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mfh/core.hpp"

namespace mfh {

/// max - min of the samples with t in [a, b]; EmptyWindow if there are none.
double oscillation(const SamplePath& path, double a, double b);

/// |Δ_{j,k}| and leaders L_{j,k} for j_min <= j <= j_max, k < 2^j t_max.
struct LeaderPyramid {
  int j_min = 0;
  int j_max = 0;
  std::vector<std::vector<double>> increments;  ///< [j - j_min][k]
  std::vector<std::vector<double>> leaders;     ///< [j - j_min][k]

  const std::vector<double>& increments_at(int j) const { return increments.at(j - j_min); }
  const std::vector<double>& leaders_at(int j) const { return leaders.at(j - j_min); }
  /// Sub-interval sup: max |Δ_λ| over λ ⊆ λ_{j,k}, scales up to j_max.
  std::vector<std::vector<double>> nested;
};

/// The path must contain every point k 2^{-j_max} of its time range
/// (GridMismatch otherwise). Leaders are the sup over λ ⊆ 3λ_{j,k} down to
/// scale j_max.
LeaderPyramid build_leaders(const SamplePath& path, int j_min, int j_max);

/// Default fit range [j_min + 2, j_max - 1].
std::pair<int, int> default_fit_range(const LeaderPyramid& p);

/// Slope of log2 L_{j,k_j(t0)} against -j.
EstimatorReport pointwise_holder_estimate(const LeaderPyramid& p, double t0,
                                          std::optional<std::pair<int, int>> fit = std::nullopt);

/// Slope of log2 max_{k 2^-j in [a,b)} L_{j,k} against -j.
EstimatorReport uniform_holder_estimate(const LeaderPyramid& p, double a, double b,
                                        std::optional<std::pair<int, int>> fit = std::nullopt);

struct CurvePoint {
  int j = 0;
  double r = 0.0;
  double value = 0.0;
};

/// For r = 2^-j: sup_{t0 in [a,b]} Osc(path, [t0 - r, t0 + r]) / (r^{h_min} (log 1/r)^{d/2}).
/// d = 0 drops the log factor.
std::vector<CurvePoint> modulus_ratio_curve(const SamplePath& path, double a, double b, double h_min, int d,
                                            int j_lo, int j_hi);

/// max over the curve divided by its median.
double curve_peak_to_median(const std::vector<CurvePoint>& c);
/// Growth factor per 3 scales from a least-squares fit of log2 value on j.
double curve_growth_per_3_scales(const std::vector<CurvePoint>& c);

/// Osc(path, [t0 - r, t0 + r]) / (r^{h} (log log 1/r)^{d/2}) for r = 2^-j,
/// j in [j_lo, j_hi]; RangeError when j_lo < 4 (log log 1/r must be > 0).
std::vector<CurvePoint> lil_statistic(const SamplePath& path, double t0, double h_t0, int d, int j_lo, int j_hi);

/// running[i] = max of values[0..i].
std::vector<double> running_max(const std::vector<CurvePoint>& c);

struct LassScale {
  double eps = 0.0;
  double cov_error = 0.0;       ///< max relative entry error vs the tangent at h = H(t0)
  double control_error = 0.0;   ///< same against the control tangent h = H(t0) + control_shift
  double decile_error = 0.0;    ///< max |decile(Y_ε(1)) - decile(tangent)| / sd(tangent)
};

struct LassReport {
  double t0 = 0.0;  ///< after snapping to the 1/n_grid lattice
  double h_t0 = 0.0;
  std::vector<LassScale> scales;
  bool monotone = false;  ///< cov_error strictly decreasing along eps_list
};

/// Y_ε(t) = ε^{-H(t0)} (X(t0 + ε t) - X(t0)) from disc.n_paths replicas of
/// one multifractional path family, compared with the Hermite tangent process.
LassReport lass_test(int d, const HurstFunction& H, double t0, std::span<const double> eps_list,
                     std::span<const double> t_grid, const DiscretizationParams& disc, double control_shift = 0.1);

/// Column count N_ε = Σ (ceil(osc/ε) + 1) over half-open columns of width ε;
/// slope of log N_ε against log 1/ε. RangeError when ε < 2 grid steps.
EstimatorReport box_counting_dimension(const SamplePath& path, double a, double b, std::span<const double> eps_list);

/// Box counts behind box_counting_dimension.
std::vector<double> box_counts(const SamplePath& path, double a, double b, std::span<const double> eps_list);

/// Sample quantiles at probabilities q (linear interpolation, type 7).
std::vector<double> quantiles(std::vector<double> x, std::span<const double> q);

}  // namespace mfh
