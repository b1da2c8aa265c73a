#pragma once

// Monte Carlo engine for the generator field X_d(t, h).
//
// One replica draws a Brownian driver on cells of width 1/n_grid over
// [x_min, t_max] plus geometric far-field cells below x_min, then evaluates
//
//   X_d(t, h) = sum_{j1 < ... < jd} d! Gbar_{t,h}(m_j1, ..., m_jd) dB_j1 ... dB_jd
//
// with Gbar the integrated kernel at cell midpoints m_j. Writing Gbar as a time
// integral turns the tuple sum into ∫_0^t d! e_d(y(s)) ds, where
// y_j(s) = (s - m_j)_+^α dB_j and e_d is the elementary symmetric polynomial.
// e_d follows from the power sums sum_j y_j(s)^k, which are Toeplitz
// convolutions in the cell index, so each replica costs a few FFTs per
// quadrature node instead of O(N^d) tuple visits.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mfh/core.hpp"

namespace mfh {

/// Increments of one replica's driver.
struct BrownianDriver {
  double x_min = 0.0;
  double dx = 0.0;
  std::vector<double> increments;  ///< uniform cells, variance dx each
  std::vector<double> far_midpoints;
  std::vector<double> far_increments;
  std::uint64_t seed = 0;
  std::uint64_t replica = 0;
};

/// Deterministic in (disc.seed, replica). `negate` flips every increment.
BrownianDriver make_driver(const DiscretizationParams& disc, std::uint64_t replica, bool negate = false);

/// Largest n_grid allowed per chaos order when desk caps are on.
int desk_grid_cap(int d);

/// Rough floating point work of one replica, compared with disc.work_budget.
double estimated_work(int d, std::size_t n_h, const DiscretizationParams& disc);

/// Precomputes everything that does not depend on the driver, then evaluates
/// replicas. Evaluation is const and thread-safe.
class FieldSimulator {
 public:
  FieldSimulator(int d, std::vector<double> h_values, const DiscretizationParams& disc, double t_last);
  ~FieldSimulator();
  FieldSimulator(const FieldSimulator&) = delete;
  FieldSimulator& operator=(const FieldSimulator&) = delete;

  int order() const;
  std::size_t steps() const;  ///< output at t = r / n_grid for r = 0..steps()

  /// values[r * n_h + hi] = X_d(r / n_grid, h_values[hi]).
  std::vector<double> run(const BrownianDriver& driver) const;
  std::vector<double> run(std::uint64_t replica, bool negate = false) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Index r with t = r / n_grid, or GridMismatch.
std::int64_t grid_step(double t, int n_grid);

GeneratorFieldSample simulate_field(int d, std::span<const double> t_grid, std::span<const double> h_grid,
                                    const DiscretizationParams& disc, std::uint64_t replica = 0);

/// All disc.n_paths replicas, computed in parallel.
std::vector<GeneratorFieldSample> simulate_field_replicas(int d, std::span<const double> t_grid,
                                                          std::span<const double> h_grid,
                                                          const DiscretizationParams& disc);

/// X_d(t_i, H(t_i)) from one shared driver. Non-constant H is evaluated by
/// Chebyshev interpolation in h over [h_min, h_max] with disc.h_nodes nodes.
SamplePath simulate_mfh_path(int d, const HurstFunction& H, std::span<const double> t_grid,
                             const DiscretizationParams& disc, std::uint64_t replica = 0);

std::vector<SamplePath> simulate_mfh_replicas(int d, const HurstFunction& H, std::span<const double> t_grid,
                                              const DiscretizationParams& disc);

/// Recomputes the sample with every driver increment negated.
GeneratorFieldSample sign_flip_transform(const GeneratorFieldSample& field);

/// Exact Gaussian sampler with covariance (c_h/2)(t^{2h} + s^{2h} - |t - s|^{2h}).
/// c_h is the order-1 variance at t = 1 from covariance_quadrature when
/// h > 1/2 and 1 otherwise.
class FbmOracle {
 public:
  FbmOracle(double h, std::vector<double> t_grid);
  ~FbmOracle();
  FbmOracle(const FbmOracle&) = delete;
  FbmOracle& operator=(const FbmOracle&) = delete;

  double c_h() const;
  double covariance(double t, double s) const;
  SamplePath sample(std::uint64_t seed, std::uint64_t replica = 0) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SamplePath exact_fbm_path(double h, std::span<const double> t_grid, std::uint64_t seed, std::uint64_t replica = 0);

/// Uniform grid k / 2^j for k = 0..2^j * t_max.
std::vector<double> dyadic_grid(int j, double t_max = 1.0);

}  // namespace mfh
