#pragma once

// Second-chaos machinery: discretised Hilbert-Schmidt operators, their
// spectra, chi-square sampling and Malliavin-norm diagnostics.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mfh/core.hpp"

namespace mfh {

/// Cells carrying a piecewise-constant (Galerkin) or point (Nyström)
/// discretisation. `weights[i]` is the cell width, `nodes[i]` its midpoint.
struct SpectralGrid {
  std::vector<double> edges;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  static SpectralGrid uniform(double a, double b, int n);
  /// Uniform cells on [top - 2 span, top] and geometric cells (ratio) below,
  /// down to top - reach * span.
  static SpectralGrid graded(double top, double span, int n_uniform, double ratio = 1.1, double reach = 1e12);
};

/// Sorted spectrum of a symmetric kernel on a grid.
struct SpectralModel {
  std::vector<double> eigenvalues;   ///< descending |λ|
  std::vector<double> eigenvectors;  ///< column-major n x n, column j = e_j at the nodes
  SpectralGrid grid;
  std::string kernel_id;
  double frobenius_sq = 0.0;         ///< weighted ||F||^2 computed directly from the matrix

  std::size_t size() const { return eigenvalues.size(); }
  double eigenvector(std::size_t j, std::size_t i) const { return eigenvectors[j * grid.size() + i]; }
  double sum_sq() const;
  /// Count of |λ_j| > 1e-10 |λ_1|.
  std::size_t numerical_rank() const;
};

using BivariateKernel = std::function<double(double, double)>;

/// Nyström: eigen-decomposes W^{1/2} F W^{1/2} with F_ij = f(x_i, x_j).
/// ValidationError when |f(x,y) - f(y,x)| > 1e-10 on some node pair.
SpectralModel spectral_decompose(const BivariateKernel& f, const SpectralGrid& grid, std::string kernel_id = "custom");

/// Same, starting from the symmetric matrix of cell averages (or point values).
SpectralModel spectral_decompose_matrix(std::vector<double> F, const SpectralGrid& grid, std::string kernel_id);

/// Cell-average matrix of the d = 2 increment kernel
/// f = G_{t,h1} - G_{u,h2} on the grid (u may be 0).
std::vector<double> increment_kernel_matrix(double t, double h1, double u, double h2, const SpectralGrid& grid);

/// Galerkin model of X_2(t, h1) - X_2(u, h2) = I_2(f) with the default
/// graded grid; `n_uniform` controls resolution.
SpectralModel increment_model(double t, double h1, double u, double h2, int n_uniform = 256);

/// Relative change of the leading eigenvalues (up to 10) when n_uniform
/// doubles; the spectrum is flagged when it exceeds 2%.
double spectrum_resolution_change(double t, double h1, double u, double h2, int n_uniform);

/// Σ λ_j (Z_j^2 - 1) truncated at the numerical rank; sample i uses its own
/// counter stream so results do not depend on thread count.
std::vector<double> sample_chaos2(const SpectralModel& model, std::size_t n, std::uint64_t seed);

/// 2 (Σ λ_j^2 Z_j^2)^{1/2} with the Z of sample_chaos2 (paired).
std::vector<double> malliavin_norm_samples(const SpectralModel& model, std::size_t n, std::uint64_t seed);

struct MomentEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  /// Top 1% of the summands carry more than half the mean.
  bool heavy_tail = false;
};

/// Mean and standard error of G^{-2r} for 1 < r < 3/2. InsufficientRank unless
/// more than 2r eigenvalues are nonzero (the moment is finite iff N > 2r).
MomentEstimate negative_moment_estimate(std::span<const double> g_samples, double r, std::size_t rank);
MomentEstimate negative_moment_estimate(const SpectralModel& model, std::span<const double> g_samples, double r);

struct SmallBallPoint {
  double x = 0.0;
  double p = 0.0;
  double lo = 0.0;  ///< 95% Wilson interval
  double hi = 0.0;
  std::size_t hits = 0;
};

struct SmallBallCurve {
  std::vector<SmallBallPoint> points;
  std::optional<EstimatorReport> fit;  ///< log P vs log x over 1e-3 <= P <= 1e-1
  bool undersampled = false;           ///< fewer than 100 samples below max x
};

/// Empirical P(|X| <= x) from samples.
SmallBallCurve small_ball_curve(std::span<const double> samples, std::span<const double> x_grid);

/// Samples I_2 from the model, then small_ball_curve.
SmallBallCurve small_ball_curve_2(const SpectralModel& model, std::span<const double> x_grid, std::size_t n,
                                  std::uint64_t seed);

/// x grid geometric over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

/// Writes `<stem>.eigen.csv`, `<stem>.vectors.bin` and `<stem>.model.json`
/// (grid, kernel_id, FNV-1a checksum of the binary).
void save_model(const SpectralModel& model, const std::filesystem::path& stem);
SpectralModel load_model(const std::filesystem::path& stem);

}  // namespace mfh
