#include "mfh/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "mfh/error.hpp"
#include "mfh/io.hpp"
#include "mfh/kernels.hpp"
#include "mfh/parallel.hpp"
#include "mfh/quad.hpp"
#include "mfh/rng.hpp"

namespace mfh {

namespace {

constexpr double kRankThreshold = 1e-10;

SpectralGrid from_edges(std::vector<double> edges) {
  SpectralGrid g;
  g.edges = std::move(edges);
  for (std::size_t i = 0; i + 1 < g.edges.size(); ++i) {
    g.nodes.push_back(0.5 * (g.edges[i] + g.edges[i + 1]));
    g.weights.push_back(g.edges[i + 1] - g.edges[i]);
  }
  return g;
}

/// a^p - b^p for a > b >= 0 without cancellation.
double pow_diff(double a, double b, double p) {
  if (b <= 0.0) return std::pow(a, p);
  return -std::pow(a, p) * std::expm1(p * std::log1p(-(a - b) / a));
}

/// ∫_{e_i}^{e_{i+1}} (s - x)_+^α dx for every cell.
void cell_integrals(const SpectralGrid& g, double alpha, double s, double* out) {
  const double p = alpha + 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = s - g.edges[i];
    if (a <= 0.0) {
      out[i] = 0.0;
      continue;
    }
    const double b = s - g.edges[i + 1];
    out[i] = pow_diff(a, std::max(b, 0.0), p) / p;
  }
}

/// Adds sign * ∫_0^top A(s) A(s)^T ds to F, with A the cell integrals.
void accumulate_gram(const SpectralGrid& g, double alpha, double top, double sign, Eigen::MatrixXd& F) {
  if (top <= 0.0) return;
  std::vector<double> breaks{0.0};
  for (double e : g.edges)
    if (e > 0.0 && e < top) breaks.push_back(e);
  breaks.push_back(top);
  const auto& gl = gauss_legendre(8);
  const std::size_t n = g.size();
  const std::size_t n_s = (breaks.size() - 1) * gl.x.size();
  Eigen::MatrixXd A(n, n_s);
  std::size_t col = 0;
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double lo = breaks[b], len = breaks[b + 1] - breaks[b];
    for (std::size_t q = 0; q < gl.x.size(); ++q, ++col) {
      // s = lo + len v^3 flattens the (s - edge)^{α+1} kink at the left end
      const double v = 0.5 * (gl.x[q] + 1.0);
      const double w = 0.5 * gl.w[q] * 3.0 * len * v * v;
      cell_integrals(g, alpha, lo + len * v * v * v, A.col(col).data());
      A.col(col) *= std::sqrt(w);
    }
  }
  F.selfadjointView<Eigen::Lower>().rankUpdate(A, sign);
}

}  // namespace

SpectralGrid SpectralGrid::uniform(double a, double b, int n) {
  if (!(b > a) || n < 1) throw ValidationError("spectral grid needs a < b and n >= 1");
  std::vector<double> e(n + 1);
  for (int i = 0; i <= n; ++i) e[i] = a + (b - a) * i / n;
  e[n] = b;
  return from_edges(std::move(e));
}

SpectralGrid SpectralGrid::graded(double top, double span, int n_uniform, double ratio, double reach) {
  if (!(span > 0.0) || n_uniform < 2 || !(ratio > 1.0) || !(reach > 2.0))
    throw ValidationError("graded spectral grid: need span > 0, n_uniform >= 2, ratio > 1, reach > 2");
  const double dx = 2.0 * span / n_uniform;
  const double x_a = top - 2.0 * span, lo = top - reach * span;
  std::vector<double> below;
  for (double e = x_a, w = dx; e > lo;) {
    w *= ratio;
    e = std::max(e - w, lo);
    below.push_back(e);
  }
  std::vector<double> edges(below.rbegin(), below.rend());
  for (int i = 0; i <= n_uniform; ++i) edges.push_back(i == n_uniform ? top : x_a + dx * i);
  return from_edges(std::move(edges));
}

double SpectralModel::sum_sq() const {
  double s = 0.0;
  for (double l : eigenvalues) s += l * l;
  return s;
}

std::size_t SpectralModel::numerical_rank() const {
  if (eigenvalues.empty() || eigenvalues[0] == 0.0) return 0;
  const double cut = kRankThreshold * std::abs(eigenvalues[0]);
  std::size_t r = 0;
  while (r < eigenvalues.size() && std::abs(eigenvalues[r]) > cut) ++r;
  return r;
}

SpectralModel spectral_decompose_matrix(std::vector<double> F, const SpectralGrid& grid, std::string kernel_id) {
  const std::size_t n = grid.size();
  if (F.size() != n * n) throw ValidationError("kernel matrix does not match the grid");
  Eigen::MatrixXd M(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) M(i, j) = std::sqrt(grid.weights[i]) * F[i * n + j] * std::sqrt(grid.weights[j]);

  SpectralModel model;
  model.grid = grid;
  model.kernel_id = std::move(kernel_id);
  model.frobenius_sq = M.squaredNorm();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) throw NotPositiveDefinite("symmetric eigensolver did not converge");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(ev[a]) > std::abs(ev[b]); });
  model.eigenvalues.resize(n);
  model.eigenvectors.resize(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    model.eigenvalues[j] = ev[order[j]];
    auto v = es.eigenvectors().col(order[j]);
    // fix the sign so the largest entry is positive
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    const double sgn = v[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) model.eigenvectors[j * n + i] = sgn * v[i] / std::sqrt(grid.weights[i]);
  }
  return model;
}

SpectralModel spectral_decompose(const BivariateKernel& f, const SpectralGrid& grid, std::string kernel_id) {
  const std::size_t n = grid.size();
  if (n == 0) throw ValidationError("spectral grid is empty");
  std::vector<double> F(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) F[i * n + j] = f(grid.nodes[i], grid.nodes[j]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(F[i * n + j] - F[j * n + i]) > 1e-10) {
        std::ostringstream os;
        os << "kernel is not symmetric: |f(x,y) - f(y,x)| = " << std::abs(F[i * n + j] - F[j * n + i])
           << " at x=" << grid.nodes[i] << ", y=" << grid.nodes[j];
        throw ValidationError(os.str());
      }
  return spectral_decompose_matrix(std::move(F), grid, std::move(kernel_id));
}

std::vector<double> increment_kernel_matrix(double t, double h1, double u, double h2, const SpectralGrid& grid) {
  for (double h : {h1, h2})
    if (!(h > 0.5 && h < 1.0)) throw RangeError("hurst value must lie in (0.5, 1)");
  if (!(t >= 0.0 && u >= 0.0)) throw RangeError("times must be >= 0");
  const std::size_t n = grid.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  accumulate_gram(grid, kernel_exponent(2, h1), t, 1.0, G);
  accumulate_gram(grid, kernel_exponent(2, h2), u, -1.0, G);
  std::vector<double> F(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j)
      F[i * n + j] = F[j * n + i] = G(i, j) / (grid.weights[i] * grid.weights[j]);
  return F;
}

SpectralModel increment_model(double t, double h1, double u, double h2, int n_uniform) {
  const double top = std::max(t, u);
  const double span = std::abs(t - u) > 0.0 && std::min(t, u) > 0.0 ? std::abs(t - u) : top;
  if (!(span > 0.0)) throw ValidationError("increment kernel vanishes: t = u = 0");
  auto grid = SpectralGrid::graded(top, span, n_uniform);
  std::ostringstream id;
  id << "increment d=2 t=" << format_double(t) << " h1=" << format_double(h1) << " u=" << format_double(u)
     << " h2=" << format_double(h2) << " n_uniform=" << n_uniform;
  return spectral_decompose_matrix(increment_kernel_matrix(t, h1, u, h2, grid), grid, id.str());
}

double spectrum_resolution_change(double t, double h1, double u, double h2, int n_uniform) {
  const auto a = increment_model(t, h1, u, h2, n_uniform);
  const auto b = increment_model(t, h1, u, h2, 2 * n_uniform);
  const std::size_t m = std::min<std::size_t>({10, a.numerical_rank(), b.numerical_rank()});
  double worst = 0.0;
  for (std::size_t j = 0; j < m; ++j)
    worst = std::max(worst, std::abs(a.eigenvalues[j] - b.eigenvalues[j]) / std::abs(b.eigenvalues[0]));
  return worst;
}

std::vector<double> sample_chaos2(const SpectralModel& model, std::size_t n, std::uint64_t seed) {
  const std::size_t rank = model.numerical_rank();
  std::vector<double> out(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> z(rank);
    NormalStream(seed, Stream::Spectral, i).fill(z.data(), rank);
    double acc = 0.0;
    for (std::size_t j = 0; j < rank; ++j) acc += model.eigenvalues[j] * (z[j] * z[j] - 1.0);
    out[i] = acc;
  });
  return out;
}

std::vector<double> malliavin_norm_samples(const SpectralModel& model, std::size_t n, std::uint64_t seed) {
  const std::size_t rank = model.numerical_rank();
  std::vector<double> out(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> z(rank);
    NormalStream(seed, Stream::Spectral, i).fill(z.data(), rank);
    double acc = 0.0;
    for (std::size_t j = 0; j < rank; ++j) acc += model.eigenvalues[j] * model.eigenvalues[j] * z[j] * z[j];
    out[i] = 2.0 * std::sqrt(acc);
  });
  return out;
}

MomentEstimate negative_moment_estimate(std::span<const double> g, double r, std::size_t rank) {
  if (!(r > 1.0 && r < 1.5)) throw RangeError("negative moment order r must lie in (1, 3/2)");
  const auto need = static_cast<std::size_t>(std::floor(2.0 * r)) + 1;  // N > 2r
  if (rank < need) {
    std::ostringstream os;
    os << "negative moment of order " << r << " needs at least " << need << " nonzero eigenvalues, got " << rank;
    throw InsufficientRank(os.str());
  }
  if (g.size() < 2) throw ValidationError("negative moment needs at least 2 samples");
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0.0)) throw ValidationError("Malliavin norm samples must be > 0");
    v[i] = std::pow(g[i], -2.0 * r);
  }
  const double n = static_cast<double>(v.size());
  const double mean = pairwise_sum(v.data(), v.size()) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  MomentEstimate m;
  m.estimate = mean;
  m.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  std::sort(v.begin(), v.end(), std::greater<>());
  const auto top = static_cast<std::size_t>(std::ceil(0.01 * n));
  m.heavy_tail = std::accumulate(v.begin(), v.begin() + top, 0.0) > 0.5 * mean * n;
  return m;
}

MomentEstimate negative_moment_estimate(const SpectralModel& model, std::span<const double> g, double r) {
  return negative_moment_estimate(g, r, model.numerical_rank());
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw ValidationError("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  x.back() = hi;
  return x;
}

SmallBallCurve small_ball_curve(std::span<const double> samples, std::span<const double> x_grid) {
  if (samples.empty()) throw ValidationError("small-ball curve needs samples");
  for (std::size_t i = 0; i < x_grid.size(); ++i)
    if (!(x_grid[i] > 0.0) || (i > 0 && !(x_grid[i] > x_grid[i - 1])))
      throw ValidationError("small-ball x grid must be positive and increasing");
  std::vector<double> a(samples.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(samples[i]);
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  constexpr double z = 1.959963984540054;
  SmallBallCurve c;
  std::vector<double> lx, lp;
  for (double x : x_grid) {
    SmallBallPoint pt;
    pt.x = x;
    pt.hits = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin());
    pt.p = pt.hits / n;
    const double centre = (pt.p + z * z / (2 * n)) / (1 + z * z / n);
    const double half = z / (1 + z * z / n) * std::sqrt(pt.p * (1 - pt.p) / n + z * z / (4 * n * n));
    pt.lo = std::max(0.0, centre - half);
    pt.hi = std::min(1.0, centre + half);
    if (pt.hits > 0 && pt.p >= 1e-3 && pt.p <= 1e-1) {
      lx.push_back(std::log(x));
      lp.push_back(std::log(pt.p));
    }
    c.points.push_back(pt);
  }
  c.undersampled = c.points.empty() || c.points.back().hits < 100;
  if (lx.size() >= 3) c.fit = fit_line(lx, lp);
  return c;
}

SmallBallCurve small_ball_curve_2(const SpectralModel& model, std::span<const double> x_grid, std::size_t n,
                                  std::uint64_t seed) {
  const auto s = sample_chaos2(model, n, seed);
  return small_ball_curve(s, x_grid);
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return stem.string() + suffix;
}

}  // namespace

void save_model(const SpectralModel& model, const std::filesystem::path& stem) {
  CsvTable t;
  t.header = {"index", "eigenvalue"};
  for (std::size_t j = 0; j < model.size(); ++j) t.rows.push_back({static_cast<double>(j), model.eigenvalues[j]});
  write_csv(t, with_suffix(stem, ".eigen.csv"));

  const std::size_t bytes = model.eigenvectors.size() * sizeof(double);
  {
    std::ofstream out(with_suffix(stem, ".vectors.bin"), std::ios::binary);
    if (!out) throw IoError("cannot write " + with_suffix(stem, ".vectors.bin").string());
    out.write(reinterpret_cast<const char*>(model.eigenvectors.data()), static_cast<std::streamsize>(bytes));
  }
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kernel_id"] = model.kernel_id;
  j["n"] = model.grid.size();
  j["edges"] = model.grid.edges;
  j["frobenius_sq"] = model.frobenius_sq;
  j["checksum"] = hex64(fnv1a(model.eigenvectors.data(), bytes));
  write_text(with_suffix(stem, ".model.json"), j.dump(2) + "\n");
}

SpectralModel load_model(const std::filesystem::path& stem) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(with_suffix(stem, ".model.json")));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad spectral model header: ") + e.what());
  }
  SpectralModel m;
  m.grid = from_edges(j.at("edges").get<std::vector<double>>());
  m.kernel_id = j.at("kernel_id").get<std::string>();
  m.frobenius_sq = j.at("frobenius_sq").get<double>();
  const std::size_t n = j.at("n").get<std::size_t>();
  if (n != m.grid.size()) throw IoError("spectral model header: n does not match the edges");

  const auto t = read_csv(with_suffix(stem, ".eigen.csv"));
  if (t.rows.size() != n) throw IoError("spectral model: eigenvalue count does not match the header");
  for (const auto& row : t.rows) m.eigenvalues.push_back(row.at(1));

  m.eigenvectors.resize(n * n);
  std::ifstream in(with_suffix(stem, ".vectors.bin"), std::ios::binary);
  if (!in) throw IoError("cannot read " + with_suffix(stem, ".vectors.bin").string());
  in.read(reinterpret_cast<char*>(m.eigenvectors.data()), static_cast<std::streamsize>(n * n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * n * sizeof(double)))
    throw IoError("spectral model: eigenvector file is truncated");
  if (hex64(fnv1a(m.eigenvectors.data(), n * n * sizeof(double))) != j.at("checksum").get<std::string>())
    throw IoError("spectral model: eigenvector checksum mismatch");
  return m;
}

}  // namespace mfh
