#include "mfh/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <fftw3.h>

#include "mfh/error.hpp"
#include "mfh/kernels.hpp"
#include "mfh/parallel.hpp"
#include "mfh/quad.hpp"
#include "mfh/rng.hpp"

namespace mfh {

namespace {

constexpr int kNodesA = 10;  // Gauss nodes on the half cell right of a midpoint (after substitution)
constexpr int kNodesB = 8;   // Gauss nodes on the half cell left of the next midpoint
constexpr int kFarCheb = 16;

std::mutex& fftw_mutex() {
  static std::mutex mu;
  return mu;
}

/// Smallest 2^a 3^b 5^c >= n.
std::size_t smooth_size(std::size_t n) {
  std::size_t best = std::size_t{1} << 62;
  for (std::size_t p2 = 1; p2 < 2 * n + 2; p2 *= 2)
    for (std::size_t p3 = p2; p3 < 2 * n + 2; p3 *= 3)
      for (std::size_t p5 = p3; p5 < 2 * n + 2; p5 *= 5)
        if (p5 >= n) best = std::min(best, p5);
  return best;
}

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwDeleter>;
using CplxBuf = std::unique_ptr<fftw_complex[], FftwDeleter>;

RealBuf real_buf(std::size_t n) { return RealBuf(static_cast<double*>(fftw_malloc(sizeof(double) * n))); }
CplxBuf cplx_buf(std::size_t n) {
  return CplxBuf(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

struct FarCells {
  std::vector<double> midpoints;
  std::vector<double> widths;
};

// Geometric cells over [x_min * far_extent, x_min], edges x_min r^k.
FarCells far_cells(const DiscretizationParams& disc) {
  FarCells fc;
  if (!(disc.far_extent > 1.0)) return fc;
  const double stop = disc.x_min * disc.far_extent;
  for (double e = disc.x_min; e > stop;) {
    const double nxt = std::max(e * disc.far_ratio, stop);
    fc.midpoints.push_back(0.5 * (e + nxt));
    fc.widths.push_back(e - nxt);
    e = nxt;
  }
  return fc;
}

void check_h(double h) {
  if (!(h > 0.5 && h < 1.0)) throw RangeError("hurst value must lie in (0.5, 1)");
}

}  // namespace

int desk_grid_cap(int d) {
  switch (d) {
    case 1: return 1 << 14;
    case 2: return 1 << 10;
    case 3: return 1 << 7;
    case 4: return 1 << 5;
    default: return 1 << 4;
  }
}

double estimated_work(int d, std::size_t n_h, const DiscretizationParams& disc) {
  const double n_u = (disc.t_max - disc.x_min) * disc.n_grid;
  const double m = 2.0 * n_u + 2.0;
  const double fft = 2.5 * m * std::log2(m);
  const double per_h = d == 1 ? fft : (kNodesA + kNodesB) * d * (fft + 10.0 * n_u);
  return static_cast<double>(n_h) * per_h + d * fft;
}

std::int64_t grid_step(double t, int n_grid) {
  const double x = t * n_grid;
  const double r = std::round(x);
  if (!(t >= 0.0) || std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)))
    throw GridMismatch("time " + std::to_string(t) + " is not a multiple of 1/n_grid = 1/" +
                       std::to_string(n_grid));
  return static_cast<std::int64_t>(r);
}

std::vector<double> dyadic_grid(int j, double t_max) {
  const auto n = static_cast<std::int64_t>(std::floor(std::ldexp(t_max, j)));
  std::vector<double> out(n + 1);
  for (std::int64_t k = 0; k <= n; ++k) out[k] = std::ldexp(static_cast<double>(k), -j);
  return out;
}

BrownianDriver make_driver(const DiscretizationParams& disc, std::uint64_t replica, bool negate) {
  disc.validate();
  BrownianDriver drv;
  drv.x_min = disc.x_min;
  drv.dx = disc.dx();
  drv.seed = disc.seed;
  drv.replica = replica;
  const auto n_u = static_cast<std::size_t>(std::llround((disc.t_max - disc.x_min) * disc.n_grid));
  drv.increments.resize(n_u);
  NormalStream(disc.seed, Stream::Driver, replica).fill(drv.increments.data(), n_u);
  const double sd = std::sqrt(drv.dx);
  for (auto& v : drv.increments) v *= negate ? -sd : sd;

  auto fc = far_cells(disc);
  drv.far_midpoints = std::move(fc.midpoints);
  drv.far_increments.resize(fc.widths.size());
  NormalStream(disc.seed, Stream::FarDriver, replica).fill(drv.far_increments.data(), fc.widths.size());
  for (std::size_t f = 0; f < fc.widths.size(); ++f) {
    const double v = std::sqrt(fc.widths[f]) * drv.far_increments[f];
    drv.far_increments[f] = negate ? -v : v;
  }
  return drv;
}

struct FieldSimulator::Impl {
  int d = 1;
  std::vector<double> h_values;
  DiscretizationParams disc;
  double dx = 0.0;
  std::size_t n_u = 0;   // uniform cells
  std::size_t i0 = 0;    // first cell right of 0
  std::size_t steps = 0; // largest output index r
  std::size_t M = 0;     // FFT length
  std::size_t MC = 0;    // M / 2 + 1
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  struct Node {
    double tau;
    double w_far;  // weight of e_d(far)
    double w_act;  // weight of dB_i e_{d-1}(far) (A nodes) or of y_i e_{d-1} (B nodes)
    bool a_panel;
  };

  struct HData {
    double alpha = 0.0;
    std::vector<Node> nodes;
    std::vector<std::complex<double>> kernels;  // (node * d + k - 1) * MC
    std::vector<double> cheb_w;                 // far-field interpolation weights
    std::vector<double> far_table;              // [c * n_far + f]: kernel of far cell f at Chebyshev node c
  };
  std::size_t n_far = 0;
  std::vector<HData> hdata;
  double cheb_lo = 0.0, cheb_hi = 1.0;
  std::vector<double> cheb_nodes;  // far-field Chebyshev nodes in s (or t for d = 1)

  ~Impl() {
    std::lock_guard lock(fftw_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }

  double midpoint(std::size_t i) const { return disc.x_min + (static_cast<double>(i) + 0.5) * dx; }

  void transform_kernel(std::vector<double>& c, std::complex<double>* out) const {
    RealBuf in = real_buf(M);
    CplxBuf spec = cplx_buf(MC);
    std::copy(c.begin(), c.end(), in.get());
    fftw_execute_dft_r2c(fwd, in.get(), spec.get());
    const double scale = 1.0 / static_cast<double>(M);
    for (std::size_t i = 0; i < MC; ++i) out[i] = std::complex<double>(spec[i][0], spec[i][1]) * scale;
  }

  void setup() {
    dx = disc.dx();
    n_u = static_cast<std::size_t>(std::llround((disc.t_max - disc.x_min) * disc.n_grid));
    i0 = static_cast<std::size_t>(std::llround(-disc.x_min * disc.n_grid));
    M = smooth_size(2 * n_u + 2 - i0);
    MC = M / 2 + 1;
    {
      std::lock_guard lock(fftw_mutex());
      RealBuf r = real_buf(M);
      CplxBuf c = cplx_buf(MC);
      fwd = fftw_plan_dft_r2c_1d(static_cast<int>(M), r.get(), c.get(), FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r_1d(static_cast<int>(M), c.get(), r.get(), FFTW_ESTIMATE);
    }
    const double s_hi = static_cast<double>(steps) * dx;
    cheb_lo = 0.0;
    cheb_hi = std::max(s_hi, dx);
    cheb_nodes = chebyshev_lobatto(kFarCheb, cheb_lo, cheb_hi);

    const FarCells fc = far_cells(disc);
    n_far = fc.midpoints.size();

    std::vector<double> c(M);
    for (double h : h_values) {
      HData hd;
      hd.alpha = kernel_exponent(d, h);
      hd.far_table.resize(kFarCheb * n_far);
      for (int ci = 0; ci < kFarCheb; ++ci)
        for (std::size_t f = 0; f < n_far; ++f) {
          double& slot = hd.far_table[ci * n_far + f];
          if (d == 1) {
            const double beta = h - 0.5, D = -fc.midpoints[f];
            slot = std::pow(D, beta) * std::expm1(beta * std::log1p(cheb_nodes[ci] / D)) / beta;
          } else {
            slot = std::pow(cheb_nodes[ci] - fc.midpoints[f], hd.alpha);
          }
        }
      if (d == 1) {
        // G_t(m_j) = ((t - m_j)^β - (-m_j)_+^β) / β, a convolution in t's cell index
        const double beta = h - 0.5;
        std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t n = 1; n <= n_u; ++n) c[n] = std::pow(dx * (static_cast<double>(n) - 0.5), beta) / beta;
        hd.kernels.resize(MC);
        transform_kernel(c, hd.kernels.data());
        hd.cheb_w.resize((steps + 1) * kFarCheb);
        for (std::size_t r = 0; r <= steps; ++r) {
          const auto w = chebyshev_weights(kFarCheb, cheb_lo, cheb_hi, static_cast<double>(r) * dx);
          std::copy(w.begin(), w.end(), hd.cheb_w.begin() + r * kFarCheb);
        }
      } else {
        const double a = hd.alpha;
        const double p = 1.0 / (1.0 + a);
        const auto& ga = gauss_legendre(kNodesA);
        const auto& gb = gauss_legendre(kNodesB);
        for (int g = 0; g < kNodesA; ++g) {
          // τ = v^p / 2 absorbs the (τ dx)^α singularity of the active cell
          const double v = 0.5 * (ga.x[g] + 1.0), wv = 0.5 * ga.w[g];
          hd.nodes.push_back({0.5 * std::pow(v, p), dx * 0.5 * p * std::pow(v, p - 1.0) * wv,
                              std::pow(dx, 1.0 + a) * std::pow(2.0, -1.0 - a) * p * wv, true});
        }
        for (int g = 0; g < kNodesB; ++g) {
          const double tau = 0.75 + 0.25 * gb.x[g], w = 0.25 * gb.w[g];
          hd.nodes.push_back({tau, dx * w, dx * w, false});
        }
        const std::size_t nn = hd.nodes.size();
        hd.kernels.resize(nn * d * MC);
        for (std::size_t g = 0; g < nn; ++g) {
          for (int k = 1; k <= d; ++k) {
            std::fill(c.begin(), c.end(), 0.0);
            for (std::size_t n = 1; n <= n_u; ++n)
              c[n] = std::pow(dx * (static_cast<double>(n) + hd.nodes[g].tau), k * a);
            transform_kernel(c, hd.kernels.data() + (g * d + (k - 1)) * MC);
          }
        }
        // far-field power sums are smooth in s on [0, steps dx]; interpolate them
        const std::size_t span = steps + 1;  // cells i0 - 1 .. i0 + steps - 1
        hd.cheb_w.assign(nn * span * kFarCheb, 0.0);
        const double lo = cheb_lo, hi = cheb_hi;
        for (std::size_t g = 0; g < nn; ++g)
          for (std::size_t ii = 0; ii < span; ++ii) {
            const std::size_t i = i0 - 1 + ii;
            const double s = midpoint(i) + hd.nodes[g].tau * dx;
            if (s < lo || s > hi + 1e-12) continue;
            const auto w = chebyshev_weights(kFarCheb, lo, hi, std::min(s, hi));
            std::copy(w.begin(), w.end(), hd.cheb_w.begin() + (g * span + ii) * kFarCheb);
          }
      }
      hdata.push_back(std::move(hd));
    }
  }

  /// Inverse transform of spectrum * kernel into out (length M).
  void convolve(const fftw_complex* spec, const std::complex<double>* ker, fftw_complex* work, double* out) const {
    for (std::size_t i = 0; i < MC; ++i) {
      const std::complex<double> z = std::complex<double>(spec[i][0], spec[i][1]) * ker[i];
      work[i][0] = z.real();
      work[i][1] = z.imag();
    }
    fftw_execute_dft_c2r(bwd, work, out);
  }

  std::vector<double> run(const BrownianDriver& drv) const {
    if (drv.increments.size() != n_u) throw ValidationError("driver does not match the discretization");
    const std::size_t n_h = h_values.size();
    std::vector<double> values((steps + 1) * n_h, 0.0);
    if (steps == 0) return values;

    RealBuf buf = real_buf(M);
    CplxBuf work = cplx_buf(MC);
    std::vector<CplxBuf> spec;  // transforms of dB^k
    for (int k = 1; k <= d; ++k) {
      std::fill(buf.get(), buf.get() + M, 0.0);
      for (std::size_t j = 0; j < n_u; ++j) {
        double v = drv.increments[j];
        for (int e = 1; e < k; ++e) v *= drv.increments[j];
        buf[j] = v;
      }
      spec.push_back(cplx_buf(MC));
      fftw_execute_dft_r2c(fwd, buf.get(), spec.back().get());
    }

    if (drv.far_increments.size() != n_far) throw ValidationError("driver does not match the discretization");
    const auto& far_b = drv.far_increments;

    for (std::size_t hi = 0; hi < n_h; ++hi) {
      const HData& hd = hdata[hi];
      if (d == 1) {
        convolve(spec[0].get(), hd.kernels.data(), work.get(), buf.get());
        std::vector<double> far(kFarCheb, 0.0);
        for (int c = 0; c < kFarCheb; ++c) {
          const double* row = hd.far_table.data() + c * n_far;
          double acc = 0.0;
          for (std::size_t f = 0; f < n_far; ++f) acc += far_b[f] * row[f];
          far[c] = acc;
        }
        const double base = buf[i0];
        for (std::size_t r = 1; r <= steps; ++r) {
          double fv = 0.0;
          for (int c = 0; c < kFarCheb; ++c) fv += hd.cheb_w[r * kFarCheb + c] * far[c];
          values[r * n_h + hi] = (buf[i0 + r] - base) + fv;
        }
        continue;
      }

      const double a = hd.alpha;
      const std::size_t nn = hd.nodes.size();
      const std::size_t span = steps + 1;
      // far-field power sums at the Chebyshev nodes
      std::vector<double> far(static_cast<std::size_t>(kFarCheb) * d, 0.0);
      for (int c = 0; c < kFarCheb; ++c)
        for (std::size_t f = 0; f < n_far; ++f) {
          const double y = hd.far_table[c * n_far + f] * far_b[f];
          double yk = y;
          for (int k = 1; k <= d; ++k) {
            far[c * d + (k - 1)] += yk;
            yk *= y;
          }
        }

      std::vector<double> panel_a(span, 0.0), panel_b(span, 0.0);
      std::vector<RealBuf> conv;
      for (int k = 0; k < d; ++k) conv.push_back(real_buf(M));
      std::vector<double> P(d + 1), E(d + 1);
      for (std::size_t g = 0; g < nn; ++g) {
        const Node& node = hd.nodes[g];
        for (int k = 1; k <= d; ++k)
          convolve(spec[k - 1].get(), hd.kernels.data() + (g * d + (k - 1)) * MC, work.get(), conv[k - 1].get());
        const double y_scale = node.a_panel ? 0.0 : std::pow(node.tau * dx, a);
        for (std::size_t ii = 0; ii < span; ++ii) {
          const std::size_t i = i0 - 1 + ii;
          // A panels live on cells i0.., B panels on cells up to i0 + steps - 2
          if (node.a_panel ? ii == 0 : ii == span - 1) continue;
          const double* cw = hd.cheb_w.data() + (g * span + ii) * kFarCheb;
          for (int k = 1; k <= d; ++k) {
            double fv = 0.0;
            for (int c = 0; c < kFarCheb; ++c) fv += cw[c] * far[c * d + (k - 1)];
            P[k] = conv[k - 1][i] + fv;
          }
          // Newton's identities
          E[0] = 1.0;
          for (int m = 1; m <= d; ++m) {
            double acc = 0.0;
            for (int k = 1; k <= m; ++k) acc += ((k % 2) ? 1.0 : -1.0) * E[m - k] * P[k];
            E[m] = acc / m;
          }
          const double db = drv.increments[i];
          if (node.a_panel) {
            panel_a[ii] += node.w_far * E[d] + node.w_act * db * E[d - 1];
          } else {
            panel_b[ii] += node.w_far * (E[d] + y_scale * db * E[d - 1]);
          }
        }
      }
      const double fact = factorial(d);
      double x = 0.0;
      for (std::size_t r = 0; r < steps; ++r) {
        // [b_q, b_{q+1}] = right half of cell q-1's interval + left half of cell q's
        x += panel_b[r] + panel_a[r + 1];
        values[(r + 1) * n_h + hi] = fact * x;
      }
    }
    return values;
  }
};

FieldSimulator::FieldSimulator(int d, std::vector<double> h_values, const DiscretizationParams& disc, double t_last)
    : impl_(std::make_unique<Impl>()) {
  if (d < 1) throw RangeError("chaos order d must be >= 1");
  disc.validate();
  if (h_values.empty()) throw ValidationError("h grid is empty");
  for (double h : h_values) check_h(h);
  if (!(t_last >= 0.0 && t_last <= disc.t_max)) throw RangeError("time grid leaves [0, t_max]");
  if (disc.desk_caps && disc.n_grid > desk_grid_cap(d)) {
    std::ostringstream os;
    os << "n_grid " << disc.n_grid << " exceeds the desk cap " << desk_grid_cap(d) << " for d=" << d
       << " (disable desk_caps to override)";
    throw BudgetExceeded(os.str());
  }
  const double work = estimated_work(d, h_values.size(), disc);
  if (work > disc.work_budget) {
    std::ostringstream os;
    os << "estimated work " << work << " flops per replica exceeds the budget " << disc.work_budget
       << " (d=" << d << ", n_grid=" << disc.n_grid << ", " << h_values.size() << " h values; the direct tuple sum "
       << "would visit 2^" << d * std::log2(disc.n_grid * (disc.t_max - disc.x_min)) << " tuples)";
    throw BudgetExceeded(os.str());
  }
  impl_->d = d;
  impl_->h_values = std::move(h_values);
  impl_->disc = disc;
  impl_->steps = static_cast<std::size_t>(grid_step(t_last, disc.n_grid));
  impl_->setup();
}

FieldSimulator::~FieldSimulator() = default;

int FieldSimulator::order() const { return impl_->d; }
std::size_t FieldSimulator::steps() const { return impl_->steps; }

std::vector<double> FieldSimulator::run(const BrownianDriver& driver) const { return impl_->run(driver); }

std::vector<double> FieldSimulator::run(std::uint64_t replica, bool negate) const {
  return impl_->run(make_driver(impl_->disc, replica, negate));
}

namespace {

std::vector<std::int64_t> steps_of(std::span<const double> t_grid, const DiscretizationParams& disc) {
  if (t_grid.empty()) throw ValidationError("time grid is empty");
  std::vector<std::int64_t> out;
  for (double t : t_grid) {
    if (!(t >= 0.0 && t <= disc.t_max)) throw RangeError("time grid leaves [0, t_max]");
    out.push_back(grid_step(t, disc.n_grid));
  }
  return out;
}

GeneratorFieldSample pack_field(int d, std::span<const double> t_grid, std::span<const double> h_grid,
                                const std::vector<std::int64_t>& steps, const std::vector<double>& values,
                                const DiscretizationParams& disc, std::uint64_t replica) {
  GeneratorFieldSample f;
  f.times.assign(t_grid.begin(), t_grid.end());
  f.h_values.assign(h_grid.begin(), h_grid.end());
  const std::size_t n_h = h_grid.size();
  f.values.resize(t_grid.size() * n_h);
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    for (std::size_t k = 0; k < n_h; ++k) f.at(i, k) = values[steps[i] * n_h + k];
  f.meta.d = d;
  f.meta.hurst = constant_hurst(h_grid[0]);
  f.meta.disc = disc;
  f.meta.seed = disc.seed;
  f.meta.replica = replica;
  return f;
}

struct PathPlan {
  std::vector<double> nodes;
  std::vector<std::vector<double>> weights;  // per output time
};

PathPlan path_plan(const HurstFunction& H, std::span<const double> t_grid, int h_nodes) {
  PathPlan plan;
  if (H.is_constant()) {
    plan.nodes = {H.h_min()};
    plan.weights.assign(t_grid.size(), {1.0});
    return plan;
  }
  plan.nodes = chebyshev_lobatto(h_nodes, H.h_min(), H.h_max());
  for (double t : t_grid) plan.weights.push_back(chebyshev_weights(h_nodes, H.h_min(), H.h_max(), H(t)));
  return plan;
}

SamplePath assemble_path(int d, const HurstFunction& H, std::span<const double> t_grid,
                         const std::vector<std::int64_t>& steps, const PathPlan& plan,
                         const std::vector<double>& values, const DiscretizationParams& disc, std::uint64_t replica) {
  SamplePath p;
  p.times.assign(t_grid.begin(), t_grid.end());
  p.values.resize(t_grid.size());
  const std::size_t n_h = plan.nodes.size();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    double v = 0.0;
    for (std::size_t k = 0; k < n_h; ++k) v += plan.weights[i][k] * values[steps[i] * n_h + k];
    p.values[i] = v;
  }
  p.meta.d = d;
  p.meta.hurst = H;
  p.meta.disc = disc;
  p.meta.seed = disc.seed;
  p.meta.replica = replica;
  return p;
}

}  // namespace

GeneratorFieldSample simulate_field(int d, std::span<const double> t_grid, std::span<const double> h_grid,
                                    const DiscretizationParams& disc, std::uint64_t replica) {
  const auto steps = steps_of(t_grid, disc);
  const double t_last = static_cast<double>(*std::max_element(steps.begin(), steps.end())) / disc.n_grid;
  FieldSimulator sim(d, {h_grid.begin(), h_grid.end()}, disc, t_last);
  return pack_field(d, t_grid, h_grid, steps, sim.run(replica), disc, replica);
}

std::vector<GeneratorFieldSample> simulate_field_replicas(int d, std::span<const double> t_grid,
                                                          std::span<const double> h_grid,
                                                          const DiscretizationParams& disc) {
  const auto steps = steps_of(t_grid, disc);
  const double t_last = static_cast<double>(*std::max_element(steps.begin(), steps.end())) / disc.n_grid;
  FieldSimulator sim(d, {h_grid.begin(), h_grid.end()}, disc, t_last);
  std::vector<GeneratorFieldSample> out(disc.n_paths);
  parallel_for(out.size(), [&](std::size_t r) { out[r] = pack_field(d, t_grid, h_grid, steps, sim.run(r), disc, r); });
  return out;
}

SamplePath simulate_mfh_path(int d, const HurstFunction& H, std::span<const double> t_grid,
                             const DiscretizationParams& disc, std::uint64_t replica) {
  const auto steps = steps_of(t_grid, disc);
  const double t_last = static_cast<double>(*std::max_element(steps.begin(), steps.end())) / disc.n_grid;
  const PathPlan plan = path_plan(H, t_grid, disc.h_nodes);
  FieldSimulator sim(d, plan.nodes, disc, t_last);
  auto p = assemble_path(d, H, t_grid, steps, plan, sim.run(replica), disc, replica);
  p.validate();
  return p;
}

std::vector<SamplePath> simulate_mfh_replicas(int d, const HurstFunction& H, std::span<const double> t_grid,
                                              const DiscretizationParams& disc) {
  const auto steps = steps_of(t_grid, disc);
  const double t_last = static_cast<double>(*std::max_element(steps.begin(), steps.end())) / disc.n_grid;
  const PathPlan plan = path_plan(H, t_grid, disc.h_nodes);
  FieldSimulator sim(d, plan.nodes, disc, t_last);
  std::vector<SamplePath> out(disc.n_paths);
  parallel_for(out.size(),
               [&](std::size_t r) { out[r] = assemble_path(d, H, t_grid, steps, plan, sim.run(r), disc, r); });
  return out;
}

GeneratorFieldSample sign_flip_transform(const GeneratorFieldSample& field) {
  const auto& disc = field.meta.disc;
  const auto steps = steps_of(field.times, disc);
  const double t_last = static_cast<double>(*std::max_element(steps.begin(), steps.end())) / disc.n_grid;
  FieldSimulator sim(field.meta.d, field.h_values, disc, t_last);
  auto out = pack_field(field.meta.d, field.times, field.h_values, steps, sim.run(field.meta.replica, true), disc,
                        field.meta.replica);
  out.meta = field.meta;
  return out;
}

struct FbmOracle::Impl {
  double h = 0.5;
  double ch = 1.0;
  std::vector<double> times;
  std::vector<std::size_t> positive;  // indices with t > 0
  Eigen::MatrixXd L;
};

FbmOracle::FbmOracle(double h, std::vector<double> t_grid) : impl_(std::make_unique<Impl>()) {
  if (!(h > 0.0 && h < 1.0)) throw RangeError("exact_fbm_path needs 0 < h < 1");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] >= 0.0)) throw RangeError("exact_fbm_path needs t >= 0");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw ValidationError("time grid must be strictly increasing");
  }
  impl_->h = h;
  impl_->ch = h > 0.5 ? covariance_quadrature(1, 1.0, h, 1.0, h) : 1.0;
  impl_->times = std::move(t_grid);
  for (std::size_t i = 0; i < impl_->times.size(); ++i)
    if (impl_->times[i] > 0.0) impl_->positive.push_back(i);
  const std::size_t n = impl_->positive.size();
  Eigen::MatrixXd C(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b <= a; ++b)
      C(a, b) = C(b, a) = covariance(impl_->times[impl_->positive[a]], impl_->times[impl_->positive[b]]);
  Eigen::LLT<Eigen::MatrixXd> llt(C);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("fBm covariance matrix failed to factor");
  impl_->L = llt.matrixL();
}

FbmOracle::~FbmOracle() = default;

double FbmOracle::c_h() const { return impl_->ch; }

double FbmOracle::covariance(double t, double s) const {
  const double h2 = 2.0 * impl_->h;
  return 0.5 * impl_->ch * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

SamplePath FbmOracle::sample(std::uint64_t seed, std::uint64_t replica) const {
  const std::size_t n = impl_->positive.size();
  Eigen::VectorXd z(n);
  NormalStream(seed, Stream::Oracle, replica).fill(z.data(), n);
  const Eigen::VectorXd x = impl_->L.triangularView<Eigen::Lower>() * z;
  SamplePath p;
  p.times = impl_->times;
  p.values.assign(p.times.size(), 0.0);
  for (std::size_t a = 0; a < n; ++a) p.values[impl_->positive[a]] = x[a];
  p.meta.d = 1;
  p.meta.hurst = impl_->h > 0.5 && impl_->h < 1.0 ? constant_hurst(impl_->h) : constant_hurst(0.75);
  p.meta.seed = seed;
  p.meta.replica = replica;
  return p;
}

SamplePath exact_fbm_path(double h, std::span<const double> t_grid, std::uint64_t seed, std::uint64_t replica) {
  return FbmOracle(h, {t_grid.begin(), t_grid.end()}).sample(seed, replica);
}

}  // namespace mfh
