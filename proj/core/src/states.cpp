#include "semiclassic/states.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "semiclassic/error.hpp"

namespace semiclassic {

namespace {

constexpr double kPi = std::numbers::pi;

double power(double base, int d) { return d == 1 ? base : base * base; }

// Per-axis half-cell shift multiplier for displacement bin r and frequency bin k.
// Self-conjugate frequencies or displacements take cas = cos + sin so that the
// map stays unitary and sends Hermitian kernels to real W.
std::vector<Complex> half_shift_table(int n) {
  std::vector<Complex> table(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    const int rc = r < n / 2 ? r : r - n;
    for (int k = 0; k < n; ++k) {
      const int kc = k < n / 2 ? k : k - n;
      const double theta = -kPi * static_cast<double>(kc) * rc / n;
      if (kc == -n / 2 || rc == -n / 2) {
        table[static_cast<std::size_t>(r) * n + k] = std::cos(theta) + std::sin(theta);
      } else {
        table[static_cast<std::size_t>(r) * n + k] = std::polar(1.0, theta);
      }
    }
  }
  return table;
}

Complex multiplier(const SpatialGrid& grid, const std::vector<Complex>& table, std::size_t r,
                   std::size_t k) {
  const int n = grid.points();
  if (grid.dim() == 1) return table[r * n + k];
  const Index ri = grid.unflatten(r);
  const Index ki = grid.unflatten(k);
  Complex m = 1.0;
  for (int a = 0; a < grid.dim(); ++a)
    m *= table[static_cast<std::size_t>(ri[a]) * n + ki[a]];
  return m;
}

// bands(r, j) = K(x_j + r h; x_j)
CMatrix gather_bands(const DensityOperator& op) {
  const auto& grid = op.grid;
  const std::size_t M = grid.size();
  CMatrix bands(M, M);
  if (grid.dim() == 1) {
    const std::size_t n = M;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < n; ++j) bands(r, j) = op.kernel((j + r) % n, j);
    return bands;
  }
  for (std::size_t r = 0; r < M; ++r) {
    const Index shift = grid.unflatten(r);
    for (std::size_t j = 0; j < M; ++j) bands(r, j) = op.kernel(grid.shifted(j, shift), j);
  }
  return bands;
}

void scatter_bands(const CMatrix& bands, DensityOperator& op) {
  const auto& grid = op.grid;
  const std::size_t M = grid.size();
  if (grid.dim() == 1) {
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t j = 0; j < M; ++j) op.kernel((j + r) % M, j) = bands(r, j);
    return;
  }
  for (std::size_t r = 0; r < M; ++r) {
    const Index shift = grid.unflatten(r);
    for (std::size_t j = 0; j < M; ++j) op.kernel(grid.shifted(j, shift), j) = bands(r, j);
  }
}

// Moves every band onto its midpoint lattice (forward) or back (inverse).
void shift_bands(const SpatialGrid& grid, CMatrix& bands, bool inverse) {
  const std::size_t M = grid.size();
  const int howmany = static_cast<int>(M);
  const int dist = static_cast<int>(M);
  transform_batch(grid, bands.data(), howmany, 1, dist, fft::Direction::forward);
  const auto table = half_shift_table(grid.points());
  const double scale = 1.0 / static_cast<double>(M);
  for (std::size_t r = 0; r < M; ++r) {
    auto row = bands.row(r);
    for (std::size_t k = 0; k < M; ++k) {
      const Complex m = multiplier(grid, table, r, k);
      row[k] *= (inverse ? std::conj(m) : m) * scale;
    }
  }
  transform_batch(grid, bands.data(), howmany, 1, dist, fft::Direction::backward);
}

// flat FFT bin c <-> ascending velocity index a (fftshift per axis)
std::size_t velocity_row(const SpatialGrid& grid, std::size_t c) {
  const int n = grid.points();
  Index idx = grid.unflatten(c);
  for (int a = 0; a < grid.dim(); ++a) idx[a] = (idx[a] + n / 2) % n;
  return grid.flatten(idx);
}

// E[a][r] = prod_axes e^{-i r_c h v_a / eps}, cos for the Nyquist displacement.
CMatrix displacement_phases(const PhaseGrid& pgrid, double eps) {
  const auto& grid = pgrid.spatial();
  const int n = grid.points();
  const int m = pgrid.velocity_points();
  const double h = grid.spacing();
  std::vector<Complex> axis(static_cast<std::size_t>(m) * n);
  for (int a = 0; a < m; ++a) {
    const double v = pgrid.velocity(a);
    for (int r = 0; r < n; ++r) {
      const int rc = grid.centered(r);
      const double theta = rc * h * v / eps;
      axis[static_cast<std::size_t>(a) * n + r] =
          rc == -n / 2 ? Complex(std::cos(theta), 0.0) : std::polar(1.0, -theta);
    }
  }
  CMatrix E(pgrid.velocity_size(), grid.size());
  for (std::size_t a = 0; a < E.rows(); ++a) {
    const Index ai = pgrid.unflatten_velocity(a);
    for (std::size_t r = 0; r < E.cols(); ++r) {
      const Index ri = grid.unflatten(r);
      Complex z = 1.0;
      for (int d = 0; d < grid.dim(); ++d) z *= axis[static_cast<std::size_t>(ai[d]) * n + ri[d]];
      E(a, r) = z;
    }
  }
  return E;
}

void check_velocity_range(const PhaseGrid& pgrid, double eps) {
  const double natural = eps * kPi / pgrid.spatial().spacing();
  if (pgrid.v_max() > natural * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "phase grid v_max " << pgrid.v_max() << " exceeds the largest velocity " << natural
        << " the spatial grid resolves at eps " << eps;
    throw ConfigError(msg.str());
  }
}

double leak_from_band_sums(const SpatialGrid& grid, const PhaseGrid& pgrid, double eps,
                           CArray sums) {
  transform_batch(grid, sums.data(), 1, 1, 0, fft::Direction::forward);
  const double cutoff = pgrid.v_max() * (15.0 / 16.0);
  double total = 0.0;
  double outside = 0.0;
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const double w = std::abs(sums[k].real());
    total += w;
    const Index ki = grid.unflatten(k);
    bool out = false;
    for (int a = 0; a < grid.dim(); ++a)
      if (std::abs(eps * grid.momentum(ki[a])) >= cutoff) out = true;
    if (out) outside += w;
  }
  return total > 0.0 ? outside / total : 0.0;
}

}  // namespace

DensityOperator::DensityOperator(const SpatialGrid& g, double n_particles, double epsilon)
    : grid(g), N(n_particles), eps(epsilon), kernel(g.size(), g.size()) {
  if (!(n_particles > 0.0)) throw ConfigError("N must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("eps must be positive");
}

double DensityOperator::cell_volume() const noexcept { return power(grid.spacing(), grid.dim()); }

double DensityOperator::trace() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < kernel.rows(); ++i) s += kernel(i, i).real();
  return s * cell_volume();
}

PhaseSpaceDensity::PhaseSpaceDensity(const PhaseGrid& g, double epsilon, double n_particles)
    : grid(g), eps(epsilon), N(n_particles), values(g.velocity_size(), g.spatial().size()) {}

double PhaseSpaceDensity::cell_volume() const noexcept {
  return power(grid.spatial().spacing() * grid.dv(), grid.dim());
}

Complex PhaseSpaceDensity::mass() const noexcept {
  Complex s = 0.0;
  for (const auto& z : values.storage()) s += z;
  return s * cell_volume();
}

double PhaseSpaceDensity::l2_norm() const noexcept {
  double s = 0.0;
  for (const auto& z : values.storage()) s += std::norm(z);
  return std::sqrt(s * cell_volume());
}

double PhaseSpaceDensity::imag_max() const noexcept {
  double m = 0.0;
  for (const auto& z : values.storage()) m = std::max(m, std::abs(z.imag()));
  return m;
}

double SpatialDensity::mass() const noexcept {
  double s = 0.0;
  for (double r : rho) s += r;
  return s * power(grid.spacing(), grid.dim());
}

double momentum_leak(const DensityOperator& op, const PhaseGrid& pgrid) {
  const auto& grid = op.grid;
  const std::size_t M = grid.size();
  CArray sums(M, 0.0);
  if (grid.dim() == 1) {
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t j = 0; j < M; ++j) sums[r] += op.kernel((j + r) % M, j);
  } else {
    for (std::size_t r = 0; r < M; ++r) {
      const Index shift = grid.unflatten(r);
      for (std::size_t j = 0; j < M; ++j) sums[r] += op.kernel(grid.shifted(j, shift), j);
    }
  }
  return leak_from_band_sums(grid, pgrid, op.eps, std::move(sums));
}

PhaseSpaceDensity wigner_transform(const DensityOperator& op, const PhaseGrid& pgrid,
                                   const WignerOptions& options) {
  if (!(pgrid.spatial() == op.grid))
    throw ConfigError("phase grid and operator live on different spatial grids");
  check_velocity_range(pgrid, op.eps);
  const auto& grid = op.grid;
  const std::size_t M = grid.size();
  const int d = grid.dim();

  CMatrix bands = gather_bands(op);
  if (options.check_cutoff) {
    CArray sums(M);
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t j = 0; j < M; ++j) sums[r] += bands(r, j);
    const double leak = leak_from_band_sums(grid, pgrid, op.eps, std::move(sums));
    if (leak > options.max_leak) {
      std::ostringstream msg;
      msg << "momentum content beyond the velocity cutoff: leaked mass fraction " << leak;
      throw TruncationError(msg.str(), leak);
    }
  }
  shift_bands(grid, bands, false);

  PhaseSpaceDensity W(pgrid, op.eps, op.N);
  const double pref = power(grid.spacing() / (2.0 * kPi), d);
  if (pgrid.is_natural(op.eps)) {
    transform_batch(grid, bands.data(), static_cast<int>(M), static_cast<int>(M), 1,
                    fft::Direction::forward);
    for (std::size_t c = 0; c < M; ++c) {
      auto dst = W.values.row(velocity_row(grid, c));
      auto src = bands.row(c);
      for (std::size_t i = 0; i < M; ++i) dst[i] = pref * src[i];
    }
    return W;
  }
  const CMatrix E = displacement_phases(pgrid, op.eps);
  const Complex alpha = pref;
  const Complex beta = 0.0;
  cblas_zgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(E.rows()),
              static_cast<int>(M), static_cast<int>(M), &alpha, E.data(), static_cast<int>(M),
              bands.data(), static_cast<int>(M), &beta, W.values.data(), static_cast<int>(M));
  return W;
}

PhaseSpaceDensity wigner_transform(const DensityOperator& op, const WignerOptions& options) {
  return wigner_transform(op, PhaseGrid::natural(op.grid, op.eps), options);
}

DensityOperator weyl_quantize(const PhaseSpaceDensity& W) {
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  check_velocity_range(pgrid, W.eps);
  if (W.values.rows() != pgrid.velocity_size() || W.values.cols() != grid.size())
    throw ConfigError("phase-space values do not match their grid");
  const std::size_t M = grid.size();
  const int d = grid.dim();
  const double pref = power(pgrid.dv() / W.eps, d);

  CMatrix g(M, M);
  if (pgrid.is_natural(W.eps)) {
    for (std::size_t c = 0; c < M; ++c) {
      auto src = W.values.row(velocity_row(grid, c));
      auto dst = g.row(c);
      for (std::size_t i = 0; i < M; ++i) dst[i] = pref * src[i];
    }
    transform_batch(grid, g.data(), static_cast<int>(M), static_cast<int>(M), 1,
                    fft::Direction::backward);
  } else {
    const CMatrix E = displacement_phases(pgrid, W.eps);
    const Complex alpha = pref;
    const Complex beta = 0.0;
    cblas_zgemm(CblasRowMajor, CblasConjTrans, CblasNoTrans, static_cast<int>(M),
                static_cast<int>(M), static_cast<int>(E.rows()), &alpha, E.data(),
                static_cast<int>(M), W.values.data(), static_cast<int>(M), &beta, g.data(),
                static_cast<int>(M));
  }
  shift_bands(grid, g, true);
  DensityOperator op(grid, W.N, W.eps);
  scatter_bands(g, op);
  return op;
}

SpatialDensity density_of(const DensityOperator& op) {
  SpatialDensity out{op.grid, RArray(op.grid.size())};
  for (std::size_t i = 0; i < out.rho.size(); ++i) out.rho[i] = op.kernel(i, i).real() / op.N;
  return out;
}

SpatialDensity velocity_marginal(const PhaseSpaceDensity& W) {
  const auto& grid = W.grid.spatial();
  SpatialDensity out{grid, RArray(grid.size(), 0.0)};
  const double w = power(W.grid.dv(), grid.dim()) / (W.N * power(W.eps, grid.dim()));
  for (std::size_t a = 0; a < W.values.rows(); ++a) {
    auto row = W.values.row(a);
    for (std::size_t i = 0; i < row.size(); ++i) out.rho[i] += row[i].real();
  }
  for (auto& r : out.rho) r *= w;
  return out;
}

Mollifier::Mollifier(double strength) : k(strength) {
  if (!(strength > 0.0) || !std::isfinite(strength))
    throw ConfigError("mollifier strength must be positive and finite");
}

double Mollifier::discrete_mass(const PhaseGrid& pgrid) const {
  const auto& grid = pgrid.spatial();
  const double sigma = 1.0 / std::sqrt(k);
  const double L = grid.length();
  const int images = static_cast<int>(std::ceil(8.0 * sigma / L)) + 1;
  auto g = [&](double y) { return std::exp(-0.5 * y * y / (sigma * sigma)) / (std::sqrt(2.0 * kPi) * sigma); };
  double xsum = 0.0;
  for (int j = 0; j < grid.points(); ++j)
    for (int im = -images; im <= images; ++im) xsum += g(grid.lift(j) + im * L);
  xsum *= grid.spacing();
  double vsum = 0.0;
  for (int a = 0; a < pgrid.velocity_points(); ++a) vsum += g(pgrid.velocity(a));
  vsum *= pgrid.dv();
  return power(xsum * vsum, grid.dim());
}

double Mollifier::box_leakage(const PhaseGrid& pgrid) const {
  const double s = std::sqrt(0.5 * k);
  const double lx = std::erfc(0.5 * pgrid.spatial().length() * s);
  const double lv = std::erfc(pgrid.v_max() * s);
  const double inside = std::pow((1.0 - lx) * (1.0 - lv), pgrid.dim());
  return 1.0 - inside;
}

PhaseSpaceDensity mollify(const PhaseSpaceDensity& W, const Mollifier& mol) {
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  const double leak = mol.box_leakage(pgrid);
  if (leak > 1e-6) {
    std::ostringstream msg;
    msg << "mollifier k=" << mol.k << " does not fit the phase box (leaked mass " << leak << ")";
    throw ConfigError(msg.str());
  }
  const std::size_t M = grid.size();
  const std::size_t Mv = pgrid.velocity_size();
  const int d = grid.dim();
  PhaseSpaceDensity out = W;

  // x: periodic, exact Gaussian Fourier multiplier
  {
    transform_batch(grid, out.values.data(), static_cast<int>(Mv), 1, static_cast<int>(M),
                    fft::Direction::forward);
    RArray mult(M);
    for (std::size_t j = 0; j < M; ++j) {
      const Index idx = grid.unflatten(j);
      double p2 = 0.0;
      for (int a = 0; a < d; ++a) p2 += grid.momentum(idx[a]) * grid.momentum(idx[a]);
      mult[j] = std::exp(-0.5 * p2 / mol.k) / static_cast<double>(M);
    }
    for (std::size_t a = 0; a < Mv; ++a) {
      auto row = out.values.row(a);
      for (std::size_t j = 0; j < M; ++j) row[j] *= mult[j];
    }
    transform_batch(grid, out.values.data(), static_cast<int>(Mv), 1, static_cast<int>(M),
                    fft::Direction::backward);
  }

  // v: zero-padded to twice the window along each velocity axis
  const int m = pgrid.velocity_points();
  const int mp = 2 * m;
  const double dv = pgrid.dv();
  RArray vmult(mp);
  for (int c = 0; c < mp; ++c) {
    const int cc = c < m ? c : c - mp;
    const double eta = 2.0 * kPi * cc / (mp * dv);
    vmult[c] = std::exp(-0.5 * eta * eta / mol.k) / mp;
  }
  for (int axis = 0; axis < d; ++axis) {
    // velocity flat index = (outer * m + a_axis) * inner + rest, with inner = m^(d-1-axis)
    std::size_t inner = 1;
    for (int b = axis + 1; b < d; ++b) inner *= m;
    const std::size_t outer = Mv / (inner * m);
    const std::size_t lane = inner * M;  // contiguous elements per velocity step along axis
    CArray buf(static_cast<std::size_t>(mp) * lane);
    for (std::size_t o = 0; o < outer; ++o) {
      std::fill(buf.begin(), buf.end(), Complex(0.0));
      Complex* base = out.values.data() + o * m * lane;
      // velocity a sits at padded slot a (the padding follows the window)
      for (int a = 0; a < m; ++a) std::copy(base + a * lane, base + (a + 1) * lane, buf.begin() + a * lane);
      fft::execute(buf.data(), fft::Layout{{mp}, static_cast<int>(lane), static_cast<int>(lane), 1},
                   fft::Direction::forward);
      for (int c = 0; c < mp; ++c)
        for (std::size_t l = 0; l < lane; ++l) buf[c * lane + l] *= vmult[c];
      fft::execute(buf.data(), fft::Layout{{mp}, static_cast<int>(lane), static_cast<int>(lane), 1},
                   fft::Direction::backward);
      for (int a = 0; a < m; ++a) std::copy(buf.begin() + a * lane, buf.begin() + (a + 1) * lane, base + a * lane);
    }
  }
  return out;
}

Profile::Profile(std::string name, std::map<std::string, double> params, int dim)
    : name_(std::move(name)), params_(std::move(params)), dim_(dim) {
  if (name_ != "gaussian" && name_ != "fermi_ball")
    throw ConfigError("unknown profile '" + name_ + "' (expected gaussian or fermi_ball)");
  if (dim < 1 || dim > kMaxDim) throw ConfigError("profile dimension must be 1 or 2");
  if (!(param("sigma_x", 1.0) > 0.0) || !(param("sigma_v", 1.0) > 0.0))
    throw ConfigError("profile widths must be positive");
  if (name_ == "fermi_ball" && !(param("exponent", 1.5) >= 0.0))
    throw ConfigError("fermi_ball exponent must be nonnegative");
}

double Profile::param(const std::string& key, double fallback) const {
  auto it = params_.find(key);
  return it == params_.end() ? fallback : it->second;
}

double Profile::operator()(std::span<const double> x, std::span<const double> v) const {
  const double sx = param("sigma_x", 1.0);
  const double sv = param("sigma_v", 1.0);
  const double x0 = param("x0", 0.0);
  const double v0 = param("v0", 0.0);
  double r2 = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double dx = (x[a] - x0) / sx;
    const double dvv = (v[a] - v0) / sv;
    r2 += dx * dx + dvv * dvv;
  }
  if (name_ == "gaussian") return std::exp(-0.5 * r2);
  if (r2 >= 1.0) return 0.0;
  return std::pow(1.0 - r2, param("exponent", 1.5));
}

PhaseSpaceDensity Profile::sample(const PhaseGrid& pgrid, double eps, double N) const {
  if (pgrid.dim() != dim_) throw ConfigError("profile and grid dimensions differ");
  const auto& grid = pgrid.spatial();
  PhaseSpaceDensity W(pgrid, eps, N);
  const double x0 = param("x0", 0.0);
  std::vector<std::array<double, kMaxDim>> xs(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Index idx = grid.unflatten(i);
    for (int a = 0; a < dim_; ++a) xs[i][a] = grid.lift(grid.position(idx[a]) - x0) + x0;
  }
  double total = 0.0;
  for (std::size_t a = 0; a < pgrid.velocity_size(); ++a) {
    const Index vi = pgrid.unflatten_velocity(a);
    std::array<double, kMaxDim> v{};
    for (int b = 0; b < dim_; ++b) v[b] = pgrid.velocity(vi[b]);
    auto row = W.values.row(a);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double val = (*this)(std::span<const double>(xs[i].data(), dim_), std::span<const double>(v.data(), dim_));
      row[i] = val;
      total += val;
    }
  }
  total *= W.cell_volume();
  if (!(total > 0.0)) throw ConfigError("profile '" + name_ + "' has no mass on the phase grid");
  W.values *= N * power(eps, dim_) / total;
  return W;
}

}  // namespace semiclassic
