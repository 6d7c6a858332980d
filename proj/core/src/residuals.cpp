#include "semiclassic/residuals.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "semiclassic/error.hpp"
#include "semiclassic/metrics.hpp"

namespace semiclassic {

namespace {

double energy(std::span<const double> p, double eps) {
  double p2 = 0.0;
  for (double c : p) p2 += c * c;
  return std::sqrt(1.0 + eps * eps * p2);
}

// Multiplies the momentum-space kernel by symbol(p, q). After a forward transform on both
// indices, bin l of the second index carries momentum q = p_{(n - l) mod n}.
template <class Symbol>
CMatrix apply_symbol(const DensityOperator& op, Symbol&& symbol) {
  const auto& grid = op.grid;
  const int d = grid.dim();
  const int n = grid.points();
  const std::size_t M = grid.size();
  std::vector<std::array<double, kMaxDim>> p(M), q(M);
  for (std::size_t j = 0; j < M; ++j) {
    const Index idx = grid.unflatten(j);
    for (int a = 0; a < d; ++a) {
      p[j][a] = grid.momentum(idx[a]);
      q[j][a] = grid.momentum((n - idx[a]) % n);
    }
  }
  CMatrix out = op.kernel;
  const std::vector<int> shape(2 * d, n);
  fft::execute(out.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::forward);
  const double scale = 1.0 / (static_cast<double>(M) * static_cast<double>(M));
  for (std::size_t k = 0; k < M; ++k) {
    auto row = out.row(k);
    const std::span<const double> pk(p[k].data(), d);
    for (std::size_t l = 0; l < M; ++l) row[l] *= scale * symbol(pk, std::span<const double>(q[l].data(), d));
  }
  fft::execute(out.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::backward);
  return out;
}

// grad(V * rho) on the half-step lattice (2n points per axis), flat row-major
struct HalfGridGradient {
  SpatialGrid half;
  std::vector<RArray> values;  // per axis
};

HalfGridGradient half_grid_gradient(const MeanField& field, const SpatialGrid& grid) {
  HalfGridGradient out{SpatialGrid(grid.length(), 2 * grid.points(), grid.dim()), {}};
  const int d = grid.dim();
  out.values.assign(d, RArray(out.half.size(), 0.0));
  if (field.is_zero()) return out;
  std::vector<double> x(d);
  for (std::size_t j = 0; j < out.half.size(); ++j) {
    const Index idx = out.half.unflatten(j);
    for (int a = 0; a < d; ++a) x[a] = out.half.position(idx[a]);
    for (int a = 0; a < d; ++a) out.values[a][j] = field.gradient(x, a);
  }
  return out;
}

// Delta.grad Phi(mid) for the pair (x_i, x_j) with Delta the centered displacement in index
// units r. At the seam r = n/2 the displacement is taken as 0 and the gradient averaged over
// both midpoints, which keeps the kernel exactly anti-Hermitian.
CMatrix displacement_gradient(const SpatialGrid& grid, const HalfGridGradient& g) {
  const int d = grid.dim();
  const int n = grid.points();
  const std::size_t M = grid.size();
  const double h = grid.spacing();
  CMatrix out(M, M);
  for (std::size_t i = 0; i < M; ++i) {
    const Index xi = grid.unflatten(i);
    for (std::size_t j = 0; j < M; ++j) {
      const Index yj = grid.unflatten(j);
      int r[kMaxDim] = {0, 0};
      bool seam[kMaxDim] = {false, false};
      for (int a = 0; a < d; ++a) {
        r[a] = grid.centered(((xi[a] - yj[a]) % n + n) % n);
        seam[a] = r[a] == -n / 2;
      }
      // midpoint half-grid index 2 y + r (mod 2n); the seam uses both +-n/2
      double total = 0.0;
      const int variants = (seam[0] ? 2 : 1) * (d > 1 && seam[1] ? 2 : 1);
      for (int var = 0; var < variants; ++var) {
        Index mid{0, 0};
        int bit = 0;
        for (int a = 0; a < d; ++a) {
          int ra = r[a];
          if (seam[a]) ra = ((var >> bit++) & 1) ? n / 2 : -n / 2;
          mid[a] = ((2 * yj[a] + ra) % (2 * n) + 2 * n) % (2 * n);
        }
        const std::size_t m = g.half.flatten(mid);
        for (int a = 0; a < d; ++a)
          if (!seam[a]) total += g.values[a][m] * r[a] * h;
      }
      out(i, j) = total / variants;
    }
  }
  return out;
}

MeanField mean_field_of(const PhaseSpaceDensity& W, const InteractionPotential& V) {
  return MeanField(V, W.grid.spatial(), velocity_marginal(W).rho);
}

// spectral derivative along velocity axis `axis` (Nyquist dropped)
CMatrix velocity_derivative(const CMatrix& values, const PhaseGrid& pgrid, int axis) {
  const int m = pgrid.velocity_points();
  const int d = pgrid.dim();
  const std::size_t M = pgrid.spatial().size();
  std::size_t inner = 1;
  for (int b = axis + 1; b < d; ++b) inner *= static_cast<std::size_t>(m);
  const std::size_t lane = inner * M;
  const std::size_t outer = pgrid.velocity_size() / (inner * m);
  CMatrix out = values;
  const double period = m * pgrid.dv();
  for (std::size_t o = 0; o < outer; ++o) {
    Complex* base = out.data() + o * m * lane;
    const fft::Layout layout{{m}, static_cast<int>(lane), static_cast<int>(lane), 1};
    fft::execute(base, layout, fft::Direction::forward);
    for (int c = 0; c < m; ++c) {
      const int cc = c < m / 2 ? c : c - m;
      const Complex mult =
          c == m / 2 ? Complex(0.0) : Complex(0.0, 2.0 * std::numbers::pi * cc / period / m);
      for (std::size_t l = 0; l < lane; ++l) base[c * lane + l] *= mult;
    }
    fft::execute(base, layout, fft::Direction::backward);
  }
  return out;
}

CMatrix spatial_derivative_rows(const CMatrix& values, const PhaseGrid& pgrid, int axis) {
  CMatrix out(values.rows(), values.cols());
  for (std::size_t r = 0; r < values.rows(); ++r) {
    auto d = spectral_derivative(pgrid.spatial(), values.row(r), 1, axis);
    std::copy(d.begin(), d.end(), out.row(r).begin());
  }
  return out;
}

double phase_l2(const CMatrix& values, const PhaseSpaceDensity& like) {
  return std::sqrt(like.cell_volume()) * values.frobenius();
}

std::size_t find_time(const std::vector<double>& times, double t) {
  const double tol = 1e-9 * std::max(1.0, std::abs(t));
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= tol) return k;
  return times.size();
}

}  // namespace

double kinetic_symbol(std::span<const double> p, std::span<const double> q, double eps) {
  return (energy(p, eps) - energy(q, eps)) - transport_symbol(p, q, eps);
}

double kinetic_symbol(double p, double q, double eps) {
  return kinetic_symbol(std::span<const double>(&p, 1), std::span<const double>(&q, 1), eps);
}

double transport_symbol(std::span<const double> p, std::span<const double> q, double eps) {
  double dot = 0.0;
  double s2 = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    dot += (p[a] - q[a]) * (p[a] + q[a]);
    s2 += (p[a] + q[a]) * (p[a] + q[a]);
  }
  return eps * eps * dot / (2.0 * std::sqrt(1.0 + 0.25 * eps * eps * s2));
}

SymbolBoundReport symbol_bound_check(double eps, std::size_t sample_count, unsigned seed) {
  SymbolBoundReport rep;
  rep.eps = eps;
  if (eps == 0.0) return rep;
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  const double pmax = 4.0 * std::numbers::pi / eps;
  const double delta = 1e-4 / eps;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-pmax, pmax);
  const double e2 = eps * eps;
  for (std::size_t s = 0; s < sample_count; ++s) {
    const double p = uni(rng);
    const double q = uni(rng);
    const double w = std::abs(p - q);
    const double root = std::sqrt(1.0 + e2 * (p + q) * (p + q));
    const double b0 = e2 * w * w * root + e2 * e2 * w * w * w * w;
    const double b1 = e2 * w * root + e2 * e2 * eps * w * w * w * w;
    const double b2 = e2 * root + e2 * e2 * e2 * w * w * w * w;
    if (b0 == 0.0) continue;
    const double f0 = kinetic_symbol(p, q, eps);
    const double fp = kinetic_symbol(p + delta, q, eps);
    const double fm = kinetic_symbol(p - delta, q, eps);
    const double weight = 1.0 + e2 * p * p;
    rep.value_ratio = std::max(rep.value_ratio, weight * std::abs(f0) / b0);
    rep.gradient_ratio = std::max(rep.gradient_ratio, weight * std::abs(fp - fm) / (2.0 * delta) / b1);
    rep.laplacian_ratio =
        std::max(rep.laplacian_ratio, weight * std::abs(fp - 2.0 * f0 + fm) / (delta * delta) / b2);
    ++rep.samples;
  }
  auto ok = [](double r) { return std::isfinite(r) && r < 10.0; };
  rep.pass = ok(rep.value_ratio) && ok(rep.gradient_ratio) && ok(rep.laplacian_ratio);
  return rep;
}

CMatrix dispersion_commutator(const DensityOperator& op) {
  const double eps = op.eps;
  return apply_symbol(op, [eps](std::span<const double> p, std::span<const double> q) {
    return energy(p, eps) - energy(q, eps);
  });
}

CMatrix transport_operator_A(const DensityOperator& omega_tilde) {
  const double eps = omega_tilde.eps;
  return apply_symbol(omega_tilde, [eps](std::span<const double> p, std::span<const double> q) {
    return transport_symbol(p, q, eps);
  });
}

CMatrix transport_operator_A(const PhaseSpaceDensity& W_tilde) {
  return transport_operator_A(weyl_quantize(W_tilde));
}

CMatrix kinetic_residual(const DensityOperator& op) {
  const double eps = op.eps;
  return apply_symbol(op, [eps](std::span<const double> p, std::span<const double> q) {
    return kinetic_symbol(p, q, eps);
  });
}

CMatrix potential_operator_B(const PhaseSpaceDensity& W_tilde, const InteractionPotential& V) {
  const auto& grid = W_tilde.grid.spatial();
  const DensityOperator omega = weyl_quantize(W_tilde);
  CMatrix B = displacement_gradient(grid, half_grid_gradient(mean_field_of(W_tilde, V), grid));
  for (std::size_t k = 0; k < B.size(); ++k) B.storage()[k] *= omega.kernel.storage()[k];
  return B;
}

CMatrix remainder_operator_C(const PhaseSpaceDensity& W_tilde, const InteractionPotential& V) {
  const auto& grid = W_tilde.grid.spatial();
  const std::size_t M = grid.size();
  const DensityOperator omega = weyl_quantize(W_tilde);
  const MeanField field = mean_field_of(W_tilde, V);
  const RArray phi = field.is_zero() ? RArray(M, 0.0) : field.values_on_grid();
  CMatrix C = displacement_gradient(grid, half_grid_gradient(field, grid));
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      C(i, j) = ((phi[i] - phi[j]) - C(i, j)) * omega.kernel(i, j);
  return C;
}

PhaseSpaceDensity vlasov_rhs(const PhaseSpaceDensity& W, const InteractionPotential& V) {
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  const int d = pgrid.dim();
  const std::size_t M = grid.size();
  PhaseSpaceDensity out(pgrid, W.eps, W.N);
  std::vector<double> v(d), u(d);
  for (int a = 0; a < d; ++a) {
    const CMatrix dx = spatial_derivative_rows(W.values, pgrid, a);
    for (std::size_t r = 0; r < pgrid.velocity_size(); ++r) {
      const Index vi = pgrid.unflatten_velocity(r);
      for (int b = 0; b < d; ++b) v[b] = pgrid.velocity(vi[b]);
      relativistic_velocity(v, u);
      auto dst = out.values.row(r);
      auto src = dx.row(r);
      for (std::size_t j = 0; j < M; ++j) dst[j] -= u[a] * src[j];
    }
  }
  if (!V.is_zero()) {
    const MeanField field = mean_field_of(W, V);
    for (int a = 0; a < d; ++a) {
      const RArray grad = field.gradient_on_grid(a);
      const CMatrix dv = velocity_derivative(W.values, pgrid, a);
      for (std::size_t r = 0; r < pgrid.velocity_size(); ++r) {
        auto dst = out.values.row(r);
        auto src = dv.row(r);
        for (std::size_t j = 0; j < M; ++j) dst[j] += grad[j] * src[j];
      }
    }
  }
  return out;
}

double b_identity_defect(const PhaseSpaceDensity& W, const InteractionPotential& V) {
  const CMatrix B = potential_operator_B(W, V);
  const auto& grid = W.grid.spatial();
  const double bnorm = hs_norm(B, grid);
  if (bnorm == 0.0) return 0.0;
  PhaseSpaceDensity g(W.grid, W.eps, W.N);
  const MeanField field = mean_field_of(W, V);
  for (int a = 0; a < W.grid.dim(); ++a) {
    const RArray grad = field.gradient_on_grid(a);
    const CMatrix dv = velocity_derivative(W.values, W.grid, a);
    for (std::size_t r = 0; r < dv.rows(); ++r)
      for (std::size_t j = 0; j < dv.cols(); ++j)
        g.values(r, j) += Complex(0.0, W.eps) * grad[j] * dv(r, j);
  }
  return hs_norm(B - weyl_quantize(g).kernel, grid) / bnorm;
}

ResidualReport wigner_evolution_residual(const std::vector<HartreeSnapshot>& hartree,
                                         const std::vector<VlasovSnapshot>& vlasov, double t,
                                         const InteractionPotential& V) {
  std::vector<double> th, tv;
  for (const auto& s : hartree) th.push_back(s.t);
  for (const auto& s : vlasov) tv.push_back(s.t);
  const std::size_t k = find_time(th, t);
  const std::size_t kv = find_time(tv, t);
  if (k == th.size() || kv == tv.size()) {
    std::ostringstream msg;
    msg << "no aligned Hartree and Vlasov snapshots at t = " << t;
    throw ConfigError(msg.str());
  }
  if (k == 0 || k + 1 >= th.size())
    throw ConfigError("the residual needs Hartree snapshots on both sides of t");
  const double back = th[k] - th[k - 1];
  const double fwd = th[k + 1] - th[k];
  if (std::abs(back - fwd) > 1e-9 * std::max(back, fwd))
    throw ConfigError("Hartree snapshots around t are not evenly spaced");

  // diagnostic only, so the cutoff check is left to the runs themselves
  WignerOptions unchecked;
  unchecked.check_cutoff = false;
  const PhaseSpaceDensity Wm = wigner_transform(hartree[k - 1].op, unchecked);
  const PhaseSpaceDensity W0 = wigner_transform(hartree[k].op, unchecked);
  const PhaseSpaceDensity Wp = wigner_transform(hartree[k + 1].op, unchecked);
  CMatrix dt = Wp.values - Wm.values;
  dt *= 1.0 / (2.0 * back);
  const PhaseSpaceDensity rhs = vlasov_rhs(W0, V);

  ResidualReport rep;
  rep.t = t;
  rep.eps = W0.eps;
  rep.time_derivative_l2 = phase_l2(dt, W0);
  rep.transport_l2 = phase_l2(rhs.values, W0);
  rep.residual_l2 = phase_l2(dt - rhs.values, W0);

  rep.b_identity_defect = b_identity_defect(vlasov[kv].W, V);
  return rep;
}

}  // namespace semiclassic
