#include "semiclassic/hartree.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "semiclassic/error.hpp"

namespace semiclassic {

namespace {

std::vector<int> kernel_shape(const SpatialGrid& grid) { return std::vector<int>(2 * grid.dim(), grid.points()); }

CArray kinetic_factor(const RArray& energy, double tau, double eps) {
  CArray u(energy.size());
  for (std::size_t k = 0; k < energy.size(); ++k) u[k] = std::polar(1.0, -tau * energy[k] / eps);
  return u;
}

// K <- U K U^dagger with U diagonal in Fourier. The second index is transformed with the
// forward sign too, so its bin l stands for momentum -p_l; u is even, hence u_k conj(u_l).
void conjugate_kinetic(CMatrix& K, const SpatialGrid& grid, const CArray& u) {
  const std::size_t M = grid.size();
  const auto shape = kernel_shape(grid);
  fft::execute(K.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::forward);
  const double scale = 1.0 / (static_cast<double>(M) * static_cast<double>(M));
  for (std::size_t k = 0; k < M; ++k) {
    const Complex uk = u[k] * scale;
    auto row = K.row(k);
    for (std::size_t l = 0; l < M; ++l) row[l] *= uk * std::conj(u[l]);
  }
  fft::execute(K.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::backward);
}

void conjugate_potential(CMatrix& K, const CArray& phi) {
  const std::size_t M = phi.size();
  for (std::size_t a = 0; a < M; ++a) {
    auto row = K.row(a);
    for (std::size_t b = 0; b < M; ++b) row[b] *= phi[a] * std::conj(phi[b]);
  }
}

RArray field_on_grid(const DensityOperator& state, const HartreeConfig& cfg,
                     const InteractionPotential& V) {
  const auto& grid = state.grid;
  if (cfg.external_potential) {
    RArray out(grid.size());
    std::vector<double> x(grid.dim());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Index idx = grid.unflatten(j);
      for (int a = 0; a < grid.dim(); ++a) x[a] = grid.position(idx[a]);
      out[j] = cfg.external_potential->value(grid, x);
    }
    return out;
  }
  if (V.is_zero()) return RArray(grid.size(), 0.0);
  return MeanField(V, grid, density_of(state).rho).values_on_grid();
}

CArray potential_factor(const RArray& phi, double tau, double eps) {
  CArray out(phi.size());
  for (std::size_t j = 0; j < phi.size(); ++j) out[j] = std::polar(1.0, -tau * phi[j] / eps);
  return out;
}

void check_config(const HartreeConfig& cfg, double eps) {
  if (!(cfg.dt >= 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be a finite nonnegative number");
  if (cfg.dt > 0.1 * eps * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt = " << cfg.dt << " exceeds 0.1*eps = " << 0.1 * eps;
    throw ConfigError(msg.str());
  }
  if (cfg.snapshot_interval < 0.0) throw ConfigError("snapshot_interval must be nonnegative");
}

void check_finite(const CMatrix& K, long step) {
  for (std::size_t i = 0; i < K.rows(); ++i) {
    if (!std::isfinite(K(i, i).real()) || !std::isfinite(K(i, i).imag())) {
      std::ostringstream msg;
      msg << "Hartree state became non-finite at step " << step;
      throw NumericalError(msg.str());
    }
  }
}

HartreeSnapshot snapshot(double t, const DensityOperator& op) {
  HartreeSnapshot s;
  s.t = t;
  s.op = op;
  s.trace = op.trace();
  s.hs_norm = op.cell_volume() * op.kernel.frobenius();
  s.hermitian_defect = op.kernel.hermitian_defect();
  return s;
}

}  // namespace

RArray dispersion_multiplier(const SpatialGrid& grid, double eps) {
  RArray out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Index idx = grid.unflatten(j);
    double p2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) p2 += grid.momentum(idx[a]) * grid.momentum(idx[a]);
    out[j] = std::sqrt(1.0 + eps * eps * p2);
  }
  return out;
}

Propagator::Propagator(SpatialGrid grid, double t0) : grid_(std::move(grid)), t0_(t0), t1_(t0) {}

void Propagator::push(Kind kind, CArray values) {
  if (values.size() != grid_.size()) throw ConfigError("propagator factor has the wrong size");
  factors_.push_back({kind, std::move(values)});
}

double Propagator::unitarity_defect() const noexcept {
  double worst = 0.0;
  for (const auto& f : factors_)
    for (const auto& z : f.values) worst = std::max(worst, std::abs(std::abs(z) - 1.0));
  return worst;
}

void Propagator::apply_factor(const Factor& f, CMatrix& block, bool adjoint) const {
  const std::size_t M = grid_.size();
  const std::size_t cols = block.cols();
  if (f.kind == Kind::potential) {
    for (std::size_t a = 0; a < M; ++a) {
      const Complex z = adjoint ? std::conj(f.values[a]) : f.values[a];
      for (auto& e : block.row(a)) e *= z;
    }
    return;
  }
  fft::Layout layout{grid_.shape(), static_cast<int>(cols), static_cast<int>(cols), 1};
  fft::execute(block.data(), layout, fft::Direction::forward);
  for (std::size_t k = 0; k < M; ++k) {
    const Complex z = (adjoint ? std::conj(f.values[k]) : f.values[k]) / static_cast<double>(M);
    for (auto& e : block.row(k)) e *= z;
  }
  fft::execute(block.data(), layout, fft::Direction::backward);
}

void Propagator::apply(CMatrix& block) const {
  if (block.rows() != grid_.size()) throw ConfigError("block does not live on the propagator grid");
  for (const auto& f : factors_) apply_factor(f, block, false);
}

void Propagator::apply_adjoint(CMatrix& block) const {
  if (block.rows() != grid_.size()) throw ConfigError("block does not live on the propagator grid");
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) apply_factor(*it, block, true);
}

DensityOperator hartree_step(const DensityOperator& op, const HartreeConfig& cfg,
                             const InteractionPotential& V) {
  check_config(cfg, op.eps);
  DensityOperator out = op;
  if (cfg.dt == 0.0) return out;
  const RArray energy = dispersion_multiplier(op.grid, op.eps);
  const CArray half = kinetic_factor(energy, 0.5 * cfg.dt, op.eps);
  RArray phi;
  if (cfg.self_consistency == SelfConsistency::frozen_density) phi = field_on_grid(out, cfg, V);
  conjugate_kinetic(out.kernel, op.grid, half);
  if (cfg.self_consistency == SelfConsistency::predictor_corrector) phi = field_on_grid(out, cfg, V);
  conjugate_potential(out.kernel, potential_factor(phi, cfg.dt, op.eps));
  conjugate_kinetic(out.kernel, op.grid, half);
  check_finite(out.kernel, 1);
  return out;
}

HartreeRun evolve_hartree(const DensityOperator& op, const InteractionPotential& V,
                          const HartreeConfig& cfg, double t_final) {
  check_config(cfg, op.eps);
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be nonnegative");
  HartreeRun run;
  if (cfg.record_propagator) run.propagator.emplace(op.grid, 0.0);
  run.snapshots.push_back(snapshot(0.0, op));
  if (t_final == 0.0) return run;
  if (cfg.dt == 0.0) throw ConfigError("dt must be positive for a nonzero t_final");

  const long steps = static_cast<long>(std::ceil(t_final / cfg.dt - 1e-9));
  const double tau = t_final / static_cast<double>(steps);
  long every = steps;
  if (cfg.snapshot_interval > 0.0)
    every = std::max(1L, std::min(steps, std::lround(cfg.snapshot_interval / tau)));

  const RArray energy = dispersion_multiplier(op.grid, op.eps);
  const CArray half = kinetic_factor(energy, 0.5 * tau, op.eps);
  const CArray full = kinetic_factor(energy, tau, op.eps);
  const bool merge = cfg.self_consistency == SelfConsistency::predictor_corrector;

  DensityOperator state = op;
  bool pending = false;  // second kinetic half of the previous step not yet applied
  auto kinetic = [&](const CArray& u) {
    conjugate_kinetic(state.kernel, state.grid, u);
    if (run.propagator) run.propagator->push(Propagator::Kind::kinetic, u);
  };
  for (long s = 1; s <= steps; ++s) {
    RArray phi;
    if (!merge) phi = field_on_grid(state, cfg, V);
    kinetic(pending ? full : half);
    if (merge) phi = field_on_grid(state, cfg, V);
    CArray pf = potential_factor(phi, tau, op.eps);
    conjugate_potential(state.kernel, pf);
    if (run.propagator) run.propagator->push(Propagator::Kind::potential, std::move(pf));
    const bool snap = s % every == 0 || s == steps;
    if (merge && !snap) {
      pending = true;
    } else {
      kinetic(half);
      pending = false;
    }
    check_finite(state.kernel, s);
    if (snap) run.snapshots.push_back(snapshot(s * tau, state));
  }
  if (run.propagator) run.propagator->set_end(t_final);
  return run;
}

HeisenbergObservable heisenberg_observable(const Propagator& prop, double eps,
                                           std::span<const double> p, std::span<const double> q,
                                           bool strict) {
  const auto& grid = prop.grid();
  const int d = grid.dim();
  if (static_cast<int>(p.size()) != d || static_cast<int>(q.size()) != d)
    throw ConfigError("p and q must have one entry per dimension");
  const double dp = 2.0 * std::numbers::pi / grid.length();
  const double h = grid.spacing();
  HeisenbergObservable obs;
  for (int a = 0; a < d; ++a) {
    obs.p_index[a] = static_cast<int>(std::lround(p[a] / dp));
    obs.shift[a] = static_cast<int>(std::lround(eps * q[a] / h));
    obs.snap_distance = std::max(obs.snap_distance, std::abs(obs.p_index[a] * dp - p[a]));
    obs.snap_distance = std::max(obs.snap_distance, std::abs(obs.shift[a] * h / eps - q[a]));
  }
  if (strict && obs.snap_distance > 1e-12 * (1.0 + dp + h / eps)) {
    std::ostringstream msg;
    msg << "(p, q) is off the admissible lattice by " << obs.snap_distance;
    throw ConfigError(msg.str());
  }

  // (O f)(x_j) = e^{i p.x_j} e^{i p.eps q / 2} f(x_{j+t})
  const std::size_t M = grid.size();
  CArray phase(M);
  std::vector<std::size_t> source(M);
  double half_phase = 0.0;
  for (int a = 0; a < d; ++a) half_phase += 0.5 * obs.p_index[a] * dp * obs.shift[a] * h;
  for (std::size_t j = 0; j < M; ++j) {
    const Index idx = grid.unflatten(j);
    double ph = half_phase;
    for (int a = 0; a < d; ++a) ph += obs.p_index[a] * dp * grid.position(idx[a]);
    phase[j] = std::polar(1.0, ph);
    source[j] = grid.shifted(j, obs.shift);
  }
  obs.apply = [prop, phase = std::move(phase), source = std::move(source)](CMatrix& block) {
    prop.apply(block);
    CMatrix moved(block.rows(), block.cols());
    for (std::size_t j = 0; j < block.rows(); ++j) {
      auto dst = moved.row(j);
      auto src = block.row(source[j]);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = phase[j] * src[c];
    }
    block = std::move(moved);
    prop.apply_adjoint(block);
  };
  return obs;
}

Complex trace_against(const HeisenbergObservable& obs, const DensityOperator& op) {
  CMatrix block = op.kernel;
  obs.apply(block);
  Complex s = 0.0;
  for (std::size_t i = 0; i < block.rows(); ++i) s += block(i, i);
  return op.cell_volume() * s;
}

}  // namespace semiclassic
