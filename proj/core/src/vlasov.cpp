#include "semiclassic/vlasov.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "semiclassic/error.hpp"

namespace semiclassic {

namespace {

// 4-point Lagrange weights for nodes -1, 0, 1, 2 at fractional offset f in [0, 1)
std::array<double, 4> cubic_weights(double f) {
  return {-f * (f - 1.0) * (f - 2.0) / 6.0, (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
          -(f + 1.0) * f * (f - 2.0) / 2.0, (f + 1.0) * f * (f - 1.0) / 6.0};
}

std::array<double, kMaxDim> velocity_vector(const PhaseGrid& pgrid, std::size_t row) {
  const Index idx = pgrid.unflatten_velocity(row);
  std::array<double, kMaxDim> v{};
  for (int a = 0; a < pgrid.dim(); ++a) v[a] = pgrid.velocity(idx[a]);
  return v;
}

void check_cfl(const PhaseGrid& pgrid, double dt) {
  const double vm = pgrid.v_max() * std::sqrt(static_cast<double>(pgrid.dim()));
  const double umax = vm / std::sqrt(1.0 + vm * vm);
  const double h = pgrid.spatial().spacing();
  if (dt * umax > 0.5 * h * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "dt = " << dt << " violates dt*max|u| <= h/2 (h = " << h << ")";
    throw ConfigError(msg.str());
  }
}

// W(x, v) <- W(x - tau u(v), v), spectrally per velocity row
void advect_x_fourier(PhaseSpaceDensity& W, double tau) {
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  const std::size_t M = grid.size();
  const std::size_t Mv = pgrid.velocity_size();
  const int d = grid.dim();
  const int n = grid.points();
  transform_batch(grid, W.values.data(), static_cast<int>(Mv), 1, static_cast<int>(M),
                  fft::Direction::forward);
  std::vector<Index> idx(M);
  for (std::size_t j = 0; j < M; ++j) idx[j] = grid.unflatten(j);
  std::vector<double> v(d), u(d);
  std::vector<std::vector<Complex>> axis_mult(d, std::vector<Complex>(n));
  for (std::size_t r = 0; r < Mv; ++r) {
    const auto vv = velocity_vector(pgrid, r);
    std::copy_n(vv.begin(), d, v.begin());
    relativistic_velocity(v, u);
    for (int a = 0; a < d; ++a) {
      const double s = tau * u[a];
      for (int b = 0; b < n; ++b) {
        const double p = grid.momentum(b);
        axis_mult[a][b] = b == n / 2 ? Complex(std::cos(p * s), 0.0) : std::polar(1.0, -p * s);
      }
    }
    auto row = W.values.row(r);
    for (std::size_t j = 0; j < M; ++j) {
      Complex m = 1.0 / static_cast<double>(M);
      for (int a = 0; a < d; ++a) m *= axis_mult[a][idx[j][a]];
      row[j] *= m;
    }
  }
  transform_batch(grid, W.values.data(), static_cast<int>(Mv), 1, static_cast<int>(M),
                  fft::Direction::backward);
}

// same shift with periodic cubic Lagrange interpolation, one axis at a time
void advect_x_cubic(PhaseSpaceDensity& W, double tau) {
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  const std::size_t M = grid.size();
  const int d = grid.dim();
  const double h = grid.spacing();
  std::vector<double> v(d), u(d);
  CArray tmp(M);
  for (std::size_t r = 0; r < pgrid.velocity_size(); ++r) {
    const auto vv = velocity_vector(pgrid, r);
    std::copy_n(vv.begin(), d, v.begin());
    relativistic_velocity(v, u);
    auto row = W.values.row(r);
    for (int a = 0; a < d; ++a) {
      const double pos = -tau * u[a] / h;
      const double base = std::floor(pos);
      const auto w = cubic_weights(pos - base);
      const int ib = static_cast<int>(base);
      for (std::size_t j = 0; j < M; ++j) {
        Complex s = 0.0;
        for (int k = 0; k < 4; ++k) {
          Index shift{0, 0};
          shift[a] = ib + k - 1;
          s += w[k] * row[grid.shifted(j, shift)];
        }
        tmp[j] = s;
      }
      std::copy(tmp.begin(), tmp.end(), row.begin());
    }
  }
}

void advect_x(PhaseSpaceDensity& W, double tau, Interpolation interp) {
  if (tau == 0.0) return;
  if (interp == Interpolation::fourier_x_cubic_v)
    advect_x_fourier(W, tau);
  else
    advect_x_cubic(W, tau);
}

// W(x, v) <- W(x, v - tau F(x)) with cubic Lagrange in v, zero outside the window
void shift_v(PhaseSpaceDensity& W, double tau, const std::vector<RArray>& force) {
  const auto& pgrid = W.grid;
  const std::size_t M = pgrid.spatial().size();
  const std::size_t Mv = pgrid.velocity_size();
  const int d = pgrid.dim();
  const int m = pgrid.velocity_points();
  const double dv = pgrid.dv();
  std::vector<std::array<double, 4>> w(M);
  std::vector<int> base(M);
  CMatrix out(Mv, M);
  for (int axis = 0; axis < d; ++axis) {
    bool any = false;
    for (std::size_t j = 0; j < M; ++j) {
      const double pos = -tau * force[axis][j] / dv;
      const double b = std::floor(pos);
      base[j] = static_cast<int>(b);
      w[j] = cubic_weights(pos - b);
      any = any || pos != 0.0;
    }
    if (!any) continue;
    std::size_t inner = 1;
    for (int b = axis + 1; b < d; ++b) inner *= static_cast<std::size_t>(m);
    for (std::size_t r = 0; r < Mv; ++r) {
      const int c = static_cast<int>((r / inner) % static_cast<std::size_t>(m));
      auto dst = out.row(r);
      for (std::size_t j = 0; j < M; ++j) {
        Complex s = 0.0;
        for (int k = 0; k < 4; ++k) {
          const int cc = c + base[j] + k - 1;
          if (cc < 0 || cc >= m) continue;
          const std::size_t src = r + static_cast<std::size_t>(cc - c) * inner;
          s += w[j][k] * W.values(src, j);
        }
        dst[j] = s;
      }
    }
    std::swap(W.values, out);
  }
}

std::vector<RArray> force_from(const PhaseSpaceDensity& W, const InteractionPotential& V) {
  const int d = W.grid.dim();
  const std::size_t M = W.grid.spatial().size();
  std::vector<RArray> out(d, RArray(M, 0.0));
  if (V.is_zero()) return out;
  const SpatialDensity rho = velocity_marginal(W);
  for (int a = 0; a < d; ++a) out[a] = mean_field_force(rho, V, a);
  return out;
}

VlasovStepReport inspect(PhaseSpaceDensity& W, bool clip) {
  VlasovStepReport rep;
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& z : W.values.storage()) {
    lo = std::min(lo, z.real());
    hi = std::max(hi, z.real());
  }
  rep.min_ratio = hi > 0.0 ? lo / hi : 0.0;
  rep.undershoot = rep.min_ratio < -1e-6;
  if (clip && rep.undershoot) {
    double removed = 0.0;
    for (auto& z : W.values.storage())
      if (z.real() < 0.0) {
        removed -= z.real();
        z = Complex(0.0, z.imag());
      }
    rep.clipped_mass = removed * W.cell_volume();
  }
  for (const auto& z : W.values.storage())
    if (!std::isfinite(z.real())) throw NumericalError("Vlasov solution became non-finite");
  return rep;
}

void check_dt(double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be a finite nonnegative number");
}

}  // namespace

double relativistic_velocity(double v) { return v / std::sqrt(1.0 + v * v); }

void relativistic_velocity(std::span<const double> v, std::span<double> out) {
  double v2 = 0.0;
  for (double c : v) v2 += c * c;
  const double g = 1.0 / std::sqrt(1.0 + v2);
  for (std::size_t a = 0; a < v.size(); ++a) out[a] = v[a] * g;
}

RArray mean_field_force(const SpatialDensity& rho, const InteractionPotential& V, int axis) {
  if (V.is_zero()) return RArray(rho.grid.size(), 0.0);
  RArray g = MeanField(V, rho.grid, rho.rho).gradient_on_grid(axis);
  for (auto& x : g) x = -x;
  return g;
}

PhaseSpaceDensity vlasov_step(const PhaseSpaceDensity& W, const InteractionPotential& V,
                              const VlasovConfig& cfg, VlasovStepReport* report) {
  check_dt(cfg.dt);
  PhaseSpaceDensity out = W;
  if (cfg.dt == 0.0) return out;
  check_cfl(W.grid, cfg.dt);
  std::vector<RArray> force;
  if (cfg.force_update == ForceUpdate::per_step) force = force_from(out, V);
  advect_x(out, 0.5 * cfg.dt, cfg.interpolation);
  if (cfg.force_update == ForceUpdate::per_substep) force = force_from(out, V);
  shift_v(out, cfg.dt, force);
  advect_x(out, 0.5 * cfg.dt, cfg.interpolation);
  const VlasovStepReport rep = inspect(out, cfg.clip_undershoot);
  if (report != nullptr) *report = rep;
  return out;
}

std::vector<VlasovSnapshot> evolve_vlasov(const PhaseSpaceDensity& W, const InteractionPotential& V,
                                          const VlasovConfig& cfg, double t_final) {
  check_dt(cfg.dt);
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw ConfigError("t_final must be nonnegative");
  auto snap = [](double t, const PhaseSpaceDensity& state, const VlasovStepReport& rep) {
    return VlasovSnapshot{t, state, state.mass().real(), state.l2_norm(), rep.min_ratio, rep.undershoot};
  };
  PhaseSpaceDensity state = W;
  std::vector<VlasovSnapshot> out;
  out.push_back(snap(0.0, state, inspect(state, false)));
  if (t_final == 0.0) return out;
  if (cfg.dt == 0.0) throw ConfigError("dt must be positive for a nonzero t_final");
  const long steps = static_cast<long>(std::ceil(t_final / cfg.dt - 1e-9));
  const double tau = t_final / static_cast<double>(steps);
  long every = steps;
  if (cfg.snapshot_interval > 0.0)
    every = std::max(1L, std::min(steps, std::lround(cfg.snapshot_interval / tau)));
  VlasovConfig step_cfg = cfg;
  step_cfg.dt = tau;
  check_cfl(W.grid, tau);
  VlasovStepReport worst;
  worst.min_ratio = out.front().min_ratio;
  for (long s = 1; s <= steps; ++s) {
    VlasovStepReport rep;
    state = vlasov_step(state, V, step_cfg, &rep);
    if (rep.min_ratio < worst.min_ratio) worst.min_ratio = rep.min_ratio;
    worst.undershoot = worst.undershoot || rep.undershoot;
    if (s % every == 0 || s == steps) {
      out.push_back(snap(s * tau, state, rep));
      out.back().undershoot = worst.undershoot;
    }
  }
  return out;
}

namespace {

// One RK4 step; stage_force(stage, X, F) with stage 0, 1 (midpoint) or 2 (end).
template <class StageForce>
void rk4_step(std::span<double> X, std::span<double> V, int d, double h, StageForce&& stage_force) {
  const std::size_t n = X.size();
  const std::size_t nodes = n / static_cast<std::size_t>(d);
  std::vector<double> kx[4], kv[4];
  std::vector<double> Xs(X.begin(), X.end()), Vs(V.begin(), V.end());
  for (int s = 0; s < 4; ++s) {
    kx[s].resize(n);
    kv[s].resize(n);
    if (s > 0) {
      const double c = s == 3 ? h : 0.5 * h;
      for (std::size_t i = 0; i < n; ++i) {
        Xs[i] = X[i] + c * kx[s - 1][i];
        Vs[i] = V[i] + c * kv[s - 1][i];
      }
    }
    for (std::size_t node = 0; node < nodes; ++node) {
      std::span<const double> vn(Vs.data() + node * d, d);
      relativistic_velocity(vn, std::span<double>(kx[s].data() + node * d, d));
    }
    stage_force(s == 0 ? 0 : (s == 3 ? 2 : 1), std::span<const double>(Xs), std::span<double>(kv[s]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    X[i] += h / 6.0 * (kx[0][i] + 2.0 * kx[1][i] + 2.0 * kx[2][i] + kx[3][i]);
    V[i] += h / 6.0 * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(X[i]) || !std::isfinite(V[i]))
      throw NumericalError("characteristics became non-finite");
}

CharacteristicFlow start_flow(const PhaseGrid& grid, RArray& X, RArray& V) {
  const auto& sg = grid.spatial();
  const int d = grid.dim();
  const std::size_t M = sg.size();
  const std::size_t nodes = grid.velocity_size() * M;
  X.assign(nodes * d, 0.0);
  V.assign(nodes * d, 0.0);
  for (std::size_t r = 0; r < grid.velocity_size(); ++r) {
    const auto v = velocity_vector(grid, r);
    for (std::size_t j = 0; j < M; ++j) {
      const Index idx = sg.unflatten(j);
      for (int a = 0; a < d; ++a) {
        X[(r * M + j) * d + a] = sg.position(idx[a]);
        V[(r * M + j) * d + a] = v[a];
      }
    }
  }
  CharacteristicFlow flow;
  flow.grid = grid;
  return flow;
}

void record(CharacteristicFlow& flow, double t, const RArray& X, const RArray& V) {
  const double L = flow.grid.spatial().length();
  RArray wrapped(X);
  for (auto& x : wrapped) {
    x = std::fmod(x, L);
    if (x < 0.0) x += L;
  }
  flow.times.push_back(t);
  flow.X.push_back(std::move(wrapped));
  flow.X_lift.push_back(X);
  flow.V.push_back(V);
}

long step_count(double span, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  return std::max(1L, static_cast<long>(std::ceil(std::abs(span) / dt - 1e-9)));
}

}  // namespace

void advance_characteristics(std::span<double> X, std::span<double> V, int dim,
                             const ForceField& force, double t0, double t1, double dt) {
  if (X.size() != V.size() || X.size() % static_cast<std::size_t>(dim) != 0)
    throw ConfigError("position and velocity arrays do not match");
  if (t1 == t0) return;
  const long steps = step_count(t1 - t0, dt);
  const double h = (t1 - t0) / static_cast<double>(steps);
  const std::size_t nodes = X.size() / dim;
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    rk4_step(X, V, dim, h, [&](int stage, std::span<const double> Xs, std::span<double> F) {
      const double ts = t + 0.5 * stage * h;
      for (std::size_t node = 0; node < nodes; ++node)
        force(ts, Xs.subspan(node * dim, dim), F.subspan(node * dim, dim));
    });
  }
}

CharacteristicFlow integrate_characteristics(const PhaseGrid& grid, const ForceField& force,
                                             double t_final, double dt, int record_every) {
  RArray X, V;
  CharacteristicFlow flow = start_flow(grid, X, V);
  record(flow, 0.0, X, V);
  if (t_final == 0.0) return flow;
  const long steps = step_count(t_final, dt);
  const double h = t_final / static_cast<double>(steps);
  for (long s = 1; s <= steps; ++s) {
    advance_characteristics(X, V, grid.dim(), force, (s - 1) * h, s * h, h);
    if (s % std::max(1, record_every) == 0 || s == steps) record(flow, s * h, X, V);
  }
  return flow;
}

CharacteristicFlow integrate_characteristics(const PhaseSpaceDensity& W0,
                                             const InteractionPotential& V, double t_final,
                                             double dt, int record_every) {
  const auto& grid = W0.grid;
  const int d = grid.dim();
  RArray X, Vel;
  CharacteristicFlow flow = start_flow(grid, X, Vel);
  record(flow, 0.0, X, Vel);
  if (t_final == 0.0) return flow;
  const long steps = step_count(t_final, dt);
  const double h = t_final / static_cast<double>(steps);
  VlasovConfig cfg;
  cfg.dt = 0.5 * h;
  PhaseSpaceDensity W = W0;
  auto field = [&](const PhaseSpaceDensity& state) {
    return MeanField(V, grid.spatial(), velocity_marginal(state).rho);
  };
  MeanField start = field(W);
  const std::size_t nodes = X.size() / d;
  for (long s = 1; s <= steps; ++s) {
    W = vlasov_step(W, V, cfg);
    MeanField mid = field(W);
    W = vlasov_step(W, V, cfg);
    MeanField end = field(W);
    const MeanField* stages[3] = {&start, &mid, &end};
    rk4_step(X, Vel, d, h, [&](int stage, std::span<const double> Xs, std::span<double> F) {
      const MeanField& mf = *stages[stage];
      for (std::size_t node = 0; node < nodes; ++node)
        for (int a = 0; a < d; ++a)
          F[node * d + a] = mf.is_zero() ? 0.0 : -mf.gradient(Xs.subspan(node * d, d), a);
    });
    start = std::move(end);
    if (s % std::max(1, record_every) == 0 || s == steps) record(flow, s * h, X, Vel);
  }
  return flow;
}

std::vector<double> flow_derivative_probe(const CharacteristicFlow& flow) {
  const auto& pgrid = flow.grid;
  const auto& sg = pgrid.spatial();
  const int d = pgrid.dim();
  const int n = sg.points();
  const int m = pgrid.velocity_points();
  const std::size_t M = sg.size();
  const double h = sg.spacing();
  const double L = sg.length();
  const double dv = pgrid.dv();
  std::vector<double> out;
  out.reserve(flow.times.size());
  for (std::size_t t = 0; t < flow.times.size(); ++t) {
    const RArray& X = flow.X_lift[t];
    const RArray& V = flow.V[t];
    double sup = 0.0;
    for (std::size_t r = 0; r < pgrid.velocity_size(); ++r) {
      const Index vidx = pgrid.unflatten_velocity(r);
      for (std::size_t j = 0; j < M; ++j) {
        const Index xidx = sg.unflatten(j);
        double total = 0.0;
        for (int b = 0; b < d; ++b) {
          // spatial neighbours, periodic with the lift jump restored
          Index plus{0, 0}, minus{0, 0};
          plus[b] = 1;
          minus[b] = -1;
          const std::size_t np = r * M + sg.shifted(j, plus);
          const std::size_t nm = r * M + sg.shifted(j, minus);
          const double jp = xidx[b] == n - 1 ? L : 0.0;
          const double jm = xidx[b] == 0 ? -L : 0.0;
          for (int a = 0; a < d; ++a) {
            const double corr_p = a == b ? jp : 0.0;
            const double corr_m = a == b ? jm : 0.0;
            total += std::abs((X[np * d + a] + corr_p) - (X[nm * d + a] + corr_m)) / (2.0 * h);
            total += std::abs(V[np * d + a] - V[nm * d + a]) / (2.0 * h);
          }
          // velocity neighbours, one-sided at the window edges
          Index vp = vidx, vm = vidx;
          double span = 2.0 * dv;
          if (vidx[b] + 1 < m) ++vp[b]; else span = dv;
          if (vidx[b] > 0) --vm[b]; else span = dv;
          const std::size_t rp = pgrid.flatten_velocity(vp) * M + j;
          const std::size_t rm = pgrid.flatten_velocity(vm) * M + j;
          for (int a = 0; a < d; ++a) {
            total += std::abs(X[rp * d + a] - X[rm * d + a]) / span;
            total += std::abs(V[rp * d + a] - V[rm * d + a]) / span;
          }
        }
        sup = std::max(sup, total);
      }
    }
    out.push_back(sup);
  }
  return out;
}

}  // namespace semiclassic
