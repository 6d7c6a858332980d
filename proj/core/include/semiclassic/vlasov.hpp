#pragma once

#include <functional>
#include <span>
#include <vector>

#include "semiclassic/potential.hpp"
#include "semiclassic/states.hpp"

namespace semiclassic {

enum class Interpolation { fourier_x_cubic_v, cubic_both };
enum class ForceUpdate { per_step, per_substep };

struct VlasovConfig {
  double dt = 1e-3;
  Interpolation interpolation = Interpolation::fourier_x_cubic_v;
  // per_step: density at the start of the step; per_substep: after the first x half-step
  ForceUpdate force_update = ForceUpdate::per_substep;
  bool clip_undershoot = false;
  double snapshot_interval = 0.0;
};

// v / sqrt(1 + |v|^2)
double relativistic_velocity(double v);
void relativistic_velocity(std::span<const double> v, std::span<double> out);

// -d_axis (V * rho) on the grid
RArray mean_field_force(const SpatialDensity& rho, const InteractionPotential& V, int axis = 0);

struct VlasovStepReport {
  double min_ratio = 0.0;  // min W / max W after the step
  bool undershoot = false; // min_ratio < -1e-6
  double clipped_mass = 0.0;
};

PhaseSpaceDensity vlasov_step(const PhaseSpaceDensity& W, const InteractionPotential& V,
                              const VlasovConfig& cfg, VlasovStepReport* report = nullptr);

struct VlasovSnapshot {
  double t = 0.0;
  PhaseSpaceDensity W;
  double mass = 0.0;
  double l2_norm = 0.0;
  double min_ratio = 0.0;
  bool undershoot = false;
};

std::vector<VlasovSnapshot> evolve_vlasov(const PhaseSpaceDensity& W, const InteractionPotential& V,
                                          const VlasovConfig& cfg, double t_final);

// F(t, x) written into `force`, one entry per axis
using ForceField = std::function<void(double t, std::span<const double> x, std::span<double> force)>;

// Positions and velocities of every phase-grid node, node = velocity_row * M + spatial index,
// component node * d + axis.
struct CharacteristicFlow {
  PhaseGrid grid;
  std::vector<double> times;
  std::vector<RArray> X;       // modulo L
  std::vector<RArray> X_lift;  // continuous
  std::vector<RArray> V;
};

// RK4 on dX/dt = V/sqrt(1+V^2), dV/dt = F(t, X) from t0 to t1 (either direction).
void advance_characteristics(std::span<double> X, std::span<double> V, int dim,
                             const ForceField& force, double t0, double t1, double dt);

CharacteristicFlow integrate_characteristics(const PhaseGrid& grid, const ForceField& force,
                                             double t_final, double dt, int record_every = 1);

// Self-consistent: the force comes from the Vlasov solution started at W0, sampled at
// t, t + dt/2 and t + dt of each RK4 step.
CharacteristicFlow integrate_characteristics(const PhaseSpaceDensity& W0,
                                             const InteractionPotential& V, double t_final,
                                             double dt, int record_every = 1);

// Per recorded time, sup over nodes of the entrywise l1 norm of the centered-difference
// Jacobian d(X, V)/d(x, v).
std::vector<double> flow_derivative_probe(const CharacteristicFlow& flow);

}  // namespace semiclassic
