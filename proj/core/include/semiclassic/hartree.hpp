#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "semiclassic/potential.hpp"
#include "semiclassic/states.hpp"

namespace semiclassic {

enum class SelfConsistency { frozen_density, predictor_corrector };

struct HartreeConfig {
  double dt = 1e-3;
  SelfConsistency self_consistency = SelfConsistency::predictor_corrector;
  // replaces V*rho by a fixed field when set
  std::optional<InteractionPotential> external_potential;
  // 0 keeps only the first and last states
  double snapshot_interval = 0.0;
  bool record_propagator = false;
};

// sqrt(1 + eps^2 |p|^2) in FFT bin order
RArray dispersion_multiplier(const SpatialGrid& grid, double eps);

// U(t1; t0) as the ordered list of unit-modulus factors used by the stepper.
class Propagator {
 public:
  enum class Kind { kinetic, potential };
  struct Factor {
    Kind kind;
    CArray values;  // momentum multiplier (bin order) or spatial multiplier
  };

  Propagator() = default;
  Propagator(SpatialGrid grid, double t0);

  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return t1_; }
  const SpatialGrid& grid() const noexcept { return grid_; }
  const std::vector<Factor>& factors() const noexcept { return factors_; }

  void push(Kind kind, CArray values);
  void set_end(double t1) noexcept { t1_ = t1; }
  // largest ||value| - 1| over every stored factor
  double unitarity_defect() const noexcept;

  // Columns of `block` are grid functions; U or U^dagger is applied to each.
  void apply(CMatrix& block) const;
  void apply_adjoint(CMatrix& block) const;

 private:
  void apply_factor(const Factor& f, CMatrix& block, bool adjoint) const;

  SpatialGrid grid_;
  double t0_ = 0.0;
  double t1_ = 0.0;
  std::vector<Factor> factors_;
};

DensityOperator hartree_step(const DensityOperator& op, const HartreeConfig& cfg,
                             const InteractionPotential& V);

struct HartreeSnapshot {
  double t = 0.0;
  DensityOperator op;
  double trace = 0.0;
  double hs_norm = 0.0;
  double hermitian_defect = 0.0;
};

struct HartreeRun {
  std::vector<HartreeSnapshot> snapshots;
  std::optional<Propagator> propagator;
};

HartreeRun evolve_hartree(const DensityOperator& op, const InteractionPotential& V,
                          const HartreeConfig& cfg, double t_final);

// U^dagger e^{i(p.x + eps q.grad)} U acting on the columns of a block.
struct HeisenbergObservable {
  std::function<void(CMatrix&)> apply;
  Index p_index{};  // p = 2 pi p_index / L
  Index shift{};    // eps q = shift * h
  double snap_distance = 0.0;
};

HeisenbergObservable heisenberg_observable(const Propagator& prop, double eps,
                                           std::span<const double> p, std::span<const double> q,
                                           bool strict = false);

// tr(O omega) = h^d sum_a (O K)[a][a]
Complex trace_against(const HeisenbergObservable& obs, const DensityOperator& op);

}  // namespace semiclassic
