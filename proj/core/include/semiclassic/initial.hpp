#pragma once

#include "semiclassic/metrics.hpp"
#include "semiclassic/states.hpp"

namespace semiclassic {

struct InitialState {
  DensityOperator op;       // omega_N after eigenvalue clipping
  PhaseSpaceDensity wigner; // W_N = wigner_transform(omega_N)
  double clip_magnitude = 0.0;  // sum |lambda - clipped lambda| of h^d K
  double min_eigenvalue = 0.0;  // of h^d K before clipping
  double max_eigenvalue = 0.0;
  CommutatorNorms commutators;
};

struct InitialOptions {
  bool measure_commutators = true;
  // Clipping negative eigenvalues leaves a slowly decaying momentum tail, so
  // rough profiles may need a looser cutoff check than the Wigner default.
  double max_leak = 1e-8;
};

// omega_N = clip(weyl_quantize(W0)) on the natural phase grid, with eps = N^{-1/d}.
// Rejects the profile when the clip moves more than 5% of the trace.
InitialState build_initial_state(const Profile& profile, double N, double eps,
                                 const SpatialGrid& grid, const InitialOptions& options = {});

}  // namespace semiclassic
