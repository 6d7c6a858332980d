#pragma once

#include <span>
#include <vector>

#include "semiclassic/hartree.hpp"
#include "semiclassic/potential.hpp"
#include "semiclassic/states.hpp"
#include "semiclassic/vlasov.hpp"

namespace semiclassic {

// F(p;q) = E(p) - E(q) - (eps^2/2)(p-q).(p+q)/sqrt(1 + eps^2|p+q|^2/4), E(p) = sqrt(1+eps^2|p|^2)
double kinetic_symbol(double p, double q, double eps);
double kinetic_symbol(std::span<const double> p, std::span<const double> q, double eps);

// eps^2 (p-q).(p+q) / (2 sqrt(1 + eps^2|p+q|^2/4))
double transport_symbol(std::span<const double> p, std::span<const double> q, double eps);

struct SymbolBoundReport {
  double eps = 0.0;
  std::size_t samples = 0;  // pairs with a nonzero bound
  // max of (1+eps^2 p^2)|D F| / bound over the samples for D = 1, grad_p, Laplacian_p
  double value_ratio = 0.0;
  double gradient_ratio = 0.0;
  double laplacian_ratio = 0.0;
  bool pass = true;
};

// Samples (p, q) uniformly over the momentum range of a grid with h = eps/4 (d = 1).
SymbolBoundReport symbol_bound_check(double eps, std::size_t sample_count, unsigned seed = 1);

// Kernels in the same normalization as DensityOperator::kernel.
CMatrix dispersion_commutator(const DensityOperator& op);  // [sqrt(1 - eps^2 Lap), omega]
CMatrix transport_operator_A(const DensityOperator& omega_tilde);
CMatrix transport_operator_A(const PhaseSpaceDensity& W_tilde);
CMatrix kinetic_residual(const DensityOperator& op);  // F(p;q) omega_hat(p;q)

// [Phi(x) - Phi(y) - grad Phi(mid).(x - y)] omega_tilde(x;y), Phi = V * rho_tilde, with the
// centered displacement. The kernel is anti-Hermitian.
CMatrix remainder_operator_C(const PhaseSpaceDensity& W_tilde, const InteractionPotential& V);

// (x - y).grad Phi(mid) omega_tilde(x;y)
CMatrix potential_operator_B(const PhaseSpaceDensity& W_tilde, const InteractionPotential& V);

// HS(B - i eps weyl(grad Phi . grad_v W)) / HS(B), zero when B vanishes
double b_identity_defect(const PhaseSpaceDensity& W, const InteractionPotential& V);

struct ResidualReport {
  double t = 0.0;
  double eps = 0.0;
  double residual_l2 = 0.0;         // || d_t W_H - R[W_H] ||_2
  double time_derivative_l2 = 0.0;  // || d_t W_H ||_2
  double transport_l2 = 0.0;        // || R[W_H] ||_2
  double b_identity_defect = 0.0;   // HS(B - i eps weyl(grad Phi . grad_v W~)) / HS(B)
};

// R[W] = -u(v).grad_x W + grad(V * rho).grad_v W, spectral in x and in v on the natural grid
PhaseSpaceDensity vlasov_rhs(const PhaseSpaceDensity& W, const InteractionPotential& V);

// Central difference of the Hartree snapshots around t against the Vlasov right side on the
// Hartree snapshot at t; the B identity is checked on the Vlasov snapshot at t.
ResidualReport wigner_evolution_residual(const std::vector<HartreeSnapshot>& hartree,
                                         const std::vector<VlasovSnapshot>& vlasov, double t,
                                         const InteractionPotential& V);

}  // namespace semiclassic
