#pragma once

#include <map>
#include <span>

#include "semiclassic/array.hpp"
#include "semiclassic/grid.hpp"

namespace semiclassic {

// Periodic pair potential V(x) = sum_k Vhat_k e^{i p_k.x}, p_k = 2 pi k / L.
class InteractionPotential {
 public:
  explicit InteractionPotential(int dim = 1);

  // amplitude * cos(2 pi k.x / L)
  static InteractionPotential cosine(double amplitude, const Index& mode, int dim = 1);

  // Sets Vhat_k and Vhat_{-k} = conj(Vhat_k); the zero mode must be real.
  void set_mode(const Index& k, Complex value);
  const std::map<Index, Complex>& fourier_coeffs() const noexcept { return modes_; }
  int dim() const noexcept { return dim_; }
  bool is_zero() const noexcept;

  // sum_k |Vhat_k| (1 + |p_k|^4)
  double decay_weight(double length) const;
  double value(const SpatialGrid& grid, std::span<const double> x) const;

 private:
  int dim_;
  std::map<Index, Complex> modes_;
};

// Phi = V * rho for one density, as a trigonometric polynomial that can be evaluated anywhere.
// (V*rho)(x) = sum_k Vhat_k rhohat_k e^{i p_k.x},  rhohat_k = h^d sum_j rho_j e^{-i p_k.x_j}.
class MeanField {
 public:
  MeanField() = default;
  MeanField(const InteractionPotential& V, const SpatialGrid& grid, std::span<const double> rho);

  double value(std::span<const double> x) const;
  // gradient component `axis` of Phi at x
  double gradient(std::span<const double> x, int axis) const;
  RArray values_on_grid() const;
  RArray gradient_on_grid(int axis) const;
  bool is_zero() const noexcept { return terms_.empty(); }

 private:
  struct Term {
    Index mode;
    Complex coeff;
  };
  SpatialGrid grid_;
  std::vector<Term> terms_;
};

}  // namespace semiclassic
