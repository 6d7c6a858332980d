#pragma once

#include <map>
#include <string>

#include "semiclassic/array.hpp"
#include "semiclassic/grid.hpp"

namespace semiclassic {

// Kernel K[a][b] ~ omega(x_a; x_b) on an n^d-point torus; the operator is h^d K.
struct DensityOperator {
  SpatialGrid grid;
  double N = 1.0;
  double eps = 1.0;
  CMatrix kernel;

  DensityOperator() = default;
  DensityOperator(const SpatialGrid& g, double n_particles, double epsilon);

  double cell_volume() const noexcept;  // h^d
  double trace() const noexcept;        // h^d sum_i Re K_ii
};

// W[a][i] ~ W(x_i, v_a): rows are flat velocity indices, columns flat spatial indices.
struct PhaseSpaceDensity {
  PhaseGrid grid;
  double eps = 1.0;
  double N = 1.0;
  CMatrix values;

  PhaseSpaceDensity() = default;
  PhaseSpaceDensity(const PhaseGrid& g, double epsilon, double n_particles);

  double cell_volume() const noexcept;  // h^d dv^d
  Complex mass() const noexcept;        // h^d dv^d sum W
  double l2_norm() const noexcept;      // (h^d dv^d sum |W|^2)^(1/2)
  double imag_max() const noexcept;
};

struct SpatialDensity {
  SpatialGrid grid;
  RArray rho;

  double mass() const noexcept;  // h^d sum rho
};

struct WignerOptions {
  bool check_cutoff = true;
  // relative momentum mass allowed in the outer 1/16 of the velocity window
  double max_leak = 1e-8;
};

// W(x,v) = (1/2pi)^d int ds omega(x+s/2; x-s/2) e^{-i s.v/eps}. Exact and invertible on
// PhaseGrid::natural; on any other phase grid the band-limited interpolant is sampled.
PhaseSpaceDensity wigner_transform(const DensityOperator& op, const PhaseGrid& pgrid,
                                   const WignerOptions& options = {});
PhaseSpaceDensity wigner_transform(const DensityOperator& op, const WignerOptions& options = {});

// omega(x;y) = eps^{-d} int dv W((x+y)/2, v) e^{i v.(x-y)/eps}; N*eps^d = 1 recovers the
// N-prefactored form.
DensityOperator weyl_quantize(const PhaseSpaceDensity& W);

// Relative momentum-density mass of op that sits in the outer 1/16 of pgrid's velocity window.
double momentum_leak(const DensityOperator& op, const PhaseGrid& pgrid);

SpatialDensity density_of(const DensityOperator& op);
SpatialDensity velocity_marginal(const PhaseSpaceDensity& W);

// Gaussian g_k(x,v) = (k/2pi)^d e^{-k(x^2+v^2)/2}.
struct Mollifier {
  double k = 1.0;

  explicit Mollifier(double strength);
  // periodized in x, truncated in v, times h^d dv^d
  double discrete_mass(const PhaseGrid& grid) const;
  // analytic Gaussian mass falling outside the box in x or v
  double box_leakage(const PhaseGrid& grid) const;
};

PhaseSpaceDensity mollify(const PhaseSpaceDensity& W, const Mollifier& mol);

// Named analytic phase-space profile W0(x, v) in the centered lift.
//   gaussian:   sigma_x, sigma_v, x0, v0
//   fermi_ball: sigma_x, sigma_v, exponent, x0, v0  ->  (1 - |x-x0|^2/sx^2 - |v-v0|^2/sv^2)_+^exponent
class Profile {
 public:
  Profile(std::string name, std::map<std::string, double> params, int dim = 1);

  const std::string& name() const noexcept { return name_; }
  const std::map<std::string, double>& params() const noexcept { return params_; }
  int dim() const noexcept { return dim_; }
  double param(const std::string& key, double fallback) const;

  // unnormalized value
  double operator()(std::span<const double> x, std::span<const double> v) const;
  // samples on the grid (x in the centered lift) normalized to unit mass
  PhaseSpaceDensity sample(const PhaseGrid& grid, double eps, double N) const;

 private:
  std::string name_;
  std::map<std::string, double> params_;
  int dim_;
};

}  // namespace semiclassic
