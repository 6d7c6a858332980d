#pragma once

#include <map>
#include <utility>

#include <nlohmann/json.hpp>

#include "semiclassic/array.hpp"
#include "semiclassic/grid.hpp"
#include "semiclassic/states.hpp"

namespace semiclassic {

// h^d * sum of singular values of K. Hermitian and anti-Hermitian kernels go through an
// eigenvalue solver, everything else through an SVD.
double trace_norm(const CMatrix& K, const SpatialGrid& grid);
double trace_norm(const DensityOperator& op);

// h^d * Frobenius norm of K
double hs_norm(const CMatrix& K, const SpatialGrid& grid);
double hs_norm(const DensityOperator& op);

// ( sum_{|beta|<=s} int (1+xbar^2+v^2)^a |d^beta W|^2 )^(1/2): spectral in x, fourth-order
// centered differences with zero extension in v.
double sobolev_norm(const PhaseSpaceDensity& W, int s, int a);

// [x_axis, omega] and [eps d_axis, omega] kernels (centered lift for x).
CMatrix commutator_x(const DensityOperator& op, int axis = 0);
CMatrix commutator_grad(const DensityOperator& op, int axis = 0);

struct CommutatorNorms {
  double trace_x = 0.0;
  double trace_grad = 0.0;
  double hs_x = 0.0;
  double hs_grad = 0.0;
};

// Components are summed over axes when d = 2.
CommutatorNorms commutator_norms(const DensityOperator& op, bool with_trace = true);

// Lattice box |p_j| <= p_max * 2pi/L, |eps q_j| <= q_max * h per axis.
struct ObservableBox {
  int p_max = 8;
  int q_max = 8;
};

struct ObservableDistance {
  double value = 0.0;  // sup |tr e^{ipx+q eps grad}(omega - weyl W)| / (1+|p|+|q|)^2
  Index p_argmax{0, 0};
  Index q_argmax{0, 0};
  ObservableBox box;
};

// Snaps a real (p, q) bound to lattice counts; returns the box and the largest snap distance.
std::pair<ObservableBox, double> snap_box(const SpatialGrid& grid, double eps, double p_bound,
                                          double q_bound);

// Fourier-Wigner coefficient What(p,q) = h^d dv^d sum W e^{i p.x + i q.v} for lattice (p, q)
// on the natural phase grid, returned for every p, q in the box (row p, column q, ascending).
CMatrix wigner_characteristic(const PhaseSpaceDensity& W, const ObservableBox& box);

ObservableDistance observable_distance(const DensityOperator& op, const PhaseSpaceDensity& W,
                                       const ObservableBox& box = {});

struct NormReport {
  double trace_norm = 0.0;
  double hs_norm = 0.0;
  std::map<std::pair<int, int>, double> sobolev;
  CommutatorNorms commutators;
  double observable_sup = 0.0;
  ObservableBox box;
};

nlohmann::json to_json(const NormReport& report);
nlohmann::json to_json(const CommutatorNorms& norms);

}  // namespace semiclassic
