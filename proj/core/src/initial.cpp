#include "semiclassic/initial.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semiclassic/error.hpp"
#include "semiclassic/linalg.hpp"

namespace semiclassic {

namespace {

// Largest s with sum_i min(s*lambda_i, 1) = target, lambda_i in [0, 1].
RArray rescale_to_trace(const RArray& lambda, double target) {
  auto total = [&](double s) {
    double t = 0.0;
    for (double l : lambda) t += std::min(s * l, 1.0);
    return t;
  };
  double capacity = 0.0;
  for (double l : lambda)
    if (l > 0.0) capacity += 1.0;
  if (capacity < target)
    throw ConfigError("profile cannot hold the requested trace within 0 <= omega <= 1");
  double lo = 0.0;
  double hi = 1.0;
  while (total(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < target ? lo : hi) = mid;
  }
  RArray out(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) out[i] = std::min(hi * lambda[i], 1.0);
  return out;
}

}  // namespace

InitialState build_initial_state(const Profile& profile, double N, double eps,
                                 const SpatialGrid& grid, const InitialOptions& options) {
  const int d = grid.dim();
  const double expected = std::pow(N, -1.0 / d);
  if (std::abs(eps - expected) > 1e-12 * expected) {
    std::ostringstream msg;
    msg << "eps must equal N^(-1/d) = " << expected << ", got " << eps;
    throw ConfigError(msg.str());
  }
  const PhaseGrid pgrid = PhaseGrid::natural(grid, eps);
  const PhaseSpaceDensity W0 = profile.sample(pgrid, eps, N);
  DensityOperator op = weyl_quantize(W0);
  const std::size_t M = grid.size();
  const double hd = op.cell_volume();

  hermitize(op.kernel);

  CMatrix scaled = op.kernel;
  scaled *= hd;
  EigenSystem eig = hermitian_eigensystem(scaled);
  InitialState out;
  out.min_eigenvalue = eig.values.front();
  out.max_eigenvalue = eig.values.back();

  RArray clipped(eig.values.size());
  for (std::size_t i = 0; i < clipped.size(); ++i) clipped[i] = std::clamp(eig.values[i], 0.0, 1.0);
  clipped = rescale_to_trace(clipped, N);
  double moved = 0.0;
  for (std::size_t i = 0; i < clipped.size(); ++i) moved += std::abs(clipped[i] - eig.values[i]);
  out.clip_magnitude = moved;
  if (moved > 0.05 * N) {
    std::ostringstream msg;
    msg << "profile '" << profile.name() << "' is not semiclassical enough: clipping moved "
        << moved << " of trace " << N;
    throw ConfigError(msg.str());
  }
  if (moved > 1e-12 * N) {
    // K = V diag(lambda / h^d) V^dagger
    const CMatrix& V = eig.vectors;
    CMatrix A = V;
    for (std::size_t r = 0; r < M; ++r)
      for (std::size_t k = 0; k < M; ++k) A(r, k) *= clipped[k] / hd;
    CMatrix K(M, M);
    const Complex one = 1.0;
    const Complex zero = 0.0;
    const int m = static_cast<int>(M);
    cblas_zgemm(CblasRowMajor, CblasNoTrans, CblasConjTrans, m, m, m, &one, A.data(), m,
                V.data(), m, &zero, K.data(), m);
    hermitize(K);
    op.kernel = std::move(K);
  }
  WignerOptions wopts;
  wopts.max_leak = options.max_leak;
  out.wigner = wigner_transform(op, pgrid, wopts);
  if (options.measure_commutators) out.commutators = commutator_norms(op);
  out.op = std::move(op);
  return out;
}

}  // namespace semiclassic
