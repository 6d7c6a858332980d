#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "semiclassic/error.hpp"
#include "semiclassic/initial.hpp"
#include "semiclassic/io.hpp"
#include "semiclassic/linalg.hpp"
#include "semiclassic/metrics.hpp"
#include "semiclassic/states.hpp"
#include "test_support.hpp"

using namespace semiclassic;
using namespace semiclassic::testing;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Wigner, GaussianProjectorMatchesClosedForm) {
  const double eps = 1.0 / 16;
  SpatialGrid grid(8.0, 256);
  auto op = gaussian_projector(grid, eps);
  auto W = wigner_transform(op);
  double err = 0.0;
  for (std::size_t a = 0; a < W.values.rows(); ++a)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.lift(static_cast<int>(i));
      const double v = W.grid.velocity(static_cast<int>(a));
      const double exact = std::exp(-(x * x + v * v) / eps) / kPi;
      err = std::max(err, std::abs(W.values(a, i) - exact));
    }
  EXPECT_LT(err, 1e-10);
}

TEST(Wigner, ZeroKernelGivesZero) {
  DensityOperator op(SpatialGrid(1.0, 16), 1.0, 0.1);
  auto W = wigner_transform(op);
  EXPECT_EQ(W.values.max_abs(), 0.0);
}

TEST(Wigner, MassEqualsEpsTimesTrace) {
  const double eps = 0.05;
  SpatialGrid grid(2.0, 64);
  for (unsigned seed = 0; seed < 5; ++seed) {
    auto op = random_hermitian(grid, eps, seed);
    auto W = wigner_transform(op, unchecked());
    EXPECT_NEAR(W.mass().real(), eps * op.trace(), 1e-10 * std::abs(eps * op.trace()) + 1e-14);
    EXPECT_NEAR(W.mass().imag(), 0.0, 1e-12);
  }
}

TEST(Weyl, GaussianGivesProjector) {
  const double eps = 1.0 / 16;
  SpatialGrid grid(8.0, 256);
  PhaseSpaceDensity W(PhaseGrid::natural(grid, eps), eps, 1.0);
  for (std::size_t a = 0; a < W.values.rows(); ++a)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.lift(static_cast<int>(i));
      const double v = W.grid.velocity(static_cast<int>(a));
      W.values(a, i) = std::exp(-(x * x + v * v) / eps) / kPi;
    }
  auto op = weyl_quantize(W);
  auto ref = gaussian_projector(grid, eps);
  EXPECT_LT(hs_norm(op.kernel - ref.kernel, grid), 1e-10);
}

TEST(Weyl, ZeroGivesZero) {
  SpatialGrid grid(1.0, 16);
  PhaseSpaceDensity W(PhaseGrid::natural(grid, 0.1), 0.1, 1.0);
  EXPECT_EQ(weyl_quantize(W).kernel.max_abs(), 0.0);
}

TEST(Weyl, IncompatibleVelocityWindowIsConfigError) {
  SpatialGrid grid(1.0, 16);
  const double eps = 0.1;
  PhaseGrid too_wide(grid, 2.0 * eps * kPi / grid.spacing(), 16);
  PhaseSpaceDensity W(too_wide, eps, 1.0);
  EXPECT_THROW(weyl_quantize(W), ConfigError);
}

TEST(WignerWeyl, ExactInversePairOnRandomStates) {
  const double eps = 0.03;
  SpatialGrid grid(3.0, 128);
  for (unsigned seed = 0; seed < 4; ++seed) {
    auto W = random_phase(PhaseGrid::natural(grid, eps), eps, seed);
    auto back = wigner_transform(weyl_quantize(W), unchecked());
    EXPECT_LE((back.values - W.values).max_abs(), 1e-12 * W.values.max_abs());
    auto op = random_hermitian(grid, eps, seed + 100);
    auto again = weyl_quantize(wigner_transform(op, unchecked()));
    EXPECT_LE((again.kernel - op.kernel).max_abs(), 1e-12 * op.kernel.max_abs());
  }
}

TEST(WignerWeyl, HermitianIffReal) {
  const double eps = 0.07;
  for (int n : {16, 32, 64}) {
    SpatialGrid grid(1.5, n);
    auto op = random_hermitian(grid, eps, n);
    auto W = wigner_transform(op, unchecked());
    EXPECT_LE(W.imag_max(), 1e-10 * W.values.max_abs()) << n;

    auto Wr = random_phase(PhaseGrid::natural(grid, eps), eps, n + 1);
    for (auto& z : Wr.values.storage()) z = z.real();
    auto K = weyl_quantize(Wr);
    EXPECT_LE(K.kernel.hermitian_defect(), 1e-10 * K.kernel.max_abs()) << n;

    auto general = random_general(grid, eps, n + 2);
    auto Wg = wigner_transform(general, unchecked());
    EXPECT_GT(Wg.imag_max(), 1e-3 * Wg.values.max_abs());
  }
}

TEST(WignerWeyl, TwoDimensionalPair) {
  const double eps = 0.1;
  SpatialGrid grid(2.0, 8, 2);
  auto op = random_hermitian(grid, eps, 5);
  auto W = wigner_transform(op, unchecked());
  EXPECT_LE(W.imag_max(), 1e-10 * W.values.max_abs());
  EXPECT_NEAR(W.mass().real(), eps * eps * op.trace(), 1e-10 * std::abs(op.trace()));
  auto back = weyl_quantize(W);
  EXPECT_LE((back.kernel - op.kernel).max_abs(), 1e-12 * op.kernel.max_abs());
}

TEST(WignerWeyl, MarginalConsistency) {
  const double eps = 1.0 / 16;
  SpatialGrid grid(4.0, 128);
  auto op = gaussian_projector(grid, eps);
  auto rho_w = velocity_marginal(wigner_transform(op));
  auto rho = density_of(op);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(rho_w.rho[i], rho.rho[i], 1e-8);
}

TEST(Wigner, CoarserVelocityGridSamplesInterpolant) {
  const double eps = 1.0 / 16;
  SpatialGrid grid(8.0, 256);
  auto op = gaussian_projector(grid, eps);
  PhaseGrid coarse(grid, 1.5, 64);
  auto W = wigner_transform(op, coarse);
  double err = 0.0;
  for (std::size_t a = 0; a < W.values.rows(); ++a)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.lift(static_cast<int>(i));
      const double v = coarse.velocity(static_cast<int>(a));
      err = std::max(err, std::abs(W.values(a, i) - std::exp(-(x * x + v * v) / eps) / kPi));
    }
  EXPECT_LT(err, 1e-10);
}

TEST(Wigner, CutoffViolationReportsLeakedMass) {
  SpatialGrid grid(1.0, 32);
  auto op = random_hermitian(grid, 0.1, 3);
  try {
    (void)wigner_transform(op);
    FAIL() << "expected a truncation error";
  } catch (const TruncationError& e) {
    EXPECT_GT(e.leaked_mass(), 1e-8);
  }
}

TEST(DensityOf, GaussianProjectorMarginal) {
  const double eps = 0.05;
  SpatialGrid grid(4.0, 128);
  auto op = gaussian_projector(grid, eps);
  auto rho = density_of(op);
  EXPECT_NEAR(rho.mass(), 1.0, 1e-10);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.lift(static_cast<int>(i));
    EXPECT_NEAR(rho.rho[i], std::exp(-x * x / eps) / std::sqrt(kPi * eps), 1e-12);
  }
}

TEST(DensityOf, ConstantDiagonalIsUniform) {
  SpatialGrid grid(2.0, 16);
  const double N = 3.0;
  DensityOperator op(grid, N, 0.1);
  for (std::size_t i = 0; i < 16; ++i) op.kernel(i, i) = N / grid.length();
  auto rho = density_of(op);
  for (double r : rho.rho) EXPECT_NEAR(r, 1.0 / grid.length(), 1e-15);
}

TEST(DensityOf, MassIdentity) {
  SpatialGrid grid(2.0, 32);
  auto op = random_hermitian(grid, 0.1, 9);
  op.N = 2.5;
  EXPECT_NEAR(density_of(op).mass(), op.trace() / op.N, 1e-13);
}

TEST(VelocityMarginal, SeparableAndZero) {
  SpatialGrid grid(2.0, 16);
  const double eps = 0.1;
  PhaseGrid pg(grid, 3.0, 64);
  PhaseSpaceDensity W(pg, eps, 1.0 / eps);
  std::vector<double> g(64);
  double gs = 0.0;
  for (int a = 0; a < 64; ++a) {
    g[a] = std::exp(-pg.velocity(a) * pg.velocity(a));
    gs += g[a] * pg.dv();
  }
  for (int a = 0; a < 64; ++a)
    for (int i = 0; i < 16; ++i) W.values(a, i) = (1.0 + std::sin(i)) * g[a] / gs;
  auto rho = velocity_marginal(W);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(rho.rho[i], 1.0 + std::sin(i), 1e-13);
  PhaseSpaceDensity Z(pg, eps, 1.0);
  for (double r : velocity_marginal(Z).rho) EXPECT_EQ(r, 0.0);
}

TEST(Mollifier, DiscreteMassIsOne) {
  PhaseGrid pg(SpatialGrid(4.0, 128), 4.0, 128);
  for (double k : {4.0, 16.0, 64.0}) EXPECT_NEAR(Mollifier(k).discrete_mass(pg), 1.0, 1e-10);
  // width equal to the velocity spacing: Riemann sum error ~ 2 exp(-2 pi^2)
  EXPECT_NEAR(Mollifier(256.0).discrete_mass(pg), 1.0, 1e-8);
}

TEST(Mollifier, GaussianConvolvedWithItself) {
  PhaseGrid pg(SpatialGrid(4.0, 128), 4.0, 128);
  const double k = 64.0;
  auto gauss = [&](double var) {
    PhaseSpaceDensity W(pg, 1.0, 1.0);
    for (std::size_t a = 0; a < W.values.rows(); ++a)
      for (std::size_t i = 0; i < 128; ++i) {
        const double x = pg.spatial().lift(static_cast<int>(i));
        const double v = pg.velocity(static_cast<int>(a));
        W.values(a, i) = std::exp(-(x * x + v * v) / (2 * var)) / (2 * kPi * var);
      }
    return W;
  };
  auto out = mollify(gauss(1.0 / k), Mollifier(k));
  EXPECT_LT((out.values - gauss(2.0 / k).values).max_abs(), 1e-8);
  EXPECT_NEAR(out.mass().real(), gauss(1.0 / k).mass().real(), 1e-10);
}

TEST(Mollifier, LargeStrengthIsIdentity) {
  PhaseGrid pg(SpatialGrid(2.0, 128), 2.0, 128);
  auto W = random_phase(pg, 1.0, 4);
  auto out = mollify(W, Mollifier(1e12));
  PhaseSpaceDensity diff = W;
  diff.values -= out.values;
  EXPECT_LE(diff.l2_norm(), 1e-6 * std::max(1.0, W.l2_norm()));
}

TEST(Mollifier, TooWideIsRejected) {
  PhaseGrid pg(SpatialGrid(1.0, 32), 1.0, 32);
  PhaseSpaceDensity W(pg, 1.0, 1.0);
  EXPECT_THROW(mollify(W, Mollifier(1.0)), ConfigError);
}

TEST(InitialState, ClipPostconditionAndTrace) {
  const double N = 16;
  const double eps = 1.0 / N;
  SpatialGrid grid(4.0, 256);
  Profile prof("fermi_ball", {{"sigma_x", 1.2}, {"sigma_v", 4.6}, {"exponent", 1.5}});
  InitialOptions opts;
  opts.max_leak = 1e-5;
  auto init = build_initial_state(prof, N, eps, grid, opts);
  EXPECT_NEAR(init.op.trace(), N, 1e-10 * N);
  CMatrix scaled = init.op.kernel;
  scaled *= grid.spacing();
  auto lam = hermitian_eigenvalues(scaled);
  EXPECT_GE(lam.front(), -1e-10);
  EXPECT_LE(lam.back(), 1.0 + 1e-10);
  EXPECT_LE(init.clip_magnitude, 0.05 * N);
  EXPECT_NEAR(init.wigner.mass().real(), 1.0, 1e-10);
}

TEST(InitialState, ClipTailTripsStrictCutoff) {
  SpatialGrid grid(4.0, 256);
  Profile prof("fermi_ball", {{"sigma_x", 1.2}, {"sigma_v", 4.6}, {"exponent", 1.5}});
  EXPECT_THROW(build_initial_state(prof, 16, 1.0 / 16, grid), TruncationError);
}

TEST(InitialState, RejectsEpsMismatch) {
  SpatialGrid grid(4.0, 64);
  Profile prof("gaussian", {{"sigma_x", 1.0}, {"sigma_v", 1.0}});
  EXPECT_THROW(build_initial_state(prof, 16, 0.1, grid), ConfigError);
}

TEST(InitialState, RejectsOverfilledProfile) {
  SpatialGrid grid(4.0, 128);
  Profile prof("gaussian", {{"sigma_x", 0.1}, {"sigma_v", 0.5}});
  EXPECT_THROW(build_initial_state(prof, 16, 1.0 / 16, grid), ConfigError);
}

TEST(InitialState, SingleParticle) {
  SpatialGrid grid(16.0, 64);
  Profile prof("gaussian", {{"sigma_x", 0.7071067811865476}, {"sigma_v", 0.7071067811865476}});
  auto init = build_initial_state(prof, 1.0, 1.0, grid);
  EXPECT_NEAR(init.op.trace(), 1.0, 1e-10);
  CMatrix scaled = init.op.kernel;
  scaled *= grid.spacing();
  auto lam = hermitian_eigenvalues(scaled);
  EXPECT_NEAR(lam.back(), 1.0, 1e-6);
  EXPECT_LT(init.clip_magnitude, 1e-6);
}

TEST(Dump, KernelAndPhaseRoundTrip) {
  SpatialGrid grid(2.5, 16);
  auto op = random_hermitian(grid, 0.2, 1);
  op.N = 7.0;
  auto dir = std::filesystem::temp_directory_path();
  write_kernel(dir / "k.bin", op);
  EXPECT_EQ(std::filesystem::file_size(dir / "k.bin"), 56u + 16u * 16u * 16u);
  auto back = read_kernel(dir / "k.bin");
  EXPECT_EQ(back.grid, grid);
  EXPECT_EQ(back.N, 7.0);
  EXPECT_EQ(back.eps, 0.2);
  EXPECT_EQ((back.kernel - op.kernel).max_abs(), 0.0);
  auto W = random_phase(PhaseGrid(grid, 1.0, 32), 0.2, 2);
  write_phase(dir / "w.bin", W);
  auto Wb = read_phase(dir / "w.bin");
  EXPECT_EQ(Wb.grid, W.grid);
  EXPECT_EQ((Wb.values - W.values).max_abs(), 0.0);
  EXPECT_EQ(peek_dump_kind(dir / "w.bin"), DumpKind::phase);
  EXPECT_THROW(read_kernel(dir / "missing.bin"), ConfigError);
  EXPECT_THROW(read_kernel(dir / "w.bin"), ConfigError);
}
