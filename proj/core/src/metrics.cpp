#include "semiclassic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "semiclassic/error.hpp"
#include "semiclassic/linalg.hpp"

namespace semiclassic {

namespace {

constexpr double kPi = std::numbers::pi;

double power(double base, int d) { return d == 1 ? base : base * base; }

double abs_sum(const RArray& values) {
  double s = 0.0;
  for (double x : values) s += std::abs(x);
  return s;
}

}  // namespace

double trace_norm(const CMatrix& K, const SpatialGrid& grid) {
  if (K.rows() != grid.size() || K.cols() != grid.size())
    throw ConfigError("kernel shape does not match grid");
  const double scale = K.max_abs();
  if (scale == 0.0) return 0.0;
  const double hd = power(grid.spacing(), grid.dim());
  const std::size_t n = K.rows();
  double herm = 0.0;
  double anti = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r; c < n; ++c) {
      const Complex a = K(r, c);
      const Complex b = std::conj(K(c, r));
      herm = std::max(herm, std::abs(a - b));
      anti = std::max(anti, std::abs(a + b));
    }
  const double tol = 1e-10 * scale;
  if (herm <= tol || anti <= tol) {
    CMatrix H(n, n);
    const bool hermitian = herm <= anti;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const Complex a = K(r, c);
        const Complex b = std::conj(K(c, r));
        H(r, c) = hermitian ? 0.5 * (a + b) : Complex(0.0, 0.5) * (a - b);
      }
    return hd * abs_sum(hermitian_eigenvalues(H));
  }
  return hd * abs_sum(singular_values(K));
}

double trace_norm(const DensityOperator& op) { return trace_norm(op.kernel, op.grid); }

double hs_norm(const CMatrix& K, const SpatialGrid& grid) {
  return power(grid.spacing(), grid.dim()) * K.frobenius();
}

double hs_norm(const DensityOperator& op) { return hs_norm(op.kernel, op.grid); }

namespace {

// fourth-order centered first derivative along velocity axis, zero outside the window
CMatrix velocity_difference(const CMatrix& A, const PhaseGrid& pgrid, int axis) {
  const int m = pgrid.velocity_points();
  const int d = pgrid.dim();
  std::size_t stride = 1;
  for (int b = axis + 1; b < d; ++b) stride *= m;
  const double inv = 1.0 / (12.0 * pgrid.dv());
  CMatrix out(A.rows(), A.cols());
  const std::size_t cols = A.cols();
  for (std::size_t row = 0; row < A.rows(); ++row) {
    const int a = static_cast<int>((row / stride) % m);
    auto at = [&](int offset) -> const Complex* {
      const int b = a + offset;
      if (b < 0 || b >= m) return nullptr;
      return A.data() + (row + static_cast<std::ptrdiff_t>(offset) * static_cast<std::ptrdiff_t>(stride)) * cols;
    };
    const Complex* p2 = at(2);
    const Complex* p1 = at(1);
    const Complex* m1 = at(-1);
    const Complex* m2 = at(-2);
    auto dst = out.row(row);
    for (std::size_t i = 0; i < cols; ++i) {
      Complex s = 0.0;
      if (p2) s -= p2[i];
      if (p1) s += 8.0 * p1[i];
      if (m1) s -= 8.0 * m1[i];
      if (m2) s += m2[i];
      dst[i] = s * inv;
    }
  }
  return out;
}

CMatrix x_derivative(const CMatrix& spectrum, const SpatialGrid& grid, const Index& orders) {
  const std::size_t M = grid.size();
  const int n = grid.points();
  std::vector<Complex> mult(M);
  for (std::size_t j = 0; j < M; ++j) {
    const Index idx = grid.unflatten(j);
    Complex z = 1.0 / static_cast<double>(M);
    for (int a = 0; a < grid.dim(); ++a) {
      if (orders[a] == 0) continue;
      if (idx[a] == n / 2 && orders[a] % 2 == 1) {
        z = 0.0;
        break;
      }
      z *= std::pow(Complex(0.0, grid.momentum(idx[a])), orders[a]);
    }
    mult[j] = z;
  }
  CMatrix out = spectrum;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < M; ++j) row[j] *= mult[j];
  }
  transform_batch(grid, out.data(), static_cast<int>(out.rows()), 1, static_cast<int>(M),
                  fft::Direction::backward);
  return out;
}

double weighted_sq(const CMatrix& A, const RArray& weight) {
  double s = 0.0;
  const auto& data = A.storage();
  for (std::size_t i = 0; i < data.size(); ++i) s += weight[i] * std::norm(data[i]);
  return s;
}

}  // namespace

double sobolev_norm(const PhaseSpaceDensity& W, int s, int a) {
  if (s < 0 || s > 6) throw ConfigError("Sobolev order must lie in 0..6");
  if (a < 0) throw ConfigError("Sobolev weight exponent must be nonnegative");
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  const int d = grid.dim();
  const std::size_t M = grid.size();

  RArray weight(W.values.size());
  for (std::size_t row = 0; row < W.values.rows(); ++row) {
    const Index vi = pgrid.unflatten_velocity(row);
    double v2 = 0.0;
    for (int b = 0; b < d; ++b) v2 += pgrid.velocity(vi[b]) * pgrid.velocity(vi[b]);
    for (std::size_t i = 0; i < M; ++i) {
      const Index xi = grid.unflatten(i);
      double x2 = 0.0;
      for (int b = 0; b < d; ++b) x2 += grid.lift(xi[b]) * grid.lift(xi[b]);
      weight[row * M + i] = std::pow(1.0 + x2 + v2, a);
    }
  }

  CMatrix spectrum = W.values;
  transform_batch(grid, spectrum.data(), static_cast<int>(spectrum.rows()), 1,
                  static_cast<int>(M), fft::Direction::forward);

  double total = 0.0;
  auto accumulate_v = [&](const CMatrix& Dx, int remaining) {
    if (d == 1) {
      CMatrix A = Dx;
      for (int j = 0; j <= remaining; ++j) {
        if (j > 0) A = velocity_difference(A, pgrid, 0);
        total += weighted_sq(A, weight);
      }
      return;
    }
    CMatrix A0 = Dx;
    for (int j0 = 0; j0 <= remaining; ++j0) {
      if (j0 > 0) A0 = velocity_difference(A0, pgrid, 0);
      CMatrix A1 = A0;
      for (int j1 = 0; j0 + j1 <= remaining; ++j1) {
        if (j1 > 0) A1 = velocity_difference(A1, pgrid, 1);
        total += weighted_sq(A1, weight);
      }
    }
  };

  if (d == 1) {
    for (int jx = 0; jx <= s; ++jx) accumulate_v(x_derivative(spectrum, grid, {jx, 0}), s - jx);
  } else {
    for (int j0 = 0; j0 <= s; ++j0)
      for (int j1 = 0; j0 + j1 <= s; ++j1)
        accumulate_v(x_derivative(spectrum, grid, {j0, j1}), s - j0 - j1);
  }
  return std::sqrt(total * W.cell_volume());
}

CMatrix commutator_x(const DensityOperator& op, int axis) {
  const auto& grid = op.grid;
  if (axis < 0 || axis >= grid.dim()) throw ConfigError("commutator axis out of range");
  const std::size_t M = grid.size();
  RArray xbar(M);
  for (std::size_t i = 0; i < M; ++i) xbar[i] = grid.lift(grid.unflatten(i)[axis]);
  CMatrix out(M, M);
  for (std::size_t r = 0; r < M; ++r)
    for (std::size_t c = 0; c < M; ++c) out(r, c) = (xbar[r] - xbar[c]) * op.kernel(r, c);
  return out;
}

CMatrix commutator_grad(const DensityOperator& op, int axis) {
  const auto& grid = op.grid;
  if (axis < 0 || axis >= grid.dim()) throw ConfigError("commutator axis out of range");
  const std::size_t M = grid.size();
  const int n = grid.points();
  CMatrix out = op.kernel;
  std::vector<int> shape(2 * grid.dim(), n);
  fft::execute(out.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::forward);
  RArray p(M);
  for (std::size_t j = 0; j < M; ++j) {
    const int b = grid.unflatten(j)[axis];
    p[j] = b == n / 2 ? 0.0 : grid.momentum(b);
  }
  const double scale = op.eps / (static_cast<double>(M) * static_cast<double>(M));
  for (std::size_t r = 0; r < M; ++r)
    for (std::size_t c = 0; c < M; ++c) out(r, c) *= Complex(0.0, (p[r] + p[c]) * scale);
  fft::execute(out.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::backward);
  return out;
}

CommutatorNorms commutator_norms(const DensityOperator& op, bool with_trace) {
  CommutatorNorms out;
  for (int axis = 0; axis < op.grid.dim(); ++axis) {
    const CMatrix cx = commutator_x(op, axis);
    const CMatrix cg = commutator_grad(op, axis);
    out.hs_x += hs_norm(cx, op.grid);
    out.hs_grad += hs_norm(cg, op.grid);
    if (with_trace) {
      out.trace_x += trace_norm(cx, op.grid);
      out.trace_grad += trace_norm(cg, op.grid);
    }
  }
  return out;
}

std::pair<ObservableBox, double> snap_box(const SpatialGrid& grid, double eps, double p_bound,
                                          double q_bound) {
  const double dp = 2.0 * kPi / grid.length();
  const double dq = grid.spacing() / eps;
  ObservableBox box{static_cast<int>(std::lround(p_bound / dp)),
                    static_cast<int>(std::lround(q_bound / dq))};
  const double snap = std::max(std::abs(box.p_max * dp - p_bound), std::abs(box.q_max * dq - q_bound));
  return {box, snap};
}

CMatrix wigner_characteristic(const PhaseSpaceDensity& W, const ObservableBox& box) {
  const auto& pgrid = W.grid;
  const auto& grid = pgrid.spatial();
  if (!pgrid.is_natural(W.eps))
    throw ConfigError("Fourier-Wigner coefficients need the natural phase grid");
  const int n = grid.points();
  if (box.p_max < 0 || box.q_max < 0 || box.p_max >= n / 2 || box.q_max >= n / 2)
    throw ConfigError("observable box must stay strictly inside the Nyquist band");
  const std::size_t M = grid.size();
  const int d = grid.dim();
  CMatrix buf(M, M);
  for (std::size_t a = 0; a < M; ++a) {
    Index vi = pgrid.unflatten_velocity(a);
    for (int b = 0; b < d; ++b) vi[b] = (vi[b] + n / 2) % n;  // ascending -> FFT bin
    auto dst = buf.row(grid.flatten(vi));
    auto src = W.values.row(a);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  std::vector<int> shape(2 * d, n);
  fft::execute(buf.data(), fft::Layout{shape, 1, 1, 0}, fft::Direction::backward);
  const double cell = W.cell_volume();

  const int wp = 2 * box.p_max + 1;
  const int wq = 2 * box.q_max + 1;
  const std::size_t np = d == 1 ? wp : static_cast<std::size_t>(wp) * wp;
  const std::size_t nq = d == 1 ? wq : static_cast<std::size_t>(wq) * wq;
  CMatrix out(np, nq);
  for (std::size_t ip = 0; ip < np; ++ip) {
    Index s{0, 0};
    s[d - 1] = static_cast<int>(ip % wp) - box.p_max;
    if (d == 2) s[0] = static_cast<int>(ip / wp) - box.p_max;
    Index sb{grid.bin(s[0]), grid.bin(s[1])};
    for (std::size_t iq = 0; iq < nq; ++iq) {
      Index t{0, 0};
      t[d - 1] = static_cast<int>(iq % wq) - box.q_max;
      if (d == 2) t[0] = static_cast<int>(iq / wq) - box.q_max;
      Index tb{grid.bin(t[0]), grid.bin(t[1])};
      out(ip, iq) = cell * buf(grid.flatten(tb), grid.flatten(sb));
    }
  }
  return out;
}

ObservableDistance observable_distance(const DensityOperator& op, const PhaseSpaceDensity& W,
                                       const ObservableBox& box) {
  const PhaseGrid natural = PhaseGrid::natural(op.grid, op.eps);
  WignerOptions raw;
  raw.check_cutoff = false;
  PhaseSpaceDensity D = wigner_transform(op, natural, raw);
  if (W.grid.is_natural(W.eps) && W.grid == natural) {
    D.values -= W.values;
  } else {
    D.values -= wigner_transform(weyl_quantize(W), natural, raw).values;
  }
  const CMatrix coeffs = wigner_characteristic(D, box);
  const auto& grid = op.grid;
  const int d = grid.dim();
  const double dp = 2.0 * kPi / grid.length();
  const double dq = grid.spacing() / op.eps;
  const double scale = 1.0 / power(op.eps, d);
  const int wp = 2 * box.p_max + 1;
  const int wq = 2 * box.q_max + 1;

  ObservableDistance out;
  out.box = box;
  for (std::size_t ip = 0; ip < coeffs.rows(); ++ip) {
    Index s{0, 0};
    s[d - 1] = static_cast<int>(ip % wp) - box.p_max;
    if (d == 2) s[0] = static_cast<int>(ip / wp) - box.p_max;
    const double pn = dp * std::hypot(s[0], s[1]);
    for (std::size_t iq = 0; iq < coeffs.cols(); ++iq) {
      Index t{0, 0};
      t[d - 1] = static_cast<int>(iq % wq) - box.q_max;
      if (d == 2) t[0] = static_cast<int>(iq / wq) - box.q_max;
      const double qn = dq * std::hypot(t[0], t[1]);
      const double w = 1.0 + pn + qn;
      const double val = scale * std::abs(coeffs(ip, iq)) / (w * w);
      if (val > out.value) {
        out.value = val;
        out.p_argmax = s;
        out.q_argmax = t;
      }
    }
  }
  return out;
}

nlohmann::json to_json(const CommutatorNorms& norms) {
  return {{"trace_x", norms.trace_x},
          {"trace_grad", norms.trace_grad},
          {"hs_x", norms.hs_x},
          {"hs_grad", norms.hs_grad}};
}

nlohmann::json to_json(const NormReport& report) {
  nlohmann::json sob = nlohmann::json::array();
  for (const auto& [key, value] : report.sobolev)
    sob.push_back({{"s", key.first}, {"a", key.second}, {"value", value}});
  return {{"trace_norm", report.trace_norm},
          {"hs_norm", report.hs_norm},
          {"sobolev", sob},
          {"commutators", to_json(report.commutators)},
          {"observable_sup", report.observable_sup},
          {"observable_box", {{"p_max", report.box.p_max}, {"q_max", report.box.q_max}}}};
}

}  // namespace semiclassic
