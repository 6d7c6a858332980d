#include "semiclassic/potential.hpp"

#include <cmath>
#include <numbers>

#include "semiclassic/error.hpp"

namespace semiclassic {

namespace {
Index negate(const Index& k) { return {-k[0], -k[1]}; }
}  // namespace

InteractionPotential::InteractionPotential(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("potential dimension must be 1 or 2");
}

InteractionPotential InteractionPotential::cosine(double amplitude, const Index& mode, int dim) {
  InteractionPotential V(dim);
  if (mode == Index{0, 0}) {
    V.set_mode(mode, amplitude);
  } else {
    V.set_mode(mode, 0.5 * amplitude);
  }
  return V;
}

void InteractionPotential::set_mode(const Index& k, Complex value) {
  if (dim_ == 1 && k[1] != 0) throw ConfigError("1D potential mode with nonzero second index");
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
    throw ConfigError("potential coefficient must be finite");
  if (k == Index{0, 0}) {
    if (value.imag() != 0.0) throw ConfigError("zero mode of a real potential must be real");
    modes_[k] = value;
    return;
  }
  modes_[k] = value;
  modes_[negate(k)] = std::conj(value);
}

bool InteractionPotential::is_zero() const noexcept {
  for (const auto& [k, v] : modes_)
    if (v != Complex(0.0)) return false;
  return true;
}

double InteractionPotential::decay_weight(double length) const {
  double w = 0.0;
  for (const auto& [k, v] : modes_) {
    double p2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
      const double p = 2.0 * std::numbers::pi * k[a] / length;
      p2 += p * p;
    }
    w += std::abs(v) * (1.0 + p2 * p2);
  }
  return w;
}

double InteractionPotential::value(const SpatialGrid& grid, std::span<const double> x) const {
  Complex s = 0.0;
  for (const auto& [k, v] : modes_) {
    double phase = 0.0;
    for (int a = 0; a < dim_; ++a) phase += 2.0 * std::numbers::pi * k[a] * x[a] / grid.length();
    s += v * std::polar(1.0, phase);
  }
  return s.real();
}

MeanField::MeanField(const InteractionPotential& V, const SpatialGrid& grid,
                     std::span<const double> rho)
    : grid_(grid) {
  if (rho.size() != grid.size()) throw ConfigError("density size does not match grid");
  if (V.dim() != grid.dim()) throw ConfigError("potential and grid dimensions differ");
  const double hd = std::pow(grid.spacing(), grid.dim());
  const int n = grid.points();
  for (const auto& [k, v] : V.fourier_coeffs()) {
    if (v == Complex(0.0)) continue;
    Complex rhohat = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Index idx = grid.unflatten(j);
      long long dot = 0;
      for (int a = 0; a < grid.dim(); ++a) dot += static_cast<long long>(k[a]) * idx[a];
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(dot % n) / n;
      rhohat += rho[j] * std::polar(1.0, phase);
    }
    terms_.push_back({k, v * rhohat * hd});
  }
}

double MeanField::value(std::span<const double> x) const {
  Complex s = 0.0;
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int a = 0; a < grid_.dim(); ++a)
      phase += 2.0 * std::numbers::pi * t.mode[a] * x[a] / grid_.length();
    s += t.coeff * std::polar(1.0, phase);
  }
  return s.real();
}

double MeanField::gradient(std::span<const double> x, int axis) const {
  Complex s = 0.0;
  for (const auto& t : terms_) {
    double phase = 0.0;
    for (int a = 0; a < grid_.dim(); ++a)
      phase += 2.0 * std::numbers::pi * t.mode[a] * x[a] / grid_.length();
    const double p = 2.0 * std::numbers::pi * t.mode[axis] / grid_.length();
    s += Complex(0.0, p) * t.coeff * std::polar(1.0, phase);
  }
  return s.real();
}

namespace {
// sum_t c_t(p) e^{i p_t.x_j} on the grid with exact integer phases
RArray evaluate_on_grid(const SpatialGrid& grid, std::size_t nterms,
                        const auto& coeff_of, const auto& mode_of) {
  RArray out(grid.size(), 0.0);
  const int n = grid.points();
  for (std::size_t t = 0; t < nterms; ++t) {
    const Index k = mode_of(t);
    const Complex c = coeff_of(t);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Index idx = grid.unflatten(j);
      long long dot = 0;
      for (int a = 0; a < grid.dim(); ++a) dot += static_cast<long long>(k[a]) * idx[a];
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(dot % n) / n;
      out[j] += (c * std::polar(1.0, phase)).real();
    }
  }
  return out;
}
}  // namespace

RArray MeanField::values_on_grid() const {
  return evaluate_on_grid(
      grid_, terms_.size(), [&](std::size_t t) { return terms_[t].coeff; },
      [&](std::size_t t) { return terms_[t].mode; });
}

RArray MeanField::gradient_on_grid(int axis) const {
  return evaluate_on_grid(
      grid_, terms_.size(),
      [&](std::size_t t) {
        const double p = 2.0 * std::numbers::pi * terms_[t].mode[axis] / grid_.length();
        return Complex(0.0, p) * terms_[t].coeff;
      },
      [&](std::size_t t) { return terms_[t].mode; });
}

}  // namespace semiclassic
