#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "semiclassic/array.hpp"
#include "semiclassic/fft.hpp"

namespace semiclassic {

inline constexpr int kMaxDim = 2;
using Index = std::array<int, kMaxDim>;

// Periodic torus [0,L)^d sampled with n points per axis. Flat indices are row-major,
// the last axis fastest. Transform coefficients are kept in FFT bin order internally;
// forward_transform/inverse_transform expose the ascending centered order.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  SpatialGrid(double length, int points, int dim = 1);

  double length() const noexcept { return length_; }
  int points() const noexcept { return points_; }
  int dim() const noexcept { return dim_; }
  double spacing() const noexcept { return length_ / points_; }
  std::size_t size() const noexcept { return size_; }
  std::vector<int> shape() const { return std::vector<int>(dim_, points_); }

  // centered integer k of FFT bin b: b for b < n/2, b - n otherwise
  int centered(int bin) const noexcept { return bin < points_ / 2 ? bin : bin - points_; }
  int bin(int centered_k) const noexcept { return ((centered_k % points_) + points_) % points_; }
  double momentum(int bin) const noexcept;
  // p_k = 2 pi k / L for k = -n/2 .. n/2-1, ascending
  std::vector<double> momentum_nodes() const;

  double position(int j) const noexcept { return j * spacing(); }
  // centered lift of x_j into (-L/2, L/2]
  double lift(int j) const noexcept;
  double lift(double x) const noexcept;

  Index unflatten(std::size_t flat) const noexcept;
  std::size_t flatten(const Index& idx) const noexcept;
  // flat index of idx + shift with periodic wrap on every axis
  std::size_t shifted(std::size_t flat, const Index& shift) const noexcept;

  bool operator==(const SpatialGrid& other) const noexcept;

 private:
  double length_ = 1.0;
  int points_ = 1;
  int dim_ = 1;
  std::size_t size_ = 1;
};

// Tensor phase-space grid: the spatial torus times m^d velocity nodes covering [-v_max, v_max).
class PhaseGrid {
 public:
  PhaseGrid() = default;
  PhaseGrid(SpatialGrid spatial, double v_max, int m);
  // m = n and v_max = eps*pi/h: the velocity lattice on which the Wigner/Weyl pair is exact
  static PhaseGrid natural(const SpatialGrid& spatial, double eps);

  const SpatialGrid& spatial() const noexcept { return spatial_; }
  double v_max() const noexcept { return v_max_; }
  int velocity_points() const noexcept { return m_; }
  double dv() const noexcept { return 2.0 * v_max_ / m_; }
  double velocity(int a) const noexcept { return -v_max_ + a * dv(); }
  std::size_t velocity_size() const noexcept { return vsize_; }
  int dim() const noexcept { return spatial_.dim(); }
  Index unflatten_velocity(std::size_t flat) const noexcept;
  std::size_t flatten_velocity(const Index& idx) const noexcept;

  bool is_natural(double eps) const noexcept;
  bool operator==(const PhaseGrid& other) const noexcept;

 private:
  SpatialGrid spatial_;
  double v_max_ = 1.0;
  int m_ = 2;
  std::size_t vsize_ = 2;
};

bool is_power_of_two(int n) noexcept;

CArray forward_transform(const SpatialGrid& grid, std::span<const Complex> f);
CArray inverse_transform(const SpatialGrid& grid, std::span<const Complex> coeffs);

// d^order/dx_axis^order by Fourier multiplication; the Nyquist mode is zeroed for odd orders.
CArray spectral_derivative(const SpatialGrid& grid, std::span<const Complex> f, int order,
                           int axis = 0);
RArray spectral_derivative(const SpatialGrid& grid, std::span<const double> f, int order,
                           int axis = 0);

// Unnormalized d-dimensional transforms of `howmany` grid arrays stored with the given strides.
void transform_batch(const SpatialGrid& grid, Complex* data, int howmany, int stride, int dist,
                     fft::Direction dir);

}  // namespace semiclassic
