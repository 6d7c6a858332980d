#include "semiclassic/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "semiclassic/error.hpp"

namespace semiclassic {

bool is_power_of_two(int n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

SpatialGrid::SpatialGrid(double length, int points, int dim)
    : length_(length), points_(points), dim_(dim) {
  if (!(length > 0.0) || !std::isfinite(length))
    throw ConfigError("grid length must be positive and finite");
  if (!is_power_of_two(points) || points < 2)
    throw ConfigError("grid points must be a power of two >= 2, got " + std::to_string(points));
  if (dim < 1 || dim > kMaxDim) throw ConfigError("dimension must be 1 or 2");
  size_ = 1;
  for (int a = 0; a < dim_; ++a) size_ *= static_cast<std::size_t>(points_);
}

double SpatialGrid::momentum(int bin) const noexcept {
  return 2.0 * std::numbers::pi * centered(bin) / length_;
}

std::vector<double> SpatialGrid::momentum_nodes() const {
  std::vector<double> nodes(points_);
  for (int i = 0; i < points_; ++i)
    nodes[i] = 2.0 * std::numbers::pi * (i - points_ / 2) / length_;
  return nodes;
}

double SpatialGrid::lift(int j) const noexcept { return lift(position(j)); }

double SpatialGrid::lift(double x) const noexcept {
  double y = std::fmod(x, length_);
  if (y < 0) y += length_;
  if (y > 0.5 * length_) y -= length_;
  return y;
}

Index SpatialGrid::unflatten(std::size_t flat) const noexcept {
  Index idx{0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % points_);
    flat /= points_;
  }
  return idx;
}

std::size_t SpatialGrid::flatten(const Index& idx) const noexcept {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat = flat * points_ + static_cast<std::size_t>(idx[a]);
  return flat;
}

std::size_t SpatialGrid::shifted(std::size_t flat, const Index& shift) const noexcept {
  Index idx = unflatten(flat);
  for (int a = 0; a < dim_; ++a) idx[a] = ((idx[a] + shift[a]) % points_ + points_) % points_;
  return flatten(idx);
}

bool SpatialGrid::operator==(const SpatialGrid& other) const noexcept {
  return length_ == other.length_ && points_ == other.points_ && dim_ == other.dim_;
}

PhaseGrid::PhaseGrid(SpatialGrid spatial, double v_max, int m)
    : spatial_(spatial), v_max_(v_max), m_(m) {
  if (!(v_max > 0.0) || !std::isfinite(v_max)) throw ConfigError("v_max must be positive");
  if (!is_power_of_two(m) || m < 2)
    throw ConfigError("velocity points must be a power of two >= 2, got " + std::to_string(m));
  vsize_ = 1;
  for (int a = 0; a < spatial_.dim(); ++a) vsize_ *= static_cast<std::size_t>(m_);
}

PhaseGrid PhaseGrid::natural(const SpatialGrid& spatial, double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  return PhaseGrid(spatial, eps * std::numbers::pi / spatial.spacing(), spatial.points());
}

Index PhaseGrid::unflatten_velocity(std::size_t flat) const noexcept {
  Index idx{0, 0};
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % m_);
    flat /= m_;
  }
  return idx;
}

std::size_t PhaseGrid::flatten_velocity(const Index& idx) const noexcept {
  std::size_t flat = 0;
  for (int a = 0; a < dim(); ++a) flat = flat * m_ + static_cast<std::size_t>(idx[a]);
  return flat;
}

bool PhaseGrid::is_natural(double eps) const noexcept {
  const double target = eps * std::numbers::pi / spatial_.spacing();
  return m_ == spatial_.points() && std::abs(v_max_ - target) <= 1e-12 * target;
}

bool PhaseGrid::operator==(const PhaseGrid& other) const noexcept {
  return spatial_ == other.spatial_ && v_max_ == other.v_max_ && m_ == other.m_;
}

void transform_batch(const SpatialGrid& grid, Complex* data, int howmany, int stride, int dist,
                     fft::Direction dir) {
  fft::execute(data, fft::Layout{grid.shape(), howmany, stride, dist}, dir);
}

namespace {

void check_length(const SpatialGrid& grid, std::size_t len) {
  if (len != grid.size())
    throw ConfigError("array length " + std::to_string(len) + " does not match grid size " +
                      std::to_string(grid.size()));
}

// permutation between FFT bin order and ascending centered order, per flat index
std::size_t centered_position(const SpatialGrid& grid, std::size_t bin_flat) {
  Index idx = grid.unflatten(bin_flat);
  const int n = grid.points();
  for (int a = 0; a < grid.dim(); ++a) idx[a] = (idx[a] + n / 2) % n;
  return grid.flatten(idx);
}

}  // namespace

CArray forward_transform(const SpatialGrid& grid, std::span<const Complex> f) {
  check_length(grid, f.size());
  CArray work(f.begin(), f.end());
  transform_batch(grid, work.data(), 1, 1, 0, fft::Direction::forward);
  CArray out(work.size());
  for (std::size_t b = 0; b < work.size(); ++b) out[centered_position(grid, b)] = work[b];
  return out;
}

CArray inverse_transform(const SpatialGrid& grid, std::span<const Complex> coeffs) {
  check_length(grid, coeffs.size());
  CArray work(coeffs.size());
  for (std::size_t b = 0; b < work.size(); ++b) work[b] = coeffs[centered_position(grid, b)];
  transform_batch(grid, work.data(), 1, 1, 0, fft::Direction::backward);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& z : work) z *= scale;
  return work;
}

CArray spectral_derivative(const SpatialGrid& grid, std::span<const Complex> f, int order,
                           int axis) {
  check_length(grid, f.size());
  if (order < 0) throw ConfigError("derivative order must be nonnegative");
  if (axis < 0 || axis >= grid.dim()) throw ConfigError("derivative axis out of range");
  CArray work(f.begin(), f.end());
  if (order == 0) return work;
  transform_batch(grid, work.data(), 1, 1, 0, fft::Direction::forward);
  const int n = grid.points();
  std::vector<Complex> mult(n);
  for (int b = 0; b < n; ++b) {
    if (b == n / 2 && order % 2 == 1) {
      mult[b] = 0.0;
      continue;
    }
    mult[b] = std::pow(Complex(0.0, grid.momentum(b)), order);
  }
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t j = 0; j < work.size(); ++j) work[j] *= mult[grid.unflatten(j)[axis]] * scale;
  transform_batch(grid, work.data(), 1, 1, 0, fft::Direction::backward);
  return work;
}

RArray spectral_derivative(const SpatialGrid& grid, std::span<const double> f, int order,
                           int axis) {
  CArray z(f.begin(), f.end());
  CArray d = spectral_derivative(grid, std::span<const Complex>(z), order, axis);
  RArray out(d.size());
  for (std::size_t j = 0; j < d.size(); ++j) out[j] = d[j].real();
  return out;
}

}  // namespace semiclassic
