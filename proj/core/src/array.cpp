#include "semiclassic/array.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semiclassic {

namespace {
void require_same_shape(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix shape mismatch");
}
}  // namespace

CMatrix& CMatrix::operator+=(const CMatrix& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

CMatrix& CMatrix::operator*=(Complex s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CMatrix CMatrix::adjoint() const {
  CMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

double CMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

double CMatrix::frobenius() const noexcept {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

double CMatrix::hermitian_defect() const noexcept {
  if (rows_ != cols_) return INFINITY;
  double m = 0.0;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = r; c < cols_; ++c)
      m = std::max(m, std::abs((*this)(r, c) - std::conj((*this)(c, r))));
  return m;
}

void hermitize(CMatrix& A) {
  for (std::size_t r = 0; r < A.rows(); ++r)
    for (std::size_t c = r; c < A.cols(); ++c) {
      const Complex avg = 0.5 * (A(r, c) + std::conj(A(c, r)));
      A(r, c) = avg;
      A(c, r) = std::conj(avg);
    }
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(CMatrix a, Complex s) { return a *= s; }

}  // namespace semiclassic
