#pragma once

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <span>
#include <vector>

namespace semiclassic {

using Complex = std::complex<double>;

// 64-byte aligned storage so FFTW can use its SIMD codelets on every buffer.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t alignment = 64;

  AlignedAllocator() = default;
  template <class U>
  constexpr AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t count) {
    std::size_t bytes = count * sizeof(T);
    bytes = (bytes + alignment - 1) / alignment * alignment;
    if (bytes == 0) bytes = alignment;
    void* p = std::aligned_alloc(alignment, bytes);
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using CArray = std::vector<Complex, AlignedAllocator<Complex>>;
using RArray = std::vector<double>;

// Dense row-major complex matrix.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  Complex& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  Complex* data() noexcept { return data_.data(); }
  const Complex* data() const noexcept { return data_.data(); }
  std::span<Complex> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const Complex> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
  CArray& storage() noexcept { return data_; }
  const CArray& storage() const noexcept { return data_; }

  CMatrix& operator+=(const CMatrix& other);
  CMatrix& operator-=(const CMatrix& other);
  CMatrix& operator*=(Complex s);

  CMatrix adjoint() const;
  double max_abs() const noexcept;
  double frobenius() const noexcept;
  // max |A - A^dagger| entry
  double hermitian_defect() const noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  CArray data_;
};

// A <- (A + A^dagger) / 2
void hermitize(CMatrix& A);

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(CMatrix a, Complex s);

}  // namespace semiclassic
