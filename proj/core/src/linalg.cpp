#include "semiclassic/linalg.hpp"

#include <lapacke.h>

#include <string>

#include "semiclassic/error.hpp"

namespace semiclassic {

namespace {
lapack_complex_double* as_lapack(Complex* p) { return reinterpret_cast<lapack_complex_double*>(p); }

void check(lapack_int info, const char* routine) {
  if (info != 0)
    throw NumericalError(std::string(routine) + " failed with info " + std::to_string(info));
}
}  // namespace

RArray hermitian_eigenvalues(const CMatrix& A) {
  if (A.rows() != A.cols()) throw NumericalError("eigenvalues of a non-square matrix");
  CMatrix work = A;
  const auto n = static_cast<lapack_int>(A.rows());
  RArray w(A.rows());
  if (n == 0) return w;
  check(LAPACKE_zheevd(LAPACK_ROW_MAJOR, 'N', 'U', n, as_lapack(work.data()), n, w.data()),
        "zheevd");
  return w;
}

EigenSystem hermitian_eigensystem(const CMatrix& A) {
  if (A.rows() != A.cols()) throw NumericalError("eigensystem of a non-square matrix");
  EigenSystem out{RArray(A.rows()), A};
  const auto n = static_cast<lapack_int>(A.rows());
  if (n == 0) return out;
  check(LAPACKE_zheevd(LAPACK_ROW_MAJOR, 'V', 'U', n, as_lapack(out.vectors.data()), n,
                       out.values.data()),
        "zheevd");
  return out;
}

RArray singular_values(const CMatrix& A) {
  CMatrix work = A;
  const auto m = static_cast<lapack_int>(A.rows());
  const auto n = static_cast<lapack_int>(A.cols());
  RArray s(std::min(A.rows(), A.cols()));
  if (s.empty()) return s;
  check(LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'N', m, n, as_lapack(work.data()), n, s.data(), nullptr, m,
                       nullptr, n),
        "zgesdd");
  return s;
}

}  // namespace semiclassic
