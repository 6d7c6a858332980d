#pragma once

#include "semiclassic/array.hpp"

namespace semiclassic {

// Dense LAPACK wrappers. Inputs are copied; failures throw NumericalError.
RArray hermitian_eigenvalues(const CMatrix& A);  // ascending

struct EigenSystem {
  RArray values;   // ascending
  CMatrix vectors; // column k is the eigenvector of values[k]
};
EigenSystem hermitian_eigensystem(const CMatrix& A);

RArray singular_values(const CMatrix& A);  // descending

}  // namespace semiclassic
