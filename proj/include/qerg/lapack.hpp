/// @file include/qerg/lapack.hpp
/// @brief Thin LAPACKE wrappers for Hermitian eigenproblems.

#pragma once

#include "qerg/types.hpp"

namespace qerg::lapack {

/// All eigenpairs of a Hermitian matrix (zheevd), eigenvalues ascending.
/// Only the lower triangle of `a` is read.
void eigh(const CMat& a, RVec& values, CMat* vectors);

/// Real symmetric variant (dsyevd).
void eigh(const RMat& a, RVec& values, RMat* vectors);

/// Eigenpairs with indices [il, iu] (0-based, inclusive) in ascending order
/// (zheevr).
void eigh_range(const CMat& a, int il, int iu, RVec& values, CMat& vectors);

}  // namespace qerg::lapack
