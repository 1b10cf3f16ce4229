/// @file src/lapack.cpp

#include "qerg/lapack.hpp"

#include <lapacke.h>

#include <string>
#include <vector>

namespace qerg::lapack {

namespace {

void check(lapack_int info, const char* routine) {
  if (info != 0) {
    throw Error(std::string(routine) + " failed with info = " + std::to_string(info));
  }
}

}  // namespace

void eigh(const CMat& a, RVec& values, CMat* vectors) {
  if (a.rows() != a.cols()) throw ArgumentError("eigh: matrix must be square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  CMat work = a;
  values.resize(n);
  if (n == 0) return;
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n,
                                         reinterpret_cast<lapack_complex_double*>(work.data()), n,
                                         values.data());
  check(info, "zheevd");
  if (vectors) *vectors = std::move(work);
}

void eigh(const RMat& a, RVec& values, RMat* vectors) {
  if (a.rows() != a.cols()) throw ArgumentError("eigh: matrix must be square");
  const lapack_int n = static_cast<lapack_int>(a.rows());
  RMat work = a;
  values.resize(n);
  if (n == 0) return;
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', n, work.data(), n, values.data());
  check(info, "dsyevd");
  if (vectors) *vectors = std::move(work);
}

void eigh_range(const CMat& a, int il, int iu, RVec& values, CMat& vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  if (a.rows() != a.cols()) throw ArgumentError("eigh_range: matrix must be square");
  if (il < 0 || iu < il || iu >= n) throw ArgumentError("eigh_range: bad index range");
  CMat work = a;
  const lapack_int want = iu - il + 1;
  RVec w(n);
  vectors.resize(n, want);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(want));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_zheevr(
      LAPACK_COL_MAJOR, 'V', 'I', 'L', n, reinterpret_cast<lapack_complex_double*>(work.data()), n,
      0.0, 0.0, il + 1, iu + 1, 0.0, &found, w.data(),
      reinterpret_cast<lapack_complex_double*>(vectors.data()), n, support.data());
  check(info, "zheevr");
  if (found != want) throw Error("zheevr returned an unexpected number of eigenpairs");
  values = w.head(want);
}

}  // namespace qerg::lapack
