/// @file include/qerg/commutant.hpp
/// @brief Commutant of a family of matrices: {M : [G, M] = 0 for all G},
///        optionally restricted to M = QMQ.

#pragma once

#include "qerg/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace qerg::algebra {

struct CommutantResult {
  int dimension = 0;
  /// Frobenius-orthonormal basis of the commutant.
  std::vector<CMat> basis;
  /// Singular values of the stacked commutator map, ascending.
  RVec singular_values;
  double threshold = 0.0;
  /// σ of the first non-null direction over σ of the last null one.
  double gap = 0.0;
};

struct CommutantOptions {
  double relative_threshold = 1e-8;
  /// Orthogonal projections summing to the identity that commute with every
  /// generator. The map M ↦ [G, M] preserves each block Π_i M Π_j, so blocks
  /// are solved separately. Checked on entry.
  std::vector<CMat> splitting;
};

/// Nullity of M ↦ ([G₁,M], …, [G_m,M], M − QMQ) at threshold
/// relative_threshold·σ_max. Small singular values are evaluated as ‖L v‖ on
/// the eigenvectors of LᴴL, so they are not limited by √ε.
/// Throws ArgumentError for an empty list or mismatched sizes.
CommutantResult commutant(const std::vector<CMat>& generators, const CMat* restriction = nullptr,
                          const CommutantOptions& options = {});

/// Residual ‖M − Π_span M‖_F / ‖M‖_F against an orthonormal basis.
double span_residual(const std::vector<CMat>& basis, const CMat& m);

/// Greedy labelling: each candidate that lies in the span (residual ≤ tol) and
/// is independent of the previously accepted ones receives its label.
/// Directions left over are labelled "other".
std::vector<std::string> label_basis(const std::vector<CMat>& basis,
                                     const std::vector<std::pair<std::string, CMat>>& candidates,
                                     double tol = 1e-8);

}  // namespace qerg::algebra
