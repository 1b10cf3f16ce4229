/// @file include/qerg/bundle.hpp
/// @brief Trivial rank-r bundle over the flat torus R^n/(2πZ)^n with a
///        connection ∇_j = ∂_j + iA_j and a potential V, both hermitian
///        trigonometric polynomials.

#pragma once

#include "qerg/geometry.hpp"
#include "qerg/types.hpp"

#include <map>
#include <vector>

namespace qerg::torus {

using Mode = std::vector<int>;

/// Σ_m C_m e^{i m·x} with r×r coefficients C_m.
struct FourierMatrixField {
  int n = 2;
  int r = 1;
  std::map<Mode, CMat> coeffs;

  CMat evaluate(const Vec& x) const;
  /// ∂_j of the field.
  CMat derivative(const Vec& x, int j) const;
  /// Largest |m|_∞ among nonzero coefficients (0 for an empty field).
  int max_mode() const;
  /// max_m ‖C_{−m} − C_m†‖; zero for hermitian-valued fields.
  double hermiticity_defect() const;
  bool empty() const { return coeffs.empty(); }

  /// Adds C e^{im·x} + C† e^{−im·x}, which keeps the field hermitian.
  FourierMatrixField& add_hermitian_mode(const Mode& m, const CMat& c);
};

struct TorusBundleModel {
  int n = 2;
  int r = 1;
  std::vector<FourierMatrixField> A;  // one per coordinate direction (may be empty)
  FourierMatrixField V;
  double shift = 0.0;
  int K = 16;

  /// Checks sizes and hermiticity (1e−13). Throws ArgumentError.
  void validate() const;
  CMat connection(const Vec& x, int j) const;
  CMat potential(const Vec& x) const;
  /// Subprincipal symbol of P^{1/2}: |ξ|⁻¹ Σ_j A_j(x) ξ_j.
  CMat sub(const Vec& x, const Vec& xi) const;
  /// Largest coefficient mode over A and V.
  int max_mode() const;
  bool has_connection() const;
};

/// Free model: A = 0, V = 0.
TorusBundleModel free_bundle(int n, int r, int K);

/// Rank-2 model over T² with nonconstant, non-commuting hermitian A_j used
/// by the matrix Egorov experiment.
TorusBundleModel default_matrix_bundle(int K);

/// Rank-1 model over T² with a nonconstant connection and potential, used
/// for Weyl means away from the plane-wave case.
TorusBundleModel default_scalar_bundle(int K);

/// The base R^n/(2πZ)^n as a ManifoldModel.
geometry::ManifoldModel base_model(const TorusBundleModel& model);

}  // namespace qerg::torus
