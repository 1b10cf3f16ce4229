/// @file include/qerg/polynomial.hpp
/// @brief Noncommutative polynomials in frame letters X_i, Y_i (i = 1..n).
///
/// Letter index 1 stands for the base covector ξ, indices 2..n for the
/// remaining vectors of an orthonormal frame. In the Clifford fiber X_i acts
/// by γ(v_i); in the exterior fiber X_i acts by v_i∧ and Y_i by i(v_i).

#pragma once

#include "qerg/types.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace qerg::algebra {

struct Letter {
  enum class Kind { X, Y };
  Kind kind = Kind::X;
  int index = 1;
};

struct Monomial {
  cplx coeff = 1.0;
  std::vector<Letter> letters;  // left to right

  int x_count() const;
  int y_count() const;
};

class NcPolynomial {
 public:
  NcPolynomial() = default;

  static NcPolynomial constant(cplx c);
  static NcPolynomial X(int index);
  static NcPolynomial Y(int index);
  /// Parses words such as "X2 Y2", "2*X1Y1 + X3X3", "1". Coefficients are
  /// real. Throws ArgumentError on malformed input.
  static NcPolynomial parse(const std::string& text);

  const std::vector<Monomial>& terms() const { return terms_; }
  int degree() const;
  int max_index() const;
  bool has_y() const;
  /// Every monomial has as many X as Y letters.
  bool balanced() const;

  NcPolynomial operator+(const NcPolynomial& other) const;
  NcPolynomial operator*(const NcPolynomial& other) const;
  NcPolynomial operator*(cplx c) const;

  NcPolynomial& add_term(Monomial m);

 private:
  std::vector<Monomial> terms_;
};

/// Matrix of a letter built from the unit vector v. `offset` is the net
/// degree change of the letters already applied to its right (always 0 for
/// Clifford letters). An empty matrix means the letter vanishes there.
using LetterAction = std::function<CMat(Letter::Kind kind, const RVec& v, int offset)>;

/// Σ coeff · L(v_{i₁})⋯L(v_{i_k}) with v_i the i-th column of `frame`.
CMat evaluate_on_frame(const NcPolynomial& poly, const RMat& frame, const LetterAction& action,
                       const CMat& identity);

/// Orthonormal basis of ξ^⊥ as the columns of an n×(n−1) matrix.
RMat orthonormal_complement(const RVec& xi);

/// Orthonormal frame (columns) with first column ξ and the rest Haar
/// distributed on the orthonormal completions of ξ.
RMat random_frame(const RVec& xi, std::mt19937_64& rng);

struct HaarAverage {
  CMat mean;
  double standard_error = 0.0;  // largest entrywise standard error
  int samples = 0;
  bool exact = false;
};

/// Average of p(ξ, v₂, …, v_n) over Haar-random completions. With
/// `exact` the average is evaluated by the second-moment identity
/// E[v_i v_jᵀ] = δ_ij (1 − ξξᵀ)/(n−1), valid up to degree 2 in the random
/// letters (DegreeError otherwise). Monte-Carlo mode needs ≥ 100 samples.
HaarAverage haar_average(const NcPolynomial& poly, const RVec& xi, int samples, bool exact,
                         std::uint64_t seed, const LetterAction& action, const CMat& identity);

}  // namespace qerg::algebra
