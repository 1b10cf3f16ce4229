/// @file include/qerg/exterior.hpp
/// @brief Form fiber Λ^p C^n: exterior and interior multiplication, Hodge
///        star, P(ξ), P±(ξ), SO(n−1) generators, states and the fiber map T.

#pragma once

#include "qerg/commutant.hpp"
#include "qerg/polynomial.hpp"
#include "qerg/types.hpp"

#include <optional>
#include <vector>

namespace qerg::exterior {

/// Basis e_I of Λ^k C^n, I a sorted k-subset of {0..n−1} in lexicographic
/// order.
struct ExteriorFiber {
  int n = 0;
  int p = 0;
  int dim = 0;
  std::vector<std::vector<int>> basis;
};

/// Requires 0 ≤ p ≤ n (DegreeError otherwise). The form fiber proper has
/// 0 < p < n; the end degrees are used for intermediate products.
ExteriorFiber make_fiber(int n, int p);

long binomial(int n, int k);

/// Index of a sorted subset in the basis of its degree.
int subset_index(int n, const std::vector<int>& subset);

/// v∧ : Λ^k → Λ^{k+1}. DegreeError when k+1 > n or k < 0.
RMat ext_mult(int n, int k, const RVec& v);
/// i(v) : Λ^k → Λ^{k−1}. DegreeError when k < 1 or k > n.
RMat int_mult(int n, int k, const RVec& v);

RMat ext_mult(const ExteriorFiber& f, const RVec& xi);
RMat int_mult(const ExteriorFiber& f, const RVec& xi);

/// * : Λ^p → Λ^{n−p}, e_I ↦ sign(I, Iᶜ) e_{Iᶜ}.
RMat hodge_star(const ExteriorFiber& f);

/// P(ξ) = i(ξ)(ξ∧) on Λ^p; projects onto Λ^p(ξ^⊥).
RMat projection_P(const ExteriorFiber& f, const RVec& xi);

/// S(ξ) = i^p i(ξ)∘* on Λ^p. CapabilityError unless 2p = n − 1.
CMat pm_operator(const ExteriorFiber& f, const RVec& xi);

/// P±(ξ) = ½(1 ± S(ξ))P(ξ), for 2p = n − 1 only (CapabilityError otherwise).
std::pair<CMat, CMat> projections_pm_forms(const ExteriorFiber& f, const RVec& xi);

/// Matrix of minors Λ^p O, (Λ^p O)_{IJ} = det O[I, J].
RMat lambda_power(const ExteriorFiber& f, const RMat& o);

/// Derivation dΛ(Ω) = Σ_ab Ω_ab e_a∧ i(e_b) on Λ^p; exp(dΛ(Ω)) = Λ^p exp(Ω).
RMat lambda_derivation(const ExteriorFiber& f, const RMat& omega);

/// e_a∧i(e_b) − e_b∧i(e_a), a < b, over an orthonormal basis of ξ^⊥ (the
/// columns of `complement`, or a fixed Householder basis when omitted).
std::vector<CMat> so_stabilizer_generators(const ExteriorFiber& f, const RVec& xi,
                                           const RMat* complement = nullptr);

/// Candidate labels, finer pieces first: P+, P- (2p = n − 1), P, (1-P)+,
/// (1-P)- (2p = n + 1), 1-P, then star and star*(2P-1) for p = n/2.
std::vector<std::pair<std::string, CMat>> commutant_candidates_forms(const ExteriorFiber& f,
                                                                     const RVec& xi);

struct FormStates {
  cplx omega_tr;
  cplx omega_t;
  cplx omega_l;
  std::optional<cplx> omega_plus;
  std::optional<cplx> omega_minus;
};

/// ω_tr(a) = Tr a / C(n,p), ω_t(a) = (n/(n−p)) ω_tr(Pa), ω_l(a) = (n/p) ω_tr((1−P)a),
/// and for 2p = n − 1 ω±(a) = ((p!)²/(2p)!) Tr((1 ± S)P a).
FormStates fiber_states_forms(const ExteriorFiber& f, const RVec& xi, const CMat& a);

enum class FormState { Trace, Transversal, Longitudinal, Plus, Minus };

/// Single state; Plus/Minus raise CapabilityError unless 2p = n − 1.
cplx fiber_state_form(const ExteriorFiber& f, const RVec& xi, const CMat& a, FormState kind);

/// Haar average of a balanced polynomial with X_i ↦ v_i∧ and Y_i ↦ i(v_i).
/// ArgumentError for unbalanced input.
algebra::HaarAverage haar_average_T_forms(const ExteriorFiber& f, const RVec& xi,
                                          const algebra::NcPolynomial& poly, int samples,
                                          bool exact, std::uint64_t seed);

/// Letter action on Λ^p used by haar_average_T_forms and single-frame
/// evaluations.
algebra::LetterAction form_letter_action(const ExteriorFiber& f);

}  // namespace qerg::exterior
