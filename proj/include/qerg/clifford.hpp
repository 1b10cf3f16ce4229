/// @file include/qerg/clifford.hpp
/// @brief Spinor fiber: gamma matrices, σ_F(ξ), P±, chirality Γ, Spin(n−1)
///        stabilizer generators, Haar-averaged fiber map and fiber states.

#pragma once

#include "qerg/commutant.hpp"
#include "qerg/polynomial.hpp"
#include "qerg/types.hpp"

#include <optional>
#include <vector>

namespace qerg::clifford {

/// Irreducible Clifford module of rank 2^{⌊n/2⌋} with hermitian γ_i,
/// γ_iγ_j + γ_jγ_i = 2δ_ij.
struct CliffordRep {
  int n = 0;
  int rank = 0;
  std::vector<CMat> gammas;
  /// Γ = i^{n(n+1)/2} γ₁⋯γ_n, present for even n.
  std::optional<CMat> chirality;
};

/// Recursive tensor doubling from the Pauli matrices. Requires n ≥ 2.
CliffordRep build_clifford(int n);

/// γ(v) = Σ v_i γ_i for any real v (no normalisation check).
CMat clifford_multiply(const CliffordRep& rep, const RVec& v);

/// σ_F(ξ) = γ(ξ). Throws ArgumentError when | |ξ| − 1 | > 1e-8.
CMat symbol_F(const CliffordRep& rep, const RVec& xi);

/// P± = ½(1 ± σ_F(ξ)).
std::pair<CMat, CMat> projections_pm(const CliffordRep& rep, const RVec& xi);

/// ½γ(e_a)γ(e_b), a < b, for an orthonormal basis of ξ^⊥ (the columns of
/// `complement`, or a fixed Householder basis when omitted).
std::vector<CMat> spin_stabilizer_generators(const CliffordRep& rep, const RVec& xi,
                                             const RMat* complement = nullptr);

/// ρ(Ω) = ¼ Σ_ab Ω_ab γ_aγ_b for antisymmetric Ω; exp(ρ(Ω)) γ(v) exp(−ρ(Ω)) =
/// γ(exp(Ω) v).
CMat spin_generator(const CliffordRep& rep, const RMat& omega);
CMat spin_exp(const CliffordRep& rep, const RMat& omega);

/// Unitary U with U γ(v) U⁻¹ = γ(O v) for O ∈ SO(n), built as a multiple of
/// Σ_I γ(O e)_I X γ_I⁻¹ over index subsets I. Unique up to sign when
/// Tr U ≠ 0 (the trace is then made positive), up to a phase otherwise.
CMat spin_lift(const CliffordRep& rep, const RMat& rotation);

/// Candidate labels for commutant bases: P+, P-, and for even n Gamma and
/// Gamma*sigma_F.
std::vector<std::pair<std::string, CMat>> commutant_candidates(const CliffordRep& rep,
                                                               const RVec& xi);

/// Haar average of p(ξ, v₂, …, v_n) with X_i ↦ γ(v_i).
algebra::HaarAverage haar_average_T(const CliffordRep& rep, const RVec& xi,
                                    const algebra::NcPolynomial& poly, int samples, bool exact,
                                    std::uint64_t seed);

enum class SpinorState { Plus, Minus, Trace, One, Two };

struct FiberStates {
  cplx omega_plus;
  cplx omega_minus;
  cplx omega;
  std::optional<cplx> omega_1;
  std::optional<cplx> omega_2;
};

/// ω±(a) = (2/rank)Tr(P± a P±), ω(a) = Tr(a)/rank, ω₁,₂(a) = ω((1 ± Γ)a).
FiberStates fiber_states(const CliffordRep& rep, const RVec& xi, const CMat& a);

/// Single state; ω₁/ω₂ for odd n raise CapabilityError.
cplx fiber_state(const CliffordRep& rep, const RVec& xi, const CMat& a, SpinorState kind);

}  // namespace qerg::clifford
