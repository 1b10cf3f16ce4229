/// @file src/clifford.cpp

#include "qerg/clifford.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace qerg::clifford {

namespace {

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMat pauli(int k) {
  CMat s(2, 2);
  switch (k) {
    case 1:
      s << 0, 1, 1, 0;
      break;
    case 2:
      s << 0, -kI, kI, 0;
      break;
    default:
      s << 1, 0, 0, -1;
      break;
  }
  return s;
}

CMat chirality_of(const std::vector<CMat>& gammas) {
  const int n = static_cast<int>(gammas.size());
  CMat prod = CMat::Identity(gammas.front().rows(), gammas.front().cols());
  for (const auto& g : gammas) prod = prod * g;
  cplx phase = 1.0;
  for (int i = 0; i < (n * (n + 1) / 2) % 4; ++i) phase *= kI;
  return phase * prod;
}

void check_unit(const RVec& xi) {
  if (std::abs(xi.norm() - 1.0) > 1e-8) throw ArgumentError("covector must have unit length");
}

}  // namespace

CliffordRep build_clifford(int n) {
  if (n < 2) throw ArgumentError("Clifford dimension must be >= 2");
  std::vector<CMat> g{pauli(1), pauli(2)};
  while (static_cast<int>(g.size()) + 2 <= n) {
    const Eigen::Index r = g.front().rows();
    std::vector<CMat> next;
    for (const auto& a : g) next.push_back(kron(a, pauli(1)));
    next.push_back(kron(CMat::Identity(r, r), pauli(2)));
    next.push_back(kron(CMat::Identity(r, r), pauli(3)));
    g = std::move(next);
  }
  if (static_cast<int>(g.size()) < n) g.push_back(chirality_of(g));
  CliffordRep rep;
  rep.n = n;
  rep.rank = static_cast<int>(g.front().rows());
  rep.gammas = std::move(g);
  if (n % 2 == 0) rep.chirality = chirality_of(rep.gammas);
  return rep;
}

CMat clifford_multiply(const CliffordRep& rep, const RVec& v) {
  if (v.size() != rep.n) throw ArgumentError("vector dimension does not match the Clifford module");
  CMat out = CMat::Zero(rep.rank, rep.rank);
  for (int i = 0; i < rep.n; ++i) out += v(i) * rep.gammas[static_cast<std::size_t>(i)];
  return out;
}

CMat symbol_F(const CliffordRep& rep, const RVec& xi) {
  check_unit(xi);
  return clifford_multiply(rep, xi);
}

std::pair<CMat, CMat> projections_pm(const CliffordRep& rep, const RVec& xi) {
  const CMat F = symbol_F(rep, xi);
  const CMat I = CMat::Identity(rep.rank, rep.rank);
  return {0.5 * (I + F), 0.5 * (I - F)};
}

std::vector<CMat> spin_stabilizer_generators(const CliffordRep& rep, const RVec& xi,
                                             const RMat* complement) {
  check_unit(xi);
  const RMat basis = complement ? *complement : algebra::orthonormal_complement(xi);
  std::vector<CMat> gamma_e;
  for (Eigen::Index a = 0; a < basis.cols(); ++a) gamma_e.push_back(clifford_multiply(rep, basis.col(a)));
  std::vector<CMat> out;
  for (std::size_t a = 0; a < gamma_e.size(); ++a)
    for (std::size_t b = a + 1; b < gamma_e.size(); ++b) out.push_back(0.5 * gamma_e[a] * gamma_e[b]);
  return out;
}

CMat spin_generator(const CliffordRep& rep, const RMat& omega) {
  CMat out = CMat::Zero(rep.rank, rep.rank);
  for (int a = 0; a < rep.n; ++a)
    for (int b = 0; b < rep.n; ++b) {
      if (a == b || omega(a, b) == 0.0) continue;
      out += 0.25 * omega(a, b) * rep.gammas[static_cast<std::size_t>(a)] * rep.gammas[static_cast<std::size_t>(b)];
    }
  return out;
}

CMat spin_exp(const CliffordRep& rep, const RMat& omega) {
  return spin_generator(rep, omega).exp();
}

CMat spin_lift(const CliffordRep& rep, const RMat& rotation) {
  const int n = rep.n;
  if (rotation.rows() != n || rotation.cols() != n) throw ArgumentError("rotation size mismatch");
  if ((rotation.transpose() * rotation - RMat::Identity(n, n)).norm() > 1e-10 || rotation.determinant() < 0.0) {
    throw ArgumentError("spin_lift needs a rotation in SO(n)");
  }
  std::vector<CMat> rotated;
  for (int i = 0; i < n; ++i) rotated.push_back(clifford_multiply(rep, rotation.col(i)));
  // Σ_I γ'_I X γ_I⁻¹ = rank·Tr(U⁻¹X)·U when the γ_I run over a unitary basis
  // of the matrix algebra: all subsets for even n, even subsets for odd n.
  const int subsets = 1 << n;
  std::vector<CMat> basis_gamma, basis_rotated, basis_inverse;
  for (int mask = 0; mask < subsets; ++mask) {
    if (n % 2 == 1 && __builtin_popcount(static_cast<unsigned>(mask)) % 2 == 1) continue;
    CMat gp = CMat::Identity(rep.rank, rep.rank);
    CMat g = CMat::Identity(rep.rank, rep.rank);
    CMat gi = CMat::Identity(rep.rank, rep.rank);
    for (int i = 0; i < n; ++i) {
      if (!(mask & (1 << i))) continue;
      gp = gp * rotated[static_cast<std::size_t>(i)];
      g = g * rep.gammas[static_cast<std::size_t>(i)];
      gi = rep.gammas[static_cast<std::size_t>(i)] * gi;
    }
    basis_rotated.push_back(std::move(gp));
    basis_gamma.push_back(std::move(g));
    basis_inverse.push_back(std::move(gi));
  }
  CMat best;
  double best_c2 = 0.0;
  for (const auto& X : basis_gamma) {
    CMat sum = CMat::Zero(rep.rank, rep.rank);
    for (std::size_t k = 0; k < basis_gamma.size(); ++k) sum += basis_rotated[k] * X * basis_inverse[k];
    const double c2 = (sum.adjoint() * sum).trace().real() / rep.rank;
    if (c2 > best_c2) {
      best_c2 = c2;
      best = std::move(sum);
    }
    if (best_c2 >= 0.5 * rep.rank * rep.rank) break;
  }
  CMat U = best / std::sqrt(best_c2);
  // The overall phase is free; prefer a real positive trace.
  const cplx tr = U.trace();
  if (std::abs(tr) > 1e-8) U *= std::abs(tr) / tr;
  return U;
}

std::vector<std::pair<std::string, CMat>> commutant_candidates(const CliffordRep& rep,
                                                               const RVec& xi) {
  const auto [pp, pm] = projections_pm(rep, xi);
  std::vector<std::pair<std::string, CMat>> out{{"P+", pp}, {"P-", pm}};
  if (rep.chirality) {
    out.emplace_back("Gamma", *rep.chirality);
    out.emplace_back("Gamma*sigma_F", *rep.chirality * symbol_F(rep, xi));
  }
  return out;
}

algebra::HaarAverage haar_average_T(const CliffordRep& rep, const RVec& xi,
                                    const algebra::NcPolynomial& poly, int samples, bool exact,
                                    std::uint64_t seed) {
  check_unit(xi);
  if (poly.has_y()) throw ArgumentError("Clifford polynomials use X letters only");
  const algebra::LetterAction action = [&rep](algebra::Letter::Kind, const RVec& v, int) {
    return clifford_multiply(rep, v);
  };
  return algebra::haar_average(poly, xi, samples, exact, seed, action,
                               CMat::Identity(rep.rank, rep.rank));
}

FiberStates fiber_states(const CliffordRep& rep, const RVec& xi, const CMat& a) {
  if (a.rows() != rep.rank || a.cols() != rep.rank) throw ArgumentError("matrix size does not match the rank");
  const auto [pp, pm] = projections_pm(rep, xi);
  const double r = rep.rank;
  FiberStates s;
  s.omega_plus = 2.0 / r * (pp * a * pp).trace();
  s.omega_minus = 2.0 / r * (pm * a * pm).trace();
  s.omega = a.trace() / r;
  if (rep.chirality) {
    const CMat& G = *rep.chirality;
    s.omega_1 = (a + G * a).trace() / r;
    s.omega_2 = (a - G * a).trace() / r;
  }
  return s;
}

cplx fiber_state(const CliffordRep& rep, const RVec& xi, const CMat& a, SpinorState kind) {
  const FiberStates s = fiber_states(rep, xi, a);
  switch (kind) {
    case SpinorState::Plus:
      return s.omega_plus;
    case SpinorState::Minus:
      return s.omega_minus;
    case SpinorState::Trace:
      return s.omega;
    case SpinorState::One:
    case SpinorState::Two:
      if (!s.omega_1) throw CapabilityError("omega_1/omega_2 exist only for even n");
      return kind == SpinorState::One ? *s.omega_1 : *s.omega_2;
  }
  return s.omega;
}

}  // namespace qerg::clifford
