/// @file src/exterior.cpp

#include "qerg/exterior.hpp"

#include <algorithm>
#include <cmath>

namespace qerg::exterior {

namespace {

void subsets_rec(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int a = start; a < n; ++a) {
    cur.push_back(a);
    subsets_rec(n, k, a + 1, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  subsets_rec(n, k, 0, cur, out);
  return out;
}

void check_degree(int n, int k) {
  if (k < 0 || k > n) throw DegreeError("form degree out of range");
}

void check_unit(const RVec& xi) {
  if (std::abs(xi.norm() - 1.0) > 1e-8) throw ArgumentError("covector must have unit length");
}

bool middle_minus(const ExteriorFiber& f) { return 2 * f.p == f.n - 1; }

CMat complexify(const RMat& m) { return m.cast<cplx>(); }

cplx ipow(int k) {
  static const cplx table[4] = {1.0, kI, -1.0, -kI};
  return table[((k % 4) + 4) % 4];
}

}  // namespace

long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int subset_index(int n, const std::vector<int>& subset) {
  const int k = static_cast<int>(subset.size());
  long rank = 0;
  int prev = -1;
  for (int i = 0; i < k; ++i) {
    for (int j = prev + 1; j < subset[static_cast<std::size_t>(i)]; ++j) rank += binomial(n - 1 - j, k - 1 - i);
    prev = subset[static_cast<std::size_t>(i)];
  }
  return static_cast<int>(rank);
}

ExteriorFiber make_fiber(int n, int p) {
  if (n < 1) throw ArgumentError("dimension must be positive");
  check_degree(n, p);
  ExteriorFiber f;
  f.n = n;
  f.p = p;
  f.basis = subsets(n, p);
  f.dim = static_cast<int>(f.basis.size());
  return f;
}

RMat ext_mult(int n, int k, const RVec& v) {
  if (v.size() != n) throw ArgumentError("vector dimension mismatch");
  if (k < 0 || k + 1 > n) throw DegreeError("exterior multiplication leaves the range of degrees");
  const auto src = subsets(n, k);
  RMat m = RMat::Zero(binomial(n, k + 1), static_cast<Eigen::Index>(src.size()));
  for (std::size_t c = 0; c < src.size(); ++c) {
    const auto& I = src[c];
    for (int a = 0; a < n; ++a) {
      if (v(a) == 0.0 || std::binary_search(I.begin(), I.end(), a)) continue;
      std::vector<int> J = I;
      const auto pos = std::lower_bound(J.begin(), J.end(), a);
      const int before = static_cast<int>(pos - J.begin());
      J.insert(pos, a);
      m(subset_index(n, J), static_cast<Eigen::Index>(c)) += (before % 2 == 0 ? 1.0 : -1.0) * v(a);
    }
  }
  return m;
}

RMat int_mult(int n, int k, const RVec& v) {
  if (v.size() != n) throw ArgumentError("vector dimension mismatch");
  if (k < 1 || k > n) throw DegreeError("interior multiplication leaves the range of degrees");
  return ext_mult(n, k - 1, v).transpose();
}

RMat ext_mult(const ExteriorFiber& f, const RVec& xi) { return ext_mult(f.n, f.p, xi); }
RMat int_mult(const ExteriorFiber& f, const RVec& xi) { return int_mult(f.n, f.p, xi); }

RMat hodge_star(const ExteriorFiber& f) {
  RMat m = RMat::Zero(binomial(f.n, f.n - f.p), f.dim);
  for (int c = 0; c < f.dim; ++c) {
    const auto& I = f.basis[static_cast<std::size_t>(c)];
    std::vector<int> comp;
    int inversions = 0;
    for (int a = 0, k = 0; a < f.n; ++a) {
      if (k < f.p && I[static_cast<std::size_t>(k)] == a) {
        inversions += a - k;
        ++k;
      } else {
        comp.push_back(a);
      }
    }
    m(subset_index(f.n, comp), c) = inversions % 2 == 0 ? 1.0 : -1.0;
  }
  return m;
}

RMat projection_P(const ExteriorFiber& f, const RVec& xi) {
  check_unit(xi);
  if (f.p == f.n) return RMat::Zero(f.dim, f.dim);
  return int_mult(f.n, f.p + 1, xi) * ext_mult(f.n, f.p, xi);
}

CMat pm_operator(const ExteriorFiber& f, const RVec& xi) {
  if (!middle_minus(f)) throw CapabilityError("P+/P- for forms exist only for 2p = n - 1");
  check_unit(xi);
  return ipow(f.p) * complexify(int_mult(f.n, f.n - f.p, xi) * hodge_star(f));
}

std::pair<CMat, CMat> projections_pm_forms(const ExteriorFiber& f, const RVec& xi) {
  const CMat S = pm_operator(f, xi);
  const CMat P = complexify(projection_P(f, xi));
  const CMat I = CMat::Identity(f.dim, f.dim);
  return {0.5 * (I + S) * P, 0.5 * (I - S) * P};
}

RMat lambda_power(const ExteriorFiber& f, const RMat& o) {
  if (o.rows() != f.n || o.cols() != f.n) throw ArgumentError("matrix size mismatch");
  RMat m(f.dim, f.dim);
  if (f.p == 0) {
    m(0, 0) = 1.0;
    return m;
  }
  RMat sub(f.p, f.p);
  for (int r = 0; r < f.dim; ++r)
    for (int c = 0; c < f.dim; ++c) {
      const auto& I = f.basis[static_cast<std::size_t>(r)];
      const auto& J = f.basis[static_cast<std::size_t>(c)];
      for (int a = 0; a < f.p; ++a)
        for (int b = 0; b < f.p; ++b) sub(a, b) = o(I[static_cast<std::size_t>(a)], J[static_cast<std::size_t>(b)]);
      m(r, c) = sub.determinant();
    }
  return m;
}

RMat lambda_derivation(const ExteriorFiber& f, const RMat& omega) {
  if (omega.rows() != f.n || omega.cols() != f.n) throw ArgumentError("matrix size mismatch");
  RMat m = RMat::Zero(f.dim, f.dim);
  if (f.p == 0) return m;
  for (int a = 0; a < f.n; ++a)
    for (int b = 0; b < f.n; ++b) {
      if (omega(a, b) == 0.0) continue;
      m += omega(a, b) * ext_mult(f.n, f.p - 1, RVec::Unit(f.n, a)) * int_mult(f.n, f.p, RVec::Unit(f.n, b));
    }
  return m;
}

std::vector<CMat> so_stabilizer_generators(const ExteriorFiber& f, const RVec& xi, const RMat* complement) {
  check_unit(xi);
  const RMat basis = complement ? *complement : algebra::orthonormal_complement(xi);
  std::vector<CMat> out;
  for (Eigen::Index a = 0; a < basis.cols(); ++a)
    for (Eigen::Index b = a + 1; b < basis.cols(); ++b) {
      const RMat E = basis.col(a) * basis.col(b).transpose() - basis.col(b) * basis.col(a).transpose();
      out.push_back(complexify(lambda_derivation(f, E)));
    }
  return out;
}

std::vector<std::pair<std::string, CMat>> commutant_candidates_forms(const ExteriorFiber& f, const RVec& xi) {
  const CMat P = complexify(projection_P(f, xi));
  const CMat I = CMat::Identity(f.dim, f.dim);
  std::vector<std::pair<std::string, CMat>> out;
  if (middle_minus(f)) {
    const auto [pp, pm] = projections_pm_forms(f, xi);
    out.emplace_back("P+", pp);
    out.emplace_back("P-", pm);
  }
  out.emplace_back("P", P);
  if (2 * f.p == f.n + 1) {
    // ξ∧∘* squares to a multiple of 1 − P; pick the phase making it an involution there.
    const CMat T = complexify(ext_mult(f.n, f.n - f.p, xi) * hodge_star(f));
    const CMat Q = I - P;
    for (int k = 0; k < 4; ++k) {
      const CMat S = ipow(k) * T;
      if ((S * S - Q).norm() < 1e-10 && (S - S.adjoint()).norm() < 1e-10) {
        out.emplace_back("(1-P)+", 0.5 * (Q + S));
        out.emplace_back("(1-P)-", 0.5 * (Q - S));
        break;
      }
    }
  }
  out.emplace_back("1-P", I - P);
  if (2 * f.p == f.n) {
    const CMat star = complexify(hodge_star(f));
    out.emplace_back("star", star);
    out.emplace_back("star*(2P-1)", star * (2.0 * P - I));
  }
  return out;
}

FormStates fiber_states_forms(const ExteriorFiber& f, const RVec& xi, const CMat& a) {
  if (a.rows() != f.dim || a.cols() != f.dim) throw ArgumentError("matrix size does not match the fiber");
  if (f.p <= 0 || f.p >= f.n) throw DegreeError("form states need 0 < p < n");
  const CMat P = complexify(projection_P(f, xi));
  const double n = f.n;
  const double p = f.p;
  const double norm = static_cast<double>(f.dim);
  FormStates s;
  s.omega_tr = a.trace() / norm;
  s.omega_t = n / (n - p) * (P * a).trace() / norm;
  s.omega_l = n / p * (a - P * a).trace() / norm;
  if (middle_minus(f)) {
    const CMat S = pm_operator(f, xi);
    const CMat I = CMat::Identity(f.dim, f.dim);
    double fact_ratio = 1.0;  // (p!)² / (2p)!
    for (int k = 1; k <= f.p; ++k) fact_ratio *= static_cast<double>(k) / static_cast<double>(f.p + k);
    s.omega_plus = fact_ratio * ((I + S) * P * a).trace();
    s.omega_minus = fact_ratio * ((I - S) * P * a).trace();
  }
  return s;
}

cplx fiber_state_form(const ExteriorFiber& f, const RVec& xi, const CMat& a, FormState kind) {
  if ((kind == FormState::Plus || kind == FormState::Minus) && !middle_minus(f)) {
    throw CapabilityError("omega_+/omega_- for forms exist only for 2p = n - 1");
  }
  const FormStates s = fiber_states_forms(f, xi, a);
  switch (kind) {
    case FormState::Trace:
      return s.omega_tr;
    case FormState::Transversal:
      return s.omega_t;
    case FormState::Longitudinal:
      return s.omega_l;
    case FormState::Plus:
      return *s.omega_plus;
    case FormState::Minus:
      return *s.omega_minus;
  }
  return s.omega_tr;
}

algebra::LetterAction form_letter_action(const ExteriorFiber& f) {
  const int n = f.n;
  const int p = f.p;
  return [n, p](algebra::Letter::Kind kind, const RVec& v, int offset) -> CMat {
    const int k = p + offset;
    if (kind == algebra::Letter::Kind::X) {
      if (k < 0 || k + 1 > n) return CMat();
      return complexify(ext_mult(n, k, v));
    }
    if (k < 1 || k > n) return CMat();
    return complexify(int_mult(n, k, v));
  };
}

algebra::HaarAverage haar_average_T_forms(const ExteriorFiber& f, const RVec& xi,
                                          const algebra::NcPolynomial& poly, int samples, bool exact,
                                          std::uint64_t seed) {
  check_unit(xi);
  if (!poly.balanced()) throw ArgumentError("form polynomials need equal numbers of X and Y letters per monomial");
  return algebra::haar_average(poly, xi, samples, exact, seed, form_letter_action(f),
                               CMat::Identity(f.dim, f.dim));
}

}  // namespace qerg::exterior
