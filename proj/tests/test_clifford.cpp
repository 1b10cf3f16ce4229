#include <doctest.h>

#include "qerg/clifford.hpp"
#include "qerg/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace qerg;
using namespace qerg::clifford;

namespace {

RVec random_unit(int n, Rng& rng) {
  std::normal_distribution<double> g;
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v / v.norm();
}

CMat random_matrix(int d, Rng& rng) {
  std::normal_distribution<double> g;
  CMat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = cplx(g(rng), g(rng));
  return a;
}

RMat random_rotation(int n, Rng& rng) {
  std::normal_distribution<double> g;
  RMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  Eigen::HouseholderQR<RMat> qr(a);
  RMat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

RVec unit(int n, int i) {
  RVec e = RVec::Zero(n);
  e(i) = 1.0;
  return e;
}

}  // namespace

TEST_CASE("build_clifford: relations and ranks") {
  for (int n = 2; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    CHECK(rep.rank == (1 << (n / 2)));
    CHECK(static_cast<int>(rep.gammas.size()) == n);
    const CMat I = CMat::Identity(rep.rank, rep.rank);
    for (int i = 0; i < n; ++i) {
      CHECK((rep.gammas[i] - rep.gammas[i].adjoint()).norm() < 1e-14);
      for (int j = 0; j < n; ++j) {
        const CMat ac = rep.gammas[i] * rep.gammas[j] + rep.gammas[j] * rep.gammas[i];
        CHECK((ac - (i == j ? 2.0 : 0.0) * I).norm() < 1e-13);
      }
    }
    CHECK(rep.chirality.has_value() == (n % 2 == 0));
    if (rep.chirality) {
      const CMat& G = *rep.chirality;
      CHECK((G * G - I).norm() < 1e-13);
      CHECK(std::abs(G.trace()) < 1e-13);
      for (const auto& g : rep.gammas) CHECK((G * g + g * G).norm() < 1e-13);
    }
  }
  CHECK(build_clifford(3).rank == 2);
  CHECK(build_clifford(5).rank == 4);
  CHECK_THROWS_AS(build_clifford(1), ArgumentError);
}

TEST_CASE("symbol_F and P±") {
  Rng rng = make_rng(1, 1);
  for (int n = 3; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    const CMat I = CMat::Identity(rep.rank, rep.rank);
    for (int s = 0; s < 10; ++s) {
      const RVec xi = random_unit(n, rng);
      const CMat F = symbol_F(rep, xi);
      CHECK((F * F - I).norm() < 1e-13);
      CHECK(std::abs(F.trace()) < 1e-12);
      const auto [pp, pm] = projections_pm(rep, xi);
      CHECK((pp * pp - pp).norm() < 1e-13);
      CHECK((pp - pp.adjoint()).norm() < 1e-14);
      CHECK((pp + pm - I).norm() < 1e-14);
      CHECK((pp * pm).norm() < 1e-13);
      CHECK(std::abs(pp.trace().real() - (1 << (n / 2 - 1))) < 1e-12);
      if (rep.chirality) CHECK((*rep.chirality * pp - pm * *rep.chirality).norm() < 1e-13);
    }
  }
  const auto rep3 = build_clifford(3);
  CHECK((symbol_F(rep3, unit(3, 0)) - rep3.gammas[0]).norm() == 0.0);
  RVec bad = unit(3, 0) * 1.01;
  CHECK_THROWS_AS(symbol_F(rep3, bad), ArgumentError);
}

TEST_CASE("spin_stabilizer_generators commute with sigma_F") {
  const auto rep3 = build_clifford(3);
  const auto g3 = spin_stabilizer_generators(rep3, unit(3, 2));
  REQUIRE(g3.size() == 1);
  CHECK((g3[0] * rep3.gammas[2] - rep3.gammas[2] * g3[0]).norm() < 1e-13);
  CHECK(spin_stabilizer_generators(build_clifford(5), unit(5, 0)).size() == 6);
  Rng rng = make_rng(2, 1);
  for (int n = 3; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    const RVec xi = random_unit(n, rng);
    const auto [pp, pm] = projections_pm(rep, xi);
    for (const auto& g : spin_stabilizer_generators(rep, xi)) {
      CHECK((g + g.adjoint()).norm() < 1e-13);
      CHECK((g * pp - pp * g).norm() < 1e-12);
      CHECK((g * pm - pm * g).norm() < 1e-12);
    }
  }
}

TEST_CASE("commutant of the Spin(n-1) action") {
  Rng rng = make_rng(3, 1);
  for (int n = 3; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    const RVec xi = random_unit(n, rng);
    const auto gens = spin_stabilizer_generators(rep, xi);
    const auto full = algebra::commutant(gens);
    CHECK(full.dimension == (n % 2 == 1 ? 2 : 4));
    CHECK(full.gap >= 1e3);
    const auto [pp, pm] = projections_pm(rep, xi);
    CHECK(algebra::span_residual(full.basis, pp) < 1e-8);
    CHECK(algebra::span_residual(full.basis, pm) < 1e-8);
    if (rep.chirality) CHECK(algebra::span_residual(full.basis, *rep.chirality) < 1e-8);
    for (const CMat* q : {&pp, &pm}) {
      const auto r = algebra::commutant(gens, q);
      CHECK(r.dimension == 1);
      CHECK(r.gap >= 1e3);
      CHECK(algebra::span_residual(r.basis, *q) < 1e-8);
    }
    const auto labels = algebra::label_basis(full.basis, commutant_candidates(rep, xi));
    CHECK(labels[0] == "P+");
    CHECK(labels[1] == "P-");
    if (n % 2 == 0) CHECK(labels[2] == "Gamma");
  }
  CHECK_THROWS_AS(algebra::commutant({}), ArgumentError);
}

TEST_CASE("commutant dimension does not depend on the basis of the complement") {
  Rng rng = make_rng(4, 1);
  for (int n : {5, 6}) {
    const auto rep = build_clifford(n);
    const RVec xi = random_unit(n, rng);
    RMat frame = algebra::random_frame(xi, rng);
    const RMat comp = frame.rightCols(n - 1);
    const auto a = algebra::commutant(spin_stabilizer_generators(rep, xi));
    const auto b = algebra::commutant(spin_stabilizer_generators(rep, xi, &comp));
    CHECK(a.dimension == b.dimension);
  }
}

TEST_CASE("commutant: splitting gives the same answer") {
  const auto rep = build_clifford(6);
  const RVec xi = unit(6, 1);
  const auto gens = spin_stabilizer_generators(rep, xi);
  const auto [pp, pm] = projections_pm(rep, xi);
  algebra::CommutantOptions opt;
  opt.splitting = {pp, pm};
  CHECK(algebra::commutant(gens, nullptr, opt).dimension == 4);
  opt.splitting = {pp};
  CHECK_THROWS_AS(algebra::commutant(gens, nullptr, opt), ArgumentError);
}

TEST_CASE("haar_average_T examples") {
  for (int n : {3, 4, 5}) {
    const auto rep = build_clifford(n);
    const RVec xi = unit(n, 0);
    const CMat I = CMat::Identity(rep.rank, rep.rank);
    const auto id = haar_average_T(rep, xi, algebra::NcPolynomial::constant(1.0), 200, false, 7);
    CHECK((id.mean - I).norm() < 1e-14);
    const auto x2 = haar_average_T(rep, xi, algebra::NcPolynomial::parse("X2"), 2000, false, 7);
    CHECK(x2.mean.cwiseAbs().maxCoeff() <= 3.0 * x2.standard_error + 1e-14);
    const auto x2x2 = haar_average_T(rep, xi, algebra::NcPolynomial::parse("X2X2"), 500, false, 7);
    CHECK((x2x2.mean - I).cwiseAbs().maxCoeff() <= 3.0 * x2x2.standard_error + 1e-12);
    CHECK(haar_average_T(rep, xi, algebra::NcPolynomial::parse("X2"), 0, true, 0).mean.norm() < 1e-14);

    const auto gens = spin_stabilizer_generators(rep, xi);
    const auto mixed = haar_average_T(rep, xi, algebra::NcPolynomial::parse("X2X1X3 + 0.5*X1"), 400, false, 9);
    for (const auto& g : gens)
      CHECK((g * mixed.mean - mixed.mean * g).norm() <= 5.0 / std::sqrt(400.0) * rep.rank);
  }
  const auto rep = build_clifford(4);
  CHECK_THROWS_AS(haar_average_T(rep, unit(4, 0), algebra::NcPolynomial::parse("X2"), 99, false, 1),
                  ArgumentError);
  CHECK_THROWS_AS(haar_average_T(rep, unit(4, 0), algebra::NcPolynomial::parse("X2X3X2X3"), 0, true, 1),
                  DegreeError);
}

TEST_CASE("exact Haar average agrees with Monte-Carlo") {
  const auto rep = build_clifford(5);
  Rng rng = make_rng(5, 1);
  const RVec xi = random_unit(5, rng);
  const auto poly = algebra::NcPolynomial::parse("X2X1X2 + 2*X3X3 - X1");
  const auto ex = haar_average_T(rep, xi, poly, 0, true, 0);
  const auto mc = haar_average_T(rep, xi, poly, 4000, false, 11);
  CHECK((ex.mean - mc.mean).cwiseAbs().maxCoeff() <= 4.0 * mc.standard_error + 1e-12);
  // γ(v)γ(ξ)γ(v) = −γ(ξ) for v ⊥ ξ.
  const CMat F = symbol_F(rep, xi);
  CHECK((ex.mean - (2.0 * CMat::Identity(4, 4) - 2.0 * F)).norm() < 1e-12);
}

TEST_CASE("fiber_states identities") {
  Rng rng = make_rng(6, 1);
  for (int n = 3; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    const RVec xi = random_unit(n, rng);
    const auto one = fiber_states(rep, xi, CMat::Identity(rep.rank, rep.rank));
    CHECK(std::abs(one.omega_plus - 1.0) < 1e-13);
    CHECK(std::abs(one.omega_minus - 1.0) < 1e-13);
    CHECK(std::abs(one.omega - 1.0) < 1e-13);
    for (int s = 0; s < 20; ++s) {
      const CMat a = random_matrix(rep.rank, rng);
      const auto st = fiber_states(rep, xi, a);
      CHECK(std::abs(st.omega - 0.5 * (st.omega_plus + st.omega_minus)) < 1e-12);
      const auto pos = fiber_states(rep, xi, a.adjoint() * a);
      CHECK(pos.omega_plus.real() >= -1e-12);
      CHECK(pos.omega_minus.real() >= -1e-12);
      if (rep.chirality) {
        CHECK(std::abs(st.omega - 0.5 * (*st.omega_1 + *st.omega_2)) < 1e-12);
        CHECK(pos.omega_1->real() >= -1e-12);
      }
    }
  }
  const auto rep = build_clifford(3);
  CHECK_THROWS_AS(fiber_state(rep, unit(3, 0), CMat::Identity(2, 2), SpinorState::One), CapabilityError);
  CHECK(std::abs(fiber_state(rep, unit(3, 0), CMat::Identity(2, 2), SpinorState::Plus) - 1.0) < 1e-14);
}

TEST_CASE("spin lift intertwines rotations") {
  Rng rng = make_rng(7, 1);
  for (int n = 3; n <= 6; ++n) {
    const auto rep = build_clifford(n);
    RMat omega = RMat::Zero(n, n);
    std::normal_distribution<double> g;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        omega(a, b) = g(rng);
        omega(b, a) = -omega(a, b);
      }
    const RMat R = omega.exp();
    const CMat U = spin_exp(rep, omega);
    CHECK((U * U.adjoint() - CMat::Identity(rep.rank, rep.rank)).norm() < 1e-12);
    const RMat O = random_rotation(n, rng);
    const CMat V = spin_lift(rep, O);
    CHECK((V * V.adjoint() - CMat::Identity(rep.rank, rep.rank)).norm() < 1e-10);
    for (int s = 0; s < 5; ++s) {
      const RVec xi = random_unit(n, rng);
      CHECK((U * clifford_multiply(rep, xi) * U.adjoint() - clifford_multiply(rep, R * xi)).norm() < 1e-10);
      CHECK((V * clifford_multiply(rep, xi) * V.adjoint() - clifford_multiply(rep, O * xi)).norm() < 1e-10);
    }
  }
}

TEST_CASE("polynomial parsing") {
  const auto p = algebra::NcPolynomial::parse("2*X1Y1 + X3 X3 - 0.5");
  CHECK(p.terms().size() == 3);
  CHECK(p.degree() == 2);
  CHECK(p.max_index() == 3);
  CHECK(p.has_y());
  CHECK_FALSE(p.balanced());
  CHECK(algebra::NcPolynomial::parse("X2Y2 + Y1X1").balanced());
  CHECK_THROWS_AS(algebra::NcPolynomial::parse("X"), ArgumentError);
  CHECK_THROWS_AS(algebra::NcPolynomial::parse("X1 +"), ArgumentError);
  CHECK_THROWS_AS(algebra::NcPolynomial::parse("Z1"), ArgumentError);
}
