#include <doctest.h>

#include "qerg/lapack.hpp"
#include "qerg/rng.hpp"
#include "qerg/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace qerg;
using namespace qerg::torus;
using transport::matrix_symbol;
using transport::SymbolField;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

CMat pauli(int k) {
  CMat s(2, 2);
  if (k == 1) s << 0, 1, 1, 0;
  else if (k == 2) s << 0, -kI, kI, 0;
  else s << 1, 0, 0, -1;
  return s;
}

CMat scalar(double v) { return CMat::Constant(1, 1, v); }

SymbolField scalar_field(std::function<double(const Vec&, const Vec&)> f, int degree, const char* label) {
  return matrix_symbol([f](const Vec& x, const Vec& xi) { return scalar(f(x, xi)); }, 1, label, degree);
}

TorusBundleModel random_model(int K, int r, std::uint64_t seed) {
  Rng rng = make_rng(seed, 7, 0);
  std::normal_distribution<double> normal;
  auto rand_mat = [&] {
    CMat c(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) c(i, j) = cplx(normal(rng), normal(rng)) * 0.2;
    return c;
  };
  TorusBundleModel m = free_bundle(2, r, K);
  m.A.assign(2, FourierMatrixField{2, r, {}});
  m.A[0].add_hermitian_mode({1, 0}, rand_mat());
  m.A[0].add_hermitian_mode({1, -1}, rand_mat());
  m.A[1].add_hermitian_mode({0, 1}, rand_mat());
  m.V.add_hermitian_mode({1, 1}, rand_mat());
  m.V.add_hermitian_mode({0, 0}, 2.0 * CMat::Identity(r, r));
  m.shift = 1.0;
  return m;
}

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

RVec lowest(const SparseC& P, int count) {
  RVec values;
  CMat vectors;
  lapack::eigh_range(CMat(P), 0, count - 1, values, vectors);
  return values;
}

}  // namespace

TEST_CASE("torus basis indexing") {
  const TorusBasis basis(2, 3, 4);
  CHECK(basis.mode_count() == 81);
  CHECK(basis.size() == 243);
  for (int i = 0; i < basis.mode_count(); ++i) CHECK(basis.mode_index(basis.mode(i)) == i);
  CHECK(basis.mode_index({5, 0}) == -1);
  CHECK(basis.mode(0) == Mode{-4, -4});
  CHECK(basis.mode(1) == Mode{-4, -3});
}

TEST_CASE("assemble_P closed forms and hermiticity") {
  SUBCASE("free case is |k|^2 on the diagonal") {
    const auto m = free_bundle(2, 2, 5);
    const SparseC P = assemble_P(m);
    const TorusBasis basis(2, 2, 5);
    CHECK(P.nonZeros() == basis.size() - 2);
    for (int i = 0; i < basis.mode_count(); ++i) {
      const double k2 = std::pow(basis.mode(i)[0], 2) + std::pow(basis.mode(i)[1], 2);
      for (int a = 0; a < 2; ++a) CHECK(std::abs(P.coeff(basis.index(i, a), basis.index(i, a)) - k2) < 1e-14);
    }
  }
  SUBCASE("constant scalar connection completes the square") {
    auto m = free_bundle(2, 1, 6);
    const double a0 = 0.3, a1 = -0.45;
    m.A.assign(2, FourierMatrixField{2, 1, {}});
    m.A[0].coeffs[{0, 0}] = scalar(a0);
    m.A[1].coeffs[{0, 0}] = scalar(a1);
    const SparseC P = assemble_P(m);
    const TorusBasis basis(2, 1, 6);
    for (int i = 0; i < basis.mode_count(); ++i) {
      const double expect = std::pow(basis.mode(i)[0] + a0, 2) + std::pow(basis.mode(i)[1] + a1, 2);
      CHECK(std::abs(P.coeff(i, i) - expect) < 1e-12);
    }
    CHECK(std::abs(P.sum() - CMat(P).diagonal().sum()) < 1e-12);
  }
  SUBCASE("random models are hermitian") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const SparseC P = assemble_P(random_model(5, 2, seed));
      CHECK(max_abs(CMat(P) - CMat(P).adjoint()) <= 1e-12);
    }
  }
  SUBCASE("truncation refusal") {
    auto m = default_matrix_bundle(2);
    m.K = 1;
    CHECK_THROWS_AS(assemble_P(m), TruncationError);
    auto v = free_bundle(2, 1, 2);
    v.V.add_hermitian_mode({3, 0}, scalar(0.1));
    CHECK_THROWS_AS(assemble_P(v), TruncationError);
  }
}

TEST_CASE("dense square root and propagator") {
  SUBCASE("free case") {
    auto m = free_bundle(2, 1, 4);
    CHECK_THROWS_AS(sqrt_and_propagator(dense_spectral(assemble_P(m)), 1.0), ModelError);
    m.shift = 1.0;
    const auto sp = sqrt_and_propagator(dense_spectral(assemble_P(m)), 1.0);
    const TorusBasis basis(2, 1, 4);
    double off = 0.0;
    for (int i = 0; i < basis.mode_count(); ++i) {
      const double k2 = std::pow(basis.mode(i)[0], 2) + std::pow(basis.mode(i)[1], 2);
      CHECK(std::abs(sp.sqrt_P(i, i) - std::sqrt(k2 + 1.0)) < 1e-12);
      CHECK(std::abs(sp.U(i, i) - std::exp(kI * std::sqrt(k2 + 1.0))) < 1e-12);
    }
    off = max_abs(sp.sqrt_P - CMat(sp.sqrt_P.diagonal().asDiagonal()));
    CHECK(off < 1e-12);
  }
  SUBCASE("matrix bundle identities") {
    const auto m = default_matrix_bundle(4);
    const SparseC P = assemble_P(m);
    const auto spectral = dense_spectral(P);
    const auto plus = sqrt_and_propagator(spectral, 0.7);
    const auto minus = sqrt_and_propagator(spectral, -0.7);
    const CMat id = CMat::Identity(P.rows(), P.cols());
    CHECK(max_abs(plus.U * minus.U - id) <= 1e-11);
    CHECK(max_abs(plus.U * plus.U.adjoint() - id) <= 1e-11);
    CHECK(max_abs(plus.U * CMat(P) * minus.U - CMat(P)) <= 1e-10 * std::max(1.0, max_abs(CMat(P))));
    CHECK(max_abs(plus.sqrt_P * plus.sqrt_P - CMat(P)) <= 1e-9 * max_abs(CMat(P)));
  }
}

TEST_CASE("Krylov route agrees with the dense route") {
  const auto m = default_matrix_bundle(6);
  const SparseC P = assemble_P(m);
  const auto dense = sqrt_and_propagator(dense_spectral(P), 1.3);
  Rng rng = make_rng(3, 1, 0);
  std::normal_distribution<double> normal;
  CVec v(P.rows());
  for (int i = 0; i < v.size(); ++i) v(i) = cplx(normal(rng), normal(rng));
  const CVec krylov = propagate(P, v, 1.3);
  CHECK((krylov - dense.U * v).norm() <= 1e-9 * v.norm());
  const CVec root = krylov_apply(P, v, [](double l) { return cplx(std::sqrt(l)); });
  CHECK((root - dense.sqrt_P * v).norm() <= 1e-9 * v.norm());

  RVec values;
  lapack::eigh(CMat(P), values, nullptr);
  CHECK(smallest_eigenvalue(P) == doctest::Approx(values(0)).epsilon(1e-9));
  CHECK(values(0) > 0.0);

  auto negative = free_bundle(2, 1, 3);
  negative.V.coeffs[{0, 0}] = scalar(-1.0);
  CHECK_THROWS_AS(propagate(assemble_P(negative), CVec::Ones(49), 1.0), ModelError);
}

TEST_CASE("quantize") {
  const TorusBasis basis(2, 2, 6);
  SUBCASE("identity symbol") {
    const SparseC B = quantize(basis, transport::constant_symbol(CMat::Identity(2, 2), "id"));
    CMat expect = CMat::Identity(basis.size(), basis.size());
    const int zero = basis.mode_index({0, 0});
    expect.block(2 * zero, 2 * zero, 2, 2).setZero();
    CHECK(max_abs(CMat(B) - expect) < 1e-14);
  }
  SUBCASE("multiplication symbol is a convolution independent of xi") {
    auto f = [](const Vec& x, const Vec&) { return (std::cos(x(0)) + 0.5 * std::sin(2.0 * x(1))) * CMat::Identity(2, 2); };
    const SparseC B = quantize(basis, matrix_symbol(f, 2, "f", 2));
    const int k = basis.mode_index({1, -2});
    CHECK(std::abs(B.coeff(2 * basis.mode_index({2, -2}), 2 * k) - 0.5) < 1e-14);
    CHECK(std::abs(B.coeff(2 * basis.mode_index({0, -2}), 2 * k) - 0.5) < 1e-14);
    CHECK(std::abs(B.coeff(2 * basis.mode_index({1, 0}), 2 * k) - cplx(0.0, -0.25)) < 1e-14);
    CHECK(std::abs(B.coeff(2 * basis.mode_index({1, -4}), 2 * k) - cplx(0.0, 0.25)) < 1e-14);
    CHECK(std::abs(B.coeff(2 * basis.mode_index({1, -2}) + 1, 2 * k)) < 1e-14);
    CHECK(B.nonZeros() < 2 * 5 * basis.mode_count());
  }
  SUBCASE("errors") {
    auto no_degree = transport::constant_symbol(CMat::Identity(2, 2), "id");
    no_degree.x_degree = -1;
    CHECK_THROWS_AS(quantize(basis, no_degree), ArgumentError);
    auto big = matrix_symbol([](const Vec& x, const Vec&) { return std::cos(7.0 * x(0)) * CMat::Identity(2, 2); },
                             2, "big", 7);
    CHECK_THROWS_AS(quantize(basis, big), TruncationError);
    CHECK_THROWS_AS(quantize(basis, transport::constant_symbol(CMat::Identity(3, 3), "r3")), ArgumentError);
  }
  SUBCASE("adjoint remainder on the outer shell decreases with K") {
    auto b = [](const Vec& x, const Vec& xi) {
      CMat m(2, 2);
      m << std::cos(x(0)) * xi(0), xi(1) * std::exp(kI * x(1)), kI * xi(0) * xi(1), 1.0 + 0.5 * std::sin(x(0) + x(1));
      return m;
    };
    auto b_adj = [b](const Vec& x, const Vec& xi) { return CMat(b(x, xi).adjoint()); };
    double previous = 1e9;
    for (int K : {8, 12, 16, 24}) {
      const TorusBasis bk(2, 2, K);
      const CMat R = CMat(quantize(bk, matrix_symbol(b, 2, "b", 1))).adjoint() -
                     CMat(quantize(bk, matrix_symbol(b_adj, 2, "b*", 1)));
      double worst = 0.0;
      for (int i = 0; i < bk.mode_count(); ++i) {
        for (int j = 0; j < bk.mode_count(); ++j) {
          const auto& ki = bk.mode(i);
          const auto& kj = bk.mode(j);
          if (std::hypot(ki[0], ki[1]) < K / 2.0 || std::hypot(kj[0], kj[1]) < K / 2.0) continue;
          worst = std::max(worst, max_abs(R.block(2 * i, 2 * j, 2, 2)));
        }
      }
      CHECK(worst < previous);
      previous = worst;
    }
    CHECK(previous < 0.1);
  }
}

TEST_CASE("heisenberg conjugation") {
  auto m = free_bundle(2, 1, 5);
  m.shift = 1.0;
  const SparseC P = assemble_P(m);
  const auto sp = sqrt_and_propagator(dense_spectral(P), 0.9);
  const CMat id = CMat::Identity(P.rows(), P.cols());
  CHECK(max_abs(heisenberg(id, sp.U) - id) < 1e-12);
  CHECK(max_abs(heisenberg(sp.sqrt_P, sp.U) - sp.sqrt_P) < 1e-11);

  const TorusBasis basis(2, 1, 5);
  const CMat B = CMat(quantize(basis, scalar_field([](const Vec& x, const Vec&) { return std::cos(x(0)); }, 1, "f")));
  const CMat Bt = heisenberg(B, sp.U);
  double worst = 0.0;
  for (int i = 0; i < basis.mode_count(); ++i) {
    for (int j = 0; j < basis.mode_count(); ++j) {
      const double ki = std::sqrt(std::pow(basis.mode(i)[0], 2) + std::pow(basis.mode(i)[1], 2) + 1.0);
      const double kj = std::sqrt(std::pow(basis.mode(j)[0], 2) + std::pow(basis.mode(j)[1], 2) + 1.0);
      worst = std::max(worst, std::abs(Bt(i, j) - B(i, j) * std::exp(kI * 0.9 * (ki - kj))));
    }
  }
  CHECK(worst < 1e-12);

  const auto mb = default_matrix_bundle(3);
  const auto sm = sqrt_and_propagator(dense_spectral(assemble_P(mb)), 1.1);
  CMat H = CMat(quantize(TorusBasis(2, 2, 3), transport::constant_symbol(pauli(1) + 0.3 * pauli(3), "h")));
  RVec before, after;
  lapack::eigh(H, before, nullptr);
  const CMat Ht = heisenberg(H, sm.U);
  lapack::eigh(CMat(0.5 * (Ht + Ht.adjoint())), after, nullptr);
  CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("gauge covariance of the spectrum") {
  auto m = free_bundle(2, 1, 12);
  m.A.assign(2, FourierMatrixField{2, 1, {}});
  m.A[0].add_hermitian_mode({0, 1}, scalar(0.2));
  m.A[1].add_hermitian_mode({1, 0}, kI * scalar(0.15));
  m.V.add_hermitian_mode({1, 1}, scalar(0.3));
  m.shift = 1.0;
  // χ = 0.3 cos x₁ + 0.2 sin x₂: ∂₁χ = −0.3 sin x₁, ∂₂χ = 0.2 cos x₂.
  auto g = m;
  g.A[0].add_hermitian_mode({1, 0}, kI * scalar(0.15));
  g.A[1].add_hermitian_mode({0, 1}, scalar(0.1));
  const RVec a = lowest(assemble_P(m), 12);
  const RVec b = lowest(assemble_P(g), 12);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("wave packets and symbol extraction") {
  const TorusBasis basis(2, 2, 32);
  const ExtractionPoint p{vec({0.7, 2.1}), vec({0.6, 0.8})};
  SUBCASE("identity") {
    const SparseC B = quantize(basis, transport::constant_symbol(CMat::Identity(2, 2), "id"));
    const CMat M = extract_symbol(basis, [&](const CVec& v) { return CVec(B * v); }, p, 16.0);
    CHECK(max_abs(M - CMat::Identity(2, 2)) <= 1e-6);
  }
  SUBCASE("single cosine against the Gaussian-sum oracle") {
    const TorusBasis b1(2, 1, 32);
    const SparseC B = quantize(b1, scalar_field([](const Vec& x, const Vec&) { return std::cos(x(0)); }, 1, "c"));
    const double w = 4.0, shell = 16.0;
    const CMat M = extract_symbol(b1, [&](const CVec& v) { return CVec(B * v); }, p, shell, {w});
    auto g = [&](double a, double b) {
      return std::exp(-(std::pow(a - shell * 0.6, 2) + std::pow(b - shell * 0.8, 2)) / (2.0 * w * w));
    };
    cplx num = 0.0;
    double den = 0.0;
    for (int k0 = -32; k0 <= 32; ++k0) {
      for (int k1 = -32; k1 <= 32; ++k1) {
        den += g(k0, k1) * g(k0, k1);
        if (k0 == 0 && k1 == 0) continue;
        if (k0 < 32) num += 0.5 * g(k0, k1) * g(k0 + 1, k1) * std::exp(kI * 0.7);
        if (k0 > -32) num += 0.5 * g(k0, k1) * g(k0 - 1, k1) * std::exp(-kI * 0.7);
      }
    }
    CHECK(std::abs(M(0, 0) - num / den) < 1e-13);
    CHECK(std::abs(M(0, 0) - std::cos(0.7)) < 1.0 / (w * w));
  }
  SUBCASE("matrix symbol converges with the shell at fixed w/sqrt(shell)") {
    auto b = [](const Vec& x, const Vec& xi) {
      CMat m(2, 2);
      m << std::cos(x(0)) + xi(0) * xi(0), 0.5 * std::exp(kI * x(1)) * xi(1), 0.5 * std::exp(-kI * x(1)) * xi(1),
          std::sin(x(0) + x(1)) - xi(0) * xi(1);
      return m;
    };
    const SparseC B = quantize(basis, matrix_symbol(b, 2, "b", 1));
    double previous = 1e9;
    for (double shell : {4.0, 8.0, 16.0}) {
      const CMat M = extract_symbol(basis, [&](const CVec& v) { return CVec(B * v); }, p, shell);
      const double err = (M - b(p.x, p.xi)).norm();
      CHECK(err < previous);
      previous = err;
    }
    CHECK(previous < 0.1);
  }
  SUBCASE("guards") {
    CHECK_THROWS_AS(wave_packet(basis, p, 28.0, 3.0), TruncationError);
    CHECK_THROWS_AS(wave_packet(basis, p, 16.0, 1.5), ArgumentError);
    const CVec u = wave_packet(basis, p, 16.0, 3.0);
    CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(default_width(16.0) == doctest::Approx(std::sqrt(8.0)));
    CHECK(default_width(2.0) == 2.0);
  }
}

TEST_CASE("Egorov comparison") {
  SUBCASE("t = 0 is exact up to extraction") {
    const auto m = default_matrix_bundle(16);
    const auto rows = egorov_compare(m, transport::constant_symbol(pauli(1) + pauli(3), "b"), 0.0, {8.0});
    CHECK(rows.at(0).max_rel_err <= 1e-6);
  }
  SUBCASE("zero connection follows the scalar flow") {
    auto m = free_bundle(2, 1, 16);
    m.shift = 1.0;
    const auto b = scalar_field([](const Vec& x, const Vec&) { return 1.0 + 0.5 * std::cos(x(0)); }, 1, "f");
    const auto rows = egorov_compare(m, b, 1.0, {4.0, 8.0});
    CHECK(rows.at(1).max_rel_err < rows.at(0).max_rel_err);
    CHECK(rows.at(1).max_rel_err < 0.1);
  }
  SUBCASE("matrix bundle error shrinks with the shell") {
    const auto m = default_matrix_bundle(16);
    CMat b(2, 2);
    b << 1.0, 0.5, 0.5, -1.0;
    const auto rows = egorov_compare(m, transport::constant_symbol(b, "b"), 1.0, {4.0, 8.0});
    CHECK(rows.at(1).max_rel_err < rows.at(0).max_rel_err);
    CHECK(rows.at(1).max_rel_err < 0.2);
    std::ostringstream csv;
    write_egorov_csv(csv, rows);
    CHECK(csv.str().rfind("K,shell,width,max_rel_err,mean_rel_err,points\n", 0) == 0);
  }
}

TEST_CASE("commutator symbol from the Heisenberg derivative") {
  const auto m = default_matrix_bundle(16);
  const TorusBasis basis(2, 2, 16);
  const SparseC P = assemble_P(m);
  CMat b(2, 2);
  b << 1.0, 0.5, 0.5, -1.0;
  const SparseC B = quantize(basis, transport::constant_symbol(b, "b"));
  const double h = 1e-3;
  const ExtractionPoint p{vec({1.2, 0.4}), vec({0.6, 0.8})};
  auto symbol_at = [&](double t) {
    return extract_symbol(
        basis, [&](const CVec& v) { return CVec(propagate(P, B * propagate(P, v, -t), t)); }, p, 8.0);
  };
  const CMat derivative = (symbol_at(h) - symbol_at(-h)) / (2.0 * h);
  const CMat sub = m.sub(p.x, p.xi);
  const CMat expect = kI * (sub * b - b * sub);
  CHECK((derivative - expect).norm() <= 0.15 * expect.norm());
}

TEST_CASE("Weyl means, counting and variance") {
  SUBCASE("identity symbol up to the k = 0 weight") {
    const auto m = default_scalar_bundle(8);
    const auto eig = low_spectrum(m);
    REQUIRE(eig.count() > 20);
    const auto rows = weyl_mean(m, eig, transport::constant_symbol(CMat::Identity(1, 1), "id"), {10, eig.count()});
    const TorusBasis basis(2, 1, 8);
    const int zero = basis.mode_index({0, 0});
    for (const auto& row : rows) {
      double weight = 0.0;
      for (int j = 0; j < row.N; ++j) weight += std::norm(eig.vectors(zero, j));
      CHECK(std::abs(row.mean - (1.0 - weight / row.N)) < 1e-12);
      CHECK(row.target == doctest::Approx(1.0));
    }
    const auto var = qe_variance(m, eig, transport::constant_symbol(CMat::Identity(1, 1), "id"), {10});
    double weight = 0.0;
    for (int j = 0; j < 10; ++j) weight += std::norm(eig.vectors(zero, j));
    CHECK(std::abs(var[0].mean - weight / 10.0) < 1e-12);
  }
  SUBCASE("dense subset spectrum matches the full decomposition") {
    const auto m = random_model(6, 2, 11);
    const auto eig = low_spectrum(m);
    const auto full = dense_spectral(assemble_P(m));
    REQUIRE(eig.count() > 0);
    CHECK((eig.values - full.values.head(eig.count())).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(eig.values(eig.count() - 1) < 9.0 + m.shift);
    CHECK(full.values(eig.count()) >= 9.0 + m.shift);
  }
  SUBCASE("free case: plane waves, equidistribution and counting") {
    const auto m = free_bundle(2, 1, 32);
    const auto eig = low_spectrum(m);
    CHECK(eig.plane_waves);
    CHECK(std::is_sorted(eig.values.data(), eig.values.data() + eig.count()));
    const auto f = scalar_field([](const Vec& x, const Vec&) { return 1.0 + 0.8 * std::cos(x(0) - x(1)); }, 1, "f");
    const auto rows = weyl_mean(m, eig, f, {eig.count()});
    CHECK(rows[0].target == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rows[0].deviation <= 0.05);
    CHECK(std::abs(weyl_exponent(m, eig, 64.0, 256.0) - 1.0) <= 0.05);
    const auto cos_x = scalar_field([](const Vec& x, const Vec&) { return std::cos(x(0)); }, 1, "cos");
    CHECK(qe_variance(m, eig, cos_x, {eig.count()})[0].mean < 1e-14);
    CHECK_THROWS_AS(weyl_mean(m, eig, f, {eig.count() + 1}), TruncationError);
  }
  SUBCASE("xi-dependent variance does not decay on the free torus") {
    const auto m = free_bundle(2, 1, 24);
    const auto eig = low_spectrum(m);
    const auto h = scalar_field([](const Vec&, const Vec& xi) { return xi(0) * xi(0) - xi(1) * xi(1); }, 0, "cos2");
    const auto rows = qe_variance(m, eig, h, {100, 200, eig.count()});
    CHECK(std::abs(rows[0].target) < 1e-12);
    for (const auto& row : rows) CHECK(row.mean >= 0.5 * rows[0].mean);
    CHECK(rows.back().mean == doctest::Approx(2.0 / kPi).epsilon(0.1));
    std::ostringstream csv;
    write_weyl_csv(csv, rows);
    CHECK(csv.str().rfind("N,mean,target,deviation\n", 0) == 0);
  }
  SUBCASE("omega_tr quadrature") {
    const auto sq = scalar_field([](const Vec&, const Vec& xi) { return xi(0) * xi(0); }, 0, "sq");
    CHECK(omega_tr(2, sq).real() == doctest::Approx(0.5).epsilon(1e-12));
    auto sq3 = sq;
    CHECK(omega_tr(3, sq3).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    const auto fx = scalar_field([](const Vec& x, const Vec&) { return 2.0 + std::sin(x(0)) * std::cos(2.0 * x(1)); },
                                 2, "fx");
    CHECK(omega_tr(2, fx).real() == doctest::Approx(2.0).epsilon(1e-13));
  }
}
