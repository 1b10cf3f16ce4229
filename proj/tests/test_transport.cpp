#include <doctest.h>

#include "qerg/rng.hpp"
#include "qerg/transport.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qerg;
using namespace qerg::transport;

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

/// Matrix symbol on T² depending on x and on the direction of ξ.
SymbolField torus_matrix_symbol() {
  SymbolField s;
  s.rank = 2;
  s.label = "b";
  s.x_degree = 1;
  s.evaluator = [](const CotangentPoint& z) -> CMat {
    const double n = z.xi.norm();
    const double c = z.xi(0) / n;
    const double d = z.xi(1) / n;
    return std::cos(z.x(0)) * pauli(3) + (0.5 + std::sin(z.x(1))) * pauli(1) + c * d * pauli(2);
  };
  return s;
}

}  // namespace

TEST_CASE("bundle model basics") {
  const auto m = torus::default_matrix_bundle(8);
  CHECK(m.max_mode() == 1);
  for (double x1 : {0.1, 2.0, 4.5})
    for (double x2 : {0.3, 3.3}) {
      const Vec x = vec({x1, x2});
      for (int j = 0; j < 2; ++j) {
        const CMat a = m.connection(x, j);
        CHECK((a - a.adjoint()).norm() < 1e-13);
        const double e = 1e-6;
        const CMat fd = (m.A[static_cast<std::size_t>(j)].evaluate(x + e * Vec::Unit(2, 0)) -
                         m.A[static_cast<std::size_t>(j)].evaluate(x - e * Vec::Unit(2, 0))) /
                        (2 * e);
        CHECK((fd - m.A[static_cast<std::size_t>(j)].derivative(x, 0)).norm() < 1e-8);
      }
      const CMat s = m.sub(x, vec({3.0, 4.0}));
      CHECK((s - m.sub(x, vec({0.6, 0.8}))).norm() < 1e-14);
      CHECK((s - s.adjoint()).norm() < 1e-13);
    }
  torus::TorusBundleModel bad = m;
  bad.A[0].coeffs[{1, 0}] += CMat::Identity(2, 2);
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("transport_matrix: closed forms") {
  const auto flat = geometry::flat_torus({2 * kPi, 2 * kPi});
  const CotangentPoint z{0, vec({0.3, 0.4}), vec({0.6, 0.8})};
  const auto triv = transport_matrix(flat, trivial_connection(3), z, 2.5, 0.01);
  CHECK((triv.W - CMat::Identity(3, 3)).norm() == 0.0);

  auto bm = torus::free_bundle(2, 2, 8);
  bm.A.assign(2, torus::FourierMatrixField{2, 2, {}});
  bm.A[0].add_hermitian_mode({0, 0}, 0.35 * pauli(1));
  bm.A[1].add_hermitian_mode({0, 0}, 0.2 * pauli(3) + 0.1 * pauli(2));
  const auto conn = torus_bundle_connection(bm);
  const auto base = torus::base_model(bm);
  for (double t : {0.5, 1.0, 3.7}) {
    const auto r = transport_matrix(base, conn, z, t, 0.01);
    const CMat A = 0.6 * bm.connection(z.x, 0) + 0.8 * bm.connection(z.x, 1);
    const CMat expected = (kI * t * A).exp();
    CHECK((r.W - expected).norm() < 1e-10);
    CHECK((r.W * r.W.adjoint() - CMat::Identity(2, 2)).norm() < 1e-12);
  }
}

TEST_CASE("transport_matrix: spinor transport on S^3 intertwines covector holonomy") {
  const auto sphere = geometry::round_sphere(3);
  const auto conn = levi_civita_spinor(3);
  const CotangentPoint z{0, vec({0.3, -0.2, 0.1}), vec({0.2, 0.5, -0.4})};
  const auto start = geometry::normalize_unit(sphere, z);
  for (double t : {1.3, 2 * kPi}) {
    const auto traj = geometry::geodesic_flow(sphere, start, t, 1e-3);
    const auto r = transport_matrix(sphere, conn, start, t, 1e-3);
    CHECK(r.endpoint.chart == traj.back().chart);
    CHECK((r.endpoint.x - traj.back().x).norm() < 1e-12);
    for (int i = 0; i < 3; ++i) {
      Vec v = Vec::Zero(3);
      v(i) = 1.0;
      const Vec moved = geometry::parallel_transport(sphere, traj, v);
      const RVec c0 = geometry::coframe_components(sphere, start.chart, start.x, v);
      const RVec c1 = geometry::coframe_components(sphere, r.endpoint.chart, r.endpoint.x, moved);
      const CMat lhs = r.W * clifford::clifford_multiply(*conn.spinor, c1) * r.W.adjoint();
      CHECK((lhs - clifford::clifford_multiply(*conn.spinor, c0)).norm() < 1e-8);
    }
  }
}

TEST_CASE("beta_evolve examples") {
  const auto flat = geometry::flat_torus({2 * kPi, 2 * kPi});
  const auto id = constant_symbol(CMat::Identity(2, 2), "Id");
  const auto bm = torus::default_matrix_bundle(8);
  const auto base = torus::base_model(bm);
  const auto conn = torus_bundle_connection(bm);
  const CotangentPoint z{0, vec({1.0, 2.0}), vec({0.8, -0.6})};
  CHECK((beta_evolve(base, conn, id, 1.5, 0.01)(z) - CMat::Identity(2, 2)).norm() < 1e-12);

  const auto f = scalar_symbol([](int, const Vec& x) { return std::cos(x(0)) + 0.5 * std::sin(2 * x(1)); }, 1, "f");
  const auto bf = beta_evolve(flat, trivial_connection(1), f, 2.3, 0.01);
  const double x0 = 1.0 + 2.3 * 0.8;
  const double x1 = 2.0 - 2.3 * 0.6;
  CHECK(std::abs(bf(z)(0, 0).real() - (std::cos(x0) + 0.5 * std::sin(2 * x1))) < 1e-10);
}

TEST_CASE("beta_evolve generator equals H a + i[sub, a]") {
  const auto bm = torus::default_matrix_bundle(8);
  const auto base = torus::base_model(bm);
  const auto conn = torus_bundle_connection(bm);
  const auto b = torus_matrix_symbol();
  const auto pts = geometry::sample_liouville(base, 100, 5);
  const double e = 1e-3;
  double worst = 0.0;
  for (const auto& z : pts) {
    const CMat fd = (beta_evolve(base, conn, b, e, e / 4)(z) - beta_evolve(base, conn, b, -e, e / 4)(z)) / (2 * e);
    const auto fwd = transport_matrix(base, trivial_connection(2), z, e, e / 4).endpoint;
    const auto bwd = transport_matrix(base, trivial_connection(2), z, -e, e / 4).endpoint;
    const CMat Ha = (b(fwd) - b(bwd)) / (2 * e);
    const CMat s = conn.sub(base, z);
    const CMat a = b(z);
    const CMat gen = Ha + kI * (s * a - a * s);
    worst = std::max(worst, (fd - gen).norm() / gen.norm());
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("cocycle and group law") {
  const auto bm = torus::default_matrix_bundle(8);
  const auto base = torus::base_model(bm);
  const auto conn = torus_bundle_connection(bm);
  const auto b = torus_matrix_symbol();
  const CotangentPoint z{0, vec({0.7, 5.9}), vec({0.28, 0.96})};
  const double t = 1.1, s = 0.7, h = 1e-3;
  const auto Ws = transport_matrix(base, conn, z, s, h);
  const auto Wt = transport_matrix(base, conn, Ws.endpoint, t, h);
  const auto Wts = transport_matrix(base, conn, z, t + s, h);
  CHECK((Wts.W - Ws.W * Wt.W).norm() < 1e-9);
  const auto bs = beta_evolve(base, conn, b, s, h);
  const auto bts = beta_evolve(base, conn, bs, t, h);
  CHECK((bts(z) - beta_evolve(base, conn, b, t + s, h)(z)).norm() < 1e-9);

  const auto sphere = geometry::round_sphere(3);
  const auto sconn = levi_civita_forms(3, 1);
  const auto zs = geometry::normalize_unit(sphere, CotangentPoint{0, vec({1.5, 0.2, -0.3}), vec({0.1, 1.0, 0.4})});
  const auto A = transport_matrix(sphere, sconn, zs, 1.4, h);
  const auto B = transport_matrix(sphere, sconn, A.endpoint, 1.9, h);
  const auto AB = transport_matrix(sphere, sconn, zs, 3.3, h);
  CHECK((AB.W - A.W * B.W).norm() < 1e-9);
}

TEST_CASE("transport preserves fiber states at the transported fiber") {
  const auto sphere = geometry::round_sphere(3);
  const auto pts = geometry::sample_liouville(sphere, 6, 9);
  Rng rng = make_rng(9, 2);
  std::normal_distribution<double> g;
  for (const auto& conn : {levi_civita_spinor(3), levi_civita_forms(3, 1)}) {
    for (const auto& z : pts) {
      const auto r = transport_matrix(sphere, conn, z, 2.0, 2e-3);
      CMat a(conn.rank, conn.rank);
      for (int i = 0; i < conn.rank; ++i)
        for (int j = 0; j < conn.rank; ++j) a(i, j) = cplx(g(rng), g(rng));
      const CMat back = r.W * a * r.W.adjoint();
      const std::vector<StateKind> kinds =
          conn.kind == ConnectionSpec::Kind::LeviCivitaSpinor
              ? std::vector<StateKind>{StateKind::Trace, StateKind::Plus, StateKind::Minus}
              : std::vector<StateKind>{StateKind::Trace, StateKind::Transversal, StateKind::Longitudinal,
                                       StateKind::Plus, StateKind::Minus};
      for (StateKind k : kinds) {
        const cplx here = fiber_state_value(sphere, conn, k, z, back);
        const cplx there = fiber_state_value(sphere, conn, k, r.endpoint, a);
        CHECK(std::abs(here - there) < 1e-8);
      }
    }
  }
  CHECK_THROWS_AS(fiber_state_value(sphere, levi_civita_spinor(3), StateKind::One, pts[0], CMat::Identity(2, 2)),
                  CapabilityError);
  CHECK_THROWS_AS(fiber_state_value(sphere, trivial_connection(1), StateKind::Plus, pts[0], CMat::Identity(1, 1)),
                  CapabilityError);
}

TEST_CASE("state_integrate") {
  const auto g2 = geometry::genus2_hyperbolic();
  const auto spin = levi_civita_spinor(2);
  const auto id = constant_symbol(CMat::Identity(2, 2), "Id");
  const auto one = state_integrate(g2, spin, StateKind::Plus, id, 50, 1);
  CHECK(std::abs(one.value - 1.0) < 1e-12);
  CHECK(one.standard_error < 1e-12);

  const auto forms = levi_civita_forms(3, 1);
  const auto sphere = geometry::round_sphere(3);
  SymbolField a;
  a.rank = 3;
  a.label = "x-dependent";
  a.evaluator = [](const CotangentPoint& z) -> CMat {
    CMat m = CMat::Zero(3, 3);
    m(0, 0) = z.x(0);
    m(1, 2) = cplx(z.x(1), z.xi(2));
    m(2, 1) = 1.0;
    m(2, 2) = z.xi(0) * z.xi(0);
    return m;
  };
  const auto tr = state_integrate(sphere, forms, StateKind::Trace, a, 200, 4);
  const auto tt = state_integrate(sphere, forms, StateKind::Transversal, a, 200, 4);
  const auto tl = state_integrate(sphere, forms, StateKind::Longitudinal, a, 200, 4);
  CHECK(std::abs(tr.value - (2.0 / 3.0) * tt.value - (1.0 / 3.0) * tl.value) < 1e-12);

  SUBCASE("invariance under beta_t") {
    SymbolField b;
    b.rank = 2;
    b.label = "spinor test symbol";
    b.evaluator = [&g2](const CotangentPoint& z) -> CMat {
      const RVec c = coframe_unit(g2, z);
      CMat m(2, 2);
      m << 1.0 + z.x(0), c(0) + kI * z.x(1), c(0) - kI * z.x(1), c(1) * c(1);
      return m;
    };
    for (double t : {1.0, 5.0}) {
      const auto s0 = state_integrate(g2, spin, StateKind::Plus, b, 400, 10);
      const auto st = state_integrate(g2, spin, StateKind::Plus, beta_evolve(g2, spin, b, t, 0.01), 400, 11);
      CHECK(std::abs(s0.value - st.value) <= 3.0 * std::hypot(s0.standard_error, st.standard_error));
    }
    const auto bm = torus::default_matrix_bundle(8);
    const auto base = torus::base_model(bm);
    const auto conn = torus_bundle_connection(bm);
    const auto sym = torus_matrix_symbol();
    for (double t : {1.0, 5.0}) {
      const auto s0 = state_integrate(base, conn, StateKind::Trace, sym, 400, 12);
      const auto st = state_integrate(base, conn, StateKind::Trace, beta_evolve(base, conn, sym, t, 0.01), 400, 13);
      CHECK(std::abs(s0.value - st.value) <= 3.0 * std::hypot(s0.standard_error, st.standard_error));
    }
  }
}

TEST_CASE("cesaro_and_decay") {
  SUBCASE("invariant symbol gives a constant table") {
    const auto flat = geometry::flat_torus({2 * kPi, 2 * kPi});
    const auto spin = levi_civita_spinor(2);
    SymbolField a;
    a.rank = 2;
    a.label = "P+";
    a.evaluator = [&flat, &spin](const CotangentPoint& z) -> CMat {
      return clifford::projections_pm(*spin.spinor, coframe_unit(flat, z)).first;
    };
    DecayParams p;
    p.T_grid = {1.0, 5.0, 20.0};
    p.trajectories = 20;
    p.h = 0.05;
    p.seed = 3;
    const auto table = cesaro_and_decay(flat, spin, a, p);
    CHECK(std::abs(table.subtracted - 0.5) < 1e-12);
    for (const auto& row : table.rows) CHECK(std::abs(row.estimate - table.rows.front().estimate) < 1e-10);
    CHECK(std::abs(table.rows.front().estimate - 0.25) < 1e-10);
  }
  SUBCASE("genus-2 scalar symbol decays") {
    const auto g2 = geometry::genus2_hyperbolic();
    const auto f = scalar_symbol([](int, const Vec& x) { return x(0); }, 1, "x1");
    DecayParams p;
    p.T_grid = {1.0, 50.0};
    p.trajectories = 40;
    p.h = 0.02;
    p.seed = 4;
    const auto table = cesaro_and_decay(g2, trivial_connection(1), f, p);
    CHECK(table.rows[1].estimate < 0.5 * table.rows[0].estimate);
    std::ostringstream out;
    write_decay_csv(out, table);
    CHECK(out.str().rfind("T,estimate,stderr\n", 0) == 0);
  }
  const auto flat = geometry::flat_torus({1.0});
  CHECK_THROWS_AS(cesaro_and_decay(flat, trivial_connection(1), constant_symbol(CMat::Identity(1, 1), "1"), {}),
                  ArgumentError);
}
