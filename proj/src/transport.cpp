/// @file src/transport.cpp

#include "qerg/transport.hpp"

#include "qerg/parallel.hpp"
#include "qerg/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace qerg::transport {

namespace {

CMat unitary_part(const CMat& m) {
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

RMat to_rmat(const Mat& m) { return RMat(m); }

Estimate mean_and_error(const std::vector<double>& v) {
  Estimate e;
  e.samples = static_cast<int>(v.size());
  if (v.empty()) return e;
  double s = 0.0;
  for (double x : v) s += x;
  e.value = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double s2 = 0.0;
    for (double x : v) s2 += (x - e.value) * (x - e.value);
    e.standard_error = std::sqrt(s2 / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return e;
}

}  // namespace

// ─── Connections ─────────────────────────────────────────────────────────────

CMat ConnectionSpec::sub(const ManifoldModel& model, const CotangentPoint& z) const {
  switch (kind) {
    case Kind::Trivial:
      return CMat::Zero(rank, rank);
    case Kind::TorusBundle:
      return bundle->sub(z.x, z.xi);
    case Kind::LeviCivitaSpinor:
    case Kind::LeviCivitaForms: {
      const auto& metric = model.chart(z.chart);
      const Mat g = metric.metric(z.x);
      const Vec v = g.ldlt().solve(z.xi);
      const double norm = std::sqrt(z.xi.dot(v));
      const RMat omega = to_rmat(geometry::coframe_connection(metric, z.x, v / norm));
      if (kind == Kind::LeviCivitaSpinor) return kI * clifford::spin_generator(*spinor, omega);
      return kI * exterior::lambda_derivation(*forms, omega).cast<cplx>();
    }
  }
  return CMat::Zero(rank, rank);
}

CMat ConnectionSpec::gauge(const ManifoldModel& model, const geometry::Jump& jump) const {
  if (kind == Kind::Trivial || kind == Kind::TorusBundle) return CMat::Identity(rank, rank);
  const RMat o = to_rmat(geometry::coframe_jump(model, jump));
  if (kind == Kind::LeviCivitaSpinor) return clifford::spin_lift(*spinor, o);
  return exterior::lambda_power(*forms, o).cast<cplx>();
}

ConnectionSpec trivial_connection(int rank) {
  if (rank < 1) throw ArgumentError("rank must be >= 1");
  ConnectionSpec c;
  c.kind = ConnectionSpec::Kind::Trivial;
  c.rank = rank;
  return c;
}

ConnectionSpec levi_civita_spinor(int n) {
  ConnectionSpec c;
  c.kind = ConnectionSpec::Kind::LeviCivitaSpinor;
  c.spinor = std::make_shared<const clifford::CliffordRep>(clifford::build_clifford(n));
  c.rank = c.spinor->rank;
  return c;
}

ConnectionSpec levi_civita_forms(int n, int p) {
  if (p <= 0 || p >= n) throw DegreeError("form transport needs 0 < p < n");
  ConnectionSpec c;
  c.kind = ConnectionSpec::Kind::LeviCivitaForms;
  c.forms = std::make_shared<const exterior::ExteriorFiber>(exterior::make_fiber(n, p));
  c.rank = c.forms->dim;
  return c;
}

ConnectionSpec torus_bundle_connection(const torus::TorusBundleModel& model) {
  model.validate();
  ConnectionSpec c;
  c.kind = ConnectionSpec::Kind::TorusBundle;
  c.bundle = std::make_shared<const torus::TorusBundleModel>(model);
  c.rank = model.r;
  return c;
}

// ─── Symbols ─────────────────────────────────────────────────────────────────

RVec coframe_unit(const ManifoldModel& model, const CotangentPoint& z) {
  const Vec c = geometry::coframe_components(model, z.chart, z.x, z.xi);
  return RVec(c / c.norm());
}

SymbolField scalar_symbol(std::function<double(int, const Vec&)> f, int rank, std::string label, int x_degree) {
  SymbolField s;
  s.rank = rank;
  s.label = std::move(label);
  s.x_degree = x_degree;
  s.evaluator = [f = std::move(f), rank](const CotangentPoint& z) -> CMat {
    return f(z.chart, z.x) * CMat::Identity(rank, rank);
  };
  return s;
}

SymbolField matrix_symbol(std::function<CMat(const Vec&, const Vec&)> f, int rank, std::string label,
                          int x_degree) {
  SymbolField s;
  s.rank = rank;
  s.label = std::move(label);
  s.x_degree = x_degree;
  s.evaluator = [f = std::move(f)](const CotangentPoint& z) -> CMat { return f(z.x, z.xi); };
  return s;
}

SymbolField constant_symbol(const CMat& m, std::string label) {
  SymbolField s;
  s.rank = static_cast<int>(m.rows());
  s.label = std::move(label);
  s.x_degree = 0;
  s.evaluator = [m](const CotangentPoint&) { return m; };
  return s;
}

// ─── Transport ───────────────────────────────────────────────────────────────

namespace {

geometry::FiberHooks make_hooks(const ManifoldModel& model, const ConnectionSpec& conn) {
  geometry::FiberHooks hooks;
  hooks.rate = [&model, &conn](int chart, const Vec& x, const Vec& xi, const CMat& v) -> CMat {
    return -kI * conn.sub(model, CotangentPoint{chart, x, xi}) * v;
  };
  hooks.gauge = [&model, &conn](const geometry::Jump& jump, CMat& v) { v = conn.gauge(model, jump) * v; };
  return hooks;
}

}  // namespace

TransportResult transport_matrix(const ManifoldModel& model, const ConnectionSpec& conn,
                                 const CotangentPoint& start, double t, double h) {
  geometry::FlowState s = geometry::make_flow_state(start);
  const bool carry = !conn.flat();
  if (carry) s.fiber = CMat::Identity(conn.rank, conn.rank);
  const geometry::FiberHooks hooks = make_hooks(model, conn);
  const auto plan = geometry::plan_steps(t, h);
  for (long k = 0; k < plan.steps; ++k) geometry::advance(model, s, plan.step, carry ? &hooks : nullptr);
  TransportResult out;
  out.endpoint = geometry::base_point(s);
  out.W = carry ? CMat(unitary_part(s.fiber).adjoint()) : CMat::Identity(conn.rank, conn.rank);
  return out;
}

SymbolField beta_evolve(const ManifoldModel& model, const ConnectionSpec& conn, const SymbolField& a, double t,
                        double h) {
  SymbolField out;
  out.rank = a.rank;
  out.label = "beta_t(" + a.label + ")";
  out.evaluator = [&model, conn, a, t, h](const CotangentPoint& z) -> CMat {
    const TransportResult r = transport_matrix(model, conn, z, t, h);
    return r.W * a(r.endpoint) * r.W.adjoint();
  };
  return out;
}

// ─── States ──────────────────────────────────────────────────────────────────

StateKind parse_state_kind(const std::string& name) {
  if (name == "tr" || name == "omega_tr") return StateKind::Trace;
  if (name == "t" || name == "omega_t") return StateKind::Transversal;
  if (name == "l" || name == "omega_l") return StateKind::Longitudinal;
  if (name == "plus" || name == "omega_plus") return StateKind::Plus;
  if (name == "minus" || name == "omega_minus") return StateKind::Minus;
  if (name == "omega") return StateKind::Omega;
  if (name == "one" || name == "omega_1") return StateKind::One;
  if (name == "two" || name == "omega_2") return StateKind::Two;
  throw ArgumentError("unknown state kind '" + name + "'");
}

std::string to_string(StateKind kind) {
  switch (kind) {
    case StateKind::Trace:
      return "omega_tr";
    case StateKind::Transversal:
      return "omega_t";
    case StateKind::Longitudinal:
      return "omega_l";
    case StateKind::Plus:
      return "omega_plus";
    case StateKind::Minus:
      return "omega_minus";
    case StateKind::Omega:
      return "omega";
    case StateKind::One:
      return "omega_1";
    case StateKind::Two:
      return "omega_2";
  }
  return "omega";
}

cplx fiber_state_value(const ManifoldModel& model, const ConnectionSpec& conn, StateKind kind,
                       const CotangentPoint& z, const CMat& a) {
  using K = ConnectionSpec::Kind;
  const auto unsupported = [&] {
    return CapabilityError("state " + to_string(kind) + " is not defined for this connection");
  };
  switch (conn.kind) {
    case K::Trivial:
    case K::TorusBundle:
      if (kind != StateKind::Trace && kind != StateKind::Omega) throw unsupported();
      return a.trace() / static_cast<double>(conn.rank);
    case K::LeviCivitaSpinor: {
      const RVec c = coframe_unit(model, z);
      switch (kind) {
        case StateKind::Trace:
        case StateKind::Omega:
          return clifford::fiber_state(*conn.spinor, c, a, clifford::SpinorState::Trace);
        case StateKind::Plus:
          return clifford::fiber_state(*conn.spinor, c, a, clifford::SpinorState::Plus);
        case StateKind::Minus:
          return clifford::fiber_state(*conn.spinor, c, a, clifford::SpinorState::Minus);
        case StateKind::One:
          return clifford::fiber_state(*conn.spinor, c, a, clifford::SpinorState::One);
        case StateKind::Two:
          return clifford::fiber_state(*conn.spinor, c, a, clifford::SpinorState::Two);
        default:
          throw unsupported();
      }
    }
    case K::LeviCivitaForms: {
      const RVec c = coframe_unit(model, z);
      switch (kind) {
        case StateKind::Trace:
        case StateKind::Omega:
          return exterior::fiber_state_form(*conn.forms, c, a, exterior::FormState::Trace);
        case StateKind::Transversal:
          return exterior::fiber_state_form(*conn.forms, c, a, exterior::FormState::Transversal);
        case StateKind::Longitudinal:
          return exterior::fiber_state_form(*conn.forms, c, a, exterior::FormState::Longitudinal);
        case StateKind::Plus:
          return exterior::fiber_state_form(*conn.forms, c, a, exterior::FormState::Plus);
        case StateKind::Minus:
          return exterior::fiber_state_form(*conn.forms, c, a, exterior::FormState::Minus);
        default:
          throw unsupported();
      }
    }
  }
  throw unsupported();
}

Estimate state_integrate(const ManifoldModel& model, const ConnectionSpec& conn, StateKind kind,
                         const SymbolField& a, int samples, std::uint64_t seed) {
  if (samples < 2) throw ArgumentError("state_integrate needs at least 2 samples");
  if (a.rank != conn.rank) throw ArgumentError("symbol rank does not match the connection");
  const auto points = geometry::sample_liouville(model, samples, seed);
  std::vector<double> values(points.size());
  parallel_for(static_cast<long>(points.size()), [&](long i) {
    const auto& z = points[static_cast<std::size_t>(i)];
    values[static_cast<std::size_t>(i)] = fiber_state_value(model, conn, kind, z, a(z)).real();
  });
  return mean_and_error(values);
}

// ─── Cesàro averages ─────────────────────────────────────────────────────────

DecayTable cesaro_and_decay(const ManifoldModel& model, const ConnectionSpec& conn, const SymbolField& a,
                            const DecayParams& params) {
  if (params.T_grid.empty()) throw ArgumentError("empty T grid");
  if (params.trajectories < 2) throw ArgumentError("need at least 2 trajectories");
  if (a.rank != conn.rank) throw ArgumentError("symbol rank does not match the connection");
  double T_max = 0.0;
  for (double T : params.T_grid) {
    if (!(T > 0.0)) throw ArgumentError("T grid values must be > 0");
    T_max = std::max(T_max, T);
  }
  const auto plan = geometry::plan_steps(T_max, params.h);
  std::vector<long> marks;
  for (double T : params.T_grid) marks.push_back(std::max(1L, std::lround(T / plan.step)));

  const auto points = geometry::sample_liouville(model, params.trajectories, derive_seed(params.seed, 0x44));
  const std::size_t count = points.size();
  std::vector<cplx> centre(count);
  for (std::size_t i = 0; i < count; ++i) centre[i] = fiber_state_value(model, conn, params.kind, points[i], a(points[i]));

  DecayTable table;
  {
    std::vector<double> re(count);
    for (std::size_t i = 0; i < count; ++i) re[i] = centre[i].real();
    table.centre = mean_and_error(re);
    if (std::abs(table.centre.value) > 3.0 * table.centre.standard_error && std::abs(table.centre.value) > 1e-14) {
      table.subtracted = table.centre.value;
    }
  }

  const int r = conn.rank;
  const CMat I = CMat::Identity(r, r);
  std::vector<std::vector<double>> values(marks.size(), std::vector<double>(count));
  const bool carry = !conn.flat();
  const geometry::FiberHooks hooks = make_hooks(model, conn);
  parallel_for(static_cast<long>(count), [&](long idx) {
    const auto& z0 = points[static_cast<std::size_t>(idx)];
    geometry::FlowState s = geometry::make_flow_state(z0);
    if (carry) s.fiber = I;
    auto integrand = [&]() -> CMat {
      const CMat at = a(geometry::base_point(s)) - table.subtracted * I;
      if (!carry) return at;
      const CMat Vinv = s.fiber.inverse();
      return Vinv * at * s.fiber;
    };
    CMat prev = integrand();
    CMat integral = CMat::Zero(r, r);
    long done = 0;
    std::vector<std::size_t> order(marks.size());
    for (std::size_t m = 0; m < order.size(); ++m) order[m] = m;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return marks[x] < marks[y]; });
    for (std::size_t o : order) {
      while (done < marks[o]) {
        geometry::advance(model, s, plan.step, carry ? &hooks : nullptr);
        const CMat cur = integrand();
        integral += 0.5 * plan.step * (prev + cur);
        prev = cur;
        ++done;
      }
      const CMat aT = integral / (static_cast<double>(done) * plan.step);
      values[o][static_cast<std::size_t>(idx)] =
          fiber_state_value(model, conn, params.kind, z0, aT.adjoint() * aT).real();
    }
  });
  for (std::size_t m = 0; m < marks.size(); ++m) {
    const Estimate e = mean_and_error(values[m]);
    table.rows.push_back({params.T_grid[m], e.value, e.standard_error});
  }
  return table;
}

void write_decay_csv(std::ostream& out, const DecayTable& table) {
  out << "T,estimate,stderr\n";
  out.precision(12);
  for (const auto& row : table.rows) out << row.T << ',' << row.estimate << ',' << row.standard_error << '\n';
}

}  // namespace qerg::transport
