/// @file include/qerg/transport.hpp
/// @brief Matrix-valued symbols on the unit cotangent bundle, the transport
///        flow β_t generated by H + i[sub, ·], Liouville state integrals and
///        Cesàro decay tables.
///
/// Convention: along z_s = h_s(z) the fiber propagator solves
/// dV/ds = −i sub(z_s) V, V(0) = 1, and W_t(z) = V_t(z)⁻¹. Then
/// (β_t a)(z) = W_t(z) a(h_t z) W_t(z)⁻¹ has generator H a + i[sub, a] and
/// satisfies β_{t+s} = β_t β_s.

#pragma once

#include "qerg/bundle.hpp"
#include "qerg/clifford.hpp"
#include "qerg/exterior.hpp"
#include "qerg/geometry.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace qerg::transport {

using geometry::CotangentPoint;
using geometry::ManifoldModel;

struct ConnectionSpec {
  enum class Kind { Trivial, LeviCivitaSpinor, LeviCivitaForms, TorusBundle };
  Kind kind = Kind::Trivial;
  int rank = 1;
  std::shared_ptr<const clifford::CliffordRep> spinor;
  std::shared_ptr<const exterior::ExteriorFiber> forms;
  std::shared_ptr<const torus::TorusBundleModel> bundle;

  /// Hermitian sub(x, ξ), homogeneous of degree 0 in ξ. Fiber matrices of
  /// the Levi-Civita kinds are written in the orthonormal coframe g^{1/2}dx
  /// of the chart.
  CMat sub(const ManifoldModel& model, const CotangentPoint& z) const;
  /// Fiber change across an identification (identity for the flat kinds).
  CMat gauge(const ManifoldModel& model, const geometry::Jump& jump) const;
  bool flat() const { return kind == Kind::Trivial; }
};

ConnectionSpec trivial_connection(int rank);
/// Spinor fiber of rank 2^{⌊n/2⌋}, sub = iρ(Ω) with Ω the coframe connection.
ConnectionSpec levi_civita_spinor(int n);
/// Λ^p fiber, sub = i dΛ(Ω).
ConnectionSpec levi_civita_forms(int n, int p);
ConnectionSpec torus_bundle_connection(const torus::TorusBundleModel& model);

struct SymbolField {
  std::function<CMat(const CotangentPoint&)> evaluator;
  std::string label;
  int rank = 1;
  /// Largest |m|_∞ of the x-Fourier modes when the field is a trigonometric
  /// polynomial in x on the torus (−1 when unknown).
  int x_degree = -1;

  CMat operator()(const CotangentPoint& z) const { return evaluator(z); }
};

/// Unit covector of z in the orthonormal coframe of its chart.
RVec coframe_unit(const ManifoldModel& model, const CotangentPoint& z);

/// f(x)·Id_rank.
SymbolField scalar_symbol(std::function<double(int chart, const Vec& x)> f, int rank, std::string label,
                          int x_degree = -1);
/// b(x, ξ) on chart coordinates and covector components (unit covectors on
/// the flat torus).
SymbolField matrix_symbol(std::function<CMat(const Vec& x, const Vec& xi)> f, int rank, std::string label,
                          int x_degree = -1);
/// Constant matrix (independent of x and ξ).
SymbolField constant_symbol(const CMat& m, std::string label);

struct TransportResult {
  CotangentPoint endpoint;
  CMat W;
};

/// Integrates the fiber propagator along the geodesic flow for time t with
/// nominal step h and returns W_t(start) (projected onto the unitary group).
TransportResult transport_matrix(const ManifoldModel& model, const ConnectionSpec& conn,
                                 const CotangentPoint& start, double t, double h);

/// (β_t a)(z) evaluated lazily; every call integrates the transport.
SymbolField beta_evolve(const ManifoldModel& model, const ConnectionSpec& conn, const SymbolField& a,
                        double t, double h);

enum class StateKind { Trace, Transversal, Longitudinal, Plus, Minus, Omega, One, Two };

StateKind parse_state_kind(const std::string& name);
std::string to_string(StateKind kind);

/// Fiber value of the state at z. CapabilityError when the kind does not
/// exist for the connection.
cplx fiber_state_value(const ManifoldModel& model, const ConnectionSpec& conn, StateKind kind,
                       const CotangentPoint& z, const CMat& a);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
  int samples = 0;
};

/// Monte-Carlo Liouville average of the real part of the fiber state.
Estimate state_integrate(const ManifoldModel& model, const ConnectionSpec& conn, StateKind kind,
                         const SymbolField& a, int samples, std::uint64_t seed);

struct DecayParams {
  std::vector<double> T_grid;
  int trajectories = 100;
  double h = 1e-2;
  std::uint64_t seed = 0;
  StateKind kind = StateKind::Trace;
};

struct DecayRow {
  double T = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
};

struct DecayTable {
  /// State of a estimated on the same starting points, and the constant
  /// subtracted from a when it exceeded three standard errors.
  Estimate centre;
  double subtracted = 0.0;
  std::vector<DecayRow> rows;
};

/// ω(|a_T|²) with a_T = (1/T)∫₀ᵀ β_s a ds (trapezoidal rule on the flow
/// grid), averaged over Liouville starting points.
DecayTable cesaro_and_decay(const ManifoldModel& model, const ConnectionSpec& conn, const SymbolField& a,
                            const DecayParams& params);

void write_decay_csv(std::ostream& out, const DecayTable& table);

}  // namespace qerg::transport
