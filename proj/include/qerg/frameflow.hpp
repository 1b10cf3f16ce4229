/// @file include/qerg/frameflow.hpp
/// @brief k-frame flow on orthonormal covector frames, Birkhoff averages and
///        Kähler first integrals.

#pragma once

#include "qerg/geometry.hpp"
#include "qerg/rng.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace qerg::frameflow {

using geometry::CotangentPoint;
using geometry::ManifoldModel;

/// Unit covector ξ₁ = base.xi followed by k−1 further covectors, orthonormal
/// for the cometric g^{-1}.
struct KFrameState {
  CotangentPoint base;
  std::vector<Vec> rest;

  int k() const { return 1 + static_cast<int>(rest.size()); }
  const Vec& vector(int a) const { return a == 0 ? base.xi : rest[static_cast<std::size_t>(a - 1)]; }
};

struct FrameObservable {
  std::function<cplx(const KFrameState&)> evaluator;
  std::string label;
};

/// max_ab |g^{-1}(ξ_a, ξ_b) − δ_ab|
double orthonormality_residual(const ManifoldModel& model, const KFrameState& state);

/// Modified Gram–Schmidt in the cometric; ξ₁ is normalised, never rotated.
/// Throws ArgumentError for a rank-deficient frame.
KFrameState orthonormalize(const ManifoldModel& model, KFrameState state);

/// Completes a unit covector to an orthonormal k-frame with the invariant
/// (Haar) distribution on the fiber.
KFrameState haar_completion(const ManifoldModel& model, const CotangentPoint& base, int k, Rng& rng);

/// Liouville-distributed base points with Haar-completed k-frames.
std::vector<KFrameState> sample_frames(const ManifoldModel& model, int k, int count,
                                       std::uint64_t seed);

struct FrameSample {
  double t = 0.0;
  KFrameState state;
};

/// Moves ξ₁ along the geodesic flow and parallel-transports the rest,
/// re-orthonormalising after every step. The base trajectory coincides with
/// geometry::geodesic_flow bit for bit. When `samples` is given it receives
/// the state at t = 0 and after every step.
KFrameState frame_flow(const ManifoldModel& model, const KFrameState& state, double t, double h,
                       std::vector<FrameSample>* samples = nullptr);

/// (1/T)∫₀ᵀ obs(Φˢ state) ds with the trapezoidal rule on the step grid.
cplx birkhoff_average(const ManifoldModel& model, const FrameObservable& obs,
                      const KFrameState& state, double T, double h);

/// Matrix M_ab = g(v_a, J v_b) of the index-raised frame vectors.
/// Throws CapabilityError when the model has no complex structure.
Mat kahler_integrals(const ManifoldModel& model, const KFrameState& state);

// ─── Observables ─────────────────────────────────────────────────────────────

FrameObservable constant_observable(double value);

/// f(chart, x) of the base point only.
FrameObservable base_observable(std::function<double(int, const Vec&)> f, std::string label);

/// Component `component` of frame vector `a` in the orthonormal coframe
/// g^{1/2}dx of the current chart. Depends on the fiber for a ≥ 1.
FrameObservable frame_component_observable(const ManifoldModel& model, int a, int component,
                                           std::string label);

// ─── Ergodicity report ───────────────────────────────────────────────────────

struct ErgodicityRow {
  std::string observable;
  int trajectory = 0;
  double time_average = 0.0;
  double space_average = 0.0;
  double deviation = 0.0;  // |time − space| / sup-norm
};

struct ErgodicitySummary {
  std::string observable;
  double space_average = 0.0;
  double sup_norm = 0.0;
  double mean_deviation = 0.0;
  double stderr_deviation = 0.0;
  /// |mean of time averages − space average| / sup-norm.
  double ensemble_deviation = 0.0;
};

struct ErgodicityReport {
  std::vector<ErgodicityRow> rows;
  std::vector<ErgodicitySummary> summary;
};

struct ErgodicityParams {
  int k = 2;
  int ensemble = 10;
  double T = 100.0;
  double h = 1e-2;
  int space_samples = 20000;
  std::uint64_t seed = 0;
};

/// Real parts of the observables are averaged. Space averages and sup-norms
/// come from Liouville samples of the k-frame bundle.
ErgodicityReport ergodicity_report(const ManifoldModel& model, const ErgodicityParams& params,
                                   const std::vector<FrameObservable>& observables);

void write_report_csv(std::ostream& out, const ErgodicityReport& report);

}  // namespace qerg::frameflow
