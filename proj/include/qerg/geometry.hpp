/// @file include/qerg/geometry.hpp
/// @brief Riemannian test manifolds, geodesic flow on the unit cotangent
///        bundle, covector parallel transport and Liouville sampling.
///
/// All flow states carry covectors; vectors only appear by raising an index
/// with g^{-1}. Hamilton's equations for H = ½ g^{ij} ξ_i ξ_j are integrated
/// with fixed-step RK4 and |ξ|_g is renormalised after every step.

#pragma once

#include "qerg/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qerg::geometry {

/// dg[k](i, j) = ∂g_ij / ∂x^k
using MetricDerivative = std::array<Mat, kMaxDim>;
/// gamma[i](j, k) = Γ^i_jk
using Christoffel = std::array<Mat, kMaxDim>;

struct ChartDomain {
  enum class Shape { Whole, Box, Disk };
  Shape shape = Shape::Whole;
  Vec lower;
  Vec upper;
  double radius = 0.0;  // open disk centred at the origin

  static ChartDomain whole();
  static ChartDomain box(Vec lower, Vec upper);
  static ChartDomain disk(double radius);

  bool contains(const Vec& x) const;
};

class ChartMetric {
 public:
  using MetricFn = std::function<Mat(const Vec&)>;
  using DerivativeFn = std::function<MetricDerivative(const Vec&)>;

  /// Central-difference step used when no analytic derivative is supplied.
  static constexpr double kFiniteDifferenceStep = 1e-5;

  ChartMetric(int dim, ChartDomain domain, MetricFn metric, DerivativeFn derivative = nullptr);

  int dim() const { return dim_; }
  const ChartDomain& domain() const { return domain_; }
  bool has_analytic_derivative() const { return static_cast<bool>(derivative_); }

  Mat metric(const Vec& x) const { return metric_(x); }
  MetricDerivative derivative(const Vec& x) const;
  MetricDerivative finite_difference_derivative(const Vec& x,
                                                double step = kFiniteDifferenceStep) const;

 private:
  int dim_;
  ChartDomain domain_;
  MetricFn metric_;
  DerivativeFn derivative_;
};

/// Levi-Civita symbols from g and ∂g. Throws DomainError outside the chart.
Christoffel christoffel(const ChartMetric& metric, const Vec& x);

struct CotangentPoint {
  int chart = 0;
  Vec x;
  Vec xi;
};

/// Result of applying an identification: new chart, new coordinates and the
/// matrix M with ξ_new = M ξ_old for every covector at the point.
struct ChartJump {
  int chart = 0;
  Vec x;
  Mat covector_map;
};

struct Identification {
  std::string name;
  int chart = 0;
  std::function<bool(const Vec&)> applies;
  std::function<ChartJump(const Vec&)> map;
};

/// Piece of a fundamental domain used for rejection sampling of the
/// Liouville measure. `weight` is the fraction of total volume in the piece.
struct SamplingRegion {
  int chart = 0;
  Vec lower;
  Vec upper;
  std::function<bool(const Vec&)> inside;
  double weight = 1.0;
  double density_bound = 1.0;  // upper bound of sqrt(det g) on the piece
};

enum class ModelTag { FlatTorus, RoundSphere, Genus2Hyperbolic, KaehlerTorus, Custom };

std::string to_string(ModelTag tag);

struct ManifoldModel {
  ModelTag tag = ModelTag::Custom;
  std::string name;
  int dim = 0;
  std::vector<ChartMetric> charts;
  std::vector<Identification> identifications;
  std::vector<SamplingRegion> regions;
  /// Complex structure acting on tangent vectors; present only for the
  /// Kähler torus.
  std::function<Mat(const Vec&)> complex_structure;
  /// Membership test for the fundamental domain (after identifications).
  std::function<bool(int chart, const Vec& x)> in_fundamental_domain;

  const ChartMetric& chart(int id) const;
  bool has_complex_structure() const { return static_cast<bool>(complex_structure); }
};

// ─── Models ──────────────────────────────────────────────────────────────────

ManifoldModel flat_torus(std::vector<double> periods);

/// Round unit sphere S^n (n = 2..4) with two stereographic charts. The second
/// chart composes the inversion with a reflection so the transition map is
/// orientation preserving. Charts switch when |x| > 2.
ManifoldModel round_sphere(int n);

/// Regular hyperbolic octagon with interior angles π/4 in the Poincaré disk,
/// opposite sides paired by hyperbolic translations (a genus-2 surface).
ManifoldModel genus2_hyperbolic();

/// One Fourier term c·cos(k·X + phase) of a Kähler potential on the real
/// 4-torus with coordinates X = (x1, x2, y1, y2), z_a = x_a + i y_a.
struct KaehlerMode {
  std::array<int, 4> k{};
  double amplitude = 0.0;
  double phase = 0.0;
};

/// Kähler metric with hermitian matrix δ_ab + ∂_a ∂̄_b ψ on R^4 / (2πZ)^4
/// and the standard complex structure.
ManifoldModel kaehler_torus(std::vector<KaehlerMode> potential);
std::vector<KaehlerMode> default_kaehler_potential();

/// Round S² in polar coordinates (θ, φ), θ ∈ (0, π).
ChartMetric polar_sphere_chart();

/// Single-chart model with no identifications (for curve-level tests).
ManifoldModel single_chart_model(ChartMetric chart, std::string name);

struct HyperbolicOctagon {
  double vertex_radius = 0.0;     // Euclidean radius of the vertices
  double midpoint_radius = 0.0;   // Euclidean radius of the side midpoints
  double side_center = 0.0;       // distance of each side circle's centre from 0
  double side_radius = 0.0;
  double translation_tanh = 0.0;  // tanh(L/2) of the side-pairing translations
  double closure_residual = 0.0;  // max vertex mismatch of the pairings

  /// Side k lies on a circle centred at side_center·e^{ikπ/4}.
  cplx side_circle_center(int k) const;
  /// Möbius translation mapping side k onto side k+4.
  cplx pair(int k, cplx z) const;
  cplx pair_derivative(int k, cplx z) const;
  cplx vertex(int j) const;  // vertices at angles (2j+1)π/8
  bool inside(const Vec& x) const;
};

/// Solves the angle-sum condition for the vertex radius and builds the side
/// pairings; verifies that each pairing maps vertices onto vertices.
const HyperbolicOctagon& octagon();

// ─── Pointwise helpers ───────────────────────────────────────────────────────

double cometric_norm2(const ManifoldModel& model, const CotangentPoint& p);
CotangentPoint normalize_unit(const ManifoldModel& model, CotangentPoint p);

/// Symmetric square root and inverse square root of an SPD matrix.
Mat spd_sqrt(const Mat& g);
Mat spd_inverse_sqrt(const Mat& g);

/// Components of a covector in the orthonormal coframe g^{1/2} dx of its
/// chart: c = g^{-1/2} v.
Vec coframe_components(const ManifoldModel& model, int chart, const Vec& x, const Vec& covector);

/// Generator Ω (antisymmetric) of Levi-Civita transport of coframe components
/// along a curve through x with velocity `velocity`: dc/dt = Ω c.
Mat coframe_connection(const ChartMetric& metric, const Vec& x, const Vec& velocity);

// ─── Flow ────────────────────────────────────────────────────────────────────

/// Identification event recorded during a step.
struct Jump {
  int from_chart = 0;
  int to_chart = 0;
  Vec x_pre;
  Vec xi_pre;
  Vec velocity_pre;
  Vec x_post;
  Mat covector_map;  // composed over repeated applications
};

/// Orthogonal change of coframe components across a jump:
/// c_new = O c_old with O = g_new^{-1/2} M g_old^{1/2}.
Mat coframe_jump(const ManifoldModel& model, const Jump& jump);

/// Phase point together with covectors transported along it and an optional
/// matrix-valued fiber quantity.
struct FlowState {
  int chart = 0;
  Vec x;
  Vec xi;
  std::vector<Vec> carried;
  CMat fiber;
};

/// Fiber ODE dF/dt = rate(chart, x, ξ, F) solved alongside the base, and the
/// gauge change applied to F when the base crosses an identification.
struct FiberHooks {
  std::function<CMat(int chart, const Vec& x, const Vec& xi, const CMat& fiber)> rate;
  std::function<void(const Jump& jump, CMat& fiber)> gauge;
};

FlowState make_flow_state(const CotangentPoint& p);
CotangentPoint base_point(const FlowState& s);

/// One RK4 step of size h (negative h integrates backwards), followed by
/// renormalisation of |ξ|_g and identifications. Carried covectors are
/// transported but not re-orthonormalised.
std::optional<Jump> advance(const ManifoldModel& model, FlowState& state, double h,
                            const FiberHooks* hooks = nullptr);

/// Number of steps and step size used to cover duration t with nominal step h.
struct StepPlan {
  long steps = 0;
  double step = 0.0;  // signed
};
StepPlan plan_steps(double t, double h);

struct TrajectorySample {
  double t = 0.0;
  int chart = 0;
  Vec x;
  Vec xi;
  Vec velocity;
  std::optional<Jump> arrived_by_jump;
};
using Trajectory = std::vector<TrajectorySample>;

Trajectory geodesic_flow(const ManifoldModel& model, const CotangentPoint& start, double t,
                         double h);

/// Covector parallel transport dv_i/dt = Γ^k_ij ẋ^j v_k along a sampled
/// curve. Midpoints come from cubic Hermite interpolation of the samples.
Vec parallel_transport(const ManifoldModel& model, const Trajectory& trajectory, const Vec& v);

/// Samples with density sqrt(det g) on the fundamental domain and ξ uniform
/// on the unit cosphere. Deterministic in `seed`.
std::vector<CotangentPoint> sample_liouville(const ManifoldModel& model, int count,
                                             std::uint64_t seed);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace qerg::geometry
