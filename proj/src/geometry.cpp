/// @file src/geometry.cpp
/// @brief Manifold models, RK4 geodesic/transport flow, Liouville sampling.

#include "qerg/geometry.hpp"

#include "qerg/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace qerg::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

Mat zero_mat(int n) { return Mat::Zero(n, n); }

MetricDerivative zero_derivative(int n) {
  MetricDerivative d;
  for (int k = 0; k < kMaxDim; ++k) d[k] = (k < n) ? zero_mat(n) : Mat();
  return d;
}

// Conformal metric λ(x)·I with λ and ∇λ supplied.
ChartMetric conformal_chart(int n, ChartDomain domain, std::function<double(const Vec&)> lambda,
                            std::function<Vec(const Vec&)> grad_lambda) {
  auto g = [n, lambda](const Vec& x) -> Mat { return lambda(x) * Mat::Identity(n, n); };
  auto dg = [n, grad_lambda](const Vec& x) -> MetricDerivative {
    const Vec grad = grad_lambda(x);
    MetricDerivative d = zero_derivative(n);
    for (int k = 0; k < n; ++k) d[k] = grad(k) * Mat::Identity(n, n);
    return d;
  };
  return ChartMetric(n, std::move(domain), g, dg);
}

// Covector rate ½ uᵀ ∂_k g u for the momentum; shared by every flow so the
// base trajectory does not depend on what else is carried along.
void momentum_rate(const MetricDerivative& dg, const Vec& u, int n, Vec& out) {
  out.resize(n);
  for (int k = 0; k < n; ++k) out(k) = 0.5 * u.dot(dg[k] * u);
}

Christoffel christoffel_from(const Mat& ginv, const MetricDerivative& dg, int n) {
  Christoffel gamma;
  for (int i = 0; i < kMaxDim; ++i) gamma[i] = (i < n) ? zero_mat(n) : Mat();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        double sum = 0.0;
        for (int l = 0; l < n; ++l) {
          sum += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
        }
        gamma[i](j, k) = 0.5 * sum;
        gamma[i](k, j) = 0.5 * sum;
      }
    }
  }
  return gamma;
}

// G(i,k) = Σ_j Γ^k_ij u^j, so dv/dt = G v for a transported covector.
Mat transport_matrix_of(const Christoffel& gamma, const Vec& u, int n) {
  Mat G = zero_mat(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += gamma[k](i, j) * u(j);
      G(i, k) = s;
    }
  return G;
}

struct StageRate {
  Vec dx;
  Vec dxi;
  std::vector<Vec> dcarried;
  CMat dfiber;
};

void stage_rate(const ChartMetric& metric, int chart, const Vec& x, const Vec& xi,
                const std::vector<Vec>& carried, const CMat& fiber, const FiberHooks* hooks,
                StageRate& out) {
  const int n = metric.dim();
  if (!metric.domain().contains(x)) {
    throw GeometryError("flow left the chart domain");
  }
  const Mat g = metric.metric(x);
  const Mat ginv = g.inverse();
  const MetricDerivative dg = metric.derivative(x);
  out.dx = ginv * xi;
  momentum_rate(dg, out.dx, n, out.dxi);
  out.dcarried.resize(carried.size());
  if (!carried.empty()) {
    const Mat G = transport_matrix_of(christoffel_from(ginv, dg, n), out.dx, n);
    for (std::size_t a = 0; a < carried.size(); ++a) out.dcarried[a] = G * carried[a];
  }
  if (hooks != nullptr && fiber.size() > 0) {
    out.dfiber = hooks->rate(chart, x, xi, fiber);
  }
}

bool apply_identifications(const ManifoldModel& model, FlowState& state, Jump& jump) {
  bool any = false;
  for (int iter = 0; iter < 32; ++iter) {
    const Identification* hit = nullptr;
    for (const auto& id : model.identifications) {
      if (id.chart == state.chart && id.applies(state.x)) {
        hit = &id;
        break;
      }
    }
    if (hit == nullptr) return any;
    const ChartJump cj = hit->map(state.x);
    if (!any) {
      jump.from_chart = state.chart;
      jump.x_pre = state.x;
      jump.xi_pre = state.xi;
      jump.covector_map = Mat::Identity(model.dim, model.dim);
    }
    any = true;
    state.chart = cj.chart;
    state.x = cj.x;
    state.xi = cj.covector_map * state.xi;
    for (auto& v : state.carried) v = cj.covector_map * v;
    jump.covector_map = cj.covector_map * jump.covector_map;
    jump.to_chart = cj.chart;
    jump.x_post = cj.x;
  }
  throw GeometryError("identifications did not bring the point into the fundamental domain");
}

}  // namespace

// ─── ChartDomain / ChartMetric ───────────────────────────────────────────────

ChartDomain ChartDomain::whole() { return ChartDomain{}; }

ChartDomain ChartDomain::box(Vec lower, Vec upper) {
  ChartDomain d;
  d.shape = Shape::Box;
  d.lower = std::move(lower);
  d.upper = std::move(upper);
  return d;
}

ChartDomain ChartDomain::disk(double radius) {
  ChartDomain d;
  d.shape = Shape::Disk;
  d.radius = radius;
  return d;
}

bool ChartDomain::contains(const Vec& x) const {
  switch (shape) {
    case Shape::Whole:
      return x.allFinite();
    case Shape::Box:
      return ((x.array() > lower.array()) && (x.array() < upper.array())).all();
    case Shape::Disk:
      return x.norm() < radius;
  }
  return false;
}

ChartMetric::ChartMetric(int dim, ChartDomain domain, MetricFn metric, DerivativeFn derivative)
    : dim_(dim),
      domain_(std::move(domain)),
      metric_(std::move(metric)),
      derivative_(std::move(derivative)) {
  if (dim < 1 || dim > kMaxDim) throw ArgumentError("chart dimension out of range");
}

MetricDerivative ChartMetric::derivative(const Vec& x) const {
  return derivative_ ? derivative_(x) : finite_difference_derivative(x);
}

MetricDerivative ChartMetric::finite_difference_derivative(const Vec& x, double step) const {
  MetricDerivative d = zero_derivative(dim_);
  for (int k = 0; k < dim_; ++k) {
    Vec xp = x;
    Vec xm = x;
    xp(k) += step;
    xm(k) -= step;
    d[k] = (metric_(xp) - metric_(xm)) / (2.0 * step);
  }
  return d;
}

Christoffel christoffel(const ChartMetric& metric, const Vec& x) {
  if (x.size() != metric.dim()) throw ArgumentError("coordinate dimension mismatch");
  if (!metric.domain().contains(x)) throw DomainError("point outside chart domain");
  const Mat g = metric.metric(x);
  return christoffel_from(g.inverse(), metric.derivative(x), metric.dim());
}

std::string to_string(ModelTag tag) {
  switch (tag) {
    case ModelTag::FlatTorus:
      return "flat-torus";
    case ModelTag::RoundSphere:
      return "round-sphere";
    case ModelTag::Genus2Hyperbolic:
      return "genus2-hyperbolic";
    case ModelTag::KaehlerTorus:
      return "kaehler-torus";
    case ModelTag::Custom:
      return "custom";
  }
  return "custom";
}

const ChartMetric& ManifoldModel::chart(int id) const {
  if (id < 0 || id >= static_cast<int>(charts.size())) throw GeometryError("unknown chart id");
  return charts[static_cast<std::size_t>(id)];
}

// ─── Models ──────────────────────────────────────────────────────────────────

ManifoldModel flat_torus(std::vector<double> periods) {
  const int n = static_cast<int>(periods.size());
  if (n < 1 || n > kMaxDim) throw ArgumentError("flat torus dimension out of range");
  Vec L(n);
  for (int i = 0; i < n; ++i) {
    if (!(periods[static_cast<std::size_t>(i)] > 0.0)) throw ArgumentError("periods must be > 0");
    L(i) = periods[static_cast<std::size_t>(i)];
  }
  ManifoldModel m;
  m.tag = ModelTag::FlatTorus;
  m.name = "flat-torus";
  m.dim = n;
  m.charts.emplace_back(
      n, ChartDomain::whole(), [n](const Vec&) -> Mat { return Mat::Identity(n, n); },
      [n](const Vec&) { return zero_derivative(n); });
  Identification wrap;
  wrap.name = "wrap";
  wrap.chart = 0;
  wrap.applies = [L](const Vec& x) {
    return ((x.array() < 0.0) || (x.array() >= L.array())).any();
  };
  wrap.map = [L, n](const Vec& x) {
    ChartJump j;
    j.chart = 0;
    j.x = x;
    for (int i = 0; i < n; ++i) {
      j.x(i) = x(i) - L(i) * std::floor(x(i) / L(i));
      if (j.x(i) >= L(i)) j.x(i) = 0.0;
    }
    j.covector_map = Mat::Identity(n, n);
    return j;
  };
  m.identifications.push_back(wrap);
  SamplingRegion region;
  region.chart = 0;
  region.lower = Vec::Zero(n);
  region.upper = L;
  region.inside = [](const Vec&) { return true; };
  region.weight = 1.0;
  region.density_bound = 1.0;
  m.regions.push_back(region);
  m.in_fundamental_domain = [L](int chart, const Vec& x) {
    return chart == 0 && ((x.array() >= 0.0) && (x.array() < L.array())).all();
  };
  return m;
}

ManifoldModel round_sphere(int n) {
  if (n < 2 || n > kMaxDim) throw ArgumentError("round sphere dimension out of range");
  ManifoldModel m;
  m.tag = ModelTag::RoundSphere;
  m.name = "round-sphere";
  m.dim = n;
  auto lambda = [](const Vec& x) {
    const double s = 1.0 + x.squaredNorm();
    return 4.0 / (s * s);
  };
  auto grad = [](const Vec& x) -> Vec {
    const double s = 1.0 + x.squaredNorm();
    return (-16.0 / (s * s * s)) * x;
  };
  for (int c = 0; c < 2; ++c) m.charts.push_back(conformal_chart(n, ChartDomain::whole(), lambda, grad));

  Mat R = Mat::Identity(n, n);
  R(0, 0) = -1.0;
  for (int c = 0; c < 2; ++c) {
    Identification id;
    id.name = c == 0 ? "north-to-south" : "south-to-north";
    id.chart = c;
    id.applies = [](const Vec& x) { return x.squaredNorm() > 4.0; };
    id.map = [R, c, n](const Vec& x) {
      ChartJump j;
      j.chart = 1 - c;
      j.x = R * x / x.squaredNorm();
      const Vec& y = j.x;
      const double y2 = y.squaredNorm();
      // x = f(y) with the same formula; ξ_y = Df(y)ᵀ ξ_x.
      const Mat Df = R * (Mat::Identity(n, n) - 2.0 * y * y.transpose() / y2) / y2;
      j.covector_map = Df.transpose();
      return j;
    };
    m.identifications.push_back(id);

    SamplingRegion region;
    region.chart = c;
    region.lower = Vec::Constant(n, -1.0);
    region.upper = Vec::Constant(n, 1.0);
    region.inside = [](const Vec& x) { return x.squaredNorm() <= 1.0; };
    region.weight = 0.5;
    region.density_bound = std::pow(2.0, n);
    m.regions.push_back(region);
  }
  m.in_fundamental_domain = [](int chart, const Vec& x) {
    return (chart == 0 || chart == 1) && x.squaredNorm() <= 4.0;
  };
  return m;
}

// ─── Octagon ─────────────────────────────────────────────────────────────────

namespace {

struct SideCircle {
  double center;
  double radius;
};

SideCircle side_circle_for_vertex_radius(double r) {
  // Circle orthogonal to the unit circle through r·e^{±iπ/8}.
  const double C = (r * r + 1.0) / (2.0 * r * std::cos(kPi / 8.0));
  return {C, std::sqrt(C * C - 1.0)};
}

double interior_angle(double r) {
  const SideCircle s = side_circle_for_vertex_radius(r);
  const cplx v = std::polar(r, kPi / 8.0);
  const cplx prev = std::polar(r, -kPi / 8.0);
  const cplx next = std::polar(r, 3.0 * kPi / 8.0);
  const cplx c0 = s.center;
  const cplx c1 = std::polar(s.center, kPi / 4.0);
  auto tangent_towards = [&](cplx center, cplx target) {
    cplx t = kI * (v - center);
    if ((std::conj(t) * (target - v)).real() < 0.0) t = -t;
    return t / std::abs(t);
  };
  const cplx t0 = tangent_towards(c0, prev);
  const cplx t1 = tangent_towards(c1, next);
  return std::acos(std::clamp((std::conj(t0) * t1).real(), -1.0, 1.0));
}

HyperbolicOctagon build_octagon() {
  // Interior angle decreases from 3π/4 (r→0) to 0 (r→1); bisect for π/4.
  double lo = 1e-3;
  double hi = 1.0 - 1e-9;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (interior_angle(mid) > kPi / 4.0) lo = mid;
    else hi = mid;
  }
  HyperbolicOctagon o;
  o.vertex_radius = 0.5 * (lo + hi);
  const SideCircle s = side_circle_for_vertex_radius(o.vertex_radius);
  o.side_center = s.center;
  o.side_radius = s.radius;
  o.midpoint_radius = s.center - s.radius;
  const double m = o.midpoint_radius;
  o.translation_tanh = 2.0 * m / (1.0 + m * m);

  double residual = 0.0;
  for (int k = 0; k < 8; ++k) {
    // Side k runs between vertices k-1 and k; its image must be side k+4.
    const cplx a = o.pair(k, o.vertex((k + 7) % 8));
    const cplx b = o.pair(k, o.vertex(k));
    const cplx ta = o.vertex((k + 4) % 8);
    const cplx tb = o.vertex((k + 3) % 8);
    residual = std::max({residual, std::abs(a - ta), std::abs(b - tb)});
  }
  o.closure_residual = residual;
  if (residual > 1e-10) throw GeometryError("octagon side pairings do not close");
  return o;
}

}  // namespace

cplx HyperbolicOctagon::side_circle_center(int k) const {
  return std::polar(side_center, k * kPi / 4.0);
}

cplx HyperbolicOctagon::vertex(int j) const {
  return std::polar(vertex_radius, (2 * j + 1) * kPi / 8.0);
}

cplx HyperbolicOctagon::pair(int k, cplx z) const {
  const cplx rot = std::polar(1.0, k * kPi / 4.0 + kPi);
  const cplx w = std::conj(rot) * z;
  return rot * (w + translation_tanh) / (1.0 + translation_tanh * w);
}

cplx HyperbolicOctagon::pair_derivative(int k, cplx z) const {
  const cplx rot = std::polar(1.0, k * kPi / 4.0 + kPi);
  const cplx den = 1.0 + translation_tanh * std::conj(rot) * z;
  return (1.0 - translation_tanh * translation_tanh) / (den * den);
}

bool HyperbolicOctagon::inside(const Vec& x) const {
  const cplx z(x(0), x(1));
  if (std::abs(z) >= 1.0) return false;
  for (int k = 0; k < 8; ++k) {
    if (std::abs(z - side_circle_center(k)) < side_radius) return false;
  }
  return true;
}

const HyperbolicOctagon& octagon() {
  static const HyperbolicOctagon o = build_octagon();
  return o;
}

ManifoldModel genus2_hyperbolic() {
  const HyperbolicOctagon& oct = octagon();
  ManifoldModel m;
  m.tag = ModelTag::Genus2Hyperbolic;
  m.name = "genus2-hyperbolic";
  m.dim = 2;
  m.charts.push_back(conformal_chart(
      2, ChartDomain::disk(1.0),
      [](const Vec& x) {
        const double s = 1.0 - x.squaredNorm();
        return 4.0 / (s * s);
      },
      [](const Vec& x) -> Vec {
        const double s = 1.0 - x.squaredNorm();
        return (16.0 / (s * s * s)) * x;
      }));
  for (int k = 0; k < 8; ++k) {
    Identification id;
    id.name = "side-" + std::to_string(k);
    id.chart = 0;
    id.applies = [k, &oct](const Vec& x) {
      return std::abs(cplx(x(0), x(1)) - oct.side_circle_center(k)) < oct.side_radius;
    };
    id.map = [k, &oct](const Vec& x) {
      const cplx z(x(0), x(1));
      const cplx w = oct.pair(k, z);
      const cplx d = oct.pair_derivative(k, z);
      ChartJump j;
      j.chart = 0;
      j.x = Vec(2);
      j.x << w.real(), w.imag();
      Mat Df(2, 2);
      Df << d.real(), -d.imag(), d.imag(), d.real();
      j.covector_map = Df / std::norm(d);  // (Df)^{-T} for a conformal Jacobian
      return j;
    };
    m.identifications.push_back(id);
  }
  SamplingRegion region;
  region.chart = 0;
  region.lower = Vec::Constant(2, -oct.vertex_radius);
  region.upper = Vec::Constant(2, oct.vertex_radius);
  region.inside = [&oct](const Vec& x) { return oct.inside(x); };
  region.weight = 1.0;
  const double s = 1.0 - oct.vertex_radius * oct.vertex_radius;
  region.density_bound = 4.0 / (s * s);
  m.regions.push_back(region);
  m.in_fundamental_domain = [&oct](int chart, const Vec& x) { return chart == 0 && oct.inside(x); };
  return m;
}

// ─── Kähler torus ────────────────────────────────────────────────────────────

namespace {

// Real metric Re Σ h_ab̄ dz_a dz̄_b in coordinate order (x1, x2, y1, y2),
// with h = S + iA: g = [[S, A], [-A, S]].
Mat kaehler_metric_from_hessian(const Mat& hess) {
  Mat g = Mat::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double S = (a == b ? 1.0 : 0.0) + 0.25 * (hess(a, b) + hess(2 + a, 2 + b));
      const double A = 0.25 * (hess(a, 2 + b) - hess(2 + a, b));
      g(a, b) = S;
      g(2 + a, 2 + b) = S;
      g(a, 2 + b) = A;
      g(2 + a, b) = -A;
    }
  return g;
}

}  // namespace

std::vector<KaehlerMode> default_kaehler_potential() {
  return {
      {{1, 0, 0, 1}, 0.30, 0.2},
      {{0, 1, 1, 0}, 0.25, -0.7},
      {{1, 1, 0, 0}, 0.15, 1.1},
      {{0, 0, 1, -1}, 0.12, 0.4},
  };
}

ManifoldModel kaehler_torus(std::vector<KaehlerMode> potential) {
  double s = 0.0;
  for (const auto& mode : potential) {
    double k2 = 0.0;
    for (int v : mode.k) k2 += static_cast<double>(v) * v;
    s += std::abs(mode.amplitude) * k2 / 4.0;
  }
  if (s >= 1.0) throw ModelError("Kähler potential too large: metric may degenerate");

  auto hessian = [potential](const Vec& x) -> Mat {
    Mat h = Mat::Zero(4, 4);
    for (const auto& mode : potential) {
      double phase = mode.phase;
      for (int i = 0; i < 4; ++i) phase += mode.k[static_cast<std::size_t>(i)] * x(i);
      const double c = -mode.amplitude * std::cos(phase);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          h(i, j) += c * mode.k[static_cast<std::size_t>(i)] * mode.k[static_cast<std::size_t>(j)];
    }
    return h;
  };
  auto third = [potential](const Vec& x, int l) -> Mat {
    Mat h = Mat::Zero(4, 4);
    for (const auto& mode : potential) {
      double phase = mode.phase;
      for (int i = 0; i < 4; ++i) phase += mode.k[static_cast<std::size_t>(i)] * x(i);
      const double c = mode.amplitude * std::sin(phase) * mode.k[static_cast<std::size_t>(l)];
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          h(i, j) += c * mode.k[static_cast<std::size_t>(i)] * mode.k[static_cast<std::size_t>(j)];
    }
    return h;
  };

  ManifoldModel m;
  m.tag = ModelTag::KaehlerTorus;
  m.name = "kaehler-torus";
  m.dim = 4;
  m.charts.emplace_back(
      4, ChartDomain::whole(), [hessian](const Vec& x) { return kaehler_metric_from_hessian(hessian(x)); },
      [third](const Vec& x) {
        MetricDerivative d = zero_derivative(4);
        for (int l = 0; l < 4; ++l) {
          // g is affine in the Hessian; differentiate term by term.
          d[l] = kaehler_metric_from_hessian(third(x, l)) - Mat::Identity(4, 4);
        }
        return d;
      });
  const double period = 2.0 * kPi;
  ManifoldModel flat = flat_torus({period, period, period, period});
  m.identifications = flat.identifications;
  m.regions = flat.regions;
  m.regions[0].density_bound = (1.0 + s) * (1.0 + s);
  m.in_fundamental_domain = flat.in_fundamental_domain;
  m.complex_structure = [](const Vec&) -> Mat {
    Mat J = Mat::Zero(4, 4);
    J(2, 0) = 1.0;
    J(3, 1) = 1.0;
    J(0, 2) = -1.0;
    J(1, 3) = -1.0;
    return J;
  };
  return m;
}

ChartMetric polar_sphere_chart() {
  Vec lo(2);
  Vec hi(2);
  lo << 0.0, -1e300;
  hi << kPi, 1e300;
  return ChartMetric(
      2, ChartDomain::box(lo, hi),
      [](const Vec& x) -> Mat {
        Mat g = Mat::Identity(2, 2);
        g(1, 1) = std::sin(x(0)) * std::sin(x(0));
        return g;
      },
      [](const Vec& x) {
        MetricDerivative d = zero_derivative(2);
        d[0](1, 1) = 2.0 * std::sin(x(0)) * std::cos(x(0));
        return d;
      });
}

ManifoldModel single_chart_model(ChartMetric chart, std::string name) {
  ManifoldModel m;
  m.tag = ModelTag::Custom;
  m.name = std::move(name);
  m.dim = chart.dim();
  m.charts.push_back(std::move(chart));
  m.in_fundamental_domain = [](int c, const Vec& x) { return c == 0 && x.allFinite(); };
  return m;
}

// ─── Pointwise helpers ───────────────────────────────────────────────────────

double cometric_norm2(const ManifoldModel& model, const CotangentPoint& p) {
  const Mat g = model.chart(p.chart).metric(p.x);
  return p.xi.dot(g.ldlt().solve(p.xi));
}

CotangentPoint normalize_unit(const ManifoldModel& model, CotangentPoint p) {
  const double n2 = cometric_norm2(model, p);
  if (!(n2 > 0.0)) throw ArgumentError("cannot normalise a zero covector");
  p.xi /= std::sqrt(n2);
  return p;
}

Mat spd_sqrt(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Mat spd_inverse_sqrt(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

Vec coframe_components(const ManifoldModel& model, int chart, const Vec& x, const Vec& covector) {
  return spd_inverse_sqrt(model.chart(chart).metric(x)) * covector;
}

Mat coframe_connection(const ChartMetric& metric, const Vec& x, const Vec& velocity) {
  const int n = metric.dim();
  const Mat g = metric.metric(x);
  const MetricDerivative dg = metric.derivative(x);
  Mat dgv = zero_mat(n);
  for (int k = 0; k < n; ++k) dgv += velocity(k) * dg[k];

  // E = g^{1/2}; its derivative solves the Sylvester equation E Ė + Ė E = D_v g.
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  const Mat& Q = es.eigenvectors();
  const Vec root = es.eigenvalues().cwiseSqrt();
  Mat rotated = Q.transpose() * dgv * Q;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rotated(i, j) /= (root(i) + root(j));
  const Mat Edot = Q * rotated * Q.transpose();
  const Mat E = Q * root.asDiagonal() * Q.transpose();
  const Mat Einv = Q * root.cwiseInverse().asDiagonal() * Q.transpose();

  const Mat G = transport_matrix_of(christoffel_from(g.inverse(), dg, n), velocity, n);
  return Einv * (G * E - Edot);
}

Mat coframe_jump(const ManifoldModel& model, const Jump& jump) {
  const Mat g_old = model.chart(jump.from_chart).metric(jump.x_pre);
  const Mat g_new = model.chart(jump.to_chart).metric(jump.x_post);
  return spd_inverse_sqrt(g_new) * jump.covector_map * spd_sqrt(g_old);
}

// ─── Flow ────────────────────────────────────────────────────────────────────

FlowState make_flow_state(const CotangentPoint& p) {
  FlowState s;
  s.chart = p.chart;
  s.x = p.x;
  s.xi = p.xi;
  return s;
}

CotangentPoint base_point(const FlowState& s) { return {s.chart, s.x, s.xi}; }

std::optional<Jump> advance(const ManifoldModel& model, FlowState& state, double h,
                            const FiberHooks* hooks) {
  const ChartMetric& metric = model.chart(state.chart);
  const std::size_t nc = state.carried.size();
  const bool with_fiber = hooks != nullptr && state.fiber.size() > 0;

  StageRate k1, k2, k3, k4;
  stage_rate(metric, state.chart, state.x, state.xi, state.carried, state.fiber, hooks, k1);

  std::vector<Vec> tmp(nc);
  CMat ftmp;
  auto stage_input = [&](const StageRate& k, double a, Vec& x, Vec& xi) {
    x = state.x + a * k.dx;
    xi = state.xi + a * k.dxi;
    for (std::size_t i = 0; i < nc; ++i) tmp[i] = state.carried[i] + a * k.dcarried[i];
    if (with_fiber) ftmp = state.fiber + a * k.dfiber;
  };

  Vec x, xi;
  stage_input(k1, 0.5 * h, x, xi);
  stage_rate(metric, state.chart, x, xi, tmp, ftmp, hooks, k2);
  stage_input(k2, 0.5 * h, x, xi);
  stage_rate(metric, state.chart, x, xi, tmp, ftmp, hooks, k3);
  stage_input(k3, h, x, xi);
  stage_rate(metric, state.chart, x, xi, tmp, ftmp, hooks, k4);

  const double w = h / 6.0;
  state.x += w * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  state.xi += w * (k1.dxi + 2.0 * k2.dxi + 2.0 * k3.dxi + k4.dxi);
  for (std::size_t i = 0; i < nc; ++i) {
    state.carried[i] +=
        w * (k1.dcarried[i] + 2.0 * k2.dcarried[i] + 2.0 * k3.dcarried[i] + k4.dcarried[i]);
  }
  if (with_fiber) {
    state.fiber += w * (k1.dfiber + 2.0 * k2.dfiber + 2.0 * k3.dfiber + k4.dfiber);
  }

  // Energy drift is removed exactly; the direction is what RK4 got right.
  {
    const Mat g = metric.metric(state.x);
    state.xi /= std::sqrt(state.xi.dot(g.ldlt().solve(state.xi)));
  }

  Jump jump;
  if (!apply_identifications(model, state, jump)) return std::nullopt;
  const Mat g_pre = model.chart(jump.from_chart).metric(jump.x_pre);
  jump.velocity_pre = g_pre.ldlt().solve(jump.xi_pre);
  if (with_fiber && hooks->gauge) hooks->gauge(jump, state.fiber);
  return jump;
}

StepPlan plan_steps(double t, double h) {
  if (!(h > 0.0)) throw ArgumentError("step size must be positive");
  if (t == 0.0) return {0, 0.0};
  const long n = std::max<long>(1, static_cast<long>(std::ceil(std::abs(t) / h - 1e-9)));
  return {n, t / static_cast<double>(n)};
}

Trajectory geodesic_flow(const ManifoldModel& model, const CotangentPoint& start, double t,
                         double h) {
  const StepPlan plan = plan_steps(t, h);
  FlowState state = make_flow_state(normalize_unit(model, start));
  Trajectory out;
  out.reserve(static_cast<std::size_t>(plan.steps) + 1);
  auto record = [&](double time, std::optional<Jump> jump) {
    TrajectorySample s;
    s.t = time;
    s.chart = state.chart;
    s.x = state.x;
    s.xi = state.xi;
    s.velocity = model.chart(state.chart).metric(state.x).ldlt().solve(state.xi);
    s.arrived_by_jump = std::move(jump);
    out.push_back(std::move(s));
  };
  record(0.0, std::nullopt);
  for (long i = 0; i < plan.steps; ++i) {
    auto jump = advance(model, state, plan.step);
    record(static_cast<double>(i + 1) * plan.step, std::move(jump));
  }
  return out;
}

Vec parallel_transport(const ManifoldModel& model, const Trajectory& traj, const Vec& v0) {
  if (traj.empty()) throw ArgumentError("empty trajectory");
  Vec v = v0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const TrajectorySample& a = traj[i];
    const TrajectorySample& b = traj[i + 1];
    const ChartMetric& metric = model.chart(a.chart);
    const int n = metric.dim();
    const double dt = b.t - a.t;
    const Vec& x1 = b.arrived_by_jump ? b.arrived_by_jump->x_pre : b.x;
    const Vec& u1 = b.arrived_by_jump ? b.arrived_by_jump->velocity_pre : b.velocity;
    if (!b.arrived_by_jump && b.chart != a.chart) {
      throw GeometryError("chart change without recorded identification");
    }
    // Cubic Hermite midpoint.
    const Vec xm = 0.5 * (a.x + x1) + 0.125 * dt * (a.velocity - u1);
    const Vec um = 1.5 * (x1 - a.x) / dt - 0.25 * (a.velocity + u1);
    auto G = [&](const Vec& x, const Vec& u) {
      return transport_matrix_of(christoffel(metric, x), u, n);
    };
    const Mat G0 = G(a.x, a.velocity);
    const Mat Gm = G(xm, um);
    const Mat G1 = G(x1, u1);
    const Vec k1 = G0 * v;
    const Vec k2 = Gm * (v + 0.5 * dt * k1);
    const Vec k3 = Gm * (v + 0.5 * dt * k2);
    const Vec k4 = G1 * (v + dt * k3);
    v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (b.arrived_by_jump) v = b.arrived_by_jump->covector_map * v;
  }
  return v;
}

std::vector<CotangentPoint> sample_liouville(const ManifoldModel& model, int count,
                                             std::uint64_t seed) {
  if (count < 1) throw ArgumentError("sample count must be >= 1");
  if (model.regions.empty()) throw ConfigurationError("model has no sampling regions");
  Rng rng = make_rng(seed, 0x11u);
  std::vector<double> weights;
  for (const auto& r : model.regions) weights.push_back(r.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<CotangentPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  long attempts = 0;
  const int n = model.dim;
  while (static_cast<int>(out.size()) < count) {
    ++attempts;
    if (attempts > 200000 &&
        static_cast<double>(out.size()) < 1e-4 * static_cast<double>(attempts)) {
      throw ConfigurationError("Liouville rejection sampling acceptance below 1e-4");
    }
    const SamplingRegion& region = model.regions[static_cast<std::size_t>(pick(rng))];
    Vec x(n);
    for (int i = 0; i < n; ++i) {
      x(i) = region.lower(i) + (region.upper(i) - region.lower(i)) * unit(rng);
    }
    const double u = unit(rng);
    if (!region.inside(x)) continue;
    const Mat g = model.chart(region.chart).metric(x);
    const double density = std::sqrt(g.determinant());
    if (density > region.density_bound) {
      throw ConfigurationError("sampling density bound violated");
    }
    if (u * region.density_bound > density) continue;
    Vec dir(n);
    for (int i = 0; i < n; ++i) dir(i) = gauss(rng);
    dir.normalize();
    CotangentPoint p{region.chart, x, spd_sqrt(g) * dir};
    out.push_back(normalize_unit(model, p));
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  if (trajectory.empty()) return;
  const int n = static_cast<int>(trajectory.front().x.size());
  out << "t,chart";
  for (int i = 0; i < n; ++i) out << ",x" << i;
  for (int i = 0; i < n; ++i) out << ",xi" << i;
  out << '\n';
  char buf[64];
  for (const auto& s : trajectory) {
    std::snprintf(buf, sizeof buf, "%.12g", s.t);
    out << buf << ',' << s.chart;
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.15g", s.x(i));
      out << buf;
    }
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.15g", s.xi(i));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace qerg::geometry
