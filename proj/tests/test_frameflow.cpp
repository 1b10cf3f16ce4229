#include <doctest.h>

#include "qerg/frameflow.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace qerg;
using namespace qerg::frameflow;
using qerg::geometry::ModelTag;

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

}  // namespace

TEST_CASE("frame_flow: flat torus keeps frame components constant") {
  const auto m = geometry::flat_torus({1.0, 1.0, 1.0});
  KFrameState f{{0, vec({0.1, 0.2, 0.3}), vec({0.0, 0.6, 0.8})}, {vec({1.0, 0.0, 0.0}), vec({0.0, 0.8, -0.6})}};
  const auto out = frame_flow(m, f, 7.3, 0.01);
  for (int a = 0; a < 3; ++a) CHECK((out.vector(a) - f.vector(a)).norm() < 1e-13);
  CHECK(m.in_fundamental_domain(out.base.chart, out.base.x));
}

TEST_CASE("frame_flow: round S3 closed geodesic has trivial holonomy") {
  const auto m = geometry::round_sphere(3);
  // Meridian through the origin of chart 0; crosses into chart 1 and back.
  KFrameState f{{0, vec({0.0, 0.0, 0.0}), vec({2.0, 0.0, 0.0})}, {vec({0.0, 1.2, 1.6})}};
  std::vector<FrameSample> samples;
  const auto out = frame_flow(m, f, 2.0 * kPi, 1e-3, &samples);
  CHECK(out.base.chart == 0);
  CHECK((out.base.x - f.base.x).norm() < 1e-8);
  CHECK((out.rest[0] - f.rest[0]).norm() < 1e-8);
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, orthonormality_residual(m, s.state));
  CHECK(worst <= 1e-9);
}

TEST_CASE("frame_flow: genus-2 orthonormality over t = 100") {
  const auto m = geometry::genus2_hyperbolic();
  const auto f = sample_frames(m, 2, 1, 4).front();
  std::vector<FrameSample> samples;
  frame_flow(m, f, 100.0, 1e-2, &samples);
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, orthonormality_residual(m, s.state));
  CHECK(worst <= 1e-9);
}

TEST_CASE("frame_flow: base trajectory equals the geodesic flow bit for bit") {
  for (const auto& m : {geometry::genus2_hyperbolic(), geometry::round_sphere(3)}) {
    const auto f = sample_frames(m, 2, 1, 21).front();
    std::vector<FrameSample> samples;
    frame_flow(m, f, 5.0, 1e-2, &samples);
    const auto traj = geometry::geodesic_flow(m, f.base, 5.0, 1e-2);
    REQUIRE(samples.size() == traj.size());
    bool identical = true;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      identical = identical && samples[i].state.base.chart == traj[i].chart &&
                  samples[i].state.base.x == traj[i].x && samples[i].state.base.xi == traj[i].xi;
    }
    CHECK(identical);
  }
}

TEST_CASE("frame_flow: rejects non-orthonormal frames") {
  const auto m = geometry::flat_torus({1.0, 1.0});
  KFrameState f{{0, vec({0.0, 0.0}), vec({1.0, 0.0})}, {vec({1.0, 1.0})}};
  CHECK_THROWS_AS(frame_flow(m, f, 1.0, 0.1), ArgumentError);
  CHECK(orthonormalize(m, f).rest[0].isApprox(vec({0.0, 1.0})));
  KFrameState bad{{0, vec({0.0, 0.0}), vec({1.0, 0.0})}, {vec({2.0, 0.0})}};
  CHECK_THROWS_AS(orthonormalize(m, bad), ArgumentError);
}

TEST_CASE("haar completion gives orthonormal frames with zero-mean fiber components") {
  const auto m = geometry::round_sphere(3);
  const auto frames = sample_frames(m, 3, 4000, 8);
  double worst = 0.0;
  double mean = 0.0;
  const auto obs = frame_component_observable(m, 1, 0, "v2_0");
  for (const auto& f : frames) {
    worst = std::max(worst, orthonormality_residual(m, f));
    mean += obs.evaluator(f).real();
  }
  mean /= frames.size();
  CHECK(worst <= 1e-12);
  // Each coframe component of a uniform unit vector in R^3 has variance 1/3.
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(1.0 / 3.0 / frames.size()));
}

TEST_CASE("birkhoff_average: constant observable is exactly one") {
  const auto m = geometry::genus2_hyperbolic();
  const auto f = sample_frames(m, 2, 1, 1).front();
  CHECK(birkhoff_average(m, constant_observable(1.0), f, 3.7, 0.01) == cplx(1.0));
  CHECK_THROWS_AS(birkhoff_average(m, constant_observable(1.0), f, 0.0, 0.01), ArgumentError);
}

TEST_CASE("birkhoff_average: irrational linear flow on the flat 2-torus") {
  const auto m = geometry::flat_torus({1.0, 1.0});
  auto f = base_observable(
      [](int, const Vec& x) {
        const double c = std::cos(2.0 * kPi * x(1));
        return std::exp(std::cos(2.0 * kPi * x(0))) + c * c;
      },
      "f");
  // Torus average: I0(1) + 1/2.
  const double space = 1.2660658777520082 + 0.5;
  KFrameState s{{0, vec({0.1, 0.7}), vec({1.0, std::sqrt(2.0)})}, {}};
  s = orthonormalize(m, s);
  const double avg = birkhoff_average(m, f, s, 1e4, 0.05).real();
  CHECK(std::abs(avg - space) <= 0.02 * space);
}

TEST_CASE("birkhoff_average: genus-2 zero-mean observable, small ensemble") {
  const auto m = geometry::genus2_hyperbolic();
  const auto obs = base_observable([](int, const Vec& x) { return x(0) * x(1); }, "x1x2");
  const double sup = std::pow(std::pow(2.0, -0.25), 2) / 2.0;
  const auto starts = sample_frames(m, 2, 8, 77);
  double mean = 0.0;
  for (const auto& s : starts) mean += std::abs(birkhoff_average(m, obs, s, 200.0, 0.02).real());
  mean /= starts.size();
  CHECK(mean <= 0.1 * sup);
}

TEST_CASE("kahler_integrals") {
  const auto m = geometry::kaehler_torus(geometry::default_kaehler_potential());
  const auto f = sample_frames(m, 3, 1, 5).front();
  const Mat M0 = kahler_integrals(m, f);
  CHECK(M0.diagonal().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((M0 + M0.transpose()).cwiseAbs().maxCoeff() <= 1e-12);

  SUBCASE("constant along the flow") {
    std::vector<FrameSample> samples;
    frame_flow(m, f, 10.0, 1e-3, &samples);
    double drift = 0.0;
    for (std::size_t i = 0; i < samples.size(); i += 100) {
      drift = std::max(drift, (kahler_integrals(m, samples[i].state) - M0).cwiseAbs().maxCoeff());
    }
    CHECK(drift <= 1e-6);
  }
  SUBCASE("adapted unitary frame") {
    const Mat g = m.chart(0).metric(f.base.x);
    const Mat J = m.complex_structure(f.base.x);
    // Covector of J v₁ is g J g^{-1} ξ₁.
    KFrameState u{f.base, {g * J * g.ldlt().solve(f.base.xi)}};
    CHECK(orthonormality_residual(m, u) <= 1e-12);
    const Mat M = kahler_integrals(m, u);
    CHECK(M(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(M(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(kahler_integrals(geometry::round_sphere(2),
                                   sample_frames(geometry::round_sphere(2), 2, 1, 1).front()),
                  CapabilityError);
}

TEST_CASE("ergodicity_report: flat torus fiber observable does not equidistribute") {
  const auto m = geometry::flat_torus({1.0, 1.0});
  const std::vector<FrameObservable> obs{frame_component_observable(m, 1, 0, "v2_0"),
                                         constant_observable(1.0)};
  ErgodicityParams p;
  p.k = 2;
  p.ensemble = 20;
  p.h = 0.05;
  p.space_samples = 4000;
  p.seed = 3;
  p.T = 10.0;
  const auto short_run = ergodicity_report(m, p, obs);
  p.T = 200.0;
  const auto long_run = ergodicity_report(m, p, obs);
  CHECK(long_run.summary[0].mean_deviation >= 0.5 * short_run.summary[0].mean_deviation);
  CHECK(long_run.summary[0].mean_deviation > 0.3);
  CHECK(long_run.summary[1].mean_deviation <= 1e-10);
  CHECK(long_run.rows.size() == 40);
  std::ostringstream out;
  write_report_csv(out, long_run);
  CHECK(out.str().rfind("observable,trajectory,time_average,space_average,deviation\nv2_0,0,", 0) == 0);
}
