#include "qerg/acceptance.hpp"

#include "qerg/bundle.hpp"
#include "qerg/clifford.hpp"
#include "qerg/commutant.hpp"
#include "qerg/exterior.hpp"
#include "qerg/frameflow.hpp"
#include "qerg/geometry.hpp"
#include "qerg/harness.hpp"
#include "qerg/rng.hpp"
#include "qerg/torus.hpp"
#include "qerg/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace qerg::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

RVec random_unit(int n, Rng& rng) {
  std::normal_distribution<double> normal;
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v.normalized();
}

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

/// Symbol on the 2π-periodic torus from a function of x and the unit covector.
transport::SymbolField torus_symbol(std::function<double(const Vec&, double, double)> f, std::string label,
                                    int x_degree) {
  return transport::matrix_symbol(
      [f](const Vec& x, const Vec& xi) {
        const double r = xi.norm();
        return CMat::Constant(1, 1, cplx(f(x, xi(0) / r, xi(1) / r), 0.0));
      },
      1, std::move(label), x_degree);
}

// ─── 1. Algebraic exactness ──────────────────────────────────────────────────

CriterionResult algebraic(std::uint64_t seed) {
  double clifford_res = 0.0, pm_res = 0.0, ext_res = 0.0, star_res = 0.0, p_res = 0.0;
  for (int n = 3; n <= 8; ++n) {
    Rng rng = make_rng(seed, 0xa1, static_cast<std::uint64_t>(n));
    const auto rep = clifford::build_clifford(n);
    const CMat I = CMat::Identity(rep.rank, rep.rank);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const CMat ac = rep.gammas[i] * rep.gammas[j] + rep.gammas[j] * rep.gammas[i];
        clifford_res = std::max(clifford_res, (ac - (i == j ? 2.0 : 0.0) * I).cwiseAbs().maxCoeff());
      }
    std::vector<exterior::ExteriorFiber> fibers;
    for (int p = 0; p <= n; ++p) fibers.push_back(exterior::make_fiber(n, p));
    for (int p = 0; p <= n; ++p) {
      const RMat back = exterior::hodge_star(fibers[static_cast<std::size_t>(n - p)]);
      const RMat s = exterior::hodge_star(fibers[static_cast<std::size_t>(p)]);
      const double sign = (p * (n - p)) % 2 == 0 ? 1.0 : -1.0;
      star_res = std::max(star_res, (back * s - sign * RMat::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff());
    }
    for (int s = 0; s < 100; ++s) {
      const RVec xi = random_unit(n, rng);
      const CMat F = clifford::symbol_F(rep, xi);
      const auto [pp, pm] = clifford::projections_pm(rep, xi);
      pm_res = std::max({pm_res, (F * F - I).cwiseAbs().maxCoeff(), (pp * pp - pp).cwiseAbs().maxCoeff(),
                         (pm * pm - pm).cwiseAbs().maxCoeff(), (pp * pm).cwiseAbs().maxCoeff(),
                         (pp + pm - I).cwiseAbs().maxCoeff(), (pp - pp.adjoint()).cwiseAbs().maxCoeff()});
      for (int p = 1; p < n; ++p) {
        const auto& f = fibers[static_cast<std::size_t>(p)];
        const RMat ac = exterior::int_mult(n, p + 1, xi) * exterior::ext_mult(f, xi) +
                        exterior::ext_mult(n, p - 1, xi) * exterior::int_mult(f, xi);
        ext_res = std::max(ext_res, (ac - RMat::Identity(f.dim, f.dim)).cwiseAbs().maxCoeff());
        const RMat P = exterior::projection_P(f, xi);
        p_res = std::max(p_res, (P * P - P).cwiseAbs().maxCoeff());
      }
    }
  }
  const double worst = std::max({clifford_res, pm_res, ext_res, star_res, p_res});
  CriterionResult r;
  r.pass = worst <= 1e-12;
  r.summary = "max residual " + fmt(worst) + " <= 1e-12 (clifford " + fmt(clifford_res) + ", P+- " + fmt(pm_res) +
              ", ext/int " + fmt(ext_res) + ", star " + fmt(star_res) + ", P " + fmt(p_res) + ")";
  return r;
}

// ─── 2. Commutant tables ─────────────────────────────────────────────────────

CriterionResult commutants(std::uint64_t seed) {
  std::vector<std::string> failures;
  double min_gap = 1e300;
  int cases = 0;
  auto expect = [&](const algebra::CommutantResult& res, int dim, const std::vector<CMat>& members,
                    const std::string& label) {
    ++cases;
    min_gap = std::min(min_gap, res.gap);
    bool ok = res.dimension == dim;
    for (const auto& m : members) ok = ok && algebra::span_residual(res.basis, m) <= 1e-8;
    if (!ok) failures.push_back(label + " dim " + std::to_string(res.dimension) + " (expected " + std::to_string(dim) + ")");
  };
  for (int n = 3; n <= 8; ++n) {
    Rng rng = make_rng(seed, 0xa2, static_cast<std::uint64_t>(n));
    const auto rep = clifford::build_clifford(n);
    const RVec xi = random_unit(n, rng);
    const auto gens = clifford::spin_stabilizer_generators(rep, xi);
    const auto [pp, pm] = clifford::projections_pm(rep, xi);
    std::vector<CMat> members{pp, pm};
    if (rep.chirality) members.push_back(*rep.chirality);
    const std::string tag = "spinor n=" + std::to_string(n);
    expect(algebra::commutant(gens), n % 2 == 1 ? 2 : 4, members, tag);
    expect(algebra::commutant(gens, &pp), 1, {pp}, tag + " on ranP+");
    expect(algebra::commutant(gens, &pm), 1, {pm}, tag + " on ranP-");

    for (int p = 1; p < n; ++p) {
      const auto f = exterior::make_fiber(n, p);
      const RVec eta = random_unit(n, rng);
      const auto fgens = exterior::so_stabilizer_generators(f, eta);
      const CMat P = exterior::projection_P(f, eta).cast<cplx>();
      const CMat Q = CMat::Identity(f.dim, f.dim) - P;
      const std::string ftag = "forms (" + std::to_string(n) + "," + std::to_string(p) + ")";
      if (2 * p == n) {
        expect(algebra::commutant(fgens, &P), 1, {P}, ftag + " on ranP");
      } else if (2 * p == n - 1) {
        const auto [fp, fm] = exterior::projections_pm_forms(f, eta);
        expect(algebra::commutant(fgens, &P), 2, {fp, fm}, ftag + " on ranP");
      } else {
        algebra::CommutantOptions opt;
        opt.splitting = {P, Q};
        expect(algebra::commutant(fgens, nullptr, opt), 2, {P, Q}, ftag);
      }
    }
  }
  CriterionResult r;
  r.pass = failures.empty() && min_gap >= 1e3;
  std::ostringstream s;
  s << cases - static_cast<int>(failures.size()) << "/" << cases << " tables match, min gap " << fmt(min_gap)
    << " >= 1e3";
  for (const auto& f : failures) s << "; " << f;
  r.summary = s.str();
  return r;
}

// ─── 3. State identities ─────────────────────────────────────────────────────

CriterionResult states(std::uint64_t seed) {
  double residual = 0.0, positivity = 1e300;
  int cases = 0;
  auto absorb = [&](const std::map<std::string, double>& m) {
    ++cases;
    for (const auto& [k, v] : m) {
      if (k.rfind("residual.", 0) == 0) residual = std::max(residual, v);
      else positivity = std::min(positivity, v);
    }
  };
  for (int n = 3; n <= 8; ++n) {
    absorb(harness::state_identities("spinor", n, 0, 100, seed));
    for (int p = 1; p < n; ++p) absorb(harness::state_identities("forms", n, p, 100, seed));
  }
  CriterionResult r;
  r.pass = residual <= 1e-12 && positivity >= -1e-12;
  r.summary = std::to_string(cases) + " cases, max residual " + fmt(residual) + " <= 1e-12, min normalised a*a value " +
              fmt(positivity) + " >= -1e-12";
  return r;
}

// ─── 4. Dynamics ─────────────────────────────────────────────────────────────

double orthonormality_rate(const geometry::ManifoldModel& m, int k, double T, double h, std::uint64_t seed) {
  double rate = 0.0;
  for (const auto& f : frameflow::sample_frames(m, k, 3, seed)) {
    std::vector<frameflow::FrameSample> samples;
    frameflow::frame_flow(m, f, T, h, &samples);
    for (const auto& s : samples) {
      rate = std::max(rate, frameflow::orthonormality_residual(m, s.state) / std::max(s.t, 1.0));
    }
  }
  return rate;
}

CriterionResult dynamics(std::uint64_t seed) {
  const auto g2 = geometry::genus2_hyperbolic();
  const auto s3 = geometry::round_sphere(3);
  const auto kt = geometry::kaehler_torus(geometry::default_kaehler_potential());
  const double rate = std::max({orthonormality_rate(g2, 2, 100.0, 1e-2, seed), orthonormality_rate(s3, 3, 100.0, 1e-2, seed),
                                orthonormality_rate(kt, 4, 100.0, 1e-2, seed)});

  // Latitude circles on S²: holonomy angle 2π(1 − cos θ).
  const auto polar = geometry::single_chart_model(geometry::polar_sphere_chart(), "polar-s2");
  double holonomy = 0.0;
  for (double th : {0.5, 1.0, 1.3}) {
    const long steps = static_cast<long>(std::ceil(2.0 * kPi / 1e-3));
    const double dt = 2.0 * kPi / steps;
    geometry::Trajectory traj;
    for (long i = 0; i <= steps; ++i) {
      geometry::TrajectorySample s;
      s.t = i * dt;
      s.x = vec({th, i * dt});
      s.xi = vec({0.0, std::sin(th) * std::sin(th)});
      s.velocity = vec({0.0, 1.0});
      traj.push_back(s);
    }
    const Vec v1 = geometry::parallel_transport(polar, traj, vec({1.0, 0.0}));
    const double angle = std::atan2(v1(1) / std::sin(th), v1(0));
    const double expected = std::remainder(2.0 * kPi * (1.0 - std::cos(th)), 2.0 * kPi);
    holonomy = std::max(holonomy, std::abs(std::abs(angle) - std::abs(expected)));
  }

  double kahler = 0.0;
  for (const auto& f : frameflow::sample_frames(kt, 3, 2, seed + 1)) {
    const Mat M0 = frameflow::kahler_integrals(kt, f);
    std::vector<frameflow::FrameSample> samples;
    frameflow::frame_flow(kt, f, 100.0, 1e-3, &samples);
    for (std::size_t i = 0; i < samples.size(); i += 100) {
      kahler = std::max(kahler, (frameflow::kahler_integrals(kt, samples[i].state) - M0).cwiseAbs().maxCoeff());
    }
    kahler = std::max(kahler, (frameflow::kahler_integrals(kt, samples.back().state) - M0).cwiseAbs().maxCoeff());
  }
  CriterionResult r;
  r.pass = rate <= 1e-9 && holonomy <= 1e-6 && kahler <= 1e-6;
  r.summary = "orthonormality drift " + fmt(rate) + "/unit time <= 1e-9, S2 holonomy error " + fmt(holonomy) +
              " <= 1e-6, Kaehler integral drift " + fmt(kahler) + " <= 1e-6";
  return r;
}

// ─── 5. Ergodicity diagnostics ───────────────────────────────────────────────

CriterionResult ergodicity(std::uint64_t seed) {
  const auto g2 = geometry::genus2_hyperbolic();
  frameflow::ErgodicityParams p;
  p.k = 2;
  p.ensemble = 100;
  p.T = 2000.0;
  p.h = 1e-2;
  p.space_samples = 20000;
  p.seed = seed;
  const std::vector<frameflow::FrameObservable> obs{
      frameflow::base_observable([](int, const Vec& x) { return x(0); }, "x1"),
      frameflow::base_observable([](int, const Vec& x) { return x(0) * x(1); }, "x1x2"),
      frameflow::frame_component_observable(g2, 1, 0, "v2_0")};
  const auto report = frameflow::ergodicity_report(g2, p, obs);
  bool pass = true;
  std::ostringstream s;
  s << "genus2 T=2000:";
  for (const auto& row : report.summary) {
    pass = pass && row.mean_deviation <= 0.05 + 3.0 * row.stderr_deviation;
    s << ' ' << row.observable << ' ' << fmt(row.mean_deviation) << "+-" << fmt(row.stderr_deviation);
  }
  s << " <= 0.05 (3 sigma);";

  const auto flat = geometry::flat_torus({2.0 * kPi, 2.0 * kPi});
  const std::vector<frameflow::FrameObservable> fobs{frameflow::frame_component_observable(flat, 1, 0, "v2_0")};
  frameflow::ErgodicityParams fp = p;
  fp.h = 5e-2;
  fp.space_samples = 4000;
  double initial = 0.0, lowest = 1e300;
  for (double T : {10.0, 100.0, 1000.0, 2000.0}) {
    fp.T = T;
    const auto fr = frameflow::ergodicity_report(flat, fp, fobs);
    const auto& row = fr.summary.front();
    if (T == 10.0) initial = row.mean_deviation;
    else lowest = std::min(lowest, (row.mean_deviation + 3.0 * row.stderr_deviation) / initial);
  }
  pass = pass && lowest >= 0.5;
  s << " flat-torus fiber deviation min ratio " << fmt(lowest) << " >= 0.5";
  CriterionResult r;
  r.pass = pass;
  r.summary = s.str();
  return r;
}

// ─── 6. Decay of Cesàro means ────────────────────────────────────────────────

CriterionResult decay(std::uint64_t seed) {
  const auto g2 = geometry::genus2_hyperbolic();
  transport::DecayParams p;
  p.T_grid = {1.0, 2000.0};
  p.trajectories = 100;
  p.h = 1e-2;
  p.seed = seed;
  const std::vector<transport::SymbolField> symbols{
      transport::scalar_symbol([](int, const Vec& x) { return x(0); }, 1, "x1"),
      transport::scalar_symbol([](int, const Vec& x) { return x(0) * x(1); }, 1, "x1x2"),
      transport::scalar_symbol([](int, const Vec& x) { return x(0) * x(0) - x(1) * x(1); }, 1, "x1^2-x2^2")};
  bool pass = true;
  std::ostringstream s;
  s << "genus2 ratio T=2000/T=1:";
  for (const auto& a : symbols) {
    const auto t = transport::cesaro_and_decay(g2, transport::trivial_connection(1), a, p);
    const double first = t.rows.front().estimate;
    const auto& last = t.rows.back();
    pass = pass && last.estimate - 3.0 * last.standard_error <= 0.1 * first;
    s << ' ' << a.label << ' ' << fmt(last.estimate / first);
  }
  s << " <= 0.1;";

  const auto flat = geometry::flat_torus({2.0 * kPi, 2.0 * kPi});
  const auto control = torus_symbol([](const Vec&, double c, double d) { return c * c - d * d; }, "xi1^2-xi2^2", 0);
  transport::DecayParams fp = p;
  fp.h = 5e-2;
  const auto t = transport::cesaro_and_decay(flat, transport::trivial_connection(1), control, fp);
  const double ratio = t.rows.back().estimate / t.rows.front().estimate;
  pass = pass && ratio >= 0.5;
  s << " flat-torus control ratio " << fmt(ratio) << " >= 0.5";
  CriterionResult r;
  r.pass = pass;
  r.summary = s.str();
  return r;
}

// ─── 7. Matrix Egorov convergence ────────────────────────────────────────────

CriterionResult egorov() {
  CMat b(2, 2);
  b << 1.0, 0.5, 0.5, -1.0;
  const auto symbol = transport::constant_symbol(b, "b");
  const double e16 = torus::egorov_compare(torus::default_matrix_bundle(16), symbol, 1.0, {8.0}).at(0).max_rel_err;
  const double e32 = torus::egorov_compare(torus::default_matrix_bundle(32), symbol, 1.0, {16.0}).at(0).max_rel_err;
  CriterionResult r;
  r.pass = e32 <= 0.1 && e32 <= (2.0 / 3.0) * e16;
  r.summary = "relative error K=32 shell 16 " + fmt(e32) + " <= 0.1, K=16 shell 8 " + fmt(e16) + ", ratio " +
              fmt(e32 / e16) + " <= 0.667";
  return r;
}

// ─── 8. Weyl mean and counting ───────────────────────────────────────────────

CriterionResult weyl() {
  const auto model = torus::default_scalar_bundle(32);
  const auto eig = torus::low_spectrum(model);
  const std::vector<transport::SymbolField> symbols{
      torus_symbol([](const Vec& x, double, double) { return 1.0 + 0.5 * std::cos(x(0)); }, "1+cos(x1)/2", 1),
      torus_symbol([](const Vec& x, double, double) { return 2.0 + std::sin(x(0) + x(1)); }, "2+sin(x1+x2)", 1),
      torus_symbol([](const Vec&, double c, double d) { return 1.0 + 0.5 * (c * c - d * d); }, "1+(xi1^2-xi2^2)/2", 0),
      torus_symbol([](const Vec& x, double c, double d) { return 1.5 + c * d * std::cos(x(1)); }, "1.5+xi1xi2cos(x2)", 1),
      torus_symbol([](const Vec& x, double c, double) { return 1.0 + 0.3 * std::cos(x(0)) * c * c + 0.2 * std::sin(x(1)); },
                   "1+0.3cos(x1)xi1^2+0.2sin(x2)", 1)};
  double worst = 0.0;
  for (const auto& b : symbols) {
    const auto row = torus::weyl_mean(model, eig, b, {eig.count()}).front();
    worst = std::max(worst, row.deviation / std::abs(row.target));
  }
  const double K = model.K;
  const double exponent = torus::weyl_exponent(model, eig, K * K / 16.0, K * K / 4.0);
  CriterionResult r;
  r.pass = worst <= 0.05 && std::abs(exponent - 1.0) <= 0.05;
  r.summary = "N=" + std::to_string(eig.count()) + " max relative deviation " + fmt(worst) +
              " <= 0.05 over 5 symbols, counting exponent " + fmt(exponent) + " in [0.95, 1.05]";
  return r;
}

// ─── 9. Quantum variance negative control ────────────────────────────────────

CriterionResult variance() {
  auto model = torus::free_bundle(2, 1, 32);
  const auto eig = torus::low_spectrum(model);
  const std::vector<transport::SymbolField> symbols{
      torus_symbol([](const Vec&, double c, double d) { return 1.0 + 0.5 * (c * c - d * d); }, "1+cos(2theta)/2", 0),
      torus_symbol([](const Vec&, double c, double d) { return c * d; }, "xi1xi2", 0),
      torus_symbol([](const Vec&, double c, double d) { return std::pow(c, 4) - 6.0 * c * c * d * d + std::pow(d, 4); },
                   "cos(4theta)", 0)};
  std::vector<int> Ns;
  for (int N = 100; N <= eig.count(); N += 100) Ns.push_back(N);
  if (Ns.back() != eig.count()) Ns.push_back(eig.count());
  double lowest = 1e300;
  for (const auto& b : symbols) {
    const auto rows = torus::qe_variance(model, eig, b, Ns);
    for (const auto& row : rows) lowest = std::min(lowest, row.mean / rows.front().mean);
  }
  CriterionResult r;
  r.pass = lowest >= 0.5;
  r.summary = "free torus K=32, N=100.." + std::to_string(eig.count()) + ": min variance ratio " + fmt(lowest) +
              " >= 0.5 over 3 symbols";
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = algebraic(seed); break;
    case 2: r = commutants(seed); break;
    case 3: r = states(seed); break;
    case 4: r = dynamics(seed); break;
    case 5: r = ergodicity(seed); break;
    case 6: r = decay(seed); break;
    case 7: r = egorov(); break;
    case 8: r = weyl(); break;
    case 9: r = variance(); break;
    default: throw ArgumentError("criterion must be 1.." + std::to_string(kCriterionCount));
  }
  r.id = id;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<int> group(const std::string& name) {
  if (name == "algebra") return {1, 2, 3};
  if (name == "dynamics") return {4, 5, 6};
  if (name == "egorov") return {7, 8, 9};
  if (name == "all") return {1, 2, 3, 4, 5, 6, 7, 8, 9};
  throw ArgumentError("unknown suite '" + name + "' (algebra, dynamics, egorov, all)");
}

std::string format_line(const CriterionResult& result) {
  return "criterion " + std::to_string(result.id) + (result.pass ? " PASS: " : " FAIL: ") + result.summary + " [" +
         fmt(result.seconds) + " s]";
}

}  // namespace qerg::acceptance
