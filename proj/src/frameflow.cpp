/// @file src/frameflow.cpp

#include "qerg/frameflow.hpp"

#include "qerg/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace qerg::frameflow {

using geometry::FlowState;

namespace {

constexpr double kFrameTolerance = 1e-8;

Mat cometric(const ManifoldModel& model, int chart, const Vec& x) {
  return model.chart(chart).metric(x).inverse();
}

void gram_schmidt(const Mat& ginv, const Vec& first, std::vector<Vec>& rest) {
  for (std::size_t a = 0; a < rest.size(); ++a) {
    Vec& v = rest[a];
    v -= first.dot(ginv * v) * first;
    for (std::size_t b = 0; b < a; ++b) v -= rest[b].dot(ginv * v) * rest[b];
    const double n2 = v.dot(ginv * v);
    if (!(n2 > 1e-24)) throw ArgumentError("frame is rank deficient");
    v /= std::sqrt(n2);
  }
}

template <class Visit>
KFrameState run_frame_flow(const ManifoldModel& model, const KFrameState& start, double t, double h,
                           Visit&& visit) {
  if (orthonormality_residual(model, start) > kFrameTolerance) {
    throw ArgumentError("frame is not orthonormal");
  }
  const geometry::StepPlan plan = geometry::plan_steps(t, h);
  FlowState s = geometry::make_flow_state(geometry::normalize_unit(model, start.base));
  s.carried = start.rest;
  gram_schmidt(cometric(model, s.chart, s.x), s.xi, s.carried);

  auto snapshot = [&s] {
    KFrameState f;
    f.base = geometry::base_point(s);
    f.rest = s.carried;
    return f;
  };
  visit(0.0, snapshot());
  for (long i = 0; i < plan.steps; ++i) {
    geometry::advance(model, s, plan.step);
    gram_schmidt(cometric(model, s.chart, s.x), s.xi, s.carried);
    visit(static_cast<double>(i + 1) * plan.step, snapshot());
  }
  return snapshot();
}

}  // namespace

double orthonormality_residual(const ManifoldModel& model, const KFrameState& state) {
  const Mat ginv = cometric(model, state.base.chart, state.base.x);
  double r = 0.0;
  for (int a = 0; a < state.k(); ++a)
    for (int b = a; b < state.k(); ++b) {
      const double ip = state.vector(a).dot(ginv * state.vector(b));
      r = std::max(r, std::abs(ip - (a == b ? 1.0 : 0.0)));
    }
  return r;
}

KFrameState orthonormalize(const ManifoldModel& model, KFrameState state) {
  if (state.k() > model.dim) throw ArgumentError("frame has more vectors than the dimension");
  state.base = geometry::normalize_unit(model, state.base);
  gram_schmidt(cometric(model, state.base.chart, state.base.x), state.base.xi, state.rest);
  return state;
}

KFrameState haar_completion(const ManifoldModel& model, const CotangentPoint& base, int k,
                            Rng& rng) {
  const int n = model.dim;
  if (k < 1 || k > n) throw ArgumentError("frame size must lie in 1..dim");
  const Mat g = model.chart(base.chart).metric(base.x);
  const Mat root = geometry::spd_sqrt(g);
  const Mat inv_root = geometry::spd_inverse_sqrt(g);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Orthonormalise Gaussian vectors in coframe components, then map back.
  std::vector<Vec> c;
  c.push_back(inv_root * base.xi);
  c.back().normalize();
  KFrameState out;
  out.base = base;
  while (static_cast<int>(c.size()) < k) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    for (const Vec& u : c) v -= u.dot(v) * u;
    const double norm = v.norm();
    if (norm < 1e-8) continue;
    c.push_back(v / norm);
    out.rest.push_back(root * c.back());
  }
  return out;
}

std::vector<KFrameState> sample_frames(const ManifoldModel& model, int k, int count,
                                       std::uint64_t seed) {
  const auto bases = geometry::sample_liouville(model, count, seed);
  std::vector<KFrameState> out;
  out.reserve(bases.size());
  for (std::size_t i = 0; i < bases.size(); ++i) {
    Rng rng = make_rng(seed, 0x22u, i);
    out.push_back(haar_completion(model, bases[i], k, rng));
  }
  return out;
}

KFrameState frame_flow(const ManifoldModel& model, const KFrameState& state, double t, double h,
                       std::vector<FrameSample>* samples) {
  if (samples != nullptr) samples->clear();
  return run_frame_flow(model, state, t, h, [samples](double time, KFrameState f) {
    if (samples != nullptr) samples->push_back({time, std::move(f)});
  });
}

cplx birkhoff_average(const ManifoldModel& model, const FrameObservable& obs,
                      const KFrameState& state, double T, double h) {
  if (!(T > 0.0)) throw ArgumentError("averaging time must be positive");
  const geometry::StepPlan plan = geometry::plan_steps(T, h);
  cplx sum = 0.0;
  cplx last = 0.0;
  bool first = true;
  run_frame_flow(model, state, T, h, [&](double, const KFrameState& f) {
    const cplx v = obs.evaluator(f);
    sum += first ? 0.5 * v : v;
    first = false;
    last = v;
  });
  sum -= 0.5 * last;
  return sum / static_cast<double>(plan.steps);
}

Mat kahler_integrals(const ManifoldModel& model, const KFrameState& state) {
  if (!model.has_complex_structure()) {
    throw CapabilityError("model has no complex structure");
  }
  const Mat g = model.chart(state.base.chart).metric(state.base.x);
  const Mat J = model.complex_structure(state.base.x);
  const int k = state.k();
  std::vector<Vec> v;
  for (int a = 0; a < k; ++a) v.push_back(g.ldlt().solve(state.vector(a)));
  Mat M(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) M(a, b) = v[static_cast<std::size_t>(a)].dot(g * (J * v[static_cast<std::size_t>(b)]));
  return M;
}

FrameObservable constant_observable(double value) {
  return {[value](const KFrameState&) { return cplx(value); }, "constant"};
}

FrameObservable base_observable(std::function<double(int, const Vec&)> f, std::string label) {
  return {[f = std::move(f)](const KFrameState& s) { return cplx(f(s.base.chart, s.base.x)); },
          std::move(label)};
}

FrameObservable frame_component_observable(const ManifoldModel& model, int a, int component,
                                           std::string label) {
  if (component < 0 || component >= model.dim) throw ArgumentError("component out of range");
  return {[&model, a, component](const KFrameState& s) {
            if (a >= s.k()) throw ArgumentError("frame vector index out of range");
            const Vec c = geometry::coframe_components(model, s.base.chart, s.base.x, s.vector(a));
            return cplx(c(component));
          },
          std::move(label)};
}

ErgodicityReport ergodicity_report(const ManifoldModel& model, const ErgodicityParams& params,
                                   const std::vector<FrameObservable>& observables) {
  if (params.ensemble < 1) throw ArgumentError("ensemble must be >= 1");
  if (observables.empty()) throw ArgumentError("no observables");
  const std::size_t nobs = observables.size();

  const auto space = sample_frames(model, params.k, params.space_samples, derive_seed(params.seed, 1));
  std::vector<double> space_avg(nobs, 0.0);
  std::vector<double> sup(nobs, 0.0);
  for (const auto& f : space) {
    for (std::size_t o = 0; o < nobs; ++o) {
      const double v = observables[o].evaluator(f).real();
      space_avg[o] += v;
      sup[o] = std::max(sup[o], std::abs(v));
    }
  }
  for (auto& s : space_avg) s /= static_cast<double>(space.size());

  const auto starts = sample_frames(model, params.k, params.ensemble, derive_seed(params.seed, 2));
  std::vector<std::vector<double>> time_avg(starts.size(), std::vector<double>(nobs, 0.0));
  parallel_for(static_cast<long>(starts.size()), [&](long i) {
    const geometry::StepPlan plan = geometry::plan_steps(params.T, params.h);
    std::vector<double> sum(nobs, 0.0);
    std::vector<double> last(nobs, 0.0);
    bool first = true;
    run_frame_flow(model, starts[static_cast<std::size_t>(i)], params.T, params.h,
                   [&](double, const KFrameState& f) {
                     for (std::size_t o = 0; o < nobs; ++o) {
                       const double v = observables[o].evaluator(f).real();
                       sum[o] += first ? 0.5 * v : v;
                       last[o] = v;
                     }
                     first = false;
                   });
    for (std::size_t o = 0; o < nobs; ++o) {
      time_avg[static_cast<std::size_t>(i)][o] = (sum[o] - 0.5 * last[o]) / static_cast<double>(plan.steps);
    }
  });

  ErgodicityReport report;
  for (std::size_t o = 0; o < nobs; ++o) {
    const double scale = sup[o] > 0.0 ? sup[o] : 1.0;
    ErgodicitySummary s;
    s.observable = observables[o].label;
    s.space_average = space_avg[o];
    s.sup_norm = sup[o];
    double sum = 0.0;
    double sum2 = 0.0;
    double mean_time = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const double dev = std::abs(time_avg[i][o] - space_avg[o]) / scale;
      report.rows.push_back({observables[o].label, static_cast<int>(i), time_avg[i][o], space_avg[o], dev});
      sum += dev;
      sum2 += dev * dev;
      mean_time += time_avg[i][o];
    }
    const double m = static_cast<double>(starts.size());
    s.mean_deviation = sum / m;
    s.stderr_deviation = m > 1 ? std::sqrt(std::max(0.0, sum2 / m - s.mean_deviation * s.mean_deviation) / (m - 1)) : 0.0;
    s.ensemble_deviation = std::abs(mean_time / m - space_avg[o]) / scale;
    report.summary.push_back(s);
  }
  return report;
}

void write_report_csv(std::ostream& out, const ErgodicityReport& report) {
  out << "observable,trajectory,time_average,space_average,deviation\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, ",%d,%.12g,%.12g,%.12g\n", r.trajectory, r.time_average,
                  r.space_average, r.deviation);
    out << r.observable << buf;
  }
}

}  // namespace qerg::frameflow
