#include "qerg/torus.hpp"

#include "qerg/lapack.hpp"
#include "qerg/parallel.hpp"
#include "qerg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace qerg::torus {

namespace {

constexpr double kPi = std::numbers::pi;

int linf(const Mode& m) {
  int out = 0;
  for (int v : m) out = std::max(out, std::abs(v));
  return out;
}

Mode add(const Mode& a, const Mode& b) {
  Mode out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

double norm2(const Mode& k) {
  double s = 0.0;
  for (int v : k) s += static_cast<double>(v) * v;
  return s;
}

/// Coefficients of F·G.
std::map<Mode, CMat> convolve(const FourierMatrixField& f, const FourierMatrixField& g) {
  std::map<Mode, CMat> out;
  for (const auto& [m1, c1] : f.coeffs) {
    for (const auto& [m2, c2] : g.coeffs) {
      const Mode m = add(m1, m2);
      auto it = out.find(m);
      if (it == out.end()) {
        out.emplace(m, c1 * c2);
      } else {
        it->second += c1 * c2;
      }
    }
  }
  return out;
}

using Triplet = Eigen::Triplet<cplx>;

void push_block(std::vector<Triplet>& out, int row_mode, int col_mode, int r, const CMat& block) {
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) {
      const cplx v = block(a, b);
      if (v != cplx(0.0)) out.emplace_back(row_mode * r + a, col_mode * r + b, v);
    }
  }
}

/// Lanczos with full reorthogonalisation. `on_check(alpha, beta)` is called
/// every few steps with the current tridiagonal data and returns true to
/// stop. Returns the orthonormal basis actually built.
template <class OnCheck>
std::vector<CVec> lanczos(const SparseC& P, const CVec& v, int max_dimension, int check_every,
                          std::vector<double>& alpha, std::vector<double>& beta, OnCheck&& on_check) {
  std::vector<CVec> q;
  alpha.clear();
  beta.clear();
  const double v_norm = v.norm();
  q.push_back(v / v_norm);
  const int cap = std::min<int>(max_dimension, static_cast<int>(P.rows()));
  for (int j = 0; j < cap; ++j) {
    CVec w = P * q[static_cast<std::size_t>(j)];
    const double a = q[static_cast<std::size_t>(j)].dot(w).real();
    alpha.push_back(a);
    w -= a * q[static_cast<std::size_t>(j)];
    if (j > 0) w -= beta.back() * q[static_cast<std::size_t>(j - 1)];
    for (int pass = 0; pass < 2; ++pass) {
      for (const CVec& qi : q) w -= qi.dot(w) * qi;
    }
    const double b = w.norm();
    const bool invariant = b <= 1e-13 * std::max(1.0, std::abs(a));
    const bool last = j + 1 == cap;
    if (invariant || last || (j + 1) % check_every == 0) {
      if (on_check(alpha, beta, invariant)) return q;
    }
    if (invariant || last) return q;
    beta.push_back(b);
    q.push_back(w / b);
  }
  return q;
}

void tridiagonal_eigen(const std::vector<double>& alpha, const std::vector<double>& beta, RVec& theta, RMat& S) {
  const int m = static_cast<int>(alpha.size());
  RVec diag(m);
  RVec off(std::max(0, m - 1));
  for (int i = 0; i < m; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
  for (int i = 0; i + 1 < m; ++i) off(i) = beta[static_cast<std::size_t>(i)];
  Eigen::SelfAdjointEigenSolver<RMat> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  theta = solver.eigenvalues();
  S = solver.eigenvectors();
}

CVec embed(const TorusBasis& basis, const CVec& packet, int a) {
  CVec out = CVec::Zero(basis.size());
  for (int i = 0; i < basis.mode_count(); ++i) out(basis.index(i, a)) = packet(i);
  return out;
}

transport::CotangentPoint cotangent(const Vec& x, const Vec& xi) {
  transport::CotangentPoint z;
  z.chart = 0;
  z.x = x;
  z.xi = xi;
  return z;
}

/// Gauss–Legendre nodes and weights on [−1, 1].
void gauss_legendre(int m, RVec& nodes, RVec& weights) {
  RVec diag = RVec::Zero(m);
  RVec off(m - 1);
  for (int i = 1; i < m; ++i) off(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
  Eigen::SelfAdjointEigenSolver<RMat> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  nodes = solver.eigenvalues();
  weights = 2.0 * solver.eigenvectors().row(0).array().square().transpose();
}

std::vector<Vec> sphere_directions(int n, std::vector<double>& weights) {
  std::vector<Vec> dirs;
  weights.clear();
  if (n == 1) {
    for (double s : {1.0, -1.0}) {
      Vec d(1);
      d << s;
      dirs.push_back(d);
      weights.push_back(0.5);
    }
  } else if (n == 2) {
    const int m = 720;
    for (int j = 0; j < m; ++j) {
      const double th = 2.0 * kPi * (j + 0.5) / m;
      Vec d(2);
      d << std::cos(th), std::sin(th);
      dirs.push_back(d);
      weights.push_back(1.0 / m);
    }
  } else if (n == 3) {
    RVec nodes, w;
    gauss_legendre(48, nodes, w);
    const int m = 96;
    for (int i = 0; i < nodes.size(); ++i) {
      const double c = nodes(i);
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (int j = 0; j < m; ++j) {
        const double ph = 2.0 * kPi * (j + 0.5) / m;
        Vec d(3);
        d << s * std::cos(ph), s * std::sin(ph), c;
        dirs.push_back(d);
        weights.push_back(0.5 * w(i) / m);
      }
    }
  } else {
    throw ArgumentError("omega_tr: base dimension must be 1, 2 or 3");
  }
  return dirs;
}

/// Grid points of the (2d+1)^n x-quadrature.
std::vector<Vec> x_grid(int n, int d) {
  const int G = 2 * d + 1;
  long total = 1;
  for (int j = 0; j < n; ++j) total *= G;
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Vec x(n);
    long rest = idx;
    for (int j = n - 1; j >= 0; --j) {
      x(j) = 2.0 * kPi * static_cast<double>(rest % G) / G;
      rest /= G;
    }
    out.push_back(x);
  }
  return out;
}

void check_symbol(const TorusBasis& basis, const transport::SymbolField& b) {
  if (b.x_degree < 0) throw ArgumentError("quantize: symbol '" + b.label + "' does not declare its x-degree");
  if (b.x_degree > basis.K()) throw TruncationError("quantize: symbol x-modes exceed the truncation radius");
  if (b.rank != basis.r()) throw ArgumentError("quantize: symbol rank does not match the bundle rank");
}

double constant_potential(const TorusBundleModel& model, bool& scalar_constant) {
  scalar_constant = true;
  double v0 = 0.0;
  for (const auto& [m, c] : model.V.coeffs) {
    if (linf(m) != 0) {
      if (c.norm() > 0.0) scalar_constant = false;
      continue;
    }
    v0 = c(0, 0).real();
    if ((c - CMat::Identity(model.r, model.r) * v0).norm() > 1e-14) scalar_constant = false;
  }
  return v0;
}

}  // namespace

// ─── Basis ───────────────────────────────────────────────────────────────────

TorusBasis::TorusBasis(int n, int r, int K) : n_(n), r_(r), K_(K), side_(2 * K + 1) {
  if (n < 1 || n > 3) throw ArgumentError("TorusBasis: n must be 1, 2 or 3");
  if (r < 1) throw ArgumentError("TorusBasis: rank must be positive");
  if (K < 0) throw ArgumentError("TorusBasis: K must be nonnegative");
  long total = 1;
  for (int j = 0; j < n; ++j) total *= side_;
  modes_.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Mode k(static_cast<std::size_t>(n));
    long rest = idx;
    for (int j = n - 1; j >= 0; --j) {
      k[static_cast<std::size_t>(j)] = static_cast<int>(rest % side_) - K;
      rest /= side_;
    }
    modes_.push_back(std::move(k));
  }
}

int TorusBasis::mode_index(const Mode& k) const {
  int idx = 0;
  for (int j = 0; j < n_; ++j) {
    const int v = k[static_cast<std::size_t>(j)];
    if (v < -K_ || v > K_) return -1;
    idx = idx * side_ + (v + K_);
  }
  return idx;
}

// ─── Assembly ────────────────────────────────────────────────────────────────

SparseC assemble_P(const TorusBundleModel& model) {
  model.validate();
  int deg_A = 0;
  for (const auto& a : model.A) deg_A = std::max(deg_A, a.max_mode());
  if (2 * deg_A > model.K || model.V.max_mode() > model.K) {
    throw TruncationError("assemble_P: K = " + std::to_string(model.K) +
                          " cannot represent the coefficient modes of A² and V");
  }
  const TorusBasis basis(model.n, model.r, model.K);
  const int r = model.r;

  std::map<Mode, CMat> zeroth = model.V.coeffs;
  for (const auto& a : model.A) {
    for (auto& [m, c] : convolve(a, a)) {
      auto it = zeroth.find(m);
      if (it == zeroth.end()) {
        zeroth.emplace(m, c);
      } else {
        it->second += c;
      }
    }
  }

  std::vector<Triplet> triplets;
  const CMat id = CMat::Identity(r, r);
  for (int i = 0; i < basis.mode_count(); ++i) {
    const Mode& k = basis.mode(i);
    push_block(triplets, i, i, r, (norm2(k) + model.shift) * id);
    for (const auto& [m, c] : zeroth) {
      const int target = basis.mode_index(add(k, m));
      if (target >= 0) push_block(triplets, target, i, r, c);
    }
    for (std::size_t j = 0; j < model.A.size(); ++j) {
      for (const auto& [m, c] : model.A[j].coeffs) {
        const Mode kp = add(k, m);
        const int target = basis.mode_index(kp);
        if (target < 0) continue;
        const double weight = static_cast<double>(k[j] + kp[j]);
        if (weight != 0.0) push_block(triplets, target, i, r, weight * c);
      }
    }
  }
  SparseC P(basis.size(), basis.size());
  P.setFromTriplets(triplets.begin(), triplets.end());
  P.makeCompressed();
  return P;
}

// ─── Dense route ─────────────────────────────────────────────────────────────

DenseSpectral dense_spectral(const SparseC& P) {
  DenseSpectral out;
  lapack::eigh(CMat(P), out.values, &out.vectors);
  return out;
}

SqrtPropagator sqrt_and_propagator(const DenseSpectral& spectral, double t) {
  if (spectral.values.size() == 0) throw ArgumentError("sqrt_and_propagator: empty spectrum");
  if (spectral.values.minCoeff() <= 0.0) {
    throw ModelError("sqrt_and_propagator: nonpositive eigenvalue " + std::to_string(spectral.values.minCoeff()) +
                     "; increase the shift");
  }
  const RVec root = spectral.values.cwiseSqrt();
  CVec phase(root.size());
  for (int i = 0; i < root.size(); ++i) phase(i) = std::exp(kI * t * root(i));
  const CMat& Q = spectral.vectors;
  SqrtPropagator out;
  out.sqrt_P = Q * root.cast<cplx>().asDiagonal() * Q.adjoint();
  out.U = Q * phase.asDiagonal() * Q.adjoint();
  return out;
}

// ─── Krylov route ────────────────────────────────────────────────────────────

CVec krylov_apply(const SparseC& P, const CVec& v, const std::function<cplx(double)>& f, bool require_positive,
                  const KrylovOptions& options) {
  const double v_norm = v.norm();
  if (v_norm == 0.0) return CVec::Zero(v.size());
  CVec coeffs, previous;
  bool converged = false;
  std::vector<double> alpha, beta;
  auto check = [&](const std::vector<double>& a, const std::vector<double>& b, bool exhausted) {
    RVec theta;
    RMat S;
    tridiagonal_eigen(a, b, theta, S);
    if (require_positive && theta.minCoeff() <= 0.0) {
      throw ModelError("krylov_apply: operator is not positive (Ritz value " + std::to_string(theta.minCoeff()) +
                       "); increase the shift");
    }
    CVec fe(theta.size());
    for (int i = 0; i < theta.size(); ++i) fe(i) = f(theta(i)) * S(0, i);
    coeffs = v_norm * (S.cast<cplx>() * fe);
    if (exhausted) {
      converged = true;
      return true;
    }
    if (previous.size() > 0) {
      CVec padded = CVec::Zero(coeffs.size());
      padded.head(previous.size()) = previous;
      if ((coeffs - padded).norm() <= options.tolerance * v_norm) {
        converged = true;
        return true;
      }
    }
    previous = coeffs;
    return false;
  };
  const auto q = lanczos(P, v, options.max_dimension, options.check_every, alpha, beta, check);
  if (!converged) throw Error("krylov_apply: no convergence within the Krylov dimension limit");
  CVec out = CVec::Zero(v.size());
  for (int i = 0; i < coeffs.size(); ++i) out += coeffs(i) * q[static_cast<std::size_t>(i)];
  return out;
}

CVec propagate(const SparseC& P, const CVec& v, double t, const KrylovOptions& options) {
  return krylov_apply(
      P, v, [t](double lambda) { return std::exp(kI * t * std::sqrt(std::max(lambda, 0.0))); }, true, options);
}

double smallest_eigenvalue(const SparseC& P) {
  Rng rng = make_rng(0x5eed, 0x51, 0);
  std::normal_distribution<double> normal;
  CVec v(P.rows());
  for (int i = 0; i < v.size(); ++i) v(i) = cplx(normal(rng), normal(rng));
  double last = std::numeric_limits<double>::infinity();
  double value = last;
  std::vector<double> alpha, beta;
  lanczos(P, v, 400, 10, alpha, beta, [&](const std::vector<double>& a, const std::vector<double>& b, bool) {
    RVec theta;
    RMat S;
    tridiagonal_eigen(a, b, theta, S);
    value = theta.minCoeff();
    const bool done = std::abs(value - last) <= 1e-12 * std::max(1.0, std::abs(value));
    last = value;
    return done;
  });
  return value;
}

// ─── Quantization ────────────────────────────────────────────────────────────

SparseC quantize(const TorusBasis& basis, const transport::SymbolField& b) {
  check_symbol(basis, b);
  const int n = basis.n();
  const int r = basis.r();
  const int d = b.x_degree;
  const std::vector<Vec> grid = x_grid(n, d);
  const TorusBasis shifts(n, 1, d);
  const double inv = 1.0 / static_cast<double>(grid.size());

  // Phase table e^{−im·x_g}.
  CMat phase(shifts.mode_count(), static_cast<long>(grid.size()));
  for (int s = 0; s < shifts.mode_count(); ++s) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += shifts.mode(s)[static_cast<std::size_t>(j)] * grid[g](j);
      phase(s, static_cast<long>(g)) = std::exp(-kI * dot) * inv;
    }
  }

  std::vector<std::vector<Triplet>> columns(static_cast<std::size_t>(basis.mode_count()));
  parallel_for(basis.mode_count(), [&](long i) {
    const Mode& k = basis.mode(static_cast<int>(i));
    const double len = std::sqrt(norm2(k));
    if (len == 0.0) return;
    Vec xi(n);
    for (int j = 0; j < n; ++j) xi(j) = k[static_cast<std::size_t>(j)] / len;
    std::vector<CMat> samples;
    samples.reserve(grid.size());
    for (const Vec& x : grid) samples.push_back(b(cotangent(x, xi)));
    auto& out = columns[static_cast<std::size_t>(i)];
    for (int s = 0; s < shifts.mode_count(); ++s) {
      const int target = basis.mode_index(add(k, shifts.mode(s)));
      if (target < 0) continue;
      CMat c = CMat::Zero(r, r);
      for (std::size_t g = 0; g < grid.size(); ++g) c += phase(s, static_cast<long>(g)) * samples[g];
      for (int a = 0; a < r; ++a) {
        for (int bb = 0; bb < r; ++bb) {
          if (std::abs(c(a, bb)) > 1e-15) out.emplace_back(target * r + a, static_cast<int>(i) * r + bb, c(a, bb));
        }
      }
    }
  });
  std::vector<Triplet> triplets;
  for (auto& col : columns) triplets.insert(triplets.end(), col.begin(), col.end());
  SparseC B(basis.size(), basis.size());
  B.setFromTriplets(triplets.begin(), triplets.end());
  B.makeCompressed();
  return B;
}

CMat heisenberg(const CMat& B, const CMat& U) { return U * B * U.adjoint(); }

// ─── Wave packets ────────────────────────────────────────────────────────────

double default_width(double shell) { return std::max(2.0, std::sqrt(shell / 2.0)); }

CVec wave_packet(const TorusBasis& basis, const ExtractionPoint& p, double shell, double width) {
  if (width < 2.0) throw ArgumentError("wave_packet: width must be at least 2");
  const int n = basis.n();
  if (p.x.size() != n || p.xi.size() != n) throw ArgumentError("wave_packet: point dimension mismatch");
  CVec u(basis.mode_count());
  double total = 0.0;
  double edge = 0.0;
  for (int i = 0; i < basis.mode_count(); ++i) {
    const Mode& k = basis.mode(i);
    double dist2 = 0.0;
    double dot = 0.0;
    for (int j = 0; j < n; ++j) {
      const double kj = k[static_cast<std::size_t>(j)];
      dist2 += std::pow(kj - shell * p.xi(j), 2);
      dot += kj * p.x(j);
    }
    const double amp = std::exp(-dist2 / (2.0 * width * width));
    u(i) = amp * std::exp(-kI * dot);
    total += amp * amp;
    if (basis.K() - linf(k) < width) edge += amp * amp;
  }
  if (edge > 1e-6 * total) {
    throw TruncationError("wave_packet: packet mass near the truncation boundary is " +
                          std::to_string(edge / total) + " (> 1e-6)");
  }
  return u / std::sqrt(total);
}

CMat extract_symbol(const TorusBasis& basis, const std::function<CVec(const CVec&)>& apply,
                    const ExtractionPoint& p, double shell, const PacketOptions& options) {
  const double w = options.width > 0.0 ? options.width : default_width(shell);
  const CVec u = wave_packet(basis, p, shell, w);
  const int r = basis.r();
  std::vector<CVec> vecs;
  for (int a = 0; a < r; ++a) vecs.push_back(embed(basis, u, a));
  CMat M(r, r);
  for (int b = 0; b < r; ++b) {
    const CVec Bv = apply(vecs[static_cast<std::size_t>(b)]);
    for (int a = 0; a < r; ++a) M(a, b) = vecs[static_cast<std::size_t>(a)].dot(Bv);
  }
  return M;
}

// ─── Egorov ──────────────────────────────────────────────────────────────────

std::vector<ExtractionPoint> default_extraction_points(int n) {
  std::vector<ExtractionPoint> out;
  auto make = [&](std::initializer_list<double> x, std::initializer_list<double> xi) {
    ExtractionPoint p;
    p.x = Vec::Map(std::data(x), static_cast<long>(x.size()));
    p.xi = Vec::Map(std::data(xi), static_cast<long>(xi.size()));
    p.xi.normalize();
    out.push_back(p);
  };
  if (n == 2) {
    make({0.3, 1.1}, {0.6, 0.8});
    make({2.0, 4.0}, {0.8, -0.6});
    make({4.5, 0.7}, {-0.6, 0.8});
    make({1.7, 2.9}, {1.0, 1.0});
    make({5.5, 5.2}, {-1.0, 1.0});
    make({3.1, 3.3}, {-0.8, -0.6});
  } else if (n == 3) {
    make({0.3, 1.1, 2.2}, {0.48, 0.6, 0.64});
    make({2.0, 4.0, 0.5}, {-0.6, 0.64, 0.48});
    make({4.5, 0.7, 5.1}, {0.64, -0.48, 0.6});
    make({1.7, 2.9, 3.6}, {1.0, 1.0, 1.0});
  } else if (n == 1) {
    make({0.4}, {1.0});
    make({3.3}, {-1.0});
  } else {
    throw ArgumentError("default_extraction_points: n must be 1, 2 or 3");
  }
  return out;
}

std::vector<EgorovRow> egorov_compare(const TorusBundleModel& model, const transport::SymbolField& b, double t,
                                      const std::vector<double>& shells, const EgorovOptions& options) {
  const TorusBasis basis(model.n, model.r, model.K);
  const SparseC P = assemble_P(model);
  const SparseC B = quantize(basis, b);
  const geometry::ManifoldModel base = base_model(model);
  const transport::ConnectionSpec conn = transport::torus_bundle_connection(model);
  const transport::SymbolField predicted = transport::beta_evolve(base, conn, b, t, options.flow_step);
  const std::vector<ExtractionPoint> points =
      options.points.empty() ? default_extraction_points(model.n) : options.points;
  const int r = model.r;

  std::vector<EgorovRow> rows;
  for (double shell : shells) {
    EgorovRow row;
    row.K = model.K;
    row.shell = shell;
    row.width = options.packet.width > 0.0 ? options.packet.width : default_width(shell);
    row.points = static_cast<int>(points.size());
    for (const ExtractionPoint& p : points) {
      const CVec u = wave_packet(basis, p, shell, row.width);
      std::vector<CVec> y;
      for (int a = 0; a < r; ++a) y.push_back(propagate(P, embed(basis, u, a), -t, options.krylov));
      CMat M(r, r);
      for (int bb = 0; bb < r; ++bb) {
        const CVec z = B * y[static_cast<std::size_t>(bb)];
        for (int a = 0; a < r; ++a) M(a, bb) = y[static_cast<std::size_t>(a)].dot(z);
      }
      const CMat expect = predicted(cotangent(p.x, p.xi));
      const double err = (M - expect).norm() / expect.norm();
      row.max_rel_err = std::max(row.max_rel_err, err);
      row.mean_rel_err += err / static_cast<double>(points.size());
    }
    rows.push_back(row);
  }
  return rows;
}

// ─── Spectra ─────────────────────────────────────────────────────────────────

Eigenbasis low_spectrum(const TorusBundleModel& model) {
  model.validate();
  const TorusBasis basis(model.n, model.r, model.K);
  const double half = model.K / 2.0;
  const double cutoff = half * half + model.shift;
  bool scalar_constant = false;
  const double v0 = constant_potential(model, scalar_constant);

  Eigenbasis out;
  if (!model.has_connection() && scalar_constant) {
    std::vector<std::pair<double, int>> entries;
    for (int i = 0; i < basis.mode_count(); ++i) {
      const double lambda = norm2(basis.mode(i)) + v0 + model.shift;
      if (lambda >= cutoff) continue;
      for (int a = 0; a < model.r; ++a) entries.emplace_back(lambda, basis.index(i, a));
    }
    std::sort(entries.begin(), entries.end());
    out.plane_waves = true;
    out.values.resize(static_cast<long>(entries.size()));
    for (std::size_t j = 0; j < entries.size(); ++j) {
      out.values(static_cast<long>(j)) = entries[j].first;
      out.basis_index.push_back(entries[j].second);
    }
    return out;
  }

  const SparseC P = assemble_P(model);
  const CMat dense(P);
  const int size = basis.size();
  long free_count = 0;
  for (int i = 0; i < basis.mode_count(); ++i) {
    if (norm2(basis.mode(i)) < half * half) ++free_count;
  }
  int want = std::min<int>(size, static_cast<int>(1.2 * free_count * model.r) + 40);
  while (true) {
    RVec values;
    CMat vectors;
    lapack::eigh_range(dense, 0, want - 1, values, vectors);
    if (values(want - 1) >= cutoff || want == size) {
      int keep = 0;
      while (keep < values.size() && values(keep) < cutoff) ++keep;
      out.values = values.head(keep);
      out.vectors = vectors.leftCols(keep);
      return out;
    }
    want = std::min(size, 2 * want);
  }
}

std::vector<cplx> diagonal_elements(const Eigenbasis& eig, const SparseC& B, int count) {
  if (count > eig.count()) throw TruncationError("diagonal_elements: requested more eigenpairs than available");
  std::vector<cplx> out(static_cast<std::size_t>(count));
  if (eig.plane_waves) {
    for (int j = 0; j < count; ++j) {
      const int idx = eig.basis_index[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(j)] = B.coeff(idx, idx);
    }
    return out;
  }
  const CMat Bphi = B * eig.vectors.leftCols(count);
  for (int j = 0; j < count; ++j) out[static_cast<std::size_t>(j)] = eig.vectors.col(j).dot(Bphi.col(j));
  return out;
}

cplx omega_tr(int n, const transport::SymbolField& b) {
  if (b.x_degree < 0) throw ArgumentError("omega_tr: symbol '" + b.label + "' does not declare its x-degree");
  std::vector<double> weights;
  const std::vector<Vec> dirs = sphere_directions(n, weights);
  const std::vector<Vec> grid = x_grid(n, b.x_degree);
  std::vector<cplx> partial(dirs.size());
  parallel_for(static_cast<long>(dirs.size()), [&](long i) {
    cplx s = 0.0;
    for (const Vec& x : grid) s += b(cotangent(x, dirs[static_cast<std::size_t>(i)])).trace();
    partial[static_cast<std::size_t>(i)] = s * weights[static_cast<std::size_t>(i)];
  });
  const cplx total = std::accumulate(partial.begin(), partial.end(), cplx(0.0));
  return total / (static_cast<double>(grid.size()) * b.rank);
}

namespace {

std::vector<cplx> checked_diagonal(const TorusBundleModel& model, const Eigenbasis& eig,
                                   const transport::SymbolField& b, const std::vector<int>& Ns) {
  int largest = 0;
  for (int N : Ns) {
    if (N < 1) throw ArgumentError("weyl_mean: N must be positive");
    largest = std::max(largest, N);
  }
  if (largest > eig.count()) {
    throw TruncationError("weyl_mean: N = " + std::to_string(largest) + " exceeds the truncation-safe count " +
                          std::to_string(eig.count()));
  }
  const TorusBasis basis(model.n, model.r, model.K);
  return diagonal_elements(eig, quantize(basis, b), largest);
}

}  // namespace

std::vector<WeylRow> weyl_mean(const TorusBundleModel& model, const Eigenbasis& eig, const transport::SymbolField& b,
                               const std::vector<int>& Ns) {
  const std::vector<cplx> diag = checked_diagonal(model, eig, b, Ns);
  const double target = omega_tr(model.n, b).real();
  std::vector<WeylRow> rows;
  for (int N : Ns) {
    cplx s = 0.0;
    for (int j = 0; j < N; ++j) s += diag[static_cast<std::size_t>(j)];
    WeylRow row;
    row.N = N;
    row.mean = s.real() / N;
    row.target = target;
    row.deviation = std::abs(row.mean - target);
    rows.push_back(row);
  }
  return rows;
}

std::vector<WeylRow> qe_variance(const TorusBundleModel& model, const Eigenbasis& eig, const transport::SymbolField& b,
                                 const std::vector<int>& Ns) {
  const std::vector<cplx> diag = checked_diagonal(model, eig, b, Ns);
  const cplx target = omega_tr(model.n, b);
  std::vector<WeylRow> rows;
  for (int N : Ns) {
    double s = 0.0;
    for (int j = 0; j < N; ++j) s += std::abs(diag[static_cast<std::size_t>(j)] - target);
    WeylRow row;
    row.N = N;
    row.mean = s / N;
    row.target = target.real();
    row.deviation = row.mean;
    rows.push_back(row);
  }
  return rows;
}

double weyl_exponent(const TorusBundleModel& model, const Eigenbasis& eig, double lambda_lo, double lambda_hi,
                     int samples) {
  if (!(lambda_lo > 0.0) || lambda_hi <= lambda_lo || samples < 2) {
    throw ArgumentError("weyl_exponent: need 0 < lambda_lo < lambda_hi and at least two samples");
  }
  if (eig.count() == 0 || eig.values(eig.count() - 1) - model.shift < lambda_hi) {
    const double half = model.K / 2.0;
    if (lambda_hi > half * half) throw TruncationError("weyl_exponent: lambda_hi exceeds the truncation-safe range");
  }
  std::vector<double> shifted(static_cast<std::size_t>(eig.count()));
  for (int j = 0; j < eig.count(); ++j) shifted[static_cast<std::size_t>(j)] = eig.values(j) - model.shift;
  std::sort(shifted.begin(), shifted.end());
  RVec X(samples), Y(samples);
  for (int i = 0; i < samples; ++i) {
    const double lambda = lambda_lo * std::pow(lambda_hi / lambda_lo, static_cast<double>(i) / (samples - 1));
    const auto count = std::upper_bound(shifted.begin(), shifted.end(), lambda) - shifted.begin();
    if (count == 0) throw ArgumentError("weyl_exponent: empty counting function at lambda_lo");
    X(i) = std::log(lambda);
    Y(i) = std::log(static_cast<double>(count));
  }
  const double mx = X.mean();
  const double my = Y.mean();
  return ((X.array() - mx) * (Y.array() - my)).sum() / (X.array() - mx).square().sum();
}

void write_egorov_csv(std::ostream& out, const std::vector<EgorovRow>& rows) {
  out << "K,shell,width,max_rel_err,mean_rel_err,points\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.K << ',' << r.shell << ',' << r.width << ',' << r.max_rel_err << ',' << r.mean_rel_err << ','
        << r.points << '\n';
  }
}

void write_weyl_csv(std::ostream& out, const std::vector<WeylRow>& rows) {
  out << "N,mean,target,deviation\n";
  out.precision(12);
  for (const auto& r : rows) out << r.N << ',' << r.mean << ',' << r.target << ',' << r.deviation << '\n';
}

}  // namespace qerg::torus
