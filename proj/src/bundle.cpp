/// @file src/bundle.cpp

#include "qerg/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qerg::torus {

namespace {

double phase(const Mode& m, const Vec& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) s += m[j] * x(static_cast<Eigen::Index>(j));
  return s;
}

Mode negate(const Mode& m) {
  Mode out = m;
  for (auto& v : out) v = -v;
  return out;
}

CMat pauli(int k) {
  CMat s(2, 2);
  if (k == 1) s << 0, 1, 1, 0;
  else if (k == 2) s << 0, -kI, kI, 0;
  else s << 1, 0, 0, -1;
  return s;
}

}  // namespace

CMat FourierMatrixField::evaluate(const Vec& x) const {
  CMat out = CMat::Zero(r, r);
  for (const auto& [m, c] : coeffs) out += std::exp(kI * phase(m, x)) * c;
  return out;
}

CMat FourierMatrixField::derivative(const Vec& x, int j) const {
  CMat out = CMat::Zero(r, r);
  for (const auto& [m, c] : coeffs) {
    const int mj = m[static_cast<std::size_t>(j)];
    if (mj != 0) out += kI * static_cast<double>(mj) * std::exp(kI * phase(m, x)) * c;
  }
  return out;
}

int FourierMatrixField::max_mode() const {
  int k = 0;
  for (const auto& [m, c] : coeffs) {
    if (c.norm() == 0.0) continue;
    for (int v : m) k = std::max(k, std::abs(v));
  }
  return k;
}

double FourierMatrixField::hermiticity_defect() const {
  double d = 0.0;
  for (const auto& [m, c] : coeffs) {
    const auto it = coeffs.find(negate(m));
    const CMat partner = it == coeffs.end() ? CMat::Zero(r, r) : it->second;
    d = std::max(d, (partner - c.adjoint()).norm());
  }
  return d;
}

FourierMatrixField& FourierMatrixField::add_hermitian_mode(const Mode& m, const CMat& c) {
  if (static_cast<int>(m.size()) != n || c.rows() != r || c.cols() != r) {
    throw ArgumentError("Fourier mode or coefficient has the wrong size");
  }
  const Mode neg = negate(m);
  auto add = [this](const Mode& k, const CMat& v) {
    auto it = coeffs.find(k);
    if (it == coeffs.end()) coeffs.emplace(k, v);
    else it->second += v;
  };
  add(m, c);
  add(neg, c.adjoint());
  return *this;
}

void TorusBundleModel::validate() const {
  if (n < 1 || n > 3) throw ArgumentError("torus bundle dimension must be 1..3");
  if (r < 1) throw ArgumentError("bundle rank must be >= 1");
  if (!A.empty() && static_cast<int>(A.size()) != n) throw ArgumentError("need one connection component per direction");
  if (K < 1) throw ArgumentError("truncation radius must be >= 1");
  if (shift < 0.0) throw ArgumentError("shift must be >= 0");
  auto check = [this](const FourierMatrixField& f, const char* what) {
    if (f.empty()) return;
    if (f.n != n || f.r != r) throw ArgumentError(std::string(what) + " has the wrong dimensions");
    for (const auto& [m, c] : f.coeffs) {
      if (static_cast<int>(m.size()) != n || c.rows() != r || c.cols() != r) {
        throw ArgumentError(std::string(what) + " has a malformed coefficient");
      }
    }
    if (f.hermiticity_defect() > 1e-13) throw ArgumentError(std::string(what) + " is not hermitian-valued");
  };
  for (const auto& a : A) check(a, "connection");
  check(V, "potential");
}

CMat TorusBundleModel::connection(const Vec& x, int j) const {
  if (A.empty() || A[static_cast<std::size_t>(j)].empty()) return CMat::Zero(r, r);
  return A[static_cast<std::size_t>(j)].evaluate(x);
}

CMat TorusBundleModel::potential(const Vec& x) const {
  return V.empty() ? CMat::Zero(r, r) : V.evaluate(x);
}

CMat TorusBundleModel::sub(const Vec& x, const Vec& xi) const {
  CMat s = CMat::Zero(r, r);
  const double norm = xi.norm();
  if (norm == 0.0) throw ArgumentError("sub is undefined at xi = 0");
  for (int j = 0; j < n && !A.empty(); ++j) s += (xi(j) / norm) * connection(x, j);
  return s;
}

int TorusBundleModel::max_mode() const {
  int k = V.max_mode();
  for (const auto& a : A) k = std::max(k, a.max_mode());
  return k;
}

bool TorusBundleModel::has_connection() const {
  for (const auto& a : A)
    if (!a.empty()) return true;
  return false;
}

TorusBundleModel free_bundle(int n, int r, int K) {
  TorusBundleModel m;
  m.n = n;
  m.r = r;
  m.K = K;
  m.V.n = n;
  m.V.r = r;
  m.validate();
  return m;
}

TorusBundleModel default_matrix_bundle(int K) {
  TorusBundleModel m = free_bundle(2, 2, K);
  m.A.assign(2, FourierMatrixField{2, 2, {}});
  m.A[0].add_hermitian_mode({1, 0}, 0.3 * pauli(1));
  m.A[0].add_hermitian_mode({0, 1}, -0.25 * kI * pauli(3));
  m.A[0].add_hermitian_mode({0, 0}, 0.1 * pauli(2));
  m.A[1].add_hermitian_mode({1, -1}, 0.25 * pauli(2));
  m.A[1].add_hermitian_mode({0, 1}, 0.2 * pauli(1));
  m.A[1].add_hermitian_mode({0, 0}, 0.05 * pauli(3));
  m.shift = 1.0;
  m.validate();
  return m;
}

TorusBundleModel default_scalar_bundle(int K) {
  TorusBundleModel m = free_bundle(2, 1, K);
  const CMat one = CMat::Identity(1, 1);
  m.A.assign(2, FourierMatrixField{2, 1, {}});
  m.A[0].add_hermitian_mode({1, 0}, 0.3 * one);
  m.A[0].add_hermitian_mode({0, 1}, 0.2 * kI * one);
  m.A[1].add_hermitian_mode({1, 1}, 0.25 * one);
  m.V.add_hermitian_mode({0, 1}, 0.4 * one);
  m.V.add_hermitian_mode({0, 0}, 0.5 * one);
  m.shift = 1.0;
  m.validate();
  return m;
}

geometry::ManifoldModel base_model(const TorusBundleModel& model) {
  return geometry::flat_torus(std::vector<double>(static_cast<std::size_t>(model.n), 2.0 * std::numbers::pi));
}

}  // namespace qerg::torus
