/// @file src/polynomial.cpp

#include "qerg/polynomial.hpp"

#include "qerg/parallel.hpp"
#include "qerg/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include <Eigen/QR>

namespace qerg::algebra {

int Monomial::x_count() const {
  return static_cast<int>(std::count_if(letters.begin(), letters.end(),
                                        [](const Letter& l) { return l.kind == Letter::Kind::X; }));
}

int Monomial::y_count() const { return static_cast<int>(letters.size()) - x_count(); }

NcPolynomial NcPolynomial::constant(cplx c) {
  NcPolynomial p;
  p.terms_.push_back({c, {}});
  return p;
}

NcPolynomial NcPolynomial::X(int index) {
  if (index < 1) throw ArgumentError("letter index must be >= 1");
  NcPolynomial p;
  p.terms_.push_back({1.0, {{Letter::Kind::X, index}}});
  return p;
}

NcPolynomial NcPolynomial::Y(int index) {
  if (index < 1) throw ArgumentError("letter index must be >= 1");
  NcPolynomial p;
  p.terms_.push_back({1.0, {{Letter::Kind::Y, index}}});
  return p;
}

NcPolynomial NcPolynomial::parse(const std::string& text) {
  NcPolynomial out;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto fail = [&text] { throw ArgumentError("cannot parse polynomial: '" + text + "'"); };
  double sign = 1.0;
  skip();
  if (i == text.size()) fail();
  while (i < text.size()) {
    Monomial m;
    m.coeff = sign;
    skip();
    if (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) {
      char* end = nullptr;
      const double c = std::strtod(text.c_str() + i, &end);
      i = static_cast<std::size_t>(end - text.c_str());
      m.coeff *= c;
      skip();
      if (i < text.size() && text[i] == '*') ++i;
    }
    skip();
    while (i < text.size() && (text[i] == 'X' || text[i] == 'Y')) {
      const Letter::Kind kind = text[i] == 'X' ? Letter::Kind::X : Letter::Kind::Y;
      ++i;
      if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) fail();
      int index = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        index = 10 * index + (text[i] - '0');
        ++i;
      }
      if (index < 1) fail();
      m.letters.push_back({kind, index});
      skip();
      if (i < text.size() && text[i] == '*') {
        ++i;
        skip();
      }
    }
    out.terms_.push_back(m);
    skip();
    if (i == text.size()) break;
    if (text[i] == '+') sign = 1.0;
    else if (text[i] == '-') sign = -1.0;
    else fail();
    ++i;
    skip();
    if (i == text.size()) fail();
  }
  return out;
}

int NcPolynomial::degree() const {
  int d = 0;
  for (const auto& m : terms_) d = std::max(d, static_cast<int>(m.letters.size()));
  return d;
}

int NcPolynomial::max_index() const {
  int d = 0;
  for (const auto& m : terms_)
    for (const auto& l : m.letters) d = std::max(d, l.index);
  return d;
}

bool NcPolynomial::has_y() const {
  for (const auto& m : terms_)
    if (m.y_count() > 0) return true;
  return false;
}

bool NcPolynomial::balanced() const {
  for (const auto& m : terms_)
    if (m.x_count() != m.y_count()) return false;
  return true;
}

NcPolynomial NcPolynomial::operator+(const NcPolynomial& other) const {
  NcPolynomial p = *this;
  p.terms_.insert(p.terms_.end(), other.terms_.begin(), other.terms_.end());
  return p;
}

NcPolynomial NcPolynomial::operator*(const NcPolynomial& other) const {
  NcPolynomial p;
  for (const auto& a : terms_)
    for (const auto& b : other.terms_) {
      Monomial m{a.coeff * b.coeff, a.letters};
      m.letters.insert(m.letters.end(), b.letters.begin(), b.letters.end());
      p.terms_.push_back(std::move(m));
    }
  return p;
}

NcPolynomial NcPolynomial::operator*(cplx c) const {
  NcPolynomial p = *this;
  for (auto& m : p.terms_) m.coeff *= c;
  return p;
}

NcPolynomial& NcPolynomial::add_term(Monomial m) {
  terms_.push_back(std::move(m));
  return *this;
}

namespace {

CMat evaluate_monomial(const Monomial& m, const RMat& frame, const LetterAction& action,
                       const CMat& identity) {
  CMat acc = identity;
  int offset = 0;
  for (auto it = m.letters.rbegin(); it != m.letters.rend(); ++it) {
    if (it->index > frame.cols()) throw ArgumentError("letter index exceeds the dimension");
    const RVec v = frame.col(it->index - 1);
    const CMat L = action(it->kind, v, offset);
    if (L.size() == 0) return CMat::Zero(identity.rows(), identity.cols());
    acc = L * acc;
    offset += it->kind == Letter::Kind::X ? 1 : -1;
  }
  if (acc.rows() != identity.rows()) throw ArgumentError("monomial does not preserve the fiber");
  return m.coeff * acc;
}

}  // namespace

CMat evaluate_on_frame(const NcPolynomial& poly, const RMat& frame, const LetterAction& action,
                       const CMat& identity) {
  CMat sum = CMat::Zero(identity.rows(), identity.cols());
  for (const auto& m : poly.terms()) sum += evaluate_monomial(m, frame, action, identity);
  return sum;
}

RMat orthonormal_complement(const RVec& xi) {
  const Eigen::Index n = xi.size();
  Eigen::HouseholderQR<RMat> qr(xi);
  const RMat Q = qr.householderQ();
  return Q.rightCols(n - 1);
}

RMat random_frame(const RVec& xi, std::mt19937_64& rng) {
  const Eigen::Index n = xi.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  RMat F(n, n);
  F.col(0) = xi / xi.norm();
  for (Eigen::Index c = 1; c < n;) {
    RVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
    for (Eigen::Index b = 0; b < c; ++b) v -= F.col(b).dot(v) * F.col(b);
    for (Eigen::Index b = 0; b < c; ++b) v -= F.col(b).dot(v) * F.col(b);
    const double norm = v.norm();
    if (norm < 1e-8) continue;
    F.col(c++) = v / norm;
  }
  return F;
}

HaarAverage haar_average(const NcPolynomial& poly, const RVec& xi, int samples, bool exact,
                         std::uint64_t seed, const LetterAction& action, const CMat& identity) {
  const Eigen::Index n = xi.size();
  if (poly.max_index() > n) throw ArgumentError("letter index exceeds the dimension");
  HaarAverage out;
  out.exact = exact;
  if (exact) {
    const RMat comp = orthonormal_complement(xi);
    RMat frame(n, n);
    frame.col(0) = xi;
    frame.rightCols(n - 1) = comp;
    out.mean = CMat::Zero(identity.rows(), identity.cols());
    for (const auto& m : poly.terms()) {
      std::vector<int> random;
      for (const auto& l : m.letters)
        if (l.index >= 2) random.push_back(l.index);
      if (random.size() > 2) throw DegreeError("exact Haar average supports degree <= 2 in frame letters");
      if (random.empty()) {
        out.mean += evaluate_monomial(m, frame, action, identity);
      } else if (random.size() == 2 && random[0] == random[1]) {
        // Σ over an orthonormal basis of ξ^⊥ substituted for v_i, divided by n − 1.
        for (Eigen::Index c = 0; c < n - 1; ++c) {
          RMat f = frame;
          f.col(random[0] - 1) = comp.col(c);
          out.mean += evaluate_monomial(m, f, action, identity) / static_cast<double>(n - 1);
        }
      }
      // An odd count of some v_i averages to zero under v_i ↦ −v_i.
    }
    return out;
  }
  if (samples < 100) throw ArgumentError("Haar average needs at least 100 samples");
  std::vector<CMat> values(static_cast<std::size_t>(samples));
  parallel_for(samples, [&](long s) {
    Rng rng = make_rng(seed, 0x33, static_cast<std::uint64_t>(s));
    values[static_cast<std::size_t>(s)] = evaluate_on_frame(poly, random_frame(xi, rng), action, identity);
  });
  CMat sum = CMat::Zero(identity.rows(), identity.cols());
  RMat sum2 = RMat::Zero(identity.rows(), identity.cols());
  for (const auto& v : values) {
    sum += v;
    sum2 += v.cwiseAbs2();
  }
  const double N = samples;
  out.mean = sum / N;
  const RMat var = (sum2 / N - out.mean.cwiseAbs2()).cwiseMax(0.0) * (N / (N - 1.0));
  out.standard_error = std::sqrt(var.maxCoeff() / N);
  out.samples = samples;
  return out;
}

}  // namespace qerg::algebra
