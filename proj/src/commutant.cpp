/// @file src/commutant.cpp

#include "qerg/commutant.hpp"

#include "qerg/lapack.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qerg::algebra {

namespace {

struct Block {
  CMat left;   // orthonormal basis of the target block
  CMat right;  // orthonormal basis of the source block
};

CMat range_basis(const CMat& projection) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (projection + projection.adjoint()));
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > 0.5) cols.push_back(i);
  }
  CMat b(projection.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(cols[c]);
  return b;
}

double commutator_residual(const std::vector<CMat>& gens, const CMat& m) {
  double r = 0.0;
  for (const auto& g : gens) r = std::max(r, (g * m - m * g).norm());
  return r;
}

struct BlockSolution {
  RVec sigma;          // ascending
  CMat vectors;        // columns: vec(X) for each σ (same order)
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

// X ∈ Hom(right, left): Σ_G ‖G_l X − X G_r‖² + [Q-term] through the Gram
// operator H = Σ LᴴL, then σ_k = ‖L v_k‖ on the low end of the spectrum.
BlockSolution solve_block(const std::vector<CMat>& gl, const std::vector<CMat>& gr,
                          const CMat* ql, const CMat* qr) {
  const Eigen::Index a = gl.front().rows();
  const Eigen::Index b = gr.front().rows();
  const Eigen::Index N = a * b;
  CMat H = CMat::Zero(N, N);
  CMat Sl = CMat::Zero(a, a);
  CMat Tr = CMat::Zero(b, b);
  for (std::size_t g = 0; g < gl.size(); ++g) {
    Sl += gl[g].adjoint() * gl[g];
    Tr += gr[g].conjugate() * gr[g].transpose();
  }
  // vec(G_l X − X G_r) = (I ⊗ G_l − G_rᵀ ⊗ I) vec X, column-major.
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index jj = 0; jj < b; ++jj) {
      auto blk = H.block(j * a, jj * a, a, a);
      if (j == jj) blk += Sl;
      blk.diagonal().array() += Tr(j, jj);
      for (std::size_t g = 0; g < gl.size(); ++g) {
        blk -= gr[g](jj, j) * gl[g].adjoint();        // (G_rᵀ ⊗ G_lᴴ)
        blk -= std::conj(gr[g](j, jj)) * gl[g];       // (conj(G_r) ⊗ G_l)
      }
    }
  if (ql != nullptr) {
    // (I − Qrᵀ ⊗ Ql) is an orthogonal projection; its Gram is itself.
    for (Eigen::Index j = 0; j < b; ++j)
      for (Eigen::Index jj = 0; jj < b; ++jj) {
        auto blk = H.block(j * a, jj * a, a, a);
        if (j == jj) blk.diagonal().array() += 1.0;
        blk -= (*qr)(jj, j) * (*ql);
      }
  }
  H = 0.5 * (H + H.adjoint()).eval();

  RVec lambda;
  CMat V;
  lapack::eigh(H, lambda, &V);
  BlockSolution s;
  s.rows = a;
  s.cols = b;
  s.sigma.resize(N);
  for (Eigen::Index k = 0; k < N; ++k) s.sigma(k) = std::sqrt(std::max(0.0, lambda(k)));
  const double top = s.sigma(N - 1);
  // Recompute σ directly for the small end where √λ loses accuracy.
  for (Eigen::Index k = 0; k < N; ++k) {
    if (s.sigma(k) > 1e-3 * top) break;
    const CMat X = Eigen::Map<const CMat>(V.col(k).data(), a, b);
    double r2 = 0.0;
    for (std::size_t g = 0; g < gl.size(); ++g) r2 += (gl[g] * X - X * gr[g]).squaredNorm();
    if (ql != nullptr) r2 += (X - (*ql) * X * (*qr)).squaredNorm();
    s.sigma(k) = std::sqrt(r2);
  }
  s.vectors = std::move(V);
  return s;
}

}  // namespace

CommutantResult commutant(const std::vector<CMat>& generators, const CMat* restriction,
                          const CommutantOptions& options) {
  if (generators.empty()) throw ArgumentError("commutant: empty generator list");
  const Eigen::Index d = generators.front().rows();
  for (const auto& g : generators) {
    if (g.rows() != d || g.cols() != d) throw ArgumentError("commutant: generator size mismatch");
  }
  if (restriction != nullptr && (restriction->rows() != d || restriction->cols() != d)) {
    throw ArgumentError("commutant: restriction size mismatch");
  }
  double scale = 0.0;
  for (const auto& g : generators) scale = std::max(scale, g.norm());
  if (scale == 0.0) scale = 1.0;

  std::vector<CMat> splitting = options.splitting;
  if (splitting.empty()) splitting.push_back(CMat::Identity(d, d));
  CMat total = CMat::Zero(d, d);
  for (const auto& p : splitting) {
    if (p.rows() != d || p.cols() != d) throw ArgumentError("commutant: splitting size mismatch");
    if (commutator_residual(generators, p) > 1e-10 * scale) {
      throw ArgumentError("commutant: splitting does not commute with the generators");
    }
    total += p;
  }
  if ((total - CMat::Identity(d, d)).norm() > 1e-10) {
    throw ArgumentError("commutant: splitting does not sum to the identity");
  }

  // A restriction commuting with everything is handled by compression.
  bool compress = false;
  if (restriction != nullptr) {
    compress = commutator_residual(generators, *restriction) <= 1e-10 * scale;
    if (compress) {
      for (const auto& p : splitting) compress = compress && ((*restriction) * p - p * (*restriction)).norm() <= 1e-10;
    }
  }

  std::vector<CMat> ranges;
  for (const auto& p : splitting) {
    CMat proj = p;
    if (compress) proj = (*restriction) * p;
    CMat b = range_basis(proj);
    if (b.cols() > 0) ranges.push_back(std::move(b));
  }

  std::vector<BlockSolution> sols;
  std::vector<Block> blocks;
  for (const auto& bl : ranges)
    for (const auto& br : ranges) {
      std::vector<CMat> gl, gr;
      for (const auto& g : generators) {
        gl.push_back(bl.adjoint() * g * bl);
        gr.push_back(br.adjoint() * g * br);
      }
      CMat ql, qr;
      const bool constrained = restriction != nullptr && !compress;
      if (constrained) {
        ql = bl.adjoint() * (*restriction) * bl;
        qr = br.adjoint() * (*restriction) * br;
      }
      sols.push_back(solve_block(gl, gr, constrained ? &ql : nullptr, constrained ? &qr : nullptr));
      blocks.push_back({bl, br});
    }

  double sigma_max = 0.0;
  Eigen::Index total_count = 0;
  for (const auto& s : sols) {
    sigma_max = std::max(sigma_max, s.sigma.maxCoeff());
    total_count += s.sigma.size();
  }
  CommutantResult out;
  out.threshold = options.relative_threshold * sigma_max;
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(total_count));
  for (std::size_t k = 0; k < sols.size(); ++k) {
    const auto& s = sols[k];
    for (Eigen::Index i = 0; i < s.sigma.size(); ++i) {
      all.push_back(s.sigma(i));
      if (s.sigma(i) <= out.threshold) {
        const CMat X = Eigen::Map<const CMat>(s.vectors.col(i).data(), s.rows, s.cols);
        out.basis.push_back(blocks[k].left * X * blocks[k].right.adjoint());
      }
    }
  }
  std::sort(all.begin(), all.end());
  out.singular_values = Eigen::Map<RVec>(all.data(), static_cast<Eigen::Index>(all.size()));
  out.dimension = static_cast<int>(out.basis.size());
  const double eps = std::numeric_limits<double>::epsilon() * sigma_max;
  if (out.dimension == 0) {
    out.gap = all.front() / std::max(out.threshold, eps);
  } else if (out.dimension == static_cast<int>(all.size())) {
    out.gap = std::numeric_limits<double>::infinity();
  } else {
    out.gap = all[static_cast<std::size_t>(out.dimension)] /
              std::max(all[static_cast<std::size_t>(out.dimension - 1)], eps);
  }
  return out;
}

double span_residual(const std::vector<CMat>& basis, const CMat& m) {
  const double norm = m.norm();
  if (norm == 0.0) return 0.0;
  CMat r = m;
  for (const auto& b : basis) r -= (b.adjoint() * r).trace() * b;  // ⟨b, r⟩_F b
  return r.norm() / norm;
}

std::vector<std::string> label_basis(const std::vector<CMat>& basis,
                                     const std::vector<std::pair<std::string, CMat>>& candidates,
                                     double tol) {
  std::vector<std::string> labels;
  std::vector<CMat> accepted;  // orthonormalised accepted candidates
  for (const auto& [name, cand] : candidates) {
    if (labels.size() == basis.size()) break;
    if (span_residual(basis, cand) > tol) continue;
    CMat r = cand;
    for (const auto& a : accepted) r -= (a.adjoint() * r).trace() * a;
    if (r.norm() <= tol * std::max(1.0, cand.norm())) continue;
    accepted.push_back(r / r.norm());
    labels.push_back(name);
  }
  while (labels.size() < basis.size()) labels.push_back("other");
  return labels;
}

}  // namespace qerg::algebra
