/// @file include/qerg/torus.hpp
/// @brief Finite Fourier truncation of P = ∇*∇ + V + c on a rank-r bundle
///        over T^n, its square root and half-wave propagator, quantization
///        of degree-0 symbols, wave-packet symbol extraction, the Egorov
///        comparison, Weyl means and quantum variance.
///
/// Basis: e^{ik·x} ⊗ e_a with |k|_∞ ≤ K, modes in lexicographic order and
/// the fiber index running fastest.

#pragma once

#include "qerg/bundle.hpp"
#include "qerg/transport.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace qerg::torus {

using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

class TorusBasis {
 public:
  TorusBasis(int n, int r, int K);

  int n() const { return n_; }
  int r() const { return r_; }
  int K() const { return K_; }
  int mode_count() const { return static_cast<int>(modes_.size()); }
  int size() const { return mode_count() * r_; }
  const Mode& mode(int i) const { return modes_[static_cast<std::size_t>(i)]; }
  /// Index of mode k, or −1 outside the box.
  int mode_index(const Mode& k) const;
  int index(int mode, int a) const { return mode * r_ + a; }

 private:
  int n_, r_, K_, side_;
  std::vector<Mode> modes_;
};

/// Matrix of −Σ_j(∂_j + iA_j)² + V + c. First-order couplings are
/// (k_j + k'_j)·Â_j(k' − k), exactly hermitian. TruncationError when
/// K < max(2·deg A, deg V).
SparseC assemble_P(const TorusBundleModel& model);

/// Dense route: full eigendecomposition (LAPACK zheevd).
struct DenseSpectral {
  RVec values;
  CMat vectors;
};
DenseSpectral dense_spectral(const SparseC& P);

struct SqrtPropagator {
  CMat sqrt_P;
  CMat U;  // exp(itP^{1/2})
};
/// ModelError when an eigenvalue is ≤ 0.
SqrtPropagator sqrt_and_propagator(const DenseSpectral& spectral, double t);

struct KrylovOptions {
  double tolerance = 1e-12;
  int max_dimension = 600;
  int check_every = 8;
};

/// f(P)v by Lanczos with full reorthogonalisation. Stops when two
/// successive approximations agree to tolerance·|v|. Throws ModelError when
/// `require_positive` and a Ritz value is ≤ 0.
CVec krylov_apply(const SparseC& P, const CVec& v, const std::function<cplx(double)>& f,
                  bool require_positive = true, const KrylovOptions& options = {});

/// exp(itP^{1/2}) v.
CVec propagate(const SparseC& P, const CVec& v, double t, const KrylovOptions& options = {});

/// Smallest eigenvalue of P by Lanczos on a deterministic start vector.
double smallest_eigenvalue(const SparseC& P);

/// Op(b)(e^{ik·x}v) = Σ_m b̂_m(k/|k|) e^{i(k+m)·x} v, truncated; the k = 0
/// column is zero. Needs b.x_degree ≥ 0 (ArgumentError) and ≤ K
/// (TruncationError). Fourier coefficients in x are exact for
/// trigonometric polynomials of that degree.
SparseC quantize(const TorusBasis& basis, const transport::SymbolField& b);

/// U B U†.
CMat heisenberg(const CMat& B, const CMat& U);

struct PacketOptions {
  /// Width w; 0 selects √(k̄/2).
  double width = 0.0;
};

struct ExtractionPoint {
  Vec x;
  Vec xi;  // unit
};

/// Normalised coefficients of Σ_k exp(−|k − k̄ξ̂|²/(2w²)) e^{ik·(x−x₀)} on the
/// mode box (one entry per mode). ArgumentError when w < 2; TruncationError
/// when the mass on modes within distance w of the box boundary exceeds 1e−6.
CVec wave_packet(const TorusBasis& basis, const ExtractionPoint& p, double shell, double width);

double default_width(double shell);

/// M_ab = ⟨u⊗e_a, B u⊗e_b⟩ for B given by its action on vectors.
CMat extract_symbol(const TorusBasis& basis, const std::function<CVec(const CVec&)>& apply,
                    const ExtractionPoint& p, double shell, const PacketOptions& options = {});

struct EgorovRow {
  int K = 0;
  double shell = 0.0;
  double width = 0.0;
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  int points = 0;
};

struct EgorovOptions {
  double flow_step = 1e-3;
  PacketOptions packet;
  KrylovOptions krylov;
  std::vector<ExtractionPoint> points;  // empty selects default_extraction_points(n)
};

std::vector<ExtractionPoint> default_extraction_points(int n);

/// For each shell compares the extracted symbol of e^{itP^{1/2}} Op(b)
/// e^{−itP^{1/2}} with (β_t b)(x₀, ξ̂) for the torus-bundle connection.
/// Relative errors are Frobenius norms.
std::vector<EgorovRow> egorov_compare(const TorusBundleModel& model, const transport::SymbolField& b,
                                      double t, const std::vector<double>& shells,
                                      const EgorovOptions& options = {});

/// Low part of the spectrum of P. For models without connection whose
/// potential is constant the plane waves are used directly (their order
/// breaks ties by mode index); otherwise LAPACK zheevr on the dense matrix.
struct Eigenbasis {
  RVec values;
  CMat vectors;                  // empty for the plane-wave basis
  std::vector<int> basis_index;  // plane-wave basis: position of φ_j
  bool plane_waves = false;
  int count() const { return static_cast<int>(values.size()); }
};

/// Eigenpairs with λ < (K/2)² + shift (the truncation-safe range).
Eigenbasis low_spectrum(const TorusBundleModel& model);

/// ⟨φ_j, B φ_j⟩ for j < count.
std::vector<cplx> diagonal_elements(const Eigenbasis& eig, const SparseC& B, int count);

/// ω_tr(b) = (1/r) average of Tr b over T^n × S^{n−1}: exact x-quadrature
/// for the declared x-degree and a fine ξ̂ grid (n = 2: 720 angles; n = 3:
/// 48 × 96 Gauss–trapezoid product).
cplx omega_tr(int n, const transport::SymbolField& b);

struct WeylRow {
  int N = 0;
  double mean = 0.0;
  double target = 0.0;
  double deviation = 0.0;  // |mean − target|
};

/// Cesàro means (1/N)Σ_{j<N}⟨φ_j, Op(b)φ_j⟩ for the requested N.
/// TruncationError when N exceeds the truncation-safe count.
std::vector<WeylRow> weyl_mean(const TorusBundleModel& model, const Eigenbasis& eig,
                               const transport::SymbolField& b, const std::vector<int>& Ns);

/// (1/N)Σ_{j<N}|⟨φ_j, Op(b)φ_j⟩ − ω_tr(b)|; deviation column holds the value.
std::vector<WeylRow> qe_variance(const TorusBundleModel& model, const Eigenbasis& eig,
                                 const transport::SymbolField& b, const std::vector<int>& Ns);

/// Least-squares slope of log N(λ) against log λ on [λ_lo, λ_hi] over
/// `samples` log-spaced points, with N(λ) = #{j : λ_j − shift ≤ λ}.
double weyl_exponent(const TorusBundleModel& model, const Eigenbasis& eig, double lambda_lo, double lambda_hi,
                     int samples = 64);

void write_egorov_csv(std::ostream& out, const std::vector<EgorovRow>& rows);
void write_weyl_csv(std::ostream& out, const std::vector<WeylRow>& rows);

}  // namespace qerg::torus
