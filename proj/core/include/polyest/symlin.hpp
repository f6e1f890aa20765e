#pragma once

#include "polyest/linalg.hpp"

namespace polyest {

/// Dense symmetric matrix. Construction checks symmetry against
/// 1e-12 * (largest entry) and stores (M + M^T) / 2.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  /// Symmetrizes without the tolerance check; for products that are symmetric in exact arithmetic.
  static SymMatrix symmetrize(const Matrix& m);
  static SymMatrix identity(Index n) { return symmetrize(Matrix::Identity(n, n)); }
  static SymMatrix zero(Index n) { return symmetrize(Matrix::Zero(n, n)); }
  static SymMatrix diagonal(const Vector& d);

  const Matrix& mat() const { return m_; }
  Index order() const { return m_.rows(); }
  double trace() const { return m_.trace(); }
  double operator()(Index i, Index j) const { return m_(i, j); }

  SymMatrix operator+(const SymMatrix& o) const { return symmetrize(m_ + o.m_); }
  SymMatrix operator-(const SymMatrix& o) const { return symmetrize(m_ - o.m_); }
  SymMatrix operator*(double s) const { return symmetrize(m_ * s); }

 private:
  struct Unchecked {};
  SymMatrix(const Matrix& m, Unchecked) : m_(0.5 * (m + m.transpose())) {}

  Matrix m_;
};

/// Eigendecomposition with eigenvalues in nonincreasing order; column i of
/// `vectors` belongs to `values(i)`.
struct EigenPair {
  Matrix vectors;
  Vector values;

  Matrix reconstruct() const;
};

EigenPair eig(const SymMatrix& m);
double min_eig(const SymMatrix& m);
double max_eig(const SymMatrix& m);
/// Sum of the positive eigenvalues.
double trace_pos(const SymMatrix& m);
/// [M]_+ : negative eigenvalues replaced by zero.
SymMatrix pos_part(const SymMatrix& m);
SymMatrix pos_part(const EigenPair& e);
/// PSD square root of [M]_+.
SymMatrix sqrt_psd(const SymMatrix& m);
/// Inverse square root of a positive definite matrix; throws DegeneratePointError otherwise.
SymMatrix inv_sqrt_pd(const SymMatrix& m, double rcond_min = 1e-14);

struct PolarFactors {
  Matrix u;     ///< orthogonal
  SymMatrix s;  ///< positive semidefinite, F = u * s
};

/// Polar factorization of a square matrix via a full SVD (rank-deficient input allowed).
PolarFactors polar(const Matrix& f);

/// Spectral norm (largest singular value).
double spectral_norm(const Matrix& m);

/// Symmetric 3x3 block matrix
///   [ Lambda          (B - H^T A)/2   H^T/2 ]
///   [ (B - H^T A)^T/2  Xi              0     ]
///   [ H/2              0               Theta ]
/// with Lambda (nu x nu), Xi (n x n), Theta (m x m), A (m x n), B (nu x n), H (m x nu).
SymMatrix assemble_linear_lmi(const SymMatrix& lambda_sum, const SymMatrix& xi_sum, const Matrix& a, const Matrix& b,
                              const Matrix& h, const SymMatrix& theta);

}  // namespace polyest
