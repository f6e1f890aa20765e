#include "polyest/symlin.hpp"

#include <string>

namespace polyest {

SymMatrix::SymMatrix(const Matrix& m) {
  require_dims(m.rows() == m.cols(), "symmetric matrix must be square");
  if (m.size() > 0) {
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * magnitude_scale(m))
      throw InvalidArgument("matrix is not symmetric (asymmetry " + std::to_string(asym) + ")");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::symmetrize(const Matrix& m) {
  require_dims(m.rows() == m.cols(), "symmetric matrix must be square");
  return SymMatrix(m, Unchecked{});
}

SymMatrix SymMatrix::diagonal(const Vector& d) { return symmetrize(d.asDiagonal().toDenseMatrix()); }

Matrix EigenPair::reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }

EigenPair eig(const SymMatrix& m) {
  const Index n = m.order();
  if (n == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat());
  if (es.info() != Eigen::Success)
    throw ConvergenceError("symmetric eigensolver did not converge (order " + std::to_string(n) +
                           ", max |entry| " + std::to_string(magnitude_scale(m.mat())) + ")");
  EigenPair out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

double min_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver did not converge");
  return es.eigenvalues()(0);
}

double max_eig(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver did not converge");
  return es.eigenvalues()(m.order() - 1);
}

double trace_pos(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver did not converge");
  return es.eigenvalues().cwiseMax(0.0).sum();
}

SymMatrix pos_part(const EigenPair& e) {
  return SymMatrix::symmetrize(e.vectors * e.values.cwiseMax(0.0).asDiagonal() * e.vectors.transpose());
}

SymMatrix pos_part(const SymMatrix& m) { return pos_part(eig(m)); }

SymMatrix sqrt_psd(const SymMatrix& m) {
  const EigenPair e = eig(m);
  const Vector r = e.values.cwiseMax(0.0).cwiseSqrt();
  return SymMatrix::symmetrize(e.vectors * r.asDiagonal() * e.vectors.transpose());
}

SymMatrix inv_sqrt_pd(const SymMatrix& m, double rcond_min) {
  const EigenPair e = eig(m);
  const double top = e.values.size() ? e.values(0) : 0.0;
  const double bottom = e.values.size() ? e.values(e.values.size() - 1) : 0.0;
  if (!(bottom > rcond_min * std::max(top, 0.0)) || !(bottom > 0.0))
    throw DegeneratePointError("matrix is not positive definite (eigenvalue range [" + std::to_string(bottom) +
                               ", " + std::to_string(top) + "])");
  const Vector r = e.values.cwiseSqrt().cwiseInverse();
  return SymMatrix::symmetrize(e.vectors * r.asDiagonal() * e.vectors.transpose());
}

PolarFactors polar(const Matrix& f) {
  require_dims(f.rows() == f.cols(), "polar factorization needs a square matrix");
  Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& w = svd.matrixU();
  const Matrix& v = svd.matrixV();
  PolarFactors out;
  out.u = w * v.transpose();
  out.s = SymMatrix::symmetrize(v * svd.singularValues().asDiagonal() * v.transpose());
  return out;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

SymMatrix assemble_linear_lmi(const SymMatrix& lambda_sum, const SymMatrix& xi_sum, const Matrix& a, const Matrix& b,
                              const Matrix& h, const SymMatrix& theta) {
  const Index nu = lambda_sum.order();
  const Index n = xi_sum.order();
  const Index m = theta.order();
  require_dims(a.rows() == m && a.cols() == n, "A must be m x n");
  require_dims(b.rows() == nu && b.cols() == n, "B must be nu x n");
  require_dims(h.rows() == m && h.cols() == nu, "H must be m x nu");
  Matrix out = Matrix::Zero(nu + n + m, nu + n + m);
  const Matrix off = 0.5 * (b - h.transpose() * a);
  out.block(0, 0, nu, nu) = lambda_sum.mat();
  out.block(0, nu, nu, n) = off;
  out.block(nu, 0, n, nu) = off.transpose();
  out.block(0, nu + n, nu, m) = 0.5 * h.transpose();
  out.block(nu + n, 0, m, nu) = 0.5 * h;
  out.block(nu, nu, n, n) = xi_sum.mat();
  out.block(nu + n, nu + n, m, m) = theta.mat();
  return SymMatrix::symmetrize(out);
}

}  // namespace polyest
