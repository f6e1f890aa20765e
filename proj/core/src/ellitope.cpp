#include "polyest/ellitope.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace polyest {

namespace {

constexpr double kPsdTol = 1e-10;

bool is_diagonal(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

double min_eigenvalue(const Matrix& m, bool diagonal) {
  if (diagonal) return m.diagonal().minCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace

ParamSet ParamSet::unit_box(Index dim) {
  if (dim < 1) throw InvalidArgument("parameter set dimension must be positive");
  return ParamSet(Kind::UnitBox, dim, std::numeric_limits<double>::infinity());
}

ParamSet ParamSet::lq_ball(Index dim, double q) {
  if (dim < 1) throw InvalidArgument("parameter set dimension must be positive");
  if (!(q >= 1.0)) throw InvalidArgument("lq ball exponent must be >= 1");
  if (std::isinf(q)) return unit_box(dim);
  return ParamSet(Kind::LqBall, dim, q);
}

double ParamSet::dual_exponent() const {
  if (kind_ == Kind::UnitBox) return 1.0;
  if (q_ == 1.0) return std::numeric_limits<double>::infinity();
  return q_ / (q_ - 1.0);
}

double ParamSet::support(const Vector& g) const {
  require_dims(g.size() == dim_, "support argument has size " + std::to_string(g.size()) +
                                     ", parameter set has dimension " + std::to_string(dim_));
  const Vector pos = g.cwiseMax(0.0);
  if (kind_ == Kind::UnitBox) return pos.sum();
  const double qd = dual_exponent();
  if (std::isinf(qd)) return pos.maxCoeff();
  if (qd == 2.0) return pos.norm();
  // scaled p-norm to avoid overflow
  const double top = pos.maxCoeff();
  if (top == 0.0) return 0.0;
  return top * std::pow((pos / top).array().pow(qd).sum(), 1.0 / qd);
}

bool ParamSet::contains(const Vector& t, double tol) const {
  require_dims(t.size() == dim_, "parameter vector");
  if (t.minCoeff() < -tol) return false;
  const Vector pos = t.cwiseMax(0.0);
  if (kind_ == Kind::UnitBox) return pos.maxCoeff() <= 1.0 + tol;
  if (q_ == 1.0) return pos.sum() <= 1.0 + tol;
  return std::pow(pos.array().pow(q_).sum(), 1.0 / q_) <= 1.0 + tol;
}

Ellitope::Ellitope(std::vector<Matrix> forms, ParamSet params)
    : forms_(std::move(forms)), params_(params) {
  if (forms_.empty()) throw InvalidArgument("ellitope needs at least one quadratic form");
  require_dims(static_cast<Index>(forms_.size()) == params_.dim(),
               "number of forms differs from parameter set dimension");
  dim_ = forms_.front().rows();
  Matrix total = Matrix::Zero(dim_, dim_);
  diagonal_.reserve(forms_.size());
  for (size_t k = 0; k < forms_.size(); ++k) {
    Matrix& t = forms_[k];
    require_dims(t.rows() == dim_ && t.cols() == dim_, "form " + std::to_string(k) + " is not n x n");
    const double scale = magnitude_scale(t);
    if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw InvalidArgument("form " + std::to_string(k) + " is not symmetric");
    t = 0.5 * (t + t.transpose()).eval();
    diagonal_.push_back(is_diagonal(t));
    if (min_eigenvalue(t, diagonal_.back()) < -kPsdTol * scale)
      throw InvalidArgument("form " + std::to_string(k) + " is not positive semidefinite");
    total += t;
  }
  if (!(min_eigenvalue(total, all_diagonal()) > 0.0))
    throw InvalidArgument("sum of ellitope forms is not positive definite");

  // disjoint supports make the set a product of (possibly degenerate) ellipsoids
  std::vector<int> owner(static_cast<size_t>(dim_), -1);
  separable_ = true;
  for (size_t k = 0; k < forms_.size() && separable_; ++k) {
    const Matrix& t = forms_[k];
    for (Index i = 0; i < dim_; ++i) {
      if (t.row(i).cwiseAbs().maxCoeff() == 0.0) continue;
      if (owner[static_cast<size_t>(i)] != -1) {
        separable_ = false;
        break;
      }
      owner[static_cast<size_t>(i)] = static_cast<int>(k);
    }
  }
}

bool Ellitope::all_diagonal() const {
  for (bool d : diagonal_)
    if (!d) return false;
  return true;
}

Vector Ellitope::quadratic_values(const Vector& x) const {
  require_dims(x.size() == dim_, "point has size " + std::to_string(x.size()) + ", ellitope dimension " +
                                     std::to_string(dim_));
  Vector q(num_forms());
  for (Index k = 0; k < num_forms(); ++k) {
    const Matrix& t = form(k);
    if (form_is_diagonal(k))
      q(k) = (t.diagonal().array() * x.array().square()).sum();
    else
      q(k) = x.dot(t * x);
  }
  return q;
}

bool Ellitope::member(const Vector& x, double tol) const {
  return params_.contains(quadratic_values(x), tol);
}

Matrix Ellitope::weighted_sum(const Vector& weights) const {
  require_dims(weights.size() == num_forms(), "form weights");
  Matrix out = Matrix::Zero(dim_, dim_);
  for (Index k = 0; k < num_forms(); ++k) {
    if (weights(k) == 0.0) continue;
    if (form_is_diagonal(k))
      out.diagonal() += weights(k) * form(k).diagonal();
    else
      out += weights(k) * form(k);
  }
  return out;
}

double support(const ParamSet& params, const Vector& g) { return params.support(g); }

bool member(const Ellitope& e, const Vector& x, double tol) { return e.member(x, tol); }

Ellitope make_block_weighted(Index n, Index K, double alpha) {
  if (K < 1 || n < 1 || n % K != 0)
    throw InvalidArgument("block count " + std::to_string(K) + " does not divide dimension " + std::to_string(n));
  if (!(alpha >= 0.0)) throw InvalidArgument("block weight exponent must be nonnegative");
  const Index len = n / K;
  std::vector<Matrix> forms;
  forms.reserve(static_cast<size_t>(K));
  for (Index k = 0; k < K; ++k) {
    Matrix t = Matrix::Zero(n, n);
    for (Index i = k * len; i < (k + 1) * len; ++i) t(i, i) = std::pow(static_cast<double>(i + 1), alpha);
    forms.push_back(std::move(t));
  }
  return Ellitope(std::move(forms), ParamSet::unit_box(K));
}

Ellitope make_lp_ball(Index n, double p) {
  if (!(p >= 2.0)) throw InvalidArgument("lp ball requires p >= 2");
  std::vector<Matrix> forms;
  forms.reserve(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) {
    Matrix t = Matrix::Zero(n, n);
    t(k, k) = 1.0;
    forms.push_back(std::move(t));
  }
  const ParamSet params = std::isinf(p) ? ParamSet::unit_box(n) : ParamSet::lq_ball(n, p / 2.0);
  return Ellitope(std::move(forms), params);
}

Ellitope make_euclidean_ball(Index n) {
  return Ellitope({Matrix::Identity(n, n)}, ParamSet::unit_box(1));
}

}  // namespace polyest
