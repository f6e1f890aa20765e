#include "polyest/oracle.hpp"

#include <cmath>
#include <string>

namespace polyest {

namespace {

double dual_norm(const Vector& v, double p) {
  if (v.size() == 0) return 0.0;
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  if (p == 2.0) return v.norm();
  if (p == 1.0) return v.cwiseAbs().sum();
  return std::pow(v.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

// Row k holds m_i^T T_k m_i for every column m_i of M.
Matrix quadratic_coefficients(const Ellitope& e, const Matrix& m) {
  const Index kk = e.num_forms();
  Matrix out(kk, m.cols());
  if (e.all_diagonal()) {
    Matrix diag(kk, e.dim());
    for (Index k = 0; k < kk; ++k) diag.row(k) = e.form(k).diagonal().transpose();
    return diag * m.cwiseAbs2();
  }
  for (Index k = 0; k < kk; ++k) {
    if (e.form_is_diagonal(k))
      out.row(k) = e.form(k).diagonal().transpose() * m.cwiseAbs2();
    else
      out.row(k) = m.cwiseProduct(e.form(k) * m).colwise().sum();
  }
  return out;
}

}  // namespace

double PiecewiseModel::eval(const Vector& y) const {
  double v = linear.coeff.size() ? linear(y) : linear.constant;
  double acc = 0.0;
  for (const auto& f : forms) acc += std::max(f(y), 0.0);
  return v + scale * acc;
}

double PiecewiseModel::lipschitz(double dual_norm_exponent) const {
  double l = dual_norm(linear.coeff, dual_norm_exponent);
  for (const auto& f : forms) l += scale * dual_norm(f.coeff, dual_norm_exponent);
  return l;
}

bool PiecewiseModel::same_shape(const PiecewiseModel& o) const {
  return forms.size() == o.forms.size() && linear.coeff.size() == o.linear.coeff.size();
}

bool PiecewiseModel::operator==(const PiecewiseModel& o) const {
  if (!same_shape(o) || scale != o.scale || !(linear == o.linear)) return false;
  for (size_t i = 0; i < forms.size(); ++i)
    if (!(forms[i] == o.forms[i])) return false;
  return true;
}

double eval_model(const PiecewiseModel& model, const Vector& y) { return model.eval(y); }

SpectralTerm SpectralTerm::general(const DesignSpec& spec) {
  SpectralTerm t(spec.a_inv(), spec.signal_set(), spec.gamma());
  t.num_lambda_ = spec.num_norm_forms();
  t.b_ = spec.b();
  t.norm_polar_ = spec.norm_polar();
  return t;
}

SpectralTerm SpectralTerm::reduced_l2(const DesignSpec& spec) {
  SpectralTerm t(spec.a_inv(), spec.signal_set(), spec.gamma());
  t.fixed_base_ = spec.b().transpose() * spec.b();
  return t;
}

SymMatrix SpectralTerm::matrix(const Vector& x) const {
  require_dims(x.size() == dim(), "query point has size " + std::to_string(x.size()) + ", expected " +
                                      std::to_string(dim()));
  const Vector mu = x.tail(num_mu());
  Matrix inner;
  if (has_lambda()) {
    const Matrix lam = norm_polar_->weighted_sum(x.head(num_lambda_));
    Eigen::LLT<Matrix> llt(lam);
    if (llt.info() != Eigen::Success || !(llt.rcond() >= 1e-12))
      throw DegeneratePointError("sum of lambda-weighted norm forms is numerically singular");
    inner = 0.25 * b_.transpose() * llt.solve(b_);
  } else {
    inner = fixed_base_;
  }
  inner -= signal_set_.weighted_sum(mu);
  return SymMatrix::symmetrize(a_inv_.transpose() * inner * a_inv_);
}

double SpectralTerm::value(const Vector& x) const { return scale_ * trace_pos(matrix(x)); }

SpectralTerm::Answer SpectralTerm::build_model(const Vector& x_bar, Index rho) const {
  const Index n = order();
  if (rho < 1 || rho > n)
    throw InvalidArgument("oracle complexity must lie in [1, " + std::to_string(n) + "], got " + std::to_string(rho));
  const SymMatrix t_bar = matrix(x_bar);
  const EigenPair e = eig(t_bar);
  const Matrix m = a_inv_ * e.vectors;  // columns m_i = A^{-1} u_i

  // D_i(x) = c_i + sum_l coeff_lambda(l, i) lambda_l + sum_k coeff_mu(k, i) mu_k
  const Matrix coeff_mu = -quadratic_coefficients(signal_set_, m);
  Matrix coeff_lambda(num_lambda_, n);
  Vector constant(n);
  if (has_lambda()) {
    const Matrix lam = norm_polar_->weighted_sum(x_bar.head(num_lambda_));
    Eigen::LLT<Matrix> llt(lam);
    if (llt.info() != Eigen::Success || !(llt.rcond() >= 1e-12))
      throw DegeneratePointError("sum of lambda-weighted norm forms is numerically singular");
    const Matrix bm = b_ * m;
    const Matrix nn = llt.solve(bm);  // columns n_i = Lambda^{-1} B m_i
    constant = 0.5 * bm.cwiseProduct(nn).colwise().sum().transpose();
    coeff_lambda = -0.25 * quadratic_coefficients(*norm_polar_, nn);
  } else {
    constant = m.cwiseProduct(fixed_base_ * m).colwise().sum().transpose();
  }

  auto form_at = [&](Index i) {
    AffineForm f;
    f.coeff.resize(dim());
    f.coeff.head(num_lambda_) = coeff_lambda.col(i);
    f.coeff.tail(num_mu()) = coeff_mu.col(i);
    f.constant = constant(i);
    return f;
  };

  Answer out;
  out.eigenvalues = e.values;
  out.f_value = scale_ * e.values.cwiseMax(0.0).sum();
  PiecewiseModel& model = out.model;
  model.scale = scale_;
  model.anchor = x_bar;
  model.anchor_value = out.f_value;
  model.linear.coeff = Vector::Zero(dim());
  model.forms.reserve(static_cast<size_t>(rho));
  for (Index i = 0; i + 1 < rho; ++i) model.forms.push_back(form_at(i));
  AffineForm tail;
  tail.coeff = Vector::Zero(dim());
  for (Index i = rho - 1; i < n; ++i) {
    const AffineForm f = form_at(i);
    if (f(x_bar) < 0.0) continue;
    tail.coeff += f.coeff;
    tail.constant += f.constant;
  }
  model.forms.push_back(std::move(tail));
  return out;
}

SpectralTerm::Answer build_model(const DualPoint& p, Index rho, const DesignSpec& spec) {
  return SpectralTerm::general(spec).build_model(p.stacked(), rho);
}

double true_f(const DualPoint& p, const DesignSpec& spec) { return spec.gamma() * trace_pos(frak_t(p, spec)); }

}  // namespace polyest
