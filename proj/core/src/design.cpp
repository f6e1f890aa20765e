#include "polyest/design.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace polyest {

namespace {

constexpr double kLambdaRcondMin = 1e-12;

Eigen::LLT<Matrix> factor_lambda(const SymMatrix& lam) {
  Eigen::LLT<Matrix> llt(lam.mat());
  if (llt.info() != Eigen::Success || !(llt.rcond() >= kLambdaRcondMin))
    throw DegeneratePointError("sum of lambda-weighted norm forms is numerically singular; raise lambda above "
                               "its floor");
  return llt;
}

void check_point(const DualPoint& p, Index num_lambda, Index num_mu) {
  require_dims(p.lambda.size() == num_lambda, "lambda has size " + std::to_string(p.lambda.size()) +
                                                  ", expected " + std::to_string(num_lambda));
  require_dims(p.mu.size() == num_mu,
               "mu has size " + std::to_string(p.mu.size()) + ", expected " + std::to_string(num_mu));
}

double golden_min(const auto& f, double lo, double hi, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

double chi(double eps, Index m) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("reliability eps must lie in (0, 1)");
  if (m < 1) throw InvalidArgument("observation dimension must be positive");
  return std::sqrt(2.0 * std::log(2.0 * static_cast<double>(m) / eps));
}

double kappa(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("reliability eps must lie in (0, 1)");
  return 1.0 + std::sqrt(2.0 * std::log(1.0 / eps));
}

DesignSpec::DesignSpec(Matrix a, Matrix b, double sigma, double eps, Ellitope signal_set, Ellitope norm_polar,
                       double max_condition)
    : a_(std::move(a)),
      b_(std::move(b)),
      sigma_(sigma),
      eps_(eps),
      signal_set_(std::move(signal_set)),
      norm_polar_(std::move(norm_polar)) {
  if (a_.rows() != a_.cols()) throw InvalidArgument("observation matrix must be square; use SingularDesignSpec");
  require_dims(b_.cols() == a_.cols(), "B must have n columns");
  require_dims(signal_set_.dim() == a_.cols(), "signal set dimension must equal n");
  require_dims(norm_polar_.dim() == b_.rows(), "norm polar dimension must equal nu");
  if (!(sigma_ > 0.0)) throw InvalidArgument("noise level sigma must be positive");
  chi_ = polyest::chi(eps_, a_.rows());
  gamma_ = sigma_ * sigma_ * chi_ * chi_;
  Eigen::PartialPivLU<Matrix> lu(a_);
  condition_ = lu.rcond();
  if (!(condition_ > 0.0) || 1.0 / condition_ > max_condition)
    throw InvalidArgument("observation matrix is ill-conditioned (condition estimate " +
                          std::to_string(condition_ > 0.0 ? 1.0 / condition_ : INFINITY) + ")");
  a_inv_ = lu.inverse();
}

Vector DualPoint::stacked() const {
  Vector x(lambda.size() + mu.size());
  x << lambda, mu;
  return x;
}

DualPoint DualPoint::split(const Vector& x, Index num_lambda) {
  return {x.head(num_lambda), x.tail(x.size() - num_lambda)};
}

bool DualBox::contains(const DualPoint& p, double tol) const {
  if (p.lambda.size() && p.lambda.minCoeff() < delta - tol) return false;
  if (p.mu.size() && p.mu.minCoeff() < -tol) return false;
  return p.lambda.sum() + p.mu.sum() <= radius + tol;
}

SymMatrix lambda_sum(const DualPoint& p, const DesignSpec& spec) {
  check_point(p, spec.num_norm_forms(), spec.num_signal_forms());
  return SymMatrix::symmetrize(spec.norm_polar().weighted_sum(p.lambda));
}

SymMatrix xi_sum(const DualPoint& p, const DesignSpec& spec) {
  check_point(p, spec.num_norm_forms(), spec.num_signal_forms());
  return SymMatrix::symmetrize(spec.signal_set().weighted_sum(p.mu));
}

double psi_value(const DualPoint& p, const DesignSpec& spec) {
  check_point(p, spec.num_norm_forms(), spec.num_signal_forms());
  return spec.norm_polar().params().support(p.lambda) + spec.signal_set().params().support(p.mu);
}

SymMatrix frak_t(const DualPoint& p, const DesignSpec& spec) {
  const SymMatrix lam = lambda_sum(p, spec);
  const auto llt = factor_lambda(lam);
  const Matrix inner = 0.25 * spec.b().transpose() * llt.solve(spec.b()) - xi_sum(p, spec).mat();
  return SymMatrix::symmetrize(spec.a_inv().transpose() * inner * spec.a_inv());
}

double upsilon(const DualPoint& p, const DesignSpec& spec) {
  return psi_value(p, spec) + spec.gamma() * trace_pos(frak_t(p, spec));
}

SymMatrix recover_theta(const DualPoint& p, const DesignSpec& spec) { return pos_part(frak_t(p, spec)); }

Contrast extract_contrast(const SymMatrix& theta, double sigma_chi) {
  if (!(sigma_chi > 0.0)) throw InvalidArgument("sigma * chi must be positive");
  const EigenPair e = eig(theta);
  if (e.values.size() && e.values.minCoeff() < -1e-9 * magnitude_scale(theta.mat()))
    throw InvalidArgument("Theta is not positive semidefinite");
  return {e.vectors / sigma_chi, sigma_chi * sigma_chi * e.values.cwiseMax(0.0)};
}

SymMatrix polyhedral_lmi(const DualPoint& p, const SymMatrix& theta, const DesignSpec& spec) {
  require_dims(theta.order() == spec.m(), "Theta must be m x m");
  const Index nu = spec.nu(), n = spec.n();
  Matrix out(nu + n, nu + n);
  out.topLeftCorner(nu, nu) = lambda_sum(p, spec).mat();
  out.topRightCorner(nu, n) = 0.5 * spec.b();
  out.bottomLeftCorner(n, nu) = 0.5 * spec.b().transpose();
  out.bottomRightCorner(n, n) = spec.a().transpose() * theta.mat() * spec.a() + xi_sum(p, spec).mat();
  return SymMatrix::symmetrize(out);
}

SymMatrix contrast_lmi(const DualPoint& p, const Contrast& contrast, const DesignSpec& spec) {
  const Matrix hu = contrast.h * contrast.upsilon.cwiseSqrt().asDiagonal();
  return polyhedral_lmi(p, SymMatrix::symmetrize(hu * hu.transpose()), spec);
}

SymMatrix linear_lmi(const DualPoint& p, const Matrix& h, const SymMatrix& theta, const DesignSpec& spec) {
  return assemble_linear_lmi(lambda_sum(p, spec), xi_sum(p, spec), spec.a(), spec.b(), h, theta);
}

double linear_objective(const DualPoint& p, const SymMatrix& theta, double factor, const DesignSpec& spec) {
  return psi_value(p, spec) + spec.sigma() * spec.sigma() * factor * factor * theta.trace();
}

double polyhedral_objective(const DualPoint& p, const SymMatrix& theta, double factor, const DesignSpec& spec) {
  return 2.0 * linear_objective(p, theta, factor, spec);
}

LinearDesign poly_to_linear(const DualPoint& p, const SymMatrix& theta, const DesignSpec& spec) {
  check_point(p, spec.num_norm_forms(), spec.num_signal_forms());
  require_dims(theta.order() == spec.m(), "Theta must be m x m");
  LinearDesign out;
  const double mu_max = p.mu.size() ? p.mu.maxCoeff() : 0.0;
  if (!(mu_max > 0.0))
    throw DegeneratePointError("mu vanishes identically; Xi cannot be made positive definite, regularize mu");
  out.mu_floor = 1e-8 * mu_max;
  DualPoint bumped{p.lambda, p.mu.cwiseMax(out.mu_floor)};

  const SymMatrix lam = lambda_sum(bumped, spec);
  const SymMatrix xi = xi_sum(bumped, spec);
  SymMatrix lam_isqrt, xi_isqrt;
  try {
    lam_isqrt = inv_sqrt_pd(lam);
    xi_isqrt = inv_sqrt_pd(xi);
  } catch (const DegeneratePointError& e) {
    throw DegeneratePointError(std::string("poly_to_linear needs Lambda, Xi positive definite: ") + e.what());
  }
  const SymMatrix lam_sqrt = sqrt_psd(lam);
  const SymMatrix theta_sqrt = sqrt_psd(theta);

  const Index n = spec.n();
  const PolarFactors pf = polar(theta_sqrt.mat() * spec.a() * xi_isqrt.mat());
  const Matrix half_scaled_b = 0.5 * lam_isqrt.mat() * spec.b() * xi_isqrt.mat();
  const Matrix s_plus_i = pf.s.mat() + Matrix::Identity(n, n);
  // Q (S + I) = half_scaled_b, S + I is symmetric positive definite
  out.q = s_plus_i.llt().solve(half_scaled_b.transpose()).transpose();
  out.q_norm = spectral_norm(out.q);
  out.h = 2.0 * theta_sqrt.mat() * pf.u * out.q.transpose() * lam_sqrt.mat();
  out.point = {2.0 * bumped.lambda, bumped.mu};
  out.theta = theta;
  return out;
}

ScaledDesign scale_by(const DualPoint& p, const SymMatrix& theta, double factor) {
  if (!(factor > 0.0)) throw InvalidArgument("scaling factor must be positive");
  return {{factor * p.lambda, p.mu / factor}, theta * (1.0 / factor), factor};
}

ScaledDesign scale_for_eps_risk(const DualPoint& p, const SymMatrix& theta, double eps) {
  return scale_by(p, theta, kappa(eps));
}

QuantileBounds quantile_bounds(const SymMatrix& theta, double eps) {
  const double k = kappa(eps);
  const double log_inv_eps = std::log(1.0 / eps);
  const Vector ev = eig(theta).values;
  const double scale = magnitude_scale(theta.mat());
  if (ev.size() && ev.minCoeff() < -1e-9 * scale) throw InvalidArgument("Theta is indefinite");
  const Vector th = ev.cwiseMax(0.0);
  const double tr = th.sum();
  const double top = th.size() ? th.maxCoeff() : 0.0;
  const double fro = th.norm();

  QuantileBounds qb{};
  qb.crude = k * k * tr;
  qb.closed_form = tr + 2.0 * fro * std::sqrt(log_inv_eps) + 2.0 * top * log_inv_eps;
  if (top <= 0.0) {
    qb.log_det = qb.resolvent = 0.0;
    return qb;
  }

  auto log_det = [&](double alpha) {
    double v = alpha * log_inv_eps;
    for (Index i = 0; i < th.size(); ++i) v -= 0.5 * alpha * std::log1p(-2.0 * th(i) / alpha);
    return v;
  };
  auto resolvent = [&](double alpha) {
    double v = tr + alpha * log_inv_eps;
    for (Index i = 0; i < th.size(); ++i) v += th(i) * th(i) / (alpha - 2.0 * th(i));
    return v;
  };
  const double lo = std::log(2.0 * top * (1.0 + 1e-9));
  const double hi = std::log(2.0 * top + 2.0 * tr * log_inv_eps * 1e3);
  const double a_res = std::exp(golden_min([&](double t) { return resolvent(std::exp(t)); }, lo, hi, 1e-8));
  const double a_log = std::exp(golden_min([&](double t) { return log_det(std::exp(t)); }, lo, hi, 1e-8));
  // the closed form bound is the resolvent bound at this alpha
  const double a_closed = 2.0 * top + fro / std::sqrt(log_inv_eps);
  qb.resolvent = std::min({resolvent(a_res), resolvent(a_closed)});
  qb.log_det = std::min({log_det(a_log), log_det(a_res), log_det(a_closed)});

  const double slack = 1e-12 * (1.0 + qb.crude);
  if (!(qb.log_det <= qb.resolvent + slack && qb.resolvent <= qb.closed_form + slack &&
        qb.closed_form <= qb.crude + slack))
    throw ConvergenceError("quantile bound ordering violated");
  return qb;
}

L2Lift l2_lift(const Vector& mu_bar, const SymMatrix& theta_bar, const DesignSpec& spec) {
  require_dims(mu_bar.size() == spec.num_signal_forms(), "mu_bar");
  const double f = spec.signal_set().params().support(mu_bar) + spec.gamma() * theta_bar.trace();
  if (!(f > 0.0)) throw DegeneratePointError("lambda-free objective is not positive; cannot lift");
  const double lam = std::sqrt(f);
  L2Lift out;
  out.point = {Vector::Constant(1, lam), mu_bar / lam};
  out.theta = theta_bar * (1.0 / lam);
  out.objective = 4.0 * lam;
  out.f_value = f;
  return out;
}

SymMatrix reduced_l2_matrix(const Vector& mu_bar, const DesignSpec& spec) {
  require_dims(mu_bar.size() == spec.num_signal_forms(), "mu_bar");
  const Matrix inner = spec.b().transpose() * spec.b() - spec.signal_set().weighted_sum(mu_bar);
  return SymMatrix::symmetrize(spec.a_inv().transpose() * inner * spec.a_inv());
}

double reduced_l2_objective(const Vector& mu_bar, const DesignSpec& spec) {
  return spec.signal_set().params().support(mu_bar) + spec.gamma() * trace_pos(reduced_l2_matrix(mu_bar, spec));
}

ReducedSolution reduced_to_lambda_free(const Vector& mu_bar_g, const DesignSpec& spec) {
  return {mu_bar_g / 4.0, pos_part(reduced_l2_matrix(mu_bar_g, spec)) * 0.25};
}

SingularDesignSpec::SingularDesignSpec(Matrix a, Matrix b, double sigma, double eps, Ellitope signal_set,
                                       Ellitope norm_polar)
    : a_(std::move(a)),
      b_(std::move(b)),
      sigma_(sigma),
      signal_set_(std::move(signal_set)),
      norm_polar_(std::move(norm_polar)) {
  if (a_.rows() > a_.cols()) throw InvalidArgument("project observations onto the range of A first (m > n)");
  require_dims(b_.cols() == a_.cols(), "B must have n columns");
  require_dims(signal_set_.dim() == a_.cols(), "signal set dimension must equal n");
  require_dims(norm_polar_.dim() == b_.rows(), "norm polar dimension must equal nu");
  if (!(sigma_ > 0.0)) throw InvalidArgument("noise level sigma must be positive");
  chi_ = polyest::chi(eps, a_.rows());
  Eigen::JacobiSVD<Matrix> svd(a_, Eigen::ComputeFullU | Eigen::ComputeFullV);
  u_ = svd.matrixU();
  v_ = svd.matrixV();
  sv_ = svd.singularValues();
  if (!(sv_(sv_.size() - 1) > 1e-10 * sv_(0))) throw InvalidArgument("observation matrix lacks full row rank");
}

SingularBlocks singular_blocks(const DualPoint& p, const SingularDesignSpec& spec) {
  check_point(p, spec.norm_polar().num_forms(), spec.signal_set().num_forms());
  const Index m = spec.m(), n = spec.n(), d = spec.deficiency();
  const SymMatrix lam = SymMatrix::symmetrize(spec.norm_polar().weighted_sum(p.lambda));
  const auto llt = factor_lambda(lam);
  const Matrix inner = 0.25 * spec.b().transpose() * llt.solve(spec.b()) - spec.signal_set().weighted_sum(p.mu);
  Vector dinv = Vector::Ones(n);
  dinv.head(m) = spec.singular_values().cwiseInverse();
  const Matrix vd = spec.v() * dinv.asDiagonal();
  SingularBlocks out;
  out.c = SymMatrix::symmetrize(vd.transpose() * inner * vd);
  out.x = out.c.mat().topLeftCorner(m, m);
  out.y = out.c.mat().topRightCorner(m, d);
  out.z = out.c.mat().bottomRightCorner(d, d);
  if (d == 0) {
    out.w = SymMatrix::symmetrize(out.x);
    return out;
  }
  const SymMatrix zs = SymMatrix::symmetrize(out.z);
  const double ztop = max_eig(zs);
  if (!(ztop < -1e-10 * magnitude_scale(out.c.mat())))
    throw ZNotNegativeDefinite("trailing block of C(lambda, mu) has eigenvalue " + std::to_string(ztop) +
                               " >= 0; increase mu");
  // Theta_bar (+) 0 >= C  <=>  Theta_bar >= X - Y Z^{-1} Y^T  when Z < 0
  const Matrix zinv_yt = (-zs.mat()).llt().solve(out.y.transpose());
  out.w = SymMatrix::symmetrize(out.x + out.y * zinv_yt);
  return out;
}

double singular_objective(const DualPoint& p, const SingularDesignSpec& spec) {
  const SingularBlocks blocks = singular_blocks(p, spec);
  const double psi = spec.norm_polar().params().support(p.lambda) + spec.signal_set().params().support(p.mu);
  return psi + spec.gamma() * trace_pos(blocks.w);
}

}  // namespace polyest
