#pragma once

#include <optional>

#include "polyest/ellitope.hpp"
#include "polyest/symlin.hpp"

namespace polyest {

/// chi = sqrt(2 ln(2m / eps)): columns of the polyhedral contrast are scaled so that
/// P{ sigma ||H^T xi||_inf > 1 } <= eps for standard Gaussian xi.
double chi(double eps, Index m);

/// kappa = 1 + sqrt(2 ln(1 / eps)), the quantile factor for ||xi||-type deviations.
double kappa(double eps);

/// Problem data for the nonsingular observation model omega = A x + sigma xi.
class DesignSpec {
 public:
  /// Throws InvalidArgument when A is not square, its condition estimate exceeds
  /// `max_condition`, sigma <= 0 or eps is outside (0, 1).
  DesignSpec(Matrix a, Matrix b, double sigma, double eps, Ellitope signal_set, Ellitope norm_polar,
             double max_condition = 1e10);

  const Matrix& a() const { return a_; }
  const Matrix& a_inv() const { return a_inv_; }
  const Matrix& b() const { return b_; }
  double sigma() const { return sigma_; }
  double eps() const { return eps_; }
  double chi() const { return chi_; }
  /// sigma^2 chi^2
  double gamma() const { return gamma_; }
  /// Reciprocal of the LU condition estimate of A.
  double condition() const { return condition_; }
  const Ellitope& signal_set() const { return signal_set_; }
  const Ellitope& norm_polar() const { return norm_polar_; }

  Index m() const { return a_.rows(); }
  Index n() const { return a_.cols(); }
  Index nu() const { return b_.rows(); }
  Index num_signal_forms() const { return signal_set_.num_forms(); }
  Index num_norm_forms() const { return norm_polar_.num_forms(); }

 private:
  Matrix a_;
  Matrix a_inv_;
  Matrix b_;
  double sigma_;
  double eps_;
  double chi_;
  double gamma_;
  double condition_;
  Ellitope signal_set_;
  Ellitope norm_polar_;
};

/// Dual multipliers: lambda weights the norm-polar forms S_l, mu the signal forms T_k.
struct DualPoint {
  Vector lambda;
  Vector mu;

  /// Concatenation [lambda; mu].
  Vector stacked() const;
  static DualPoint split(const Vector& x, Index num_lambda);
};

/// Feasible box {lambda >= delta, mu >= 0, sum lambda + sum mu <= radius}.
struct DualBox {
  double delta = 1e-6;
  double radius = 1.0;

  bool contains(const DualPoint& p, double tol = 1e-9) const;
};

/// Lambda = sum_l lambda_l S_l
SymMatrix lambda_sum(const DualPoint& p, const DesignSpec& spec);
/// Xi = sum_k mu_k T_k
SymMatrix xi_sum(const DualPoint& p, const DesignSpec& spec);

/// phi_S(lambda) + phi_T(mu)
double psi_value(const DualPoint& p, const DesignSpec& spec);

/// A^{-T} [ B^T Lambda^{-1} B / 4 - Xi ] A^{-1}. Throws DegeneratePointError when
/// Lambda has reciprocal condition below 1e-12.
SymMatrix frak_t(const DualPoint& p, const DesignSpec& spec);

/// Partially minimized polyhedral design objective: psi + sigma^2 chi^2 * trace_pos(frak_t).
double upsilon(const DualPoint& p, const DesignSpec& spec);

/// Theta = [frak_t(p)]_+, the trace-minimal PSD matrix dominating frak_t(p).
SymMatrix recover_theta(const DualPoint& p, const DesignSpec& spec);

struct Contrast {
  Matrix h;        ///< m x m, columns of norm 1 / (sigma chi)
  Vector upsilon;  ///< (sigma chi)^2 * eigenvalues of Theta, clamped at 0
};

/// H = U / (sigma chi) and upsilon = (sigma chi)^2 nu from Theta = U diag(nu) U^T.
Contrast extract_contrast(const SymMatrix& theta, double sigma_chi);

/// Constraint matrix of the polyhedral design problem:
///   [ Lambda   B/2              ]
///   [ B^T/2    A^T Theta A + Xi ]
SymMatrix polyhedral_lmi(const DualPoint& p, const SymMatrix& theta, const DesignSpec& spec);

/// Same block matrix with A^T H diag(upsilon) H^T A in place of A^T Theta A.
SymMatrix contrast_lmi(const DualPoint& p, const Contrast& contrast, const DesignSpec& spec);

/// 3x3 block matrix certifying the linear-estimate risk bound for contrast H (m x nu).
SymMatrix linear_lmi(const DualPoint& p, const Matrix& h, const SymMatrix& theta, const DesignSpec& spec);

/// phi_S(lambda) + phi_T(mu) + sigma^2 factor^2 trace(Theta).
double linear_objective(const DualPoint& p, const SymMatrix& theta, double factor, const DesignSpec& spec);

/// 2 [phi_S(lambda) + phi_T(mu) + sigma^2 factor^2 trace(Theta)].
double polyhedral_objective(const DualPoint& p, const SymMatrix& theta, double factor, const DesignSpec& spec);

struct LinearDesign {
  DualPoint point;  ///< (2 lambda, mu) with zero mu entries raised to mu_floor
  Matrix h;         ///< m x nu linear contrast
  SymMatrix theta;
  Matrix q;         ///< contraction with spectral norm <= 1 used to build h
  double q_norm = 0.0;
  double mu_floor = 0.0;
};

/// Turns a feasible polyhedral design (lambda, mu, Theta) into a feasible linear design
/// (2 lambda, mu, H, Theta). Throws DegeneratePointError when Lambda is singular or
/// mu is identically zero.
LinearDesign poly_to_linear(const DualPoint& p, const SymMatrix& theta, const DesignSpec& spec);

struct ScaledDesign {
  DualPoint point;
  SymMatrix theta;
  double factor = 1.0;
};

/// (kappa lambda, mu / kappa, Theta / kappa) with kappa = 1 + sqrt(2 ln(1/eps)).
ScaledDesign scale_for_eps_risk(const DualPoint& p, const SymMatrix& theta, double eps);
/// Same map with an explicit factor.
ScaledDesign scale_by(const DualPoint& p, const SymMatrix& theta, double factor);

/// Upper bounds on the (1 - eps)-quantile of xi^T Theta xi, tightest first.
struct QuantileBounds {
  double log_det;      ///< min_alpha -alpha/2 log det(I - 2 Theta / alpha) + alpha ln(1/eps)
  double resolvent;    ///< min_alpha tr Theta + tr Theta (alpha I - 2 Theta)^{-1} Theta + alpha ln(1/eps)
  double closed_form;  ///< tr Theta + 2 ||Theta||_F sqrt(ln 1/eps) + 2 lambda_max ln(1/eps)
  double crude;        ///< kappa^2 tr Theta
};

QuantileBounds quantile_bounds(const SymMatrix& theta, double eps);

struct L2Lift {
  DualPoint point;  ///< scalar lambda
  SymMatrix theta;
  double objective = 0.0;  ///< 4 sqrt(F)
  double f_value = 0.0;    ///< F = phi_T(mu_bar) + gamma tr(Theta_bar)
};

/// Undoes the lambda elimination of the Euclidean-norm design: lambda = sqrt(F),
/// mu = mu_bar / lambda, Theta = Theta_bar / lambda.
L2Lift l2_lift(const Vector& mu_bar, const SymMatrix& theta_bar, const DesignSpec& spec);

/// A^{-T} [ B^T B - sum_k mu_bar_k T_k ] A^{-1}
SymMatrix reduced_l2_matrix(const Vector& mu_bar, const DesignSpec& spec);

/// g(mu_bar) = phi_T(mu_bar) + gamma * trace_pos(reduced_l2_matrix(mu_bar)).
double reduced_l2_objective(const Vector& mu_bar, const DesignSpec& spec);

/// Maps a point of the reduced objective g to a feasible pair of the lambda-free
/// Euclidean design problem: (mu_bar / 4, [reduced_l2_matrix]_+ / 4), whose value is g / 4.
struct ReducedSolution {
  Vector mu_bar;
  SymMatrix theta_bar;
};
ReducedSolution reduced_to_lambda_free(const Vector& mu_bar_g, const DesignSpec& spec);

/// Data for observation matrices with m < n (full row rank).
class SingularDesignSpec {
 public:
  SingularDesignSpec(Matrix a, Matrix b, double sigma, double eps, Ellitope signal_set, Ellitope norm_polar);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& u() const { return u_; }
  const Matrix& v() const { return v_; }
  const Vector& singular_values() const { return sv_; }
  double sigma() const { return sigma_; }
  double chi() const { return chi_; }
  double gamma() const { return sigma_ * sigma_ * chi_ * chi_; }
  const Ellitope& signal_set() const { return signal_set_; }
  const Ellitope& norm_polar() const { return norm_polar_; }
  Index m() const { return a_.rows(); }
  Index n() const { return a_.cols(); }
  Index deficiency() const { return n() - m(); }

 private:
  Matrix a_;
  Matrix b_;
  Matrix u_;
  Matrix v_;
  Vector sv_;
  double sigma_;
  double chi_;
  Ellitope signal_set_;
  Ellitope norm_polar_;
};

/// Z block of C(lambda, mu) is not negative definite; mu must be increased.
class ZNotNegativeDefinite : public Error {
 public:
  using Error::Error;
};

struct SingularBlocks {
  SymMatrix c;  ///< full n x n matrix C(lambda, mu)
  Matrix x;     ///< leading m x m block
  Matrix y;     ///< m x d block
  Matrix z;     ///< trailing d x d block
  SymMatrix w;  ///< x - y z^{-1} y^T
};

SingularBlocks singular_blocks(const DualPoint& p, const SingularDesignSpec& spec);

/// phi_S(lambda) + phi_T(mu) + sigma^2 chi^2 trace_pos(W(lambda, mu)).
double singular_objective(const DualPoint& p, const SingularDesignSpec& spec);

}  // namespace polyest
