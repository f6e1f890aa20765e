#pragma once

#include <optional>
#include <vector>

#include "polyest/design.hpp"

namespace polyest {

/// a(x) = coeff^T x + constant over the stacked variable x = [lambda; mu].
struct AffineForm {
  Vector coeff;
  double constant = 0.0;

  double operator()(const Vector& x) const { return coeff.dot(x) + constant; }
  bool operator==(const AffineForm& o) const { return constant == o.constant && coeff == o.coeff; }
};

/// linear(x) + scale * sum_i max(forms_i(x), 0).
///
/// The spectral oracle leaves `linear` at zero; generic first-order oracles use it
/// for their tangent plane.
struct PiecewiseModel {
  AffineForm linear;
  std::vector<AffineForm> forms;
  double scale = 1.0;
  Vector anchor;
  double anchor_value = 0.0;

  double eval(const Vector& y) const;
  /// Lipschitz constant w.r.t. the norm whose dual is given by `dual_norm_exponent`
  /// (2 for Euclidean, infinity for l1).
  double lipschitz(double dual_norm_exponent) const;
  bool same_shape(const PiecewiseModel& o) const;
  bool operator==(const PiecewiseModel& o) const;
};

double eval_model(const PiecewiseModel& model, const Vector& y);

/// f(x) = scale * sum of positive eigenvalues of
///   A^{-T} [ Q(lambda) - sum_k mu_k T_k ] A^{-1},
/// where Q(lambda) = B^T (sum_l lambda_l S_l)^{-1} B / 4 for the full design objective,
/// or a fixed matrix (B^T B) for the lambda-eliminated Euclidean objective, in which
/// case the variable is mu alone.
class SpectralTerm {
 public:
  static SpectralTerm general(const DesignSpec& spec);
  static SpectralTerm reduced_l2(const DesignSpec& spec);

  Index num_lambda() const { return num_lambda_; }
  Index num_mu() const { return signal_set_.num_forms(); }
  Index dim() const { return num_lambda_ + num_mu(); }
  Index order() const { return a_inv_.rows(); }
  double scale() const { return scale_; }
  bool has_lambda() const { return num_lambda_ > 0; }

  SymMatrix matrix(const Vector& x) const;
  double value(const Vector& x) const;

  struct Answer {
    double f_value = 0.0;
    PiecewiseModel model;
    Vector eigenvalues;  ///< nonincreasing spectrum at the query point
  };
  /// Piecewise-linear minorant with `rho` positive-part terms, exact at `x_bar`.
  Answer build_model(const Vector& x_bar, Index rho) const;

 private:
  SpectralTerm(Matrix a_inv, Ellitope signal_set, double scale)
      : a_inv_(std::move(a_inv)), signal_set_(std::move(signal_set)), scale_(scale) {}

  Matrix a_inv_;
  Ellitope signal_set_;
  double scale_;
  Index num_lambda_ = 0;
  // full objective
  Matrix b_;
  std::optional<Ellitope> norm_polar_;
  // lambda-eliminated objective
  Matrix fixed_base_;
};

/// Oracle answer for the full design objective at p.
SpectralTerm::Answer build_model(const DualPoint& p, Index rho, const DesignSpec& spec);

/// sigma^2 chi^2 * trace_pos(frak_t(p)) evaluated directly.
double true_f(const DualPoint& p, const DesignSpec& spec);

}  // namespace polyest
