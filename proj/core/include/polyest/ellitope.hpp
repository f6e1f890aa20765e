#pragma once

#include <vector>

#include "polyest/linalg.hpp"

namespace polyest {

/// Monotone parameter set of a basic ellitope, a subset of the nonnegative orthant.
///
/// UnitBox(K) is {t >= 0 : ||t||_inf <= 1}; LqBall(K, q) is {t >= 0 : ||t||_q <= 1}.
class ParamSet {
 public:
  enum class Kind { UnitBox, LqBall };

  static ParamSet unit_box(Index dim);
  static ParamSet lq_ball(Index dim, double q);

  Kind kind() const { return kind_; }
  Index dim() const { return dim_; }
  double q() const { return q_; }
  /// Conjugate exponent q' with 1/q + 1/q' = 1 (infinity for q = 1, 1 for the box).
  double dual_exponent() const;

  /// Support function sup_{t in set} g^T t. Only the positive part of g matters.
  double support(const Vector& g) const;
  bool contains(const Vector& t, double tol = 1e-9) const;

 private:
  ParamSet(Kind kind, Index dim, double q) : kind_(kind), dim_(dim), q_(q) {}

  Kind kind_;
  Index dim_;
  double q_;
};

/// Basic ellitope {x : exists t in params, x^T T_k x <= t_k}.
///
/// Forms flagged diagonal are evaluated through their diagonal only.
class Ellitope {
 public:
  Ellitope(std::vector<Matrix> forms, ParamSet params);

  Index dim() const { return dim_; }
  Index num_forms() const { return static_cast<Index>(forms_.size()); }
  const std::vector<Matrix>& forms() const { return forms_; }
  const Matrix& form(Index k) const { return forms_[static_cast<size_t>(k)]; }
  const ParamSet& params() const { return params_; }
  bool form_is_diagonal(Index k) const { return diagonal_[static_cast<size_t>(k)]; }
  bool all_diagonal() const;
  /// Diagonal of form k (valid for any form).
  Vector form_diagonal(Index k) const { return form(k).diagonal(); }

  /// q_k = x^T T_k x for every form.
  Vector quadratic_values(const Vector& x) const;
  bool member(const Vector& x, double tol = 1e-9) const;
  /// Sum_k weights_k T_k as a dense matrix.
  Matrix weighted_sum(const Vector& weights) const;
  /// Forms have pairwise disjoint row/column supports (the set is a product of ellipsoids).
  bool block_separable() const { return separable_; }

 private:
  Index dim_;
  std::vector<Matrix> forms_;
  std::vector<bool> diagonal_;
  ParamSet params_;
  bool separable_ = false;
};

double support(const ParamSet& params, const Vector& g);
bool member(const Ellitope& e, const Vector& x, double tol = 1e-9);

/// {x : sum_{i in I_k} i^alpha x_i^2 <= 1, k <= K} with I_k consecutive segments of length n/K.
Ellitope make_block_weighted(Index n, Index K, double alpha);
/// Unit ||.||_p ball, p in [2, inf]; pass std::numeric_limits<double>::infinity() for the box.
Ellitope make_lp_ball(Index n, double p);
/// Unit Euclidean ball as a single-form ellitope (T_1 = I, unit-box parameters).
Ellitope make_euclidean_ball(Index n);

}  // namespace polyest
