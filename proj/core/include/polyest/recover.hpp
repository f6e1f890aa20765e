#pragma once

#include <vector>

#include "polyest/design.hpp"

namespace polyest {

/// w = H^T omega
Vector linear_apply(const Matrix& h, const Vector& omega);

/// argmin { ||y - x||_2 : y^T T y <= 1 } for T PSD and nonzero.
Vector project_ellipsoid(const Vector& x, const Matrix& t);

/// Euclidean projection onto an ellitope with unit-box parameters,
/// {y : y^T T_k y <= 1 for all k}. Block-separable sets are projected block by block;
/// otherwise Dykstra's method runs until the sweep change drops below 1e-8
/// (ConvergenceError after 10^4 sweeps).
class EllitopeProjector {
 public:
  explicit EllitopeProjector(const Ellitope& x);

  Vector project(const Vector& y) const;
  /// sup { g^T x : x in X }, available for block-separable sets.
  double support(const Vector& g) const;
  bool separable() const { return separable_; }
  /// Upper bound on max ||x||_2 over X.
  double radius() const { return radius_; }

 private:
  struct Block {
    std::vector<Index> index;
    Matrix vectors;  // eigenbasis of the restricted form (empty when diagonal)
    Vector values;
  };
  Vector project_block(const Block& b, const Vector& y) const;

  const Ellitope* set_;
  bool separable_ = false;
  double radius_ = 0.0;
  std::vector<Block> blocks_;
};

Vector project_intersection(const Vector& x, const Ellitope& set);

struct PolyApplyOptions {
  double rel_tol = 1e-4;  ///< objective tolerance relative to 1 + ||H^T omega||_inf
  int max_iterations = 50000;
  int check_every = 10;
  bool keep_history = false;
};

struct PolyApplyResult {
  Vector x;  ///< x_bar(omega), a member of X
  Vector w;  ///< B x_bar
  double objective = 0.0;  ///< ||H^T (omega - A x_bar)||_inf
  double lower = 0.0;      ///< dual lower bound on the optimal value (-inf when unavailable)
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;  ///< false: best point returned after the iteration cap
  std::vector<double> history;  ///< best objective at every check
};

/// Polyhedral estimate x_bar = argmin { ||H^T (omega - A x)||_inf : x in X }, w = B x_bar.
///
/// Primal-dual hybrid gradient on the saddle form
/// min_{x in X} max_{||y||_1 <= 1} y^T (H^T omega - H^T A x), started at the projection
/// of A^{-1} omega, with best-iterate tracking and a duality-gap stopping rule.
PolyApplyResult polyhedral_apply(const Matrix& h, const Vector& omega, const DesignSpec& spec,
                                 const PolyApplyOptions& options = {});

/// Same solver with the per-contrast work (H^T A, its norm, the projector) done once.
class PolyhedralEstimator {
 public:
  PolyhedralEstimator(const Matrix& h, const DesignSpec& spec);

  PolyApplyResult apply(const Vector& omega, const PolyApplyOptions& options = {}) const;
  const EllitopeProjector& projector() const { return projector_; }

 private:
  const DesignSpec* spec_;
  Matrix h_;
  Matrix g_;  // H^T A
  double norm_ = 0.0;
  EllitopeProjector projector_;
};

/// Projection onto {y : ||y||_1 <= radius}.
Vector project_l1_ball(const Vector& v, double radius = 1.0);

}  // namespace polyest
