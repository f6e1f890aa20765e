#pragma once

#include <functional>
#include <optional>

#include "polyest/linalg.hpp"

namespace polyest {

/// Smooth convex objective for the interior-point solver. A quadratic objective
/// ½ zᵀPz + cᵀz is the common case; general objectives supply callbacks.
struct SmoothObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
  bool quadratic = false;

  static SmoothObjective linear(Vector c);
  static SmoothObjective quadratic_form(Matrix p, Vector c);
};

struct IpmOptions {
  double tol = 1e-9;
  /// accepted when the solver stalls before `tol`
  double loose_tol = 1e-6;
  int max_iterations = 200;
  /// quadratic objectives only: re-solve the KKT system on the detected active set
  bool polish = false;
};

struct IpmResult {
  Vector z;
  Vector slack;  ///< h - G z
  Vector dual;   ///< multipliers of G z <= h
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;  ///< ||G z + s - h||_inf relative to 1 + ||h||_inf
  double dual_residual = 0.0;    ///< ||grad + G^T w||_inf relative to 1 + ||grad||_inf
  double complementarity = 0.0;  ///< s^T w
  int iterations = 0;
  bool converged = false;
  bool polished = false;
};

/// Minimizes a smooth convex objective subject to G z <= h with a Mehrotra
/// predictor-corrector primal-dual method. Rows of G are equilibrated internally.
IpmResult solve_inequality_ipm(const SmoothObjective& objective, const Matrix& g, const Vector& h,
                               const std::optional<Vector>& start = std::nullopt, const IpmOptions& options = {});

}  // namespace polyest
