#pragma once

#include <optional>
#include <vector>

#include "polyest/ipm.hpp"
#include "polyest/oracle.hpp"

namespace polyest {

/// {y : y >= lower, sum(y) <= radius, cut_j(y) >= 0 for every extra cut}.
struct Polytope {
  Vector lower;
  double radius = 1.0;
  std::vector<AffineForm> cuts;

  Index dim() const { return lower.size(); }
  bool contains(const Vector& y, double tol = 1e-9) const;
  /// Largest value of a linear function over the box-simplex part (cuts ignored).
  double max_linear(const Vector& c) const;
  /// True when the set has a point strictly inside every constraint
  /// (closed form without cuts, LP otherwise).
  bool nonempty() const;
  /// Largest Euclidean distance between two points of the box-simplex part.
  double euclidean_diameter() const;
};

/// psi(y) = sum over blocks of the maximum of the block's affine forms.
struct PsiRep {
  std::vector<std::vector<AffineForm>> blocks;

  double eval(const Vector& y) const;
  double lipschitz(double dual_norm_exponent) const;
};

using Bundle = std::vector<PiecewiseModel>;

/// max over bundle pieces of psi(y) + piece(y)
double bundle_value(const Bundle& bundle, const PsiRep& psi, const Vector& y);

struct LevelLpResult {
  bool feasible = false;
  double value = 0.0;  ///< +infinity when infeasible
  double epigraph = 0.0;  ///< optimal epigraph variable sum(u) + t
  Vector y;
  Vector lifted;  ///< full lifted solution, usable as a warm start
  IpmResult stats;
};

/// min_y { max_pieces psi(y) + piece(y) : y in X, cut(y) >= 0 }.
LevelLpResult solve_level_lp(const Bundle& bundle, const PsiRep& psi, const Polytope& x,
                             const std::optional<AffineForm>& cut = std::nullopt);

struct ProjectionResult {
  Vector y;
  IpmResult stats;
};

/// Euclidean projection of `center` onto {y in X : bundle model <= level, cut(y) >= 0}.
ProjectionResult solve_projection_qp(const Vector& center, const Bundle& bundle, const PsiRep& psi, double level,
                                     const Polytope& x, const std::optional<AffineForm>& cut = std::nullopt,
                                     const std::optional<Vector>& warm_start = std::nullopt);

/// Distance-generating function omega(y) = coef * ||y||_p^2 with p = 1 + 1/ln(N)
/// (p = 2 for N <= 2), strongly convex with modulus 1 w.r.t. ||.||_1.
struct L1L2Setup {
  double p = 2.0;
  double coef = 0.5;

  static L1L2Setup for_dim(Index n);
  double omega(const Vector& y) const;
  Vector gradient(const Vector& y) const;
  Matrix hessian(const Vector& y) const;
  /// Upper bound on sqrt(2 max Bregman distance) over {y : ||y||_1 <= radius}.
  double diameter_bound(double radius) const;
};

/// Bregman projection: argmin { omega(y) - <grad omega(center), y> } over the same set.
ProjectionResult solve_projection_mirror(const Vector& center, const Bundle& bundle, const PsiRep& psi,
                                         double level, const Polytope& x, const L1L2Setup& setup,
                                         const std::optional<AffineForm>& cut = std::nullopt,
                                         const std::optional<Vector>& warm_start = std::nullopt);

/// Subproblem solver failed to meet its tolerances.
class SubsolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace polyest
