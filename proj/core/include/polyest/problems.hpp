#pragma once

#include "polyest/ctl.hpp"
#include "polyest/design.hpp"
#include "polyest/oracle.hpp"

namespace polyest {

/// psi blocks for the support function of `params` acting on coordinates
/// [offset, offset + params.dim()) of a `total_dim`-vector with nonnegative entries.
/// Unit-box and l1-ball parameter sets are supported.
std::vector<std::vector<AffineForm>> support_blocks(const ParamSet& params, Index offset, Index total_dim);

/// CTL problem for g(mu_bar) = phi_T(mu_bar) + gamma trace_pos(A^{-T}[B^T B - sum mu_bar_k T_k]A^{-1}).
struct ReducedProblem {
  CompositeProblem problem;
  double radius = 0.0;
  bool near_radius(const Vector& x) const { return x.sum() >= 0.99 * radius; }
};

ReducedProblem make_reduced_problem(const DesignSpec& spec, Index rho);

/// CTL problem for Upsilon(lambda, mu) over {lambda >= delta, mu >= 0, sum <= radius}.
struct GeneralProblem {
  CompositeProblem problem;
  double radius = 0.0;
  double delta = 1e-6;
  Index num_lambda = 0;
  bool near_radius(const Vector& x) const { return x.sum() >= 0.99 * radius; }
};

GeneralProblem make_general_problem(const DesignSpec& spec, Index rho, double delta = 1e-6);

}  // namespace polyest
