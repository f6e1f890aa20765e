#include "polyest/problems.hpp"

#include <algorithm>
#include <memory>

namespace polyest {

namespace {

// Support of the parameter set bounds the corresponding block of any optimal point:
// for the unit box sum(t) <= value, for the l1 ball max(t) <= value.
double radius_factor(const ParamSet& p) {
  return p.kind() == ParamSet::Kind::UnitBox ? 1.0 : static_cast<double>(p.dim());
}

CompositeProblem::OracleFn make_oracle(std::shared_ptr<const SpectralTerm> term, Index rho) {
  return [term, rho](const Vector& x) {
    SpectralTerm::Answer a = term->build_model(x, std::min(rho, term->order()));
    return OracleAnswer{a.f_value, std::move(a.model)};
  };
}

}  // namespace

std::vector<std::vector<AffineForm>> support_blocks(const ParamSet& params, Index offset, Index total_dim) {
  const Index k = params.dim();
  require_dims(offset + k <= total_dim, "support block range");
  std::vector<std::vector<AffineForm>> blocks(1);
  if (params.kind() == ParamSet::Kind::UnitBox) {
    AffineForm f{Vector::Zero(total_dim), 0.0};
    f.coeff.segment(offset, k).setOnes();
    blocks[0].push_back(std::move(f));
  } else if (params.q() == 1.0) {
    for (Index i = 0; i < k; ++i) {
      AffineForm f{Vector::Zero(total_dim), 0.0};
      f.coeff(offset + i) = 1.0;
      blocks[0].push_back(std::move(f));
    }
  } else {
    throw InvalidArgument("the solver handles unit-box and l1-ball parameter sets only");
  }
  return blocks;
}

ReducedProblem make_reduced_problem(const DesignSpec& spec, Index rho) {
  ReducedProblem out;
  const ParamSet& ps = spec.signal_set().params();
  const Index k = ps.dim();
  auto term = std::make_shared<const SpectralTerm>(SpectralTerm::reduced_l2(spec));
  const double g0 = reduced_l2_objective(Vector::Zero(k), spec);
  out.radius = 10.0 * std::max(g0, 1e-12) * radius_factor(ps);
  CompositeProblem& p = out.problem;
  p.domain.lower = Vector::Zero(k);
  p.domain.radius = out.radius;
  p.psi.blocks = support_blocks(ps, 0, k);
  p.oracle = make_oracle(term, rho);
  p.start = Vector::Constant(k, out.radius / (2.0 * static_cast<double>(k)));
  return out;
}

GeneralProblem make_general_problem(const DesignSpec& spec, Index rho, double delta) {
  GeneralProblem out;
  out.delta = delta;
  const ParamSet& ss = spec.norm_polar().params();
  const ParamSet& ts = spec.signal_set().params();
  const Index l = ss.dim(), k = ts.dim(), n = l + k;
  out.num_lambda = l;
  auto term = std::make_shared<const SpectralTerm>(SpectralTerm::general(spec));
  const DualPoint p0{Vector::Ones(l), Vector::Zero(k)};
  out.radius = 10.0 * upsilon(p0, spec) * std::max(radius_factor(ss), radius_factor(ts));
  out.radius = std::max(out.radius, 2.0 * delta * static_cast<double>(l) + 1e-12);
  CompositeProblem& p = out.problem;
  p.domain.lower = Vector::Zero(n);
  p.domain.lower.head(l).setConstant(delta);
  p.domain.radius = out.radius;
  p.psi.blocks = support_blocks(ss, 0, n);
  for (auto& b : support_blocks(ts, l, n)) p.psi.blocks.push_back(std::move(b));
  p.oracle = make_oracle(term, rho);
  p.start.resize(n);
  p.start.head(l).setConstant(std::min(out.radius / (2.0 * static_cast<double>(l)), std::max(delta, 1.0)));
  p.start.tail(k).setConstant(out.radius / (2.0 * static_cast<double>(k)));
  if (p.start.sum() > out.radius) p.start.tail(k) *= 0.5 * (out.radius - p.start.head(l).sum()) / p.start.tail(k).sum();
  return out;
}

}  // namespace polyest
