#include "polyest/subsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace polyest {

namespace {

std::string describe(const IpmResult& r) {
  std::ostringstream os;
  os << " (iterations " << r.iterations << ", primal residual " << r.primal_residual << ", dual residual "
     << r.dual_residual << ", complementarity " << r.complementarity << ")";
  return os.str();
}

double dual_norm(const Vector& v, double q) {
  if (v.size() == 0) return 0.0;
  if (std::isinf(q)) return v.cwiseAbs().maxCoeff();
  if (q == 2.0) return v.norm();
  if (q == 1.0) return v.cwiseAbs().sum();
  return std::pow(v.cwiseAbs().array().pow(q).sum(), 1.0 / q);
}


Bundle dedupe(const Bundle& bundle) {
  Bundle out;
  for (const auto& p : bundle)
    if (std::none_of(out.begin(), out.end(), [&](const PiecewiseModel& q) { return q == p; })) out.push_back(p);
  return out;
}

// Layout z = [y | u (one per psi block) | t | s (one per piece form)].
struct Lifted {
  Index n = 0, nu = 0, ns = 0;
  Matrix g;
  Vector h;
  Index dim() const { return n + nu + 1 + ns; }
  Index t_index() const { return n + nu; }
};

Lifted build_lifted(const Bundle& bundle, const PsiRep& psi, const Polytope& x, const std::optional<AffineForm>& cut,
                    std::optional<double> level) {
  if (bundle.empty()) throw InvalidArgument("bundle must hold at least one piece");
  Lifted L;
  L.n = x.dim();
  L.nu = static_cast<Index>(psi.blocks.size());
  for (const auto& p : bundle) L.ns += static_cast<Index>(p.forms.size());
  Index psi_rows = 0;
  for (const auto& b : psi.blocks) psi_rows += static_cast<Index>(b.size());
  const Index rows = L.n + 1 + static_cast<Index>(x.cuts.size()) + psi_rows + static_cast<Index>(bundle.size()) +
                     2 * L.ns + (cut ? 1 : 0) + (level ? 1 : 0);
  L.g = Matrix::Zero(rows, L.dim());
  L.h = Vector::Zero(rows);
  Index r = 0;
  for (Index i = 0; i < L.n; ++i, ++r) {
    L.g(r, i) = -1.0;
    L.h(r) = -x.lower(i);
  }
  L.g.row(r).head(L.n).setOnes();
  L.h(r++) = x.radius;
  for (const auto& c : x.cuts) {
    L.g.row(r).head(L.n) = -c.coeff.transpose();
    L.h(r++) = c.constant;
  }
  for (Index b = 0; b < L.nu; ++b) {
    for (const auto& f : psi.blocks[static_cast<size_t>(b)]) {
      L.g.row(r).head(L.n) = f.coeff.transpose();
      L.g(r, L.n + b) = -1.0;
      L.h(r++) = -f.constant;
    }
  }
  Index s0 = L.t_index() + 1;
  for (const auto& p : bundle) {
    if (p.linear.coeff.size()) L.g.row(r).head(L.n) = p.linear.coeff.transpose();
    for (size_t j = 0; j < p.forms.size(); ++j) L.g(r, s0 + static_cast<Index>(j)) = p.scale;
    L.g(r, L.t_index()) = -1.0;
    L.h(r++) = -p.linear.constant;
    for (size_t j = 0; j < p.forms.size(); ++j) {
      const Index sj = s0 + static_cast<Index>(j);
      L.g(r, sj) = -1.0;
      ++r;
      L.g.row(r).head(L.n) = p.forms[j].coeff.transpose();
      L.g(r, sj) = -1.0;
      L.h(r++) = -p.forms[j].constant;
    }
    s0 += static_cast<Index>(p.forms.size());
  }
  if (cut) {
    L.g.row(r).head(L.n) = -cut->coeff.transpose();
    L.h(r++) = cut->constant;
  }
  if (level) {
    L.g.row(r).segment(L.n, L.nu).setOnes();
    L.g(r, L.t_index()) = 1.0;
    L.h(r++) = *level;
  }
  return L;
}

Vector lifted_start(const Lifted& L, const Bundle& bundle, const PsiRep& psi, const Vector& y) {
  Vector z = Vector::Zero(L.dim());
  z.head(L.n) = y;
  for (Index b = 0; b < L.nu; ++b) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& f : psi.blocks[static_cast<size_t>(b)]) m = std::max(m, f(y));
    z(L.n + b) = m + 1.0;
  }
  double t = -std::numeric_limits<double>::infinity();
  Index s0 = L.t_index() + 1;
  for (const auto& p : bundle) {
    for (size_t j = 0; j < p.forms.size(); ++j) z(s0 + static_cast<Index>(j)) = std::max(p.forms[j](y), 0.0) + 1.0;
    t = std::max(t, p.eval(y) + p.scale * static_cast<double>(p.forms.size()));
    s0 += static_cast<Index>(p.forms.size());
  }
  z(L.t_index()) = t + 1.0;
  return z;
}

Vector interior_point(const Polytope& x) {
  const double room = x.radius - x.lower.sum();
  return x.lower.array() + room / (2.0 * static_cast<double>(std::max<Index>(x.dim(), 1)));
}

// Returns false when the cut leaves no point of X; relaxes a nearly tight cut.
bool prepare_cut(const Polytope& x, std::optional<AffineForm>& cut) {
  if (!cut) return true;
  const double top = x.max_linear(cut->coeff) + cut->constant;
  const double scale = 1.0 + std::abs(cut->constant) + dual_norm(cut->coeff, std::numeric_limits<double>::infinity()) *
                                                              std::max(1.0, x.radius);
  if (top < -1e-9 * scale) return false;
  if (top < 1e-9 * scale) cut->constant += 1e-9 * scale;
  return true;
}

}  // namespace

bool Polytope::contains(const Vector& y, double tol) const {
  require_dims(y.size() == dim(), "point vs polytope");
  const double s = 1.0 + std::abs(radius);
  if ((y - lower).minCoeff() < -tol * s) return false;
  if (y.sum() > radius + tol * s) return false;
  for (const auto& c : cuts)
    if (c(y) < -tol * (1.0 + std::abs(c.constant))) return false;
  return true;
}

double Polytope::max_linear(const Vector& c) const {
  require_dims(c.size() == dim(), "linear function vs polytope");
  return c.dot(lower) + (radius - lower.sum()) * std::max(0.0, c.maxCoeff());
}

bool Polytope::nonempty() const {
  if (lower.sum() >= radius) return false;
  if (cuts.empty()) return true;
  if (cuts.size() == 1) return max_linear(cuts[0].coeff) + cuts[0].constant > 0.0;
  // max r s.t. cut_j(y) >= r, y in box-simplex, r <= 1
  const Index n = dim();
  Matrix g = Matrix::Zero(n + 2 + static_cast<Index>(cuts.size()), n + 1);
  Vector h = Vector::Zero(g.rows());
  Index r = 0;
  for (Index i = 0; i < n; ++i, ++r) {
    g(r, i) = -1.0;
    h(r) = -lower(i);
  }
  g.row(r).head(n).setOnes();
  h(r++) = radius;
  g(r, n) = 1.0;
  h(r++) = 1.0;
  for (const auto& c : cuts) {
    g.row(r).head(n) = -c.coeff.transpose();
    g(r, n) = 1.0;
    h(r++) = c.constant;
  }
  Vector obj = Vector::Zero(n + 1);
  obj(n) = -1.0;
  Vector start(n + 1);
  start.head(n) = interior_point(*this);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& c : cuts) worst = std::min(worst, c(start.head(n)));
  start(n) = worst - 1.0;
  const auto res = solve_inequality_ipm(SmoothObjective::linear(obj), g, h, start);
  return res.z(n) > 1e-12;
}

double Polytope::euclidean_diameter() const {
  const double room = std::max(0.0, radius - lower.sum());
  return dim() >= 2 ? std::sqrt(2.0) * room : room;
}

double PsiRep::eval(const Vector& y) const {
  double v = 0.0;
  for (const auto& b : blocks) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& f : b) m = std::max(m, f(y));
    v += m;
  }
  return v;
}

double PsiRep::lipschitz(double dual_norm_exponent) const {
  double l = 0.0;
  for (const auto& b : blocks) {
    double m = 0.0;
    for (const auto& f : b) m = std::max(m, dual_norm(f.coeff, dual_norm_exponent));
    l += m;
  }
  return l;
}

double bundle_value(const Bundle& bundle, const PsiRep& psi, const Vector& y) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& p : bundle) m = std::max(m, p.eval(y));
  return psi.eval(y) + m;
}

namespace {

bool already_feasible(const Vector& y, const Bundle& bundle, const PsiRep& psi, double level, const Polytope& x,
                      const std::optional<AffineForm>& cut) {
  constexpr double tol = 1e-12;
  return x.contains(y, tol) && (!cut || (*cut)(y) >= -tol * (1.0 + std::abs(cut->constant))) &&
         bundle_value(bundle, psi, y) <= level + tol * (1.0 + std::abs(level));
}

ProjectionResult trivial_projection(const Vector& y) {
  ProjectionResult out;
  out.y = y;
  out.stats.z = y;
  out.stats.converged = true;
  return out;
}

}  // namespace

LevelLpResult solve_level_lp(const Bundle& bundle_in, const PsiRep& psi, const Polytope& x,
                             const std::optional<AffineForm>& cut_in) {
  LevelLpResult out;
  std::optional<AffineForm> cut = cut_in;
  if (!prepare_cut(x, cut)) {
    out.value = std::numeric_limits<double>::infinity();
    out.epigraph = out.value;
    return out;
  }
  const Bundle bundle = dedupe(bundle_in);
  const Lifted L = build_lifted(bundle, psi, x, cut, std::nullopt);
  Vector c = Vector::Zero(L.dim());
  c.segment(L.n, L.nu).setOnes();
  c(L.t_index()) = 1.0;
  const Vector start = lifted_start(L, bundle, psi, interior_point(x));
  out.stats = solve_inequality_ipm(SmoothObjective::linear(c), L.g, L.h, start);
  if (!out.stats.converged) throw SubsolverError("level LP did not converge" + describe(out.stats));
  out.feasible = true;
  out.lifted = out.stats.z;
  out.y = out.stats.z.head(L.n);
  out.epigraph = out.stats.primal_objective;
  out.value = std::min(out.stats.primal_objective, out.stats.dual_objective);
  return out;
}

ProjectionResult solve_projection_qp(const Vector& center, const Bundle& bundle_in, const PsiRep& psi, double level,
                                     const Polytope& x, const std::optional<AffineForm>& cut_in,
                                     const std::optional<Vector>& warm_start) {
  require_dims(center.size() == x.dim(), "projection center");
  if (already_feasible(center, bundle_in, psi, level, x, cut_in)) return trivial_projection(center);
  std::optional<AffineForm> cut = cut_in;
  if (!prepare_cut(x, cut)) throw SubsolverError("cut excludes the whole domain");
  const Bundle bundle = dedupe(bundle_in);
  const Lifted L = build_lifted(bundle, psi, x, cut, level);
  Matrix p = Matrix::Zero(L.dim(), L.dim());
  p.topLeftCorner(L.n, L.n).setIdentity();
  Vector c = Vector::Zero(L.dim());
  c.head(L.n) = -center;
  const Vector y0 = warm_start && warm_start->size() == L.n ? *warm_start : interior_point(x);
  ProjectionResult out;
  IpmOptions opts;
  opts.polish = true;
  out.stats = solve_inequality_ipm(SmoothObjective::quadratic_form(p, c), L.g, L.h, lifted_start(L, bundle, psi, y0),
                                   opts);
  if (!out.stats.converged) throw SubsolverError("projection QP did not converge" + describe(out.stats));
  out.y = out.stats.z.head(L.n);
  return out;
}

L1L2Setup L1L2Setup::for_dim(Index n) {
  L1L2Setup s;
  const double nn = static_cast<double>(n);
  s.p = n >= 3 ? 1.0 + 1.0 / std::log(nn) : 2.0;
  s.coef = 1.0 / (2.0 * (s.p - 1.0) * std::pow(nn, 2.0 * (1.0 / s.p - 1.0)));
  return s;
}

double L1L2Setup::omega(const Vector& y) const {
  const double r = std::pow(y.cwiseAbs().array().pow(p).sum(), 1.0 / p);
  return coef * r * r;
}

Vector L1L2Setup::gradient(const Vector& y) const {
  const double r = std::pow(y.cwiseAbs().array().pow(p).sum(), 1.0 / p);
  if (r == 0.0) return Vector::Zero(y.size());
  Vector g(y.size());
  for (Index i = 0; i < y.size(); ++i)
    g(i) = 2.0 * coef * std::pow(r, 2.0 - p) * std::pow(std::abs(y(i)), p - 1.0) * (y(i) < 0.0 ? -1.0 : 1.0);
  return g;
}

Matrix L1L2Setup::hessian(const Vector& y) const {
  const Index n = y.size();
  const double r = std::pow(y.cwiseAbs().array().pow(p).sum(), 1.0 / p);
  const double floor = 1e-12 * std::max(1.0, r);
  if (r == 0.0) return Matrix::Identity(n, n) * (2.0 * coef * (p - 1.0) * std::pow(floor, p - 2.0));
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::pow(std::abs(y(i)), p - 1.0) * (y(i) < 0.0 ? -1.0 : 1.0);
  Matrix h = (2.0 * coef * (2.0 - p) * std::pow(r, 2.0 - 2.0 * p)) * (v * v.transpose());
  for (Index i = 0; i < n; ++i)
    h(i, i) += 2.0 * coef * (p - 1.0) * std::pow(r, 2.0 - p) * std::pow(std::max(std::abs(y(i)), floor), p - 2.0);
  return h;
}

double L1L2Setup::diameter_bound(double radius) const { return std::sqrt(10.0 * coef) * radius; }

ProjectionResult solve_projection_mirror(const Vector& center, const Bundle& bundle_in, const PsiRep& psi,
                                         double level, const Polytope& x, const L1L2Setup& setup,
                                         const std::optional<AffineForm>& cut_in,
                                         const std::optional<Vector>& warm_start) {
  require_dims(center.size() == x.dim(), "projection center");
  if (already_feasible(center, bundle_in, psi, level, x, cut_in)) return trivial_projection(center);
  std::optional<AffineForm> cut = cut_in;
  if (!prepare_cut(x, cut)) throw SubsolverError("cut excludes the whole domain");
  const Bundle bundle = dedupe(bundle_in);
  const Lifted L = build_lifted(bundle, psi, x, cut, level);
  const Index n = L.n, dim = L.dim();
  const Vector gc = setup.gradient(center);
  SmoothObjective obj;
  obj.value = [&setup, gc, n](const Vector& z) { return setup.omega(z.head(n)) - gc.dot(z.head(n)); };
  obj.gradient = [&setup, gc, n, dim](const Vector& z) {
    Vector g = Vector::Zero(dim);
    g.head(n) = setup.gradient(z.head(n)) - gc;
    return g;
  };
  obj.hessian = [&setup, n, dim](const Vector& z) {
    Matrix h = Matrix::Zero(dim, dim);
    h.topLeftCorner(n, n) = setup.hessian(z.head(n));
    return h;
  };
  const Vector y0 = warm_start && warm_start->size() == n ? *warm_start : interior_point(x);
  ProjectionResult out;
  IpmOptions opts;
  opts.max_iterations = 400;
  out.stats = solve_inequality_ipm(obj, L.g, L.h, lifted_start(L, bundle, psi, y0), opts);
  if (!out.stats.converged) throw SubsolverError("mirror projection did not converge" + describe(out.stats));
  out.y = out.stats.z.head(n);
  return out;
}

}  // namespace polyest
