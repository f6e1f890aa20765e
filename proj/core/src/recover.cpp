#include "polyest/recover.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "polyest/symlin.hpp"

namespace polyest {

namespace {

// Nearest point of {z : sum d_i z_i^2 <= 1} to c, coordinates in the eigenbasis.
Vector secular_project(const Vector& c, const Vector& d) {
  auto q_at = [&](double nu) {
    return (d.array() * c.array().square() / (1.0 + nu * d.array()).square()).sum();
  };
  if (q_at(0.0) <= 1.0) return c;
  double nu = 0.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const Eigen::ArrayXd den = 1.0 + nu * d.array();
    const double q = (d.array() * c.array().square() / den.square()).sum();
    if (std::abs(q - 1.0) <= 1e-14) break;
    if (q > 1.0)
      lo = nu;
    else
      hi = nu;
    // Newton on 1/sqrt(q(nu)) - 1, which is concave and nearly linear in nu
    const double dq = -2.0 * (d.array().square() * c.array().square() / den.cube()).sum();
    const double hv = 1.0 / std::sqrt(q) - 1.0;
    const double dh = -0.5 * dq / (q * std::sqrt(q));
    double next = nu - hv / dh;
    if (!(next > lo && next < hi)) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * nu + 1.0;
    if (next == nu) break;
    nu = next;
  }
  return (c.array() / (1.0 + nu * d.array())).matrix();
}

std::vector<Index> support_of(const Matrix& t) {
  std::vector<Index> idx;
  for (Index i = 0; i < t.rows(); ++i)
    if (t.row(i).cwiseAbs().maxCoeff() > 0.0) idx.push_back(i);
  return idx;
}

Vector gather(const Vector& v, const std::vector<Index>& idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = v(idx[i]);
  return out;
}

double radial_excess(const Ellitope& set, const Vector& y) { return set.quadratic_values(y).maxCoeff(); }

}  // namespace

Vector linear_apply(const Matrix& h, const Vector& omega) {
  require_dims(h.rows() == omega.size(), "contrast rows vs observation");
  return h.transpose() * omega;
}

Vector project_ellipsoid(const Vector& x, const Matrix& t) {
  require_dims(t.rows() == x.size() && t.cols() == x.size(), "ellipsoid form vs point");
  if (x.dot(t * x) <= 1.0) return x;
  const EigenPair e = eig(SymMatrix::symmetrize(t));
  const Vector d = e.values.cwiseMax(0.0);
  return e.vectors * secular_project(e.vectors.transpose() * x, d);
}

Vector project_l1_ball(const Vector& v, double radius) {
  if (v.cwiseAbs().sum() <= radius) return v;
  std::vector<double> u(static_cast<size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) u[static_cast<size_t>(i)] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - radius) / static_cast<double>(j + 1);
    if (u[j] > t) theta = t;
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) out(i) = std::copysign(std::max(std::abs(v(i)) - theta, 0.0), v(i));
  return out;
}

EllitopeProjector::EllitopeProjector(const Ellitope& x) : set_(&x) {
  if (x.params().kind() != ParamSet::Kind::UnitBox)
    throw InvalidArgument("projection needs an intersection of ellipsoids (unit-box parameters)");
  separable_ = x.block_separable();
  if (!separable_) {
    const Matrix total = x.weighted_sum(Vector::Ones(x.num_forms()));
    radius_ = std::sqrt(static_cast<double>(x.num_forms()) / min_eig(SymMatrix::symmetrize(total)));
    return;
  }
  double r2 = 0.0;
  for (Index k = 0; k < x.num_forms(); ++k) {
    Block b;
    b.index = support_of(x.form(k));
    const Index s = static_cast<Index>(b.index.size());
    Matrix sub(s, s);
    for (Index i = 0; i < s; ++i)
      for (Index j = 0; j < s; ++j) sub(i, j) = x.form(k)(b.index[static_cast<size_t>(i)], b.index[static_cast<size_t>(j)]);
    if (x.form_is_diagonal(k)) {
      b.values = sub.diagonal();
    } else {
      const EigenPair e = eig(SymMatrix::symmetrize(sub));
      b.vectors = e.vectors;
      b.values = e.values.cwiseMax(0.0);
    }
    r2 += 1.0 / b.values.minCoeff();
    blocks_.push_back(std::move(b));
  }
  radius_ = std::sqrt(r2);
}

Vector EllitopeProjector::project_block(const Block& b, const Vector& y) const {
  const Vector c = gather(y, b.index);
  if (b.vectors.size() == 0) return secular_project(c, b.values);
  return b.vectors * secular_project(b.vectors.transpose() * c, b.values);
}

Vector EllitopeProjector::project(const Vector& y) const {
  const Ellitope& set = *set_;
  require_dims(y.size() == set.dim(), "point vs ellitope");
  if (set.member(y, 0.0)) return y;
  Vector out = y;
  if (separable_) {
    for (const auto& b : blocks_) {
      const Vector p = project_block(b, y);
      for (size_t i = 0; i < b.index.size(); ++i) out(b.index[i]) = p(static_cast<Index>(i));
    }
  } else {
    const Index k = set.num_forms();
    std::vector<Vector> incr(static_cast<size_t>(k), Vector::Zero(y.size()));
    bool done = false;
    for (int sweep = 0; sweep < 10000 && !done; ++sweep) {
      const Vector prev = out;
      for (Index j = 0; j < k; ++j) {
        Vector& p = incr[static_cast<size_t>(j)];
        const Vector z = project_ellipsoid(out + p, set.form(j));
        p = out + p - z;
        out = z;
      }
      done = (out - prev).norm() <= 1e-8 * (1.0 + out.norm());
    }
    if (!done) throw ConvergenceError("Dykstra projection exceeded 10000 sweeps");
  }
  const double excess = radial_excess(set, out);
  if (excess > 1.0) out /= std::sqrt(excess);
  return out;
}

double EllitopeProjector::support(const Vector& g) const {
  if (!separable_) throw InvalidArgument("closed-form support needs a block-separable ellitope");
  double s = 0.0;
  for (const auto& b : blocks_) {
    Vector c = gather(g, b.index);
    if (b.vectors.size()) c = b.vectors.transpose() * c;
    double acc = 0.0;
    for (Index i = 0; i < c.size(); ++i) {
      if (c(i) == 0.0) continue;
      if (b.values(i) <= 0.0) return std::numeric_limits<double>::infinity();
      acc += c(i) * c(i) / b.values(i);
    }
    s += std::sqrt(acc);
  }
  return s;
}

Vector project_intersection(const Vector& x, const Ellitope& set) { return EllitopeProjector(set).project(x); }

PolyApplyResult polyhedral_apply(const Matrix& h, const Vector& omega, const DesignSpec& spec,
                                 const PolyApplyOptions& options) {
  return PolyhedralEstimator(h, spec).apply(omega, options);
}

PolyhedralEstimator::PolyhedralEstimator(const Matrix& h, const DesignSpec& spec)
    : spec_(&spec), h_(h), projector_(spec.signal_set()) {
  require_dims(h.rows() == spec.m(), "contrast rows vs observation size");
  g_ = h.transpose() * spec.a();
  norm_ = spectral_norm(g_);
}

PolyApplyResult PolyhedralEstimator::apply(const Vector& omega, const PolyApplyOptions& options) const {
  const DesignSpec& spec = *spec_;
  const EllitopeProjector& proj = projector_;
  const Matrix& g = g_;
  require_dims(omega.size() == spec.m(), "observation vs spec");
  const Vector b = h_.transpose() * omega;
  const double tol = options.rel_tol * (1.0 + b.cwiseAbs().maxCoeff());

  PolyApplyResult res;
  auto objective = [&](const Vector& x) { return (b - g * x).cwiseAbs().maxCoeff(); };
  Vector x = proj.project(spec.a_inv() * omega);
  res.x = x;
  res.objective = objective(x);
  res.lower = 0.0;
  if (options.keep_history) res.history.push_back(res.objective);
  auto finish = [&]() {
    res.gap = res.objective - res.lower;
    res.w = spec.b() * res.x;
    return res;
  };
  if (res.objective <= tol) {
    res.converged = true;
    return finish();
  }

  const double l = norm_;
  if (l == 0.0) {
    res.converged = true;
    return finish();
  }
  // primal/dual weight: ratio of the radii of X and of the unit l1 ball
  const double weight = std::max(proj.radius(), 1e-6);
  const double tau = 0.95 * weight / l, sigma = 0.95 / (weight * l);

  double stall_ref = res.objective;
  int stall_it = 0;
  Vector x_bar = x;
  Vector y = Vector::Zero(b.size());
  for (int it = 1; it <= options.max_iterations; ++it) {
    y = project_l1_ball(y + sigma * (b - g * x_bar));
    const Vector x_new = proj.project(x + tau * (g.transpose() * y));
    x_bar = 2.0 * x_new - x;
    x = x_new;
    res.iterations = it;
    if (it % options.check_every) continue;
    const double p = objective(x);
    if (p < res.objective) {
      res.objective = p;
      res.x = x;
    }
    if (proj.separable()) res.lower = std::max(res.lower, y.dot(b) - proj.support(g.transpose() * y));
    if (options.keep_history) res.history.push_back(res.objective);
    if (res.objective - res.lower <= tol) {
      res.converged = true;
      break;
    }
    if (!proj.separable()) {
      // no closed-form certificate: stop once the best value stalls
      if (res.objective < stall_ref - tol) {
        stall_ref = res.objective;
        stall_it = it;
      } else if (it - stall_it >= 2000) {
        res.converged = true;
        break;
      }
    }
  }
  if (!proj.separable()) res.lower = -std::numeric_limits<double>::infinity();
  return finish();
}

}  // namespace polyest
