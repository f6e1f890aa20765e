#include "polyest/ipm.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <vector>

namespace polyest {

namespace {

double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

struct NormalSystem {
  Eigen::LLT<Matrix> llt;
  Eigen::LDLT<Matrix> ldlt;
  bool use_ldlt = false;

  void factor(Matrix m) {
    const double reg = 1e-13 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    m.diagonal().array() += reg;
    llt.compute(m);
    use_ldlt = llt.info() != Eigen::Success;
    if (use_ldlt) ldlt.compute(m);
  }
  Vector solve(const Vector& rhs) const { return use_ldlt ? Vector(ldlt.solve(rhs)) : Vector(llt.solve(rhs)); }
};

// Equality-constrained refinement on the active set {w_i > s_i}; accepted only when it
// stays primal feasible with nonnegative multipliers and does not raise the objective.
bool polish(const SmoothObjective& objective, const Matrix& g, const Vector& h, Vector& z, Vector& s, Vector& w) {
  const Index n = z.size(), m = g.rows();
  std::vector<Index> act;
  for (Index i = 0; i < m; ++i)
    if (w(i) > s(i)) act.push_back(i);
  const Index k = static_cast<Index>(act.size());
  if (k == 0 || k > n + m) return false;
  Matrix ga(k, n);
  Vector ha(k), y(k);
  for (Index i = 0; i < k; ++i) {
    ga.row(i) = g.row(act[static_cast<size_t>(i)]);
    ha(i) = h(act[static_cast<size_t>(i)]);
    y(i) = w(act[static_cast<size_t>(i)]);
  }
  const Matrix p = objective.hessian(z);
  const double delta = 1e-9 * std::max(1.0, p.diagonal().cwiseAbs().maxCoeff());
  Matrix kkt = Matrix::Zero(n + k, n + k);
  kkt.topLeftCorner(n, n) = p;
  kkt.topLeftCorner(n, n).diagonal().array() += delta;
  kkt.topRightCorner(n, k) = ga.transpose();
  kkt.bottomLeftCorner(k, n) = ga;
  kkt.bottomRightCorner(k, k).diagonal().setConstant(-delta);
  const Eigen::PartialPivLU<Matrix> lu(kkt);
  Vector zz = z, yy = y;
  for (int it = 0; it < 5; ++it) {
    Vector r(n + k);
    r.head(n) = -(objective.gradient(zz) + ga.transpose() * yy);
    r.tail(k) = -(ga * zz - ha);
    const Vector d = lu.solve(r);
    if (!d.allFinite()) return false;
    zz += d.head(n);
    yy += d.tail(k);
  }
  const double hs = 1.0 + (m ? h.cwiseAbs().maxCoeff() : 0.0);
  const Vector slack = h - g * zz;
  if (slack.minCoeff() < -1e-12 * hs) return false;
  if (yy.minCoeff() < -1e-9 * (1.0 + yy.cwiseAbs().maxCoeff())) return false;
  const double f0 = objective.value(z), f1 = objective.value(zz);
  if (f1 > f0 + 1e-12 * (1.0 + std::abs(f0))) return false;
  z = zz;
  s = slack.cwiseMax(0.0);
  w.setZero();
  for (Index i = 0; i < k; ++i) w(act[static_cast<size_t>(i)]) = std::max(yy(i), 0.0);
  return true;
}

}  // namespace

SmoothObjective SmoothObjective::linear(Vector c) {
  SmoothObjective o;
  o.quadratic = true;
  o.value = [c](const Vector& z) { return c.dot(z); };
  o.gradient = [c](const Vector&) { return c; };
  const Index n = c.size();
  o.hessian = [n](const Vector&) { return Matrix::Zero(n, n); };
  return o;
}

SmoothObjective SmoothObjective::quadratic_form(Matrix p, Vector c) {
  SmoothObjective o;
  o.quadratic = true;
  o.value = [p, c](const Vector& z) { return 0.5 * z.dot(p * z) + c.dot(z); };
  o.gradient = [p, c](const Vector& z) { return Vector(p * z + c); };
  o.hessian = [p](const Vector&) { return p; };
  return o;
}

IpmResult solve_inequality_ipm(const SmoothObjective& objective, const Matrix& g_in, const Vector& h_in,
                               const std::optional<Vector>& start, const IpmOptions& options) {
  const Index n = g_in.cols();
  const Index m = g_in.rows();
  require_dims(h_in.size() == m, "right-hand side of G z <= h");

  // row equilibration: G~ = R G, h~ = R h, multipliers w = R w~
  Vector row_scale(m);
  for (Index i = 0; i < m; ++i) {
    const double r = g_in.row(i).cwiseAbs().maxCoeff();
    row_scale(i) = r > 0.0 ? 1.0 / r : 1.0;
  }
  const Matrix g = row_scale.asDiagonal() * g_in;
  const Vector h = row_scale.cwiseProduct(h_in);

  IpmResult res;
  Vector z = start.value_or(Vector::Zero(n));
  require_dims(z.size() == n, "starting point");
  Vector s = (h - g * z).cwiseMax(1.0);
  Vector w = Vector::Ones(m);

  const double h_norm = 1.0 + (m ? h.cwiseAbs().maxCoeff() : 0.0);
  Matrix hess = objective.hessian(z);
  NormalSystem sys;

  struct Measures {
    double prel, drel, grel;
    double worst() const { return std::max({prel, drel, grel}); }
  };
  auto measure = [&](const Vector& zz, const Vector& ss, const Vector& ww) {
    const Vector grad = objective.gradient(zz);
    const Vector gtw = g.transpose() * ww;
    const Vector rd = grad + gtw;
    Measures r;
    r.prel = m ? (g * zz + ss - h).cwiseAbs().maxCoeff() / h_norm : 0.0;
    r.drel = rd.cwiseAbs().maxCoeff() /
             (1.0 + grad.cwiseAbs().maxCoeff() + (m ? gtw.cwiseAbs().maxCoeff() : 0.0));
    r.grel = ss.dot(ww) / (1.0 + std::abs(objective.value(zz)));
    return r;
  };

  Vector best_z = z, best_s = s, best_w = w;
  double best = std::numeric_limits<double>::infinity();
  int since_improvement = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it;
    const Measures cur = measure(z, s, w);
    if (cur.worst() < best) {
      since_improvement = cur.worst() < 0.5 * best ? 0 : since_improvement + 1;
      best = cur.worst();
      best_z = z;
      best_s = s;
      best_w = w;
    } else {
      ++since_improvement;
    }
    if (best <= options.tol) break;
    if (best <= options.loose_tol && since_improvement >= 5) break;

    const Vector grad = objective.gradient(z);
    if (!objective.quadratic) hess = objective.hessian(z);
    if (m == 0) {
      sys.factor(hess);
      z -= sys.solve(grad);
      continue;
    }
    const Vector rd = grad + g.transpose() * w;
    const Vector rp = g * z + s - h;
    const double gap = s.dot(w);

    const Vector d = w.cwiseQuotient(s);
    sys.factor(hess + g.transpose() * d.asDiagonal() * g);

    auto direction = [&](const Vector& rc, Vector& dz, Vector& ds, Vector& dw) {
      // W ds + S dw = rc, G dz + ds = -rp, H dz + G^T dw = -rd
      const Vector tmp = (rc + w.cwiseProduct(rp)).cwiseQuotient(s);
      dz = sys.solve(-rd - g.transpose() * tmp);
      ds = -rp - g * dz;
      dw = (rc - w.cwiseProduct(ds)).cwiseQuotient(s);
    };

    Vector dz, ds, dw;
    const double mu = gap / static_cast<double>(m);
    direction(-s.cwiseProduct(w), dz, ds, dw);
    const double a_aff = std::min(max_step(s, ds), max_step(w, dw));
    const double mu_aff = (s + a_aff * ds).dot(w + a_aff * dw) / static_cast<double>(m);
    const double sigma = std::pow(std::max(0.0, mu_aff / mu), 3);
    const Vector rc = -s.cwiseProduct(w) - ds.cwiseProduct(dw) + Vector::Constant(m, sigma * mu);
    direction(rc, dz, ds, dw);

    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(w, dw)));
    if (alpha < 1e-14) break;
    z += alpha * dz;
    s += alpha * ds;
    w += alpha * dw;
  }
  {
    const Measures cur = measure(z, s, w);
    if (cur.worst() < best) {
      best = cur.worst();
      best_z = z;
      best_s = s;
      best_w = w;
    }
  }
  z = best_z;
  s = best_s;
  w = best_w;
  if (options.polish && objective.quadratic && m > 0) {
    Vector pz = z, ps = s, pw = w;
    if (polish(objective, g, h, pz, ps, pw) && measure(pz, ps, pw).worst() <= measure(z, s, w).worst()) {
      z = pz;
      s = ps;
      w = pw;
      res.polished = true;
    }
  }
  const Measures fin = measure(z, s, w);
  res.primal_residual = fin.prel;
  res.dual_residual = fin.drel;
  res.complementarity = s.dot(w);
  res.converged = fin.worst() <= options.loose_tol;

  res.z = z;
  res.slack = h_in - g_in * z;
  res.dual = row_scale.cwiseProduct(w);
  res.primal_objective = objective.value(z);
  const Vector rd = objective.gradient(z) + g_in.transpose() * res.dual;
  res.dual_objective = res.primal_objective + res.dual.dot(g_in * z - h_in) - rd.dot(z);
  return res;
}

}  // namespace polyest
