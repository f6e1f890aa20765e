#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <polyest/subsolve.hpp>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace polyest;
using namespace polyest::testing;

namespace {

AffineForm form(Vector c, double b) { return {std::move(c), b}; }

PiecewiseModel linear_piece(const Vector& c, double b = 0.0) {
  PiecewiseModel m;
  m.linear = form(c, b);
  m.scale = 1.0;
  return m;
}

/// Box [lo, hi]^n as lower bounds plus upper-bound cuts, with a loose simplex constraint.
Polytope box(Index n, double lo, double hi) {
  Polytope x;
  x.lower = Vector::Constant(n, lo);
  x.radius = 10.0 * n * (std::abs(hi) + 1.0);
  for (Index i = 0; i < n; ++i) x.cuts.push_back(form(-Vector::Unit(n, i), hi));
  return x;
}

/// Random piece: linear part plus rho positive-part terms.
PiecewiseModel random_piece(Rng& rng, Index n, Index rho) {
  PiecewiseModel m;
  m.linear = form(0.3 * rng.normal_vector(n), 0.2 * rng.normal());
  m.scale = uniform(rng, 0.5, 2.0);
  for (Index i = 0; i < rho; ++i) m.forms.push_back(form(rng.normal_vector(n), rng.normal()));
  return m;
}

Vector random_in(Rng& rng, const Polytope& x) {
  const Index n = x.dim();
  Vector e(n);
  for (Index i = 0; i < n; ++i) e(i) = -std::log(rng.uniform());
  const double total = e.sum() - std::log(rng.uniform());
  return x.lower + (x.radius - x.lower.sum()) * e / total;
}

bool feasible(const Vector& y, const Bundle& b, const PsiRep& psi, double level, const Polytope& x,
              const std::optional<AffineForm>& cut) {
  return x.contains(y, 0.0) && bundle_value(b, psi, y) <= level && (!cut || (*cut)(y) >= 0.0);
}

/// Exact projection onto a 2-D polygon by enumerating active sets of at most two half-planes.
/// The level set of the bundle expands into one half-plane per piece and subset of its terms.
Vector polygon_projection(const Vector& c, const Bundle& b, const PsiRep& psi, double level, const Polytope& x,
                          const std::optional<AffineForm>& cut) {
  std::vector<AffineForm> rows;  // a(y) <= 0
  for (Index i = 0; i < 2; ++i) rows.push_back(form(-Vector::Unit(2, i), x.lower(i)));
  rows.push_back(form(Vector::Ones(2), -x.radius));
  for (const auto& k : x.cuts) rows.push_back(form(-k.coeff, -k.constant));
  if (cut) rows.push_back(form(-cut->coeff, -cut->constant));
  REQUIRE(psi.blocks.size() == 1);
  REQUIRE(psi.blocks[0].size() == 1);
  const AffineForm& ps = psi.blocks[0][0];
  for (const auto& piece : b) {
    const size_t k = piece.forms.size();
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
      AffineForm r = form(piece.linear.coeff + ps.coeff, piece.linear.constant + ps.constant - level);
      for (size_t j = 0; j < k; ++j)
        if (mask >> j & 1) {
          r.coeff += piece.scale * piece.forms[j].coeff;
          r.constant += piece.scale * piece.forms[j].constant;
        }
      rows.push_back(r);
    }
  }
  auto ok = [&](const Vector& y) {
    for (const auto& r : rows)
      if (r(y) > 1e-10 * (1.0 + r.coeff.norm() + std::abs(r.constant))) return false;
    return true;
  };
  std::vector<Vector> cand{c};
  for (const auto& r : rows) {
    const double nn = r.coeff.squaredNorm();
    if (nn > 0) cand.push_back(c - r(c) / nn * r.coeff);
  }
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = i + 1; j < rows.size(); ++j) {
      Matrix m(2, 2);
      m.row(0) = rows[i].coeff.transpose();
      m.row(1) = rows[j].coeff.transpose();
      if (std::abs(m.determinant()) < 1e-12) continue;
      Vector rhs(2);
      rhs << -rows[i].constant, -rows[j].constant;
      cand.push_back(m.partialPivLu().solve(rhs));
    }
  Vector best;
  double best_val = std::numeric_limits<double>::infinity();
  for (const auto& y : cand)
    if (ok(y) && (y - c).squaredNorm() < best_val) {
      best_val = (y - c).squaredNorm();
      best = y;
    }
  REQUIRE(best.size() == 2);
  return best;
}

}  // namespace

TEST_CASE("polytope helpers") {
  Polytope x;
  x.lower = Vector::Zero(3);
  x.radius = 2.0;
  CHECK(x.contains(Vector::Constant(3, 0.5)));
  CHECK_FALSE(x.contains(Vector::Constant(3, 1.0)));
  CHECK(x.euclidean_diameter() == doctest::Approx(2.0 * std::sqrt(2.0)));
  Vector c(3);
  c << 1, -2, 3;
  CHECK(x.max_linear(c) == doctest::Approx(6.0));
  CHECK(x.nonempty());
  x.cuts.push_back(form(Vector::Unit(3, 0), -3.0));  // y1 >= 3
  CHECK_FALSE(x.nonempty());
}

TEST_CASE("linear LP matches vertex enumeration") {
  Rng rng(1);
  for (int inst = 0; inst < 40; ++inst) {
    const Index n = 2 + inst % 5;
    Polytope x;
    x.lower = Vector::Zero(n);
    x.lower(0) = 1e-3;
    x.radius = uniform(rng, 1.0, 5.0);
    const Vector c = rng.normal_vector(n);
    double best = c.dot(x.lower);
    for (Index i = 0; i < n; ++i) best = std::min(best, c.dot(x.lower) + (x.radius - x.lower.sum()) * c(i));
    const LevelLpResult r = solve_level_lp({linear_piece(c)}, PsiRep{}, x);
    REQUIRE(r.feasible);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-7));
    CHECK(std::abs(bundle_value({linear_piece(c)}, PsiRep{}, r.y) - r.value) <= 1e-8 * std::max(1.0, std::abs(best)));
    CHECK(x.contains(r.y, 1e-8));
  }
}

TEST_CASE("cut that excludes everything gives +inf") {
  Polytope x;
  x.lower = Vector::Zero(2);
  x.radius = 3.0;
  const AffineForm cut = form(Vector::Unit(2, 0), -(x.radius + 1));
  const LevelLpResult r = solve_level_lp({linear_piece(Vector::Ones(2))}, PsiRep{}, x, cut);
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.value));
  CHECK(r.value > 0);
}

TEST_CASE("single positive-part term") {
  Polytope x = box(1, 0.0, 2.0);
  PiecewiseModel m;
  m.linear = form(Vector::Zero(1), 0.0);
  m.forms.push_back(form(Vector::Ones(1), -1.0));
  const LevelLpResult r = solve_level_lp({m}, PsiRep{}, x);
  REQUIRE(r.feasible);
  CHECK(std::abs(r.value) <= 1e-8);
  CHECK(r.y(0) <= 1.0 + 1e-7);
}

TEST_CASE("level LP on random bundles: duality and epigraph faithfulness") {
  Rng rng(2);
  for (int inst = 0; inst < 30; ++inst) {
    const Index n = 2 + inst % 5;
    Polytope x;
    x.lower = Vector::Zero(n);
    x.radius = uniform(rng, 1.0, 4.0);
    Bundle b;
    for (int t = 0; t < 1 + inst % 3; ++t) b.push_back(random_piece(rng, n, 1 + t % 2));
    PsiRep psi{{{form(Vector::Ones(n), 0.0)}}};
    std::optional<AffineForm> cut;
    if (inst % 2) {
      const Vector y0 = random_in(rng, x);
      const Vector d = rng.normal_vector(n);
      cut = form(d, -d.dot(y0));
    }
    const LevelLpResult r = solve_level_lp(b, psi, x, cut);
    REQUIRE(r.feasible);
    const double scale = std::max(1.0, std::abs(r.value));
    CHECK(std::abs(bundle_value(b, psi, r.y) - r.value) <= 1e-8 * scale);
    CHECK(std::abs(r.stats.primal_objective - r.stats.dual_objective) <= 1e-6 * scale);
    // no sampled feasible point does better
    for (int j = 0; j < 300; ++j) {
      const Vector y = random_in(rng, x);
      if (cut && (*cut)(y) < 0.0) continue;
      CHECK(bundle_value(b, psi, y) >= r.value - 1e-8 * scale);
    }
  }
}

TEST_CASE("duplicate pieces do not change the answer") {
  Rng rng(3);
  Polytope x;
  x.lower = Vector::Zero(3);
  x.radius = 2.0;
  const PiecewiseModel p = random_piece(rng, 3, 2), q = random_piece(rng, 3, 2);
  const LevelLpResult a = solve_level_lp({p, q}, PsiRep{}, x);
  const LevelLpResult b = solve_level_lp({p, q, p, q, p}, PsiRep{}, x);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
}

TEST_CASE("euclidean projection basics") {
  const Polytope x = box(2, 0.0, 1.0);
  const Bundle flat{linear_piece(Vector::Zero(2))};
  Vector c(2);
  c << 0.3, 0.6;
  CHECK(solve_projection_qp(c, flat, PsiRep{}, 1.0, x).y.isApprox(c, 1e-8));
  c << 2.0, 0.5;
  const Vector y = solve_projection_qp(c, flat, PsiRep{}, 1.0, x).y;
  CHECK(y(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(y(1) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("euclidean projection matches active-set enumeration and is idempotent") {
  Rng rng(4);
  int checked = 0;
  for (int inst = 0; checked < 25 && inst < 200; ++inst) {
    Polytope x;
    x.lower = Vector::Zero(2);
    x.radius = uniform(rng, 1.0, 3.0);
    Bundle b;
    for (int t = 0; t < 1 + inst % 3; ++t) b.push_back(random_piece(rng, 2, 1 + inst % 2));
    const PsiRep psi{{{form(Vector::Ones(2), 0.0)}}};
    std::optional<AffineForm> cut;
    if (inst % 2) {
      const Vector d = rng.normal_vector(2);
      cut = form(d, -d.dot(random_in(rng, x)));
    }
    const LevelLpResult lp = solve_level_lp(b, psi, x, cut);
    if (!lp.feasible) continue;
    const double level = lp.value + uniform(rng, 0.05, 0.5) * (1.0 + std::abs(lp.value));
    const Vector c = 3.0 * rng.normal_vector(2);
    const Vector y = solve_projection_qp(c, b, psi, level, x, cut, lp.y).y;
    const Vector g = polygon_projection(c, b, psi, level, x, cut);
    CHECK((y - g).norm() <= 1e-6);
    CHECK(bundle_value(b, psi, y) <= level + 1e-7);
    for (int j = 0; j < 200; ++j) {
      const Vector z = random_in(rng, x);
      if (!feasible(z, b, psi, level, x, cut)) continue;
      CHECK((y - c).dot(z - y) >= -1e-7);
    }
    const Vector again = solve_projection_qp(y, b, psi, level, x, cut).y;
    CHECK((again - y).norm() <= 1e-8 * (1.0 + y.norm()));
    ++checked;
  }
  CHECK(checked == 25);
}

TEST_CASE("l1/l2 distance-generating function") {
  const L1L2Setup small = L1L2Setup::for_dim(2);
  CHECK(small.p == 2.0);
  const L1L2Setup s = L1L2Setup::for_dim(16);
  CHECK(s.p == doctest::Approx(1.0 + 1.0 / std::log(16.0)));
  CHECK(s.coef == doctest::Approx(1.0 / (2 * (s.p - 1) * std::pow(16.0, 2 * (1 / s.p - 1)))));
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Vector x = rng.normal_vector(16), y = rng.normal_vector(16);
    const double breg = s.omega(y) - s.omega(x) - s.gradient(x).dot(y - x);
    CHECK(breg >= 0.5 * std::pow((y - x).lpNorm<1>(), 2) - 1e-10);
    // gradient against central differences
    if (i < 20) {
      const Vector d = rng.normal_vector(16);
      const double h = 1e-6;
      const double fd = (s.omega(x + h * d) - s.omega(x - h * d)) / (2 * h);
      CHECK(fd == doctest::Approx(s.gradient(x).dot(d)).epsilon(1e-5));
    }
  }
}

TEST_CASE("mirror projection optimality") {
  Rng rng(6);
  for (int inst = 0; inst < 15; ++inst) {
    const Index n = 3 + inst % 4;
    const L1L2Setup setup = L1L2Setup::for_dim(n);
    Polytope x;
    x.lower = Vector::Zero(n);
    x.lower(0) = 1e-3;
    x.radius = uniform(rng, 1.0, 3.0);
    Bundle b{random_piece(rng, n, 2), random_piece(rng, n, 1)};
    const PsiRep psi{{{form(Vector::Ones(n), 0.0)}}};
    const LevelLpResult lp = solve_level_lp(b, psi, x);
    REQUIRE(lp.feasible);
    const double level = lp.value + 0.2 * (1.0 + std::abs(lp.value));
    const Vector c = random_in(rng, x);

    // interior center with a loose level returns the center
    const Vector same = solve_projection_mirror(c, b, psi, bundle_value(b, psi, c) + 1.0, x, setup).y;
    CHECK((same - c).lpNorm<Eigen::Infinity>() <= 1e-5);

    const Vector y = solve_projection_mirror(c, b, psi, level, x, setup, std::nullopt, lp.y).y;
    CHECK(x.contains(y, 1e-7));
    CHECK(bundle_value(b, psi, y) <= level + 1e-7);
    const Vector dir = setup.gradient(y) - setup.gradient(c);
    for (int j = 0; j < 300; ++j) {
      const Vector z = random_in(rng, x);
      if (!feasible(z, b, psi, level, x, std::nullopt)) continue;
      CHECK(dir.dot(z - y) >= -1e-5);
    }
  }
}
