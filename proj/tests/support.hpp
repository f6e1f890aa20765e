#pragma once

#include <polyest/design.hpp>
#include <polyest/rng.hpp>

#include <vector>

namespace polyest::testing {

inline Matrix random_sym(Index n, Rng& rng) {
  const Matrix g = rng.normal_matrix(n, n);
  return 0.5 * (g + g.transpose());
}

inline Matrix random_psd(Index n, Rng& rng, Index rank = -1) {
  const Matrix g = rng.normal_matrix(n, rank < 0 ? n : rank);
  return g * g.transpose();
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Random well-posed spec: A = Gaussian + shift (kept well conditioned), random PSD forms.
inline DesignSpec random_spec(Rng& rng, Index n, Index k, Index l, Index nu = -1, bool l1_params = false) {
  if (nu < 0) nu = n;
  Matrix a = rng.normal_matrix(n, n) + 3.0 * std::sqrt(static_cast<double>(n)) * Matrix::Identity(n, n);
  Matrix b = rng.normal_matrix(nu, n);
  std::vector<Matrix> t, s;
  for (Index i = 0; i < k; ++i) t.push_back(random_psd(n, rng, std::max<Index>(1, n / k + 1)) + 0.05 * Matrix::Identity(n, n));
  for (Index i = 0; i < l; ++i) s.push_back(random_psd(nu, rng) + 0.1 * Matrix::Identity(nu, nu));
  const ParamSet tp = l1_params ? ParamSet::lq_ball(k, 1.0) : ParamSet::unit_box(k);
  return DesignSpec(std::move(a), std::move(b), uniform(rng, 0.05, 0.5), 0.05, Ellitope(std::move(t), tp),
                    Ellitope(std::move(s), ParamSet::unit_box(l)));
}

inline DualPoint random_point(Rng& rng, Index l, Index k, double lo = 0.05, double hi = 2.0) {
  DualPoint p{Vector(l), Vector(k)};
  for (Index i = 0; i < l; ++i) p.lambda(i) = uniform(rng, lo, hi);
  for (Index i = 0; i < k; ++i) p.mu(i) = uniform(rng, 0.0, hi);
  return p;
}

}  // namespace polyest::testing
