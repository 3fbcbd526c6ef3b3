#ifndef LAGFLOW_LINALG_CG_HPP
#define LAGFLOW_LINALG_CG_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace lagflow {

struct CgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/** \brief Jacobi-preconditioned conjugate gradients for an SPD operator.
 *
 * \p apply(v, out) writes A v into out; \p diag holds the diagonal of A.
 * \p x carries the initial guess on entry and the solution on exit.
 */
template <class Apply>
CgResult conjugate_gradient(Apply&& apply, const std::vector<double>& diag, const std::vector<double>& b,
                            std::vector<double>& x, double rtol = 1e-12, std::size_t max_iter = 0) {
  const std::size_t n = b.size();
  if (max_iter == 0) max_iter = 10 * n + 100;
  std::vector<double> r(n), z(n), p(n), Ap(n);
  apply(x, Ap);
  double bnorm = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = b[k] - Ap[k];
    bnorm += b[k] * b[k];
  }
  bnorm = std::sqrt(bnorm);
  CgResult res;
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    res.converged = true;
    return res;
  }
  auto norm = [&] {
    double s = 0.0;
    for (double v : r) s += v * v;
    return std::sqrt(s);
  };
  double rz = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    z[k] = r[k] / diag[k];
    p[k] = z[k];
    rz += r[k] * z[k];
  }
  res.relative_residual = norm() / bnorm;
  while (res.relative_residual > rtol && res.iterations < max_iter) {
    apply(p, Ap);
    double pAp = 0.0;
    for (std::size_t k = 0; k < n; ++k) pAp += p[k] * Ap[k];
    if (!(pAp > 0.0)) return res;
    const double alpha = rz / pAp;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    double rz_new = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      z[k] = r[k] / diag[k];
      rz_new += r[k] * z[k];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    ++res.iterations;
    res.relative_residual = norm() / bnorm;
  }
  res.converged = res.relative_residual <= rtol;
  return res;
}

} // namespace lagflow

#endif
