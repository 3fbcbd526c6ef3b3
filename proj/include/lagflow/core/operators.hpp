#ifndef LAGFLOW_CORE_OPERATORS_HPP
#define LAGFLOW_CORE_OPERATORS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "lagflow/core/grid.hpp"

namespace lagflow {

/// (D_h x)_{j+1/2} = (x_{j+1} - x_j) / h, node field -> midpoint field.
inline Vec forward_diff(std::span<const double> x, const Grid1D& g) {
  g.require_nodes(x.size(), "forward_diff");
  Vec d(g.cells());
  const double ih = 1.0 / g.h();
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = (x[j + 1] - x[j]) * ih;
  return d;
}

/// x_{j+1/2} = (x_j + x_{j+1}) / 2.
inline Vec midpoint_values(std::span<const double> x, const Grid1D& g) {
  g.require_nodes(x.size(), "midpoint_values");
  Vec m(g.cells());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = 0.5 * (x[j] + x[j + 1]);
  return m;
}

/** \brief Node difference of an augmented midpoint sequence.
 *
 * Input layout is (v_0, v_{1/2}, ..., v_{M-1/2}, v_M): M + 2 entries where the
 * first and last are boundary values. Interior nodes get
 * (v_{j+1/2} - v_{j-1/2}) / h; the two boundary nodes use the half-cell
 * one-sided difference, e.g. (v_{1/2} - v_0) / (h/2). With this closure
 * (D_h u, v)_h = -[u, d_h v]_h whenever v_0 = v_M = 0.
 */
inline Vec midpoint_diff(std::span<const double> v, const Grid1D& g) {
  const std::size_t M = g.cells();
  if (v.size() != M + 2)
    throw LayoutError("midpoint_diff: expected " + std::to_string(M + 2) +
                      " augmented midpoint values, got " + std::to_string(v.size()));
  Vec d(M + 1);
  const double ih = 1.0 / g.h();
  d[0] = 2.0 * (v[1] - v[0]) * ih;
  for (std::size_t j = 1; j < M; ++j) d[j] = (v[j + 1] - v[j]) * ih;
  d[M] = 2.0 * (v[M + 1] - v[M]) * ih;
  return d;
}

/** \brief (d_h x)_j for a node field x, through its midpoint averages.
 *
 * Interior: (x_{j+1} - x_{j-1}) / (2h). Ends: (x_1 - x_0)/h and (x_M - x_{M-1})/h.
 */
inline Vec node_jacobian(std::span<const double> x, const Grid1D& g) {
  g.require_nodes(x.size(), "node_jacobian");
  const std::size_t M = g.cells();
  Vec d(M + 1);
  const double ih = 1.0 / g.h();
  d[0] = (x[1] - x[0]) * ih;
  for (std::size_t j = 1; j < M; ++j) d[j] = 0.5 * (x[j + 1] - x[j - 1]) * ih;
  d[M] = (x[M] - x[M - 1]) * ih;
  return d;
}

enum class InnerKind { Midpoint, Node };

/** \brief Discrete L2 products.
 *
 * Midpoint: sum (u v)_{j+1/2} h. Node: trapezoid weights, half at the two ends.
 */
inline double inner_product(InnerKind kind, std::span<const double> u, std::span<const double> v,
                            const Grid1D& g) {
  if (u.size() != v.size()) throw LayoutError("inner_product: operand lengths differ");
  double s = 0.0;
  if (kind == InnerKind::Midpoint) {
    g.require_midpoints(u.size(), "inner_product(midpoint)");
    for (std::size_t j = 0; j < u.size(); ++j) s += u[j] * v[j];
    return s * g.h();
  }
  g.require_nodes(u.size(), "inner_product(node)");
  const std::size_t M = g.cells();
  for (std::size_t j = 1; j < M; ++j) s += u[j] * v[j];
  s += 0.5 * (u[0] * v[0] + u[M] * v[M]);
  return s * g.h();
}

inline double l2_norm(InnerKind kind, std::span<const double> u, const Grid1D& g) {
  return std::sqrt(inner_product(kind, u, u, g));
}

/** \brief Central-difference Jacobian determinant at interior nodes.
 *
 * Boundary entries are set to 1 (pinned nodes keep the reference metric).
 */
inline Vec jacobian_det_2d(std::span<const double> x, std::span<const double> y, const Grid2D& g) {
  g.require(x.size(), "jacobian_det_2d(x)");
  g.require(y.size(), "jacobian_det_2d(y)");
  Vec det(g.size(), 1.0);
  const double s = 1.0 / (4.0 * g.hx() * g.hy());
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t e = g.idx(i, j + 1), w = g.idx(i, j - 1);
      const std::size_t n = g.idx(i + 1, j), so = g.idx(i - 1, j);
      const double a = x[e] - x[w], b = y[e] - y[w];
      const double c = x[n] - x[so], d = y[n] - y[so];
      det[g.idx(i, j)] = (a * d - b * c) * s;
    }
  return det;
}

inline double min_interior(std::span<const double> f, const Grid2D& g) {
  double m = HUGE_VAL;
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) m = std::min(m, f[g.idx(i, j)]);
  return m;
}

/// x_hat = ((1+r)^2 x^n - r^2 x^{n-1}) / (1 + 2r).
inline Vec extrapolate_hat(std::span<const double> xn, std::span<const double> xnm1, double r) {
  if (xn.size() != xnm1.size()) throw LayoutError("extrapolate_hat: length mismatch");
  const double a = (1.0 + r) * (1.0 + r) / (1.0 + 2.0 * r), b = r * r / (1.0 + 2.0 * r);
  Vec out(xn.size());
  for (std::size_t j = 0; j < xn.size(); ++j) out[j] = a * xn[j] - b * xnm1[j];
  return out;
}

} // namespace lagflow

#endif
