#ifndef LAGFLOW_ENERGY_ENERGY2D_HPP
#define LAGFLOW_ENERGY_ENERGY2D_HPP

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>

#include "lagflow/core/operators.hpp"
#include "lagflow/energy/models.hpp"

namespace lagflow {

/** \brief Local view of the central-difference determinant at an interior node.
 *
 * Local unknowns are ordered (x_e, x_w, x_n, x_s, y_e, y_w, y_n, y_s).
 */
struct DetStencil {
  std::array<std::size_t, 4> nb{};  // e, w, n, s flat indices
  double det = 0.0;
  std::array<double, 8> grad{};

  DetStencil(std::span<const double> x, std::span<const double> y, const Grid2D& g, std::size_t i,
             std::size_t j) {
    nb = {g.idx(i, j + 1), g.idx(i, j - 1), g.idx(i + 1, j), g.idx(i - 1, j)};
    const double s = 1.0 / (4.0 * g.hx() * g.hy());
    const double a = x[nb[0]] - x[nb[1]], b = y[nb[0]] - y[nb[1]];
    const double c = x[nb[2]] - x[nb[3]], d = y[nb[2]] - y[nb[3]];
    det = (a * d - b * c) * s;
    grad = {d * s, -d * s, -b * s, b * s, -c * s, c * s, a * s, -a * s};
  }

  /// Constant second derivative of det between local unknowns p and q.
  static double hess(std::size_t p, std::size_t q, const Grid2D& g) {
    static const int table[8][8] = {
      {0, 0, 0, 0, 0, 0, 1, -1},   {0, 0, 0, 0, 0, 0, -1, 1},  {0, 0, 0, 0, -1, 1, 0, 0},
      {0, 0, 0, 0, 1, -1, 0, 0},   {0, 0, -1, 1, 0, 0, 0, 0},  {0, 0, 1, -1, 0, 0, 0, 0},
      {1, -1, 0, 0, 0, 0, 0, 0},   {-1, 1, 0, 0, 0, 0, 0, 0}};
    return table[p][q] / (4.0 * g.hx() * g.hy());
  }

  /// Flat node and component (0 = x, 1 = y) of local unknown p.
  std::pair<std::size_t, int> dof(std::size_t p) const { return {nb[p % 4], p < 4 ? 0 : 1}; }
};

namespace detail {

inline void check_inputs_2d(std::span<const double> x, std::span<const double> y,
                            std::span<const double> rho0, const Grid2D& g) {
  g.require(x.size(), "energy_2d(x)");
  g.require(y.size(), "energy_2d(y)");
  g.require(rho0.size(), "energy_2d(rho0)");
}

inline double disk_self_log(double area) { return 0.5 * std::log(area / std::numbers::pi) - 0.5; }

} // namespace detail

/** \brief E_{h,2} = sum F(rho0 / det F) det F hx hy over interior nodes, plus the
 * Keller-Segel interaction for that model.
 *
 * Interaction: (1/2) sum_{p != q} m_p m_q W(x_p - x_q) with node masses
 * m = rho0 hx hy; the self term uses the mean of W over a disk with the
 * current cell area.
 */
inline double discrete_energy_2d(const EnergyModel& model, std::span<const double> x,
                                 std::span<const double> y, std::span<const double> rho0,
                                 const Grid2D& g) {
  detail::check_inputs_2d(x, y, rho0, g);
  validate(model);
  const double area = g.hx() * g.hy();
  const Vec det = jacobian_det_2d(x, y, g);
  double e = 0.0;
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      if (!(det[k] > 0.0)) throw AdmissibilityError("discrete_energy_2d: non-positive det F");
      e += cell_energy(model, rho0[k], det[k]).f * area;
    }
  if (std::holds_alternative<KellerSegel2D>(model)) {
    const double w = 0.5 / std::numbers::pi;
    std::vector<std::size_t> ids;
    for (std::size_t i = 1; i < g.my(); ++i)
      for (std::size_t j = 1; j < g.mx(); ++j) ids.push_back(g.idx(i, j));
    double pair = 0.0, self = 0.0;
    for (std::size_t a = 0; a < ids.size(); ++a) {
      const std::size_t p = ids[a];
      const double mp = rho0[p] * area;
      self += mp * mp * detail::disk_self_log(det[p] * area);
      for (std::size_t b = a + 1; b < ids.size(); ++b) {
        const std::size_t q = ids[b];
        const double dx = x[p] - x[q], dy = y[p] - y[q];
        pair += mp * rho0[q] * area * 0.5 * std::log(dx * dx + dy * dy);
      }
    }
    e += w * (pair + 0.5 * self);
  }
  return e;
}

/** \brief Gradient of E_{h,2} / (hx hy) with respect to node positions.
 *
 * This is the per-node force used by the schemes. Boundary entries are zero.
 */
inline std::pair<Vec, Vec> energy_gradient_2d(const EnergyModel& model, std::span<const double> x,
                                              std::span<const double> y,
                                              std::span<const double> rho0, const Grid2D& g) {
  detail::check_inputs_2d(x, y, rho0, g);
  validate(model);
  Vec gx(g.size(), 0.0), gy(g.size(), 0.0);
  const bool ks = std::holds_alternative<KellerSegel2D>(model);
  const double area = g.hx() * g.hy();
  const double w = 0.5 / std::numbers::pi;
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      DetStencil st(x, y, g, i, j);
      if (!(st.det > 0.0)) throw AdmissibilityError("energy_gradient_2d: non-positive det F");
      double df = cell_energy(model, rho0[k], st.det).df;
      if (ks) {
        const double mk = rho0[k] * area;
        df += 0.25 * w * mk * mk / (st.det * area);
      }
      if (df == 0.0) continue;
      for (std::size_t p = 0; p < 8; ++p) {
        const auto [node, comp] = st.dof(p);
        (comp == 0 ? gx : gy)[node] += df * st.grad[p];
      }
    }
  if (ks) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 1; i < g.my(); ++i)
      for (std::size_t j = 1; j < g.mx(); ++j) ids.push_back(g.idx(i, j));
    for (std::size_t a = 0; a < ids.size(); ++a) {
      const std::size_t p = ids[a];
      const double mp = rho0[p] * area;
      for (std::size_t b = a + 1; b < ids.size(); ++b) {
        const std::size_t q = ids[b];
        const double dx = x[p] - x[q], dy = y[p] - y[q];
        const double f = w * mp * rho0[q] * area / ((dx * dx + dy * dy) * area);
        gx[p] += f * dx;
        gy[p] += f * dy;
        gx[q] -= f * dx;
        gy[q] -= f * dy;
      }
    }
  }
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      if (g.boundary(i, j)) gx[g.idx(i, j)] = gy[g.idx(i, j)] = 0.0;
  return {gx, gy};
}

} // namespace lagflow

#endif
