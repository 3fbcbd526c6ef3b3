#ifndef LAGFLOW_DIAG_DIAGNOSTICS_HPP
#define LAGFLOW_DIAG_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "lagflow/core/errors.hpp"
#include "lagflow/core/operators.hpp"
#include "lagflow/core/trajectory.hpp"

namespace lagflow {

/// Sum of rho_{j+1/2} (x_{j+1} - x_j) with node positions \p x.
inline double total_mass(const DensityField1D& f, std::span<const double> x) {
  if (x.size() != f.values.size() + 1) throw LayoutError("total_mass: need one more node than cells");
  double m = 0.0;
  for (std::size_t j = 0; j < f.values.size(); ++j) m += f.values[j] * (x[j + 1] - x[j]);
  return m;
}

/// Sum of rho_ij det F_ij hx hy over interior nodes.
inline double total_mass(const DensityField2D& f) {
  const Grid2D& g = f.grid;
  const Vec det = jacobian_det_2d(f.x, f.y, g);
  double m = 0.0;
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) m += f.values[g.idx(i, j)] * det[g.idx(i, j)];
  return m * g.hx() * g.hy();
}

/** \brief L2_h midpoint error of a trajectory against a finer reference on the same domain.
 *
 * The reference is sampled at the coarse labels; its cell count must be a multiple.
 */
inline double trajectory_l2_error(std::span<const double> x, const Grid1D& g, std::span<const double> x_ref,
                                  const Grid1D& g_ref) {
  g.require_nodes(x.size(), "trajectory_l2_error(x)");
  g_ref.require_nodes(x_ref.size(), "trajectory_l2_error(x_ref)");
  if (g_ref.cells() % g.cells() != 0) throw LayoutError("trajectory_l2_error: reference cells must be a multiple");
  const std::size_t s = g_ref.cells() / g.cells();
  double e = 0.0;
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double d = 0.5 * (x[j] + x[j + 1]) - 0.5 * (x_ref[j * s] + x_ref[(j + 1) * s]);
    e += d * d * g.h();
  }
  return std::sqrt(e);
}

enum class Resolution { GridSize, StepSize };

/** \brief Observed orders between consecutive runs.
 *
 * GridSize: ln(e_{i-1}/e_i) / ln(M_i/M_{i-1}); StepSize: ln(e_i/e_{i-1}) / ln(tau_i/tau_{i-1}).
 */
inline std::vector<double> convergence_order(std::span<const double> errors, std::span<const double> res,
                                             Resolution kind = Resolution::GridSize) {
  if (errors.size() != res.size() || errors.size() < 2)
    throw LayoutError("convergence_order: need two or more matching entries");
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!(errors[i] > 0.0) || !(res[i] > 0.0)) throw LayoutError("convergence_order: entries must be positive");
  std::vector<double> out;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    const double o = std::log(errors[i] / errors[i - 1]) / std::log(res[i] / res[i - 1]);
    out.push_back(kind == Resolution::GridSize ? -o : o);
  }
  return out;
}

/** \brief -(m/(m-1)) d_X(rho0^{m-1}) / (d_X x)^m at every node.
 *
 * Interior nodes difference the two adjacent midpoint values of rho0^{m-1}
 * and use the central node Jacobian; the end nodes use the adjacent cells.
 */
inline Vec propagation_speed(std::span<const double> x, std::span<const double> rho0, double m, const Grid1D& g) {
  g.require_nodes(x.size(), "propagation_speed(x)");
  g.require_midpoints(rho0.size(), "propagation_speed(rho0)");
  if (!(m > 1.0)) throw LayoutError("propagation_speed: requires a porous-medium exponent m > 1");
  const std::size_t M = g.cells();
  if (M < 2) throw LayoutError("propagation_speed: need at least two cells");
  const double h = g.h();
  Vec p(M), v(M + 1);
  for (std::size_t k = 0; k < M; ++k) p[k] = std::pow(rho0[k], m - 1.0);
  auto speed = [&](double dp, double jac) { return -(m / (m - 1.0)) * dp / std::pow(jac, m); };
  v[0] = speed((p[1] - p[0]) / h, (x[1] - x[0]) / h);
  v[M] = speed((p[M - 1] - p[M - 2]) / h, (x[M] - x[M - 1]) / h);
  for (std::size_t j = 1; j < M; ++j) v[j] = speed((p[j] - p[j - 1]) / h, (x[j + 1] - x[j - 1]) / (2.0 * h));
  return v;
}

/** \brief Positions of the tracked free-boundary nodes after an accepted step. */
struct EdgeSample {
  double t = 0.0;
  std::vector<double> positions;
};

/// First sample time at which some tracked node moved faster than \p threshold.
inline std::optional<double> waiting_time_detect(std::span<const EdgeSample> samples, double threshold) {
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double dt = samples[k].t - samples[k - 1].t;
    if (!(dt > 0.0)) continue;
    for (std::size_t e = 0; e < samples[k].positions.size(); ++e)
      if (std::abs(samples[k].positions[e] - samples[k - 1].positions[e]) / dt > threshold) return samples[k].t;
  }
  return std::nullopt;
}

/// 1 / (2 (m+1) (1 - theta)) for m > 1 and theta in [0, 1/4].
inline double aronson_waiting_time(double m, double theta) {
  if (!(m > 1.0)) throw LayoutError("aronson_waiting_time: m must exceed 1");
  if (!(theta >= 0.0 && theta <= 0.25)) throw LayoutError("aronson_waiting_time: theta must lie in [0, 0.25]");
  return 1.0 / (2.0 * (m + 1.0) * (1.0 - theta));
}

/// max(0.1 - k(m-1)/(4m) (x^2+y^2)/(t+1)^k, 0)^{1/(m-1)} with k = 1/m.
inline double barenblatt_2d(double x, double y, double t, double m) {
  if (!(m > 1.0) || !(t >= 0.0)) throw LayoutError("barenblatt_2d: need m > 1 and t >= 0");
  const double k = 1.0 / m;
  const double s = 0.1 - k * (m - 1.0) / (4.0 * m) * (x * x + y * y) / std::pow(t + 1.0, k);
  return s > 0.0 ? std::pow(s, 1.0 / (m - 1.0)) : 0.0;
}

/// Support radius of barenblatt_2d at time t.
inline double barenblatt_radius(double t, double m) {
  const double k = 1.0 / m;
  return std::sqrt(0.1 * 4.0 * m / (k * (m - 1.0)) * std::pow(t + 1.0, k));
}

namespace detail {

/// Bilinear interpolation of a node field at reference point (X, Y) clamped to the grid.
inline double bilinear(std::span<const double> f, const Grid2D& g, double X, double Y) {
  const double u = std::clamp((X - g.x0()) / g.hx(), 0.0, static_cast<double>(g.mx()));
  const double w = std::clamp((Y - g.y0()) / g.hy(), 0.0, static_cast<double>(g.my()));
  const std::size_t j = std::min(static_cast<std::size_t>(u), g.mx() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(w), g.my() - 1);
  const double a = u - j, b = w - i;
  return (1 - a) * (1 - b) * f[g.idx(i, j)] + a * (1 - b) * f[g.idx(i, j + 1)] + (1 - a) * b * f[g.idx(i + 1, j)] +
         a * b * f[g.idx(i + 1, j + 1)];
}

} // namespace detail

/** \brief Distance from the mass centroid to the level crossing along each of
 * \p directions rays. Rays are scanned in reference coordinates from the
 * label centroid; crossings are mapped to physical space bilinearly.
 * The default level is 1e-3 times the field maximum.
 */
inline std::vector<double> interface_radii(const DensityField2D& f, double level_fraction = 1e-3,
                                           std::size_t directions = 64) {
  const Grid2D& g = f.grid;
  double fmax = 0.0;
  for (double v : f.values) {
    if (!(v >= 0.0)) throw LayoutError("interface_radius: field must be non-negative");
    fmax = std::max(fmax, v);
  }
  if (!(fmax > 0.0)) throw LayoutError("interface_radius: empty support");
  const double level = level_fraction * fmax;
  const Vec det = jacobian_det_2d(f.x, f.y, g);
  double w = 0.0, cX = 0.0, cY = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const std::size_t k = g.idx(i, j);
      const double q = f.values[k] * det[k];
      w += q;
      cX += q * g.X(j);
      cY += q * g.Y(i);
      cx += q * f.x[k];
      cy += q * f.y[k];
    }
  cX /= w;
  cY /= w;
  cx /= w;
  cy /= w;
  const double step = 0.25 * std::min(g.hx(), g.hy());
  const double reach = std::hypot(g.x1() - g.x0(), g.y1() - g.y0());
  auto inside = [&](double X, double Y) { return X >= g.x0() && X <= g.x1() && Y >= g.y0() && Y <= g.y1(); };
  std::vector<double> out;
  for (std::size_t d = 0; d < directions; ++d) {
    const double th = 2.0 * std::numbers::pi * d / directions, ux = std::cos(th), uy = std::sin(th);
    double s0 = 0.0, s1 = 0.0;
    while (s1 < reach) {
      s1 = s0 + step;
      const double X = cX + s1 * ux, Y = cY + s1 * uy;
      if (!inside(X, Y) || detail::bilinear(f.values, g, X, Y) < level) break;
      s0 = s1;
    }
    if (!inside(cX + s1 * ux, cY + s1 * uy)) {
      s1 = s0;
    } else {
      for (int it = 0; it < 50; ++it) {
        const double sm = 0.5 * (s0 + s1);
        (detail::bilinear(f.values, g, cX + sm * ux, cY + sm * uy) >= level ? s0 : s1) = sm;
      }
    }
    const double X = cX + s1 * ux, Y = cY + s1 * uy;
    out.push_back(std::hypot(detail::bilinear(f.x, g, X, Y) - cx, detail::bilinear(f.y, g, X, Y) - cy));
  }
  return out;
}

/// Mean of interface_radii.
inline double interface_radius(const DensityField2D& f, double level_fraction = 1e-3, std::size_t directions = 64) {
  const auto r = interface_radii(f, level_fraction, directions);
  double s = 0.0;
  for (double v : r) s += v;
  return s / r.size();
}

} // namespace lagflow

#endif
