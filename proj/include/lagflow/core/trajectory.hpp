#ifndef LAGFLOW_CORE_TRAJECTORY_HPP
#define LAGFLOW_CORE_TRAJECTORY_HPP

#include <algorithm>
#include <cmath>
#include <span>

#include "lagflow/core/operators.hpp"

namespace lagflow {

/** \brief Two consecutive 1D flow-map levels x^{n-1}, x^n on node labels.
 *
 * tau_prev is the step that produced curr from prev (0 before the first step).
 */
struct Trajectory1D {
  Grid1D grid;
  Vec prev, curr;
  double tau_prev = 0.0;
  double time = 0.0;
  std::size_t step_index = 0;

  static Trajectory1D identity(const Grid1D& g) {
    Trajectory1D t;
    t.grid = g;
    t.curr = g.node_coords();
    t.prev = t.curr;
    return t;
  }

  /// Shift levels: curr becomes prev, \p next becomes curr.
  Trajectory1D advanced(Vec next, double tau) const {
    Trajectory1D t;
    t.grid = grid;
    t.prev = curr;
    t.curr = std::move(next);
    t.tau_prev = tau;
    t.time = time + tau;
    t.step_index = step_index + 1;
    return t;
  }
};

struct Trajectory2D {
  Grid2D grid;
  Vec prev_x, prev_y, curr_x, curr_y;
  double tau_prev = 0.0;
  double time = 0.0;
  std::size_t step_index = 0;

  static Trajectory2D identity(const Grid2D& g) {
    Trajectory2D t;
    t.grid = g;
    t.curr_x.resize(g.size());
    t.curr_y.resize(g.size());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        t.curr_x[g.idx(i, j)] = g.X(j);
        t.curr_y[g.idx(i, j)] = g.Y(i);
      }
    t.prev_x = t.curr_x;
    t.prev_y = t.curr_y;
    return t;
  }

  Trajectory2D advanced(Vec nx, Vec ny, double tau) const {
    Trajectory2D t;
    t.grid = grid;
    t.prev_x = curr_x;
    t.prev_y = curr_y;
    t.curr_x = std::move(nx);
    t.curr_y = std::move(ny);
    t.tau_prev = tau;
    t.time = time + tau;
    t.step_index = step_index + 1;
    return t;
  }
};

inline bool strictly_increasing(std::span<const double> x) {
  for (std::size_t j = 0; j + 1 < x.size(); ++j)
    if (!(x[j + 1] > x[j])) return false;
  return true;
}

/** \brief Density carried by moving 1D cells: values at midpoints and their Eulerian positions. */
struct DensityField1D {
  Vec values;
  Vec positions;
};

/** \brief Density at 2D nodes with the Eulerian node positions. */
struct DensityField2D {
  Grid2D grid;
  Vec values, x, y;
};

/// rho_{j+1/2} = rho0_{j+1/2} / (D_h x)_{j+1/2}.
inline DensityField1D pushforward_1d(std::span<const double> x, std::span<const double> rho0,
                                     const Grid1D& g) {
  g.require_midpoints(rho0.size(), "pushforward_1d(rho0)");
  Vec dx = forward_diff(x, g);
  DensityField1D f;
  f.values.resize(dx.size());
  for (std::size_t j = 0; j < dx.size(); ++j) {
    if (!(dx[j] > 0.0))
      throw AdmissibilityError("pushforward_1d: non-positive cell Jacobian at cell " +
                               std::to_string(j));
    f.values[j] = rho0[j] / dx[j];
  }
  f.positions = midpoint_values(x, g);
  return f;
}

/// rho = rho0 / det F at interior nodes, rho0 at pinned boundary nodes.
inline DensityField2D pushforward_2d(std::span<const double> x, std::span<const double> y,
                                     std::span<const double> rho0, const Grid2D& g) {
  g.require(rho0.size(), "pushforward_2d(rho0)");
  Vec det = jacobian_det_2d(x, y, g);
  DensityField2D f;
  f.grid = g;
  f.values.assign(rho0.begin(), rho0.end());
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      if (!(det[k] > 0.0))
        throw AdmissibilityError("pushforward_2d: non-positive determinant at node (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
      f.values[k] = rho0[k] / det[k];
    }
  f.x.assign(x.begin(), x.end());
  f.y.assign(y.begin(), y.end());
  return f;
}

} // namespace lagflow

#endif
