#ifndef LAGFLOW_CORE_GRID_HPP
#define LAGFLOW_CORE_GRID_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lagflow/core/errors.hpp"

namespace lagflow {

using Vec = std::vector<double>;

/** \brief Uniform reference grid X_j = x_min + j h, j = 0..M.
 *
 * Node fields have M+1 entries, midpoint fields have M.
 */
class Grid1D {
public:
  Grid1D() = default;
  Grid1D(double x_min, double x_max, std::size_t cells)
    : x_min_(x_min), x_max_(x_max), cells_(cells) {
    if (cells < 2)
      throw LayoutError("Grid1D: need at least 2 cells, got " + std::to_string(cells));
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max))
      throw LayoutError("Grid1D: domain extent must be positive and finite");
    h_ = (x_max - x_min) / static_cast<double>(cells);
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double length() const { return x_max_ - x_min_; }
  std::size_t cells() const { return cells_; }
  std::size_t nodes() const { return cells_ + 1; }
  double h() const { return h_; }

  double node(std::size_t j) const { return x_min_ + static_cast<double>(j) * h_; }
  double midpoint(std::size_t j) const { return x_min_ + (static_cast<double>(j) + 0.5) * h_; }

  Vec node_coords() const {
    Vec X(nodes());
    for (std::size_t j = 0; j < X.size(); ++j) X[j] = node(j);
    return X;
  }
  Vec midpoint_coords() const {
    Vec X(cells_);
    for (std::size_t j = 0; j < X.size(); ++j) X[j] = midpoint(j);
    return X;
  }

  void require_nodes(std::size_t n, const char* what) const {
    if (n != nodes())
      throw LayoutError(std::string(what) + ": expected " + std::to_string(nodes()) +
                        " node values, got " + std::to_string(n));
  }
  void require_midpoints(std::size_t n, const char* what) const {
    if (n != cells_)
      throw LayoutError(std::string(what) + ": expected " + std::to_string(cells_) +
                        " midpoint values, got " + std::to_string(n));
  }

private:
  double x_min_ = 0.0, x_max_ = 1.0;
  std::size_t cells_ = 2;
  double h_ = 0.5;
};

/** \brief Tensor reference grid on [x0, x0 + Lx] x [y0, y0 + Ly], nodes stored row-major.
 *
 * Row index i runs along y, column index j along x; node (i, j) lives at
 * flat index i * (Mx + 1) + j.
 */
class Grid2D {
public:
  Grid2D() = default;
  Grid2D(double x0, double x1, std::size_t mx, double y0, double y1, std::size_t my)
    : x0_(x0), y0_(y0), mx_(mx), my_(my) {
    if (mx < 2 || my < 2) throw LayoutError("Grid2D: need at least 2 cells per direction");
    if (!(x1 > x0) || !(y1 > y0)) throw LayoutError("Grid2D: domain extents must be positive");
    hx_ = (x1 - x0) / static_cast<double>(mx);
    hy_ = (y1 - y0) / static_cast<double>(my);
  }

  std::size_t mx() const { return mx_; }
  std::size_t my() const { return my_; }
  std::size_t cols() const { return mx_ + 1; }
  std::size_t rows() const { return my_ + 1; }
  std::size_t size() const { return cols() * rows(); }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double x1() const { return x0_ + hx_ * static_cast<double>(mx_); }
  double y1() const { return y0_ + hy_ * static_cast<double>(my_); }

  std::size_t idx(std::size_t i, std::size_t j) const { return i * cols() + j; }
  double X(std::size_t j) const { return x0_ + hx_ * static_cast<double>(j); }
  double Y(std::size_t i) const { return y0_ + hy_ * static_cast<double>(i); }
  bool boundary(std::size_t i, std::size_t j) const {
    return i == 0 || j == 0 || i == my_ || j == mx_;
  }

  void require(std::size_t n, const char* what) const {
    if (n != size())
      throw LayoutError(std::string(what) + ": expected " + std::to_string(size()) +
                        " node values, got " + std::to_string(n));
  }

private:
  double x0_ = 0.0, y0_ = 0.0;
  std::size_t mx_ = 2, my_ = 2;
  double hx_ = 0.5, hy_ = 0.5;
};

} // namespace lagflow

#endif
