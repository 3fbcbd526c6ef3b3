#ifndef LAGFLOW_SOLVERS_WGF2D_HPP
#define LAGFLOW_SOLVERS_WGF2D_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "lagflow/core/trajectory.hpp"
#include "lagflow/energy/energy2d.hpp"
#include "lagflow/linalg/cg.hpp"
#include "lagflow/solvers/newton.hpp"

namespace lagflow {

/// Scaling of the artificial viscosity: eps tau or eps tau^2.
enum class ViscosityScaling { Tau, TauSquared };

/** \brief Static data of a 2D Wasserstein gradient flow in Lagrangian form. */
struct Wgf2dProblem {
  Grid2D grid;
  EnergyModel model;
  Vec rho0;  ///< reference density at nodes
  double eps_visc = 0.0;
  ViscosityScaling scaling = ViscosityScaling::TauSquared;

  Wgf2dProblem(const Grid2D& g, EnergyModel m, Vec r0, double eps = 0.0,
               ViscosityScaling s = ViscosityScaling::TauSquared)
    : grid(g), model(std::move(m)), rho0(std::move(r0)), eps_visc(eps), scaling(s) {
    g.require(rho0.size(), "Wgf2dProblem(rho0)");
    validate(model);
    if (!(eps_visc >= 0.0)) throw LayoutError("Wgf2dProblem: eps_visc must be non-negative");
    for (double v : rho0)
      if (!(v >= 0.0)) throw LayoutError("Wgf2dProblem: rho0 must be non-negative");
  }

  /// Coefficient of -Delta_X (x^{n+1} - x^n) for a step of size tau.
  double visc(double tau) const { return scaling == ViscosityScaling::Tau ? eps_visc * tau : eps_visc * tau * tau; }

  /// Sum of rho0 hx hy over interior nodes.
  double mass() const {
    double m = 0.0;
    for (std::size_t i = 1; i < grid.my(); ++i)
      for (std::size_t j = 1; j < grid.mx(); ++j) m += rho0[grid.idx(i, j)];
    return m * grid.hx() * grid.hy();
  }
};

/// ((1+2r) a^{n+1} - (1+r)^2 a^n + r^2 a^{n-1}) / (tau (1+r)).
inline Vec d2_operator(std::span<const double> a1, std::span<const double> a0, std::span<const double> am1,
                       double tau, double r) {
  if (a1.size() != a0.size() || a0.size() != am1.size()) throw LayoutError("d2_operator: length mismatch");
  if (!(tau > 0.0)) throw LayoutError("d2_operator: tau must be positive");
  Vec out(a1.size());
  const double s = 1.0 / (tau * (1.0 + r));
  for (std::size_t k = 0; k < a1.size(); ++k)
    out[k] = ((1.0 + 2.0 * r) * a1[k] - (1.0 + r) * (1.0 + r) * a0[k] + r * r * am1[k]) * s;
  return out;
}

/// 5-point reference Laplacian; zero on the boundary.
inline Vec laplacian_2d(std::span<const double> v, const Grid2D& g) {
  g.require(v.size(), "laplacian_2d");
  Vec out(g.size(), 0.0);
  const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      out[k] = ax * (v[k + 1] - 2.0 * v[k] + v[k - 1]) + ay * (v[k + g.cols()] - 2.0 * v[k] + v[k - g.cols()]);
    }
  return out;
}

namespace detail {

inline double step_ratio_2d(const Trajectory2D& tr, double tau) { return tr.tau_prev > 0.0 ? tau / tr.tau_prev : 0.0; }

inline void check_trajectory_2d(const Trajectory2D& tr, const Wgf2dProblem& P, double tau, const char* who) {
  const Grid2D& g = P.grid;
  g.require(tr.curr_x.size(), who);
  g.require(tr.curr_y.size(), who);
  g.require(tr.prev_x.size(), who);
  g.require(tr.prev_y.size(), who);
  if (!(tau > 0.0)) throw LayoutError(std::string(who) + ": tau must be positive");
  if (!(min_interior(jacobian_det_2d(tr.curr_x, tr.curr_y, g), g) > 0.0))
    throw AdmissibilityError(std::string(who) + ": current level has non-positive det F");
}

/** \brief Per-step functional of the implicit scheme, divided by hx hy:
 * E_{h,2} / (hx hy) + c sum rho0 |x - x_hat|^2 + (nu / 2) sum |D(x - x^n)|^2,
 * c = (1+2r) / (2 tau (1+r)), nu the viscosity coefficient and D the edge differences.
 */
class Wgf2dSystem {
public:
  Wgf2dSystem(const Wgf2dProblem& P, const Trajectory2D& tr, double tau, double r)
    : P_(P), g_(P.grid), xn_(tr.curr_x), yn_(tr.curr_y) {
    c_ = (1.0 + 2.0 * r) / (2.0 * tau * (1.0 + r));
    nu_ = P.visc(tau);
    xh_ = extrapolate_hat(tr.curr_x, tr.prev_x, r);
    yh_ = extrapolate_hat(tr.curr_y, tr.prev_y, r);
    ks_ = std::holds_alternative<KellerSegel2D>(P.model);
    for (std::size_t i = 1; i < g_.my(); ++i)
      for (std::size_t j = 1; j < g_.mx(); ++j) interior_.push_back(g_.idx(i, j));
    dof_.assign(g_.size(), npos);
    for (std::size_t u = 0; u < interior_.size(); ++u) dof_[interior_[u]] = u;
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t unknowns() const { return 2 * interior_.size(); }

  double value(std::span<const double> x, std::span<const double> y) const {
    const double area = g_.hx() * g_.hy();
    double j = discrete_energy_2d(P_.model, x, y, P_.rho0, g_) / area;
    for (std::size_t k : interior_) {
      const double ex = x[k] - xh_[k], ey = y[k] - yh_[k];
      j += c_ * P_.rho0[k] * (ex * ex + ey * ey);
    }
    if (nu_ > 0.0) j += 0.5 * nu_ * edge_energy(x, y);
    return j;
  }

  /// Gradient of value(); boundary entries are zero. \p scale receives the largest term.
  std::pair<Vec, Vec> gradient(std::span<const double> x, std::span<const double> y, double* scale = nullptr) const {
    auto [gx, gy] = energy_gradient_2d(P_.model, x, y, P_.rho0, g_);
    double sc = std::max(max_abs(gx), max_abs(gy));
    Vec dx(g_.size()), dy(g_.size());
    for (std::size_t k = 0; k < g_.size(); ++k) {
      dx[k] = x[k] - xn_[k];
      dy[k] = y[k] - yn_[k];
    }
    const Vec lx = laplacian_2d(dx, g_), ly = laplacian_2d(dy, g_);
    for (std::size_t k : interior_) {
      const double ix = 2.0 * c_ * P_.rho0[k] * (x[k] - xh_[k]), iy = 2.0 * c_ * P_.rho0[k] * (y[k] - yh_[k]);
      gx[k] += ix - nu_ * lx[k];
      gy[k] += iy - nu_ * ly[k];
      sc = std::max({sc, std::abs(ix), std::abs(iy), std::abs(nu_ * lx[k]), std::abs(nu_ * ly[k])});
    }
    if (scale) *scale = sc;
    return {gx, gy};
  }

  /** \brief Sparse Hessian over interior unknowns (x at 2u, y at 2u+1).
   *
   * The Keller-Segel pair interaction is not included. With \p gauss_newton the
   * second derivatives of det F and negative curvature of F are dropped.
   */
  Eigen::SparseMatrix<double> hessian(std::span<const double> x, std::span<const double> y,
                                      bool gauss_newton = false) const {
    const double ax = 1.0 / (g_.hx() * g_.hx()), ay = 1.0 / (g_.hy() * g_.hy());
    const double area = g_.hx() * g_.hy();
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(interior_.size() * 140);
    for (std::size_t k : interior_) {
      const std::size_t u = dof_[k];
      const double d = 2.0 * c_ * P_.rho0[k] + 2.0 * nu_ * (ax + ay);
      T.emplace_back(2 * u, 2 * u, d);
      T.emplace_back(2 * u + 1, 2 * u + 1, d);
      const std::size_t nbr[4] = {k + 1, k - 1, k + g_.cols(), k - g_.cols()};
      const double w[4] = {ax, ax, ay, ay};
      for (int q = 0; q < 4; ++q) {
        const std::size_t v = dof_[nbr[q]];
        if (v == npos) continue;
        T.emplace_back(2 * u, 2 * v, -nu_ * w[q]);
        T.emplace_back(2 * u + 1, 2 * v + 1, -nu_ * w[q]);
      }
    }
    for (std::size_t i = 1; i < g_.my(); ++i)
      for (std::size_t j = 1; j < g_.mx(); ++j) {
        const std::size_t k = g_.idx(i, j);
        const DetStencil st(x, y, g_, i, j);
        const CellEnergy ce = cell_energy(P_.model, P_.rho0[k], st.det);
        double df = ce.df, d2f = ce.d2f;
        if (ks_) {
          const double mk = P_.rho0[k] * area, w = 0.5 / std::numbers::pi;
          df += 0.25 * w * mk * mk / (st.det * area);
          d2f -= 0.25 * w * mk * mk / (st.det * st.det * area);
        }
        if (gauss_newton) d2f = std::max(d2f, 0.0);
        if (df == 0.0 && d2f == 0.0) continue;
        for (std::size_t p = 0; p < 8; ++p) {
          const auto [np, cp] = st.dof(p);
          const std::size_t up = dof_[np];
          if (up == npos) continue;
          for (std::size_t q = 0; q < 8; ++q) {
            const auto [nq, cq] = st.dof(q);
            const std::size_t uq = dof_[nq];
            if (uq == npos) continue;
            double h = d2f * st.grad[p] * st.grad[q];
            if (!gauss_newton) h += df * DetStencil::hess(p, q, g_);
            if (h != 0.0) T.emplace_back(2 * up + cp, 2 * uq + cq, h);
          }
        }
      }
    Eigen::SparseMatrix<double> H(unknowns(), unknowns());
    H.setFromTriplets(T.begin(), T.end());
    return H;
  }

  const std::vector<std::size_t>& interior() const { return interior_; }
  std::size_t dof(std::size_t node) const { return dof_[node]; }

private:
  double edge_energy(std::span<const double> x, std::span<const double> y) const {
    const double ax = 1.0 / (g_.hx() * g_.hx()), ay = 1.0 / (g_.hy() * g_.hy());
    double s = 0.0;
    auto d = [&](std::size_t a, std::size_t b) {
      const double ex = (x[a] - xn_[a]) - (x[b] - xn_[b]), ey = (y[a] - yn_[a]) - (y[b] - yn_[b]);
      return ex * ex + ey * ey;
    };
    for (std::size_t i = 0; i < g_.rows(); ++i)
      for (std::size_t j = 0; j < g_.cols(); ++j) {
        const std::size_t k = g_.idx(i, j);
        if (j + 1 < g_.cols()) s += ax * d(k, k + 1);
        if (i + 1 < g_.rows()) s += ay * d(k, k + g_.cols());
      }
    return s;
  }

  const Wgf2dProblem& P_;
  const Grid2D& g_;
  double c_, nu_;
  bool ks_ = false;
  Vec xn_, yn_, xh_, yh_;
  std::vector<std::size_t> interior_, dof_;
};

inline double roundoff_floor_2d(const Eigen::SparseMatrix<double>& H, std::span<const double> x,
                                std::span<const double> y) {
  double row = 0.0, xm = 0.0;
  for (int c = 0; c < H.outerSize(); ++c) {
    double s = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it) s += std::abs(it.value());
    row = std::max(row, s);
  }
  for (std::size_t k = 0; k < x.size(); ++k) xm = std::max({xm, std::abs(x[k]), std::abs(y[k])});
  return 4.0 * std::numeric_limits<double>::epsilon() * row * xm;
}

} // namespace detail

/** \brief Linear explicit step: the energy gradient is taken at the
 * extrapolation (1+r) x^n - r x^{n-1} and each component solves
 * [rho0 (1+2r)/(tau(1+r)) - nu Delta_X] delta = rho0 r^2 (x^n - x^{n-1})/(tau(1+r)) - grad,
 * with delta = x^{n+1} - x^n zero on the boundary.
 *
 * A trajectory with tau_prev == 0 takes the one-step variant (r = 0).
 */
inline Trajectory2D wgf2d_step_explicit(const Trajectory2D& tr, double tau, const Wgf2dProblem& P,
                                        double cg_rtol = 1e-12, CgResult* cg_report = nullptr) {
  const Grid2D& g = P.grid;
  detail::check_trajectory_2d(tr, P, tau, "wgf2d_step_explicit");
  const double r = detail::step_ratio_2d(tr, tau);
  const std::size_t N = g.size();
  Vec ex(N), ey(N);
  for (std::size_t k = 0; k < N; ++k) {
    ex[k] = (1.0 + r) * tr.curr_x[k] - r * tr.prev_x[k];
    ey[k] = (1.0 + r) * tr.curr_y[k] - r * tr.prev_y[k];
  }
  if (!(min_interior(jacobian_det_2d(ex, ey, g), g) > 0.0))
    throw AdmissibilityError("wgf2d_step_explicit: extrapolated configuration has non-positive det F");
  const auto [gx, gy] = energy_gradient_2d(P.model, ex, ey, P.rho0, g);

  const double a = (1.0 + 2.0 * r) / (tau * (1.0 + r)), b = r * r / (tau * (1.0 + r));
  const double nu = P.visc(tau);
  const double ax = 1.0 / (g.hx() * g.hx()), ay = 1.0 / (g.hy() * g.hy());
  Vec diag(N, 1.0);
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      diag[k] = a * P.rho0[k] + 2.0 * nu * (ax + ay);
      if (!(diag[k] > 0.0))
        throw ConvergenceError("wgf2d_step_explicit: singular system (zero density without viscosity)");
    }
  auto apply = [&](const Vec& v, Vec& out) {
    const Vec L = laplacian_2d(v, g);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        const std::size_t k = g.idx(i, j);
        out[k] = g.boundary(i, j) ? v[k] : a * P.rho0[k] * v[k] - nu * L[k];
      }
  };
  auto solve = [&](const Vec& curr, const Vec& prev, const Vec& grad) {
    Vec rhs(N, 0.0), d(N, 0.0);
    for (std::size_t i = 1; i < g.my(); ++i)
      for (std::size_t j = 1; j < g.mx(); ++j) {
        const std::size_t k = g.idx(i, j);
        rhs[k] = P.rho0[k] * b * (curr[k] - prev[k]) - grad[k];
        d[k] = rhs[k] / diag[k];
      }
    const CgResult res = conjugate_gradient(apply, diag, rhs, d, cg_rtol);
    if (!res.converged)
      throw ConvergenceError("wgf2d_step_explicit: CG stopped at relative residual " + fmt_sci(res.relative_residual));
    if (cg_report) {
      cg_report->iterations += res.iterations;
      cg_report->relative_residual = std::max(cg_report->relative_residual, res.relative_residual);
      cg_report->converged = true;
    }
    Vec out(curr.begin(), curr.end());
    for (std::size_t k = 0; k < N; ++k) out[k] += d[k];
    return out;
  };
  if (cg_report) *cg_report = {};
  Vec nx = solve(tr.curr_x, tr.prev_x, gx), ny = solve(tr.curr_y, tr.prev_y, gy);
  if (!(min_interior(jacobian_det_2d(nx, ny, g), g) > 0.0))
    throw AdmissibilityError("wgf2d_step_explicit: new configuration has non-positive det F");
  return tr.advanced(std::move(nx), std::move(ny), tau);
}

/// Largest interior residual of the implicit scheme at (x, y).
inline double wgf2d_residual(std::span<const double> x, std::span<const double> y, const Trajectory2D& tr,
                             double tau, const Wgf2dProblem& P) {
  const detail::Wgf2dSystem sys(P, tr, tau, detail::step_ratio_2d(tr, tau));
  const auto [gx, gy] = sys.gradient(x, y);
  return std::max(max_abs(gx), max_abs(gy));
}

/// Value of the implicit per-step functional (divided by hx hy).
inline double wgf2d_step_functional(std::span<const double> x, std::span<const double> y, const Trajectory2D& tr,
                                    double tau, const Wgf2dProblem& P) {
  return detail::Wgf2dSystem(P, tr, tau, detail::step_ratio_2d(tr, tau)).value(x, y);
}

/** \brief Implicit BDF2 step: damped Newton minimisation of the per-step functional.
 *
 * The starting point is whichever of x^n and the explicit step has the lower
 * functional value. The line search keeps every determinant above a fixed
 * fraction of its current value. An indefinite Hessian triggers a
 * Gauss-Newton iteration, recorded in report->fallback_used.
 */
inline Trajectory2D wgf2d_step_implicit(const Trajectory2D& tr, double tau, const Wgf2dProblem& P,
                                        const NewtonOptions& opt = {}, NewtonReport* report = nullptr) {
  const Grid2D& g = P.grid;
  detail::check_trajectory_2d(tr, P, tau, "wgf2d_step_implicit");
  const double r = detail::step_ratio_2d(tr, tau);
  const detail::Wgf2dSystem sys(P, tr, tau, r);
  const auto& interior = sys.interior();

  Vec x = tr.curr_x, y = tr.curr_y;
  double J = sys.value(x, y);
  try {
    const Trajectory2D warm = wgf2d_step_explicit(tr, tau, P);
    const double Jw = sys.value(warm.curr_x, warm.curr_y);
    if (Jw < J) {
      x = warm.curr_x;
      y = warm.curr_y;
      J = Jw;
    }
  } catch (const StepFailure&) {
  }

  NewtonReport rep;
  double scale = 0.0;
  auto [gx, gy] = sys.gradient(x, y, &scale);
  Vec det = jacobian_det_2d(x, y, g);
  for (;; ++rep.iterations) {
    rep.residual = std::max(max_abs(gx), max_abs(gy));
    Eigen::SparseMatrix<double> H = sys.hessian(x, y);
    const double tol = std::max({opt.atol, opt.rtol * scale, detail::roundoff_floor_2d(H, x, y)});
    if (rep.residual <= tol) break;
    if (rep.iterations >= opt.max_iter)
      throw ConvergenceError("wgf2d_step_implicit: Newton did not converge, residual " + fmt_sci(rep.residual));
    Eigen::VectorXd rhs(sys.unknowns());
    for (std::size_t k : interior) {
      rhs[2 * sys.dof(k)] = -gx[k];
      rhs[2 * sys.dof(k) + 1] = -gy[k];
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    auto definite = [&] { return ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all(); };
    if (!definite()) {
      rep.fallback_used = true;
      H = sys.hessian(x, y, true);
      ldlt.compute(H);
      if (!definite()) throw ConvergenceError("wgf2d_step_implicit: Hessian is not positive definite");
    }
    const Eigen::VectorXd d = ldlt.solve(rhs);
    const double slope = -d.dot(rhs);

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      Vec xt = x, yt = y;
      for (std::size_t k : interior) {
        xt[k] += alpha * d[2 * sys.dof(k)];
        yt[k] += alpha * d[2 * sys.dof(k) + 1];
      }
      const Vec dt = jacobian_det_2d(xt, yt, g);
      bool feasible = true;
      for (std::size_t k : interior)
        if (!(dt[k] >= opt.boundary_fraction * det[k])) {
          feasible = false;
          break;
        }
      if (!feasible) continue;
      const double Jt = sys.value(xt, yt);
      const bool armijo = Jt <= J + 1e-4 * alpha * slope;
      const bool flat = std::abs(Jt - J) <= 1e-14 * std::max(1.0, std::abs(J));
      if (!armijo && !flat) continue;
      double sc = 0.0;
      auto gt = sys.gradient(xt, yt, &sc);
      if (!armijo && !(std::max(max_abs(gt.first), max_abs(gt.second)) < rep.residual)) continue;
      x = std::move(xt);
      y = std::move(yt);
      det = dt;
      J = Jt;
      gx = std::move(gt.first);
      gy = std::move(gt.second);
      scale = sc;
      accepted = true;
      break;
    }
    if (!accepted) {
      if (rep.residual <= 1e3 * tol) break;
      throw ConvergenceError("wgf2d_step_implicit: line search stalled at residual " + fmt_sci(rep.residual));
    }
  }
  if (report) *report = rep;
  return tr.advanced(std::move(x), std::move(y), tau);
}

/// E_{h,2} at the current level.
inline double wgf2d_energy(const Trajectory2D& tr, const Wgf2dProblem& P) {
  return discrete_energy_2d(P.model, tr.curr_x, tr.curr_y, P.rho0, P.grid);
}

/** \brief E_{h,2}(x^n) + r_max^3 / (tau_n (1+r_max)(1+2 r_max)) sum rho0 |x^n - x^{n-1}|^2 hx hy. */
inline double wgf2d_augmented_energy(const Trajectory2D& tr, const Wgf2dProblem& P, double r_max = 1.25) {
  const double e = wgf2d_energy(tr, P);
  if (!(tr.tau_prev > 0.0)) return e;
  const Grid2D& g = P.grid;
  double s = 0.0;
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      const double dx = tr.curr_x[k] - tr.prev_x[k], dy = tr.curr_y[k] - tr.prev_y[k];
      s += P.rho0[k] * (dx * dx + dy * dy);
    }
  const double w = r_max * r_max * r_max / (tr.tau_prev * (1.0 + r_max) * (1.0 + 2.0 * r_max));
  return e + w * s * g.hx() * g.hy();
}

inline DensityField2D recover_density_2d(const Trajectory2D& tr, const Wgf2dProblem& P) {
  return pushforward_2d(tr.curr_x, tr.curr_y, P.rho0, P.grid);
}

} // namespace lagflow

#endif
