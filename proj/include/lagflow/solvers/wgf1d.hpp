#ifndef LAGFLOW_SOLVERS_WGF1D_HPP
#define LAGFLOW_SOLVERS_WGF1D_HPP

#include <cmath>
#include <limits>
#include <span>

#include "lagflow/core/trajectory.hpp"
#include "lagflow/energy/energy1d.hpp"
#include "lagflow/solvers/newton.hpp"

namespace lagflow {

/** \brief Static data of a 1D Wasserstein gradient flow in Lagrangian form. */
struct Wgf1dProblem {
  Grid1D grid;
  EnergyModel model;
  Vec rho0;                ///< reference density at midpoints
  double viscosity = 1.0;  ///< weight of the tau |D_h(x - x^n)|^2 / 2 term

  Wgf1dProblem(const Grid1D& g, EnergyModel m, Vec r0, double visc = 1.0)
    : grid(g), model(std::move(m)), rho0(std::move(r0)), viscosity(visc) {
    g.require_midpoints(rho0.size(), "Wgf1dProblem(rho0)");
    validate(model);
    if (viscosity < 0.0) throw LayoutError("Wgf1dProblem: viscosity must be non-negative");
    for (double v : rho0)
      if (!(v >= 0.0)) throw LayoutError("Wgf1dProblem: rho0 must be non-negative");
  }

  /// Sum of rho0 h over all cells.
  double mass() const {
    double m = 0.0;
    for (double v : rho0) m += v * grid.h();
    return m;
  }
};

namespace detail {

/** \brief Per-step functional
 * J(x) = c (rho0, |x - x_hat|^2)_h + E_h(x) + nu tau / 2 |D_h(x - x^n)|^2_h,
 * c = (1+2r) / (2 tau (1+r)); its gradient is the nodal scheme.
 */
class Wgf1dSystem {
public:
  Wgf1dSystem(const Wgf1dProblem& P, const Trajectory1D& tr, double tau, double r)
    : P_(P), g_(P.grid), tau_(tau), xn_(tr.curr) {
    c_ = (1.0 + 2.0 * r) / (2.0 * tau * (1.0 + r));
    yhat_ = midpoint_values(extrapolate_hat(tr.curr, tr.prev, r), g_);
    if (std::holds_alternative<KellerSegel1D>(P.model)) partner_ = &xn_;
  }

  double value(std::span<const double> x) const {
    const double h = g_.h();
    double j = discrete_energy_1d(P_.model, x, P_.rho0, g_, partner_);
    for (std::size_t m = 0; m < g_.cells(); ++m) {
      const double e = 0.5 * (x[m] + x[m + 1]) - yhat_[m];
      const double s = (x[m + 1] - x[m] - xn_[m + 1] + xn_[m]) / h;
      j += h * (c_ * P_.rho0[m] * e * e + 0.5 * P_.viscosity * tau_ * s * s);
    }
    return j;
  }

  /// Nodal gradient; boundary entries are zeroed. \p scale receives the largest term.
  Vec gradient(std::span<const double> x, double* scale = nullptr) const {
    const double h = g_.h();
    Vec gr = energy_gradient_1d(P_.model, x, P_.rho0, g_, partner_);
    double sc = max_abs(gr);
    for (std::size_t m = 0; m < g_.cells(); ++m) {
      const double a = c_ * P_.rho0[m] * (0.5 * (x[m] + x[m + 1]) - yhat_[m]) * h;
      const double v = P_.viscosity * tau_ * (x[m + 1] - x[m] - xn_[m + 1] + xn_[m]) / h;
      gr[m] += a - v;
      gr[m + 1] += a + v;
      sc = std::max({sc, std::abs(a), std::abs(v)});
    }
    gr.front() = gr.back() = 0.0;
    if (scale) *scale = sc;
    return gr;
  }

  Tridiag hessian(std::span<const double> x, bool interaction_curvature = true) const {
    const double h = g_.h();
    Tridiag H = energy_hessian_1d(P_.model, x, P_.rho0, g_, partner_, interaction_curvature);
    for (std::size_t m = 0; m < g_.cells(); ++m) {
      const double a = 0.5 * c_ * P_.rho0[m] * h, v = P_.viscosity * tau_ / h;
      H.add_pair(m, a + v, a - v, a + v);
    }
    return H;
  }

private:
  const Wgf1dProblem& P_;
  const Grid1D& g_;
  double tau_, c_;
  Vec xn_, yhat_;
  const Vec* partner_ = nullptr;
};

/// Gradient noise from rounding the node positions: 4 eps max_j sum_k |H_jk| max|x|.
inline double roundoff_floor(const Tridiag& H, std::span<const double> x) {
  double row = 0.0, xm = 0.0;
  for (std::size_t j = 1; j + 1 < H.size(); ++j)
    row = std::max(row, std::abs(H.lo[j]) + std::abs(H.di[j]) + std::abs(H.up[j]));
  for (double v : x) xm = std::max(xm, std::abs(v));
  return 4.0 * std::numeric_limits<double>::epsilon() * row * xm;
}

inline Vec cell_gaps(std::span<const double> x) {
  Vec gap(x.size() - 1);
  for (std::size_t m = 0; m + 1 < x.size(); ++m) gap[m] = x[m + 1] - x[m];
  return gap;
}

} // namespace detail

/// Nodal residual of the scheme at \p x_next, interior nodes only.
inline Vec wgf1d_residual(std::span<const double> x_next, const Trajectory1D& tr, double tau,
                          const Wgf1dProblem& P) {
  P.grid.require_nodes(x_next.size(), "wgf1d_residual");
  if (!strictly_increasing(x_next)) throw AdmissibilityError("wgf1d_residual: candidate not increasing");
  const double r = tr.tau_prev > 0.0 ? tau / tr.tau_prev : 0.0;
  const Vec g = detail::Wgf1dSystem(P, tr, tau, r).gradient(x_next);
  return Vec(g.begin() + 1, g.end() - 1);
}

/** \brief One BDF2 step: damped Newton minimisation of the per-step functional.
 *
 * A trajectory with tau_prev == 0 takes the one-step variant (r = 0).
 * When the interaction curvature makes the Hessian indefinite it is dropped
 * for that iteration; report->fallback_used records it.
 */
inline Trajectory1D wgf1d_step(const Trajectory1D& tr, double tau, const Wgf1dProblem& P,
                               const NewtonOptions& opt = {}, NewtonReport* report = nullptr) {
  const Grid1D& g = P.grid;
  g.require_nodes(tr.curr.size(), "wgf1d_step(curr)");
  g.require_nodes(tr.prev.size(), "wgf1d_step(prev)");
  if (!(tau > 0.0)) throw LayoutError("wgf1d_step: tau must be positive");
  if (!strictly_increasing(tr.curr)) throw AdmissibilityError("wgf1d_step: current level not increasing");
  const double r = tr.tau_prev > 0.0 ? tau / tr.tau_prev : 0.0;
  detail::Wgf1dSystem sys(P, tr, tau, r);
  const std::size_t M = g.cells();

  Vec x = tr.curr;
  double J = sys.value(x);
  if (r > 0.0) {
    Vec guess(M + 1);
    for (std::size_t j = 0; j <= M; ++j) guess[j] = tr.curr[j] + r * (tr.curr[j] - tr.prev[j]);
    if (strictly_increasing(guess)) {
      const double Jg = sys.value(guess);
      if (Jg < J) {
        x = std::move(guess);
        J = Jg;
      }
    }
  }
  NewtonReport rep;
  double scale = 0.0;
  Vec grad = sys.gradient(x, &scale);
  double tol = std::max(opt.atol, opt.rtol * scale);
  for (;; ++rep.iterations) {
    rep.residual = max_abs(grad);
    const Tridiag H = sys.hessian(x);
    tol = std::max({opt.atol, opt.rtol * scale, detail::roundoff_floor(H, x)});
    if (rep.residual <= tol) break;
    if (rep.iterations >= opt.max_iter)
      throw ConvergenceError("wgf1d_step: Newton did not converge, residual " + fmt_sci(rep.residual));
    Vec d = grad;
    if (!solve_spd_interior(H, d)) {
      rep.fallback_used = true;
      d = grad;
      if (!solve_spd_interior(sys.hessian(x, false), d))
        throw ConvergenceError("wgf1d_step: Hessian is not positive definite");
    }
    for (double& v : d) v = -v;
    double slope = 0.0;
    for (std::size_t j = 0; j <= M; ++j) slope += grad[j] * d[j];
    double alpha = fraction_to_boundary(detail::cell_gaps(x), detail::cell_gaps(d), opt.boundary_fraction);
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls, alpha *= 0.5) {
      Vec xt = x;
      for (std::size_t j = 1; j < M; ++j) xt[j] += alpha * d[j];
      const double Jt = sys.value(xt);
      double sc = 0.0;
      Vec gt;
      const bool armijo = Jt <= J + 1e-4 * alpha * slope;
      // near the minimiser J stagnates at roundoff level; then the gradient decides
      const bool flat = std::abs(Jt - J) <= 1e-14 * std::max(1.0, std::abs(J));
      if (armijo || flat) {
        gt = sys.gradient(xt, &sc);
        if (!armijo && !(max_abs(gt) < rep.residual)) continue;
        x = std::move(xt);
        J = Jt;
        grad = std::move(gt);
        scale = sc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (rep.residual <= 1e3 * tol) break;
      throw ConvergenceError("wgf1d_step: line search stalled at residual " + fmt_sci(rep.residual));
    }
  }
  if (report) *report = rep;
  if (!strictly_increasing(x)) throw AdmissibilityError("wgf1d_step: result not strictly increasing");
  return tr.advanced(std::move(x), tau);
}

/// First step from x^0: inertia coefficient 1 / tau_1 around x^0.
inline Trajectory1D wgf1d_first_step(const Trajectory1D& tr0, double tau, const Wgf1dProblem& P,
                                     const NewtonOptions& opt = {}, NewtonReport* report = nullptr) {
  Trajectory1D t = tr0;
  t.prev = t.curr;
  t.tau_prev = 0.0;
  return wgf1d_step(t, tau, P, opt, report);
}

/** \brief Monitoring energy: the full discrete energy (interaction partner is x itself). */
inline double wgf1d_energy(std::span<const double> x, const Wgf1dProblem& P) {
  return discrete_energy_1d(P.model, x, P.rho0, P.grid);
}

/** \brief E_h(x^n) + r_max / (2 tau_n (1 + r_max)) (rho0, |x^n - x^{n-1}|^2)_h. */
inline double wgf1d_augmented_energy(const Trajectory1D& tr, const Wgf1dProblem& P,
                                     double r_max = 0.5 * (3.0 + std::sqrt(17.0))) {
  const double e = wgf1d_energy(tr.curr, P);
  if (!(tr.tau_prev > 0.0)) return e;
  const Vec y1 = midpoint_values(tr.curr, P.grid), y0 = midpoint_values(tr.prev, P.grid);
  double s = 0.0;
  for (std::size_t m = 0; m < P.grid.cells(); ++m) s += P.rho0[m] * (y1[m] - y0[m]) * (y1[m] - y0[m]);
  return e + r_max / (2.0 * tr.tau_prev * (1.0 + r_max)) * s * P.grid.h();
}

inline DensityField1D wgf1d_recover_density(const Trajectory1D& tr, const Wgf1dProblem& P) {
  return pushforward_1d(tr.curr, P.rho0, P.grid);
}

} // namespace lagflow

#endif
