#ifndef LAGFLOW_SOLVERS_AC_HPP
#define LAGFLOW_SOLVERS_AC_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <span>

#include "lagflow/core/trajectory.hpp"
#include "lagflow/energy/models.hpp"
#include "lagflow/linalg/banded.hpp"
#include "lagflow/solvers/newton.hpp"

namespace lagflow {

/** \brief History factor of the BDF2 term: the proof-consistent average of
 * (D_h x^{n-1})^{-1/2} and (D_h x^n)^{-1/2}, or their plain difference.
 */
enum class AcHistory { Averaged, Difference };

/** \brief Static data of a Lagrangian Allen-Cahn problem.
 *
 * rho0 and its derivative are sampled once at nodes and midpoints; the
 * discrete density never changes, only the flow map does.
 */
struct AcProblem {
  Grid1D grid;
  double epsilon = 0.01;
  double eta = 0.0;
  Mobility mobility;
  AcHistory history = AcHistory::Averaged;
  Vec rho0_mid, drho0_mid, rho0_node, drho0_node;

  /** Build from rho0 and (optionally) rho0'. Without a derivative, central
   * differences of rho0 on a grid refined by 2 are used, one-sided at the ends. */
  static AcProblem make(const Grid1D& g, double epsilon, const std::function<double(double)>& rho0,
                        std::optional<std::function<double(double)>> drho0 = std::nullopt,
                        Mobility mob = {}, double eta = 0.0) {
    if (!(epsilon > 0.0)) throw LayoutError("AcProblem: epsilon must be positive");
    if (eta < 0.0) throw LayoutError("AcProblem: eta must be non-negative");
    AcProblem P;
    P.grid = g;
    P.epsilon = epsilon;
    P.eta = eta;
    P.mobility = mob;
    const std::size_t M = g.cells();
    Vec fine(2 * M + 1), dfine(2 * M + 1);
    const double hh = 0.5 * g.h();
    for (std::size_t k = 0; k <= 2 * M; ++k) fine[k] = rho0(g.x_min() + hh * static_cast<double>(k));
    for (std::size_t k = 0; k <= 2 * M; ++k) {
      const double X = g.x_min() + hh * static_cast<double>(k);
      if (drho0) dfine[k] = (*drho0)(X);
      else if (k == 0) dfine[k] = (fine[1] - fine[0]) / hh;
      else if (k == 2 * M) dfine[k] = (fine[k] - fine[k - 1]) / hh;
      else dfine[k] = (fine[k + 1] - fine[k - 1]) / (2.0 * hh);
    }
    for (std::size_t j = 0; j <= M; ++j) {
      P.rho0_node.push_back(fine[2 * j]);
      P.drho0_node.push_back(dfine[2 * j]);
    }
    for (std::size_t j = 0; j < M; ++j) {
      P.rho0_mid.push_back(fine[2 * j + 1]);
      P.drho0_mid.push_back(dfine[2 * j + 1]);
      if (!(mob(P.rho0_mid.back()) > 0.0))
        throw LayoutError("AcProblem: mobility vanishes on the initial density at cell " +
                          std::to_string(j));
    }
    return P;
  }

  double well(double rho) const {
    const double q = rho * rho - 1.0;
    return 0.25 * q * q;
  }
};

/// E_h = (eps^2/2)[|rho0' (d_h x)^{-1}|^2, d_h x]_h + [F(rho0), d_h x]_h.
inline double ac_discrete_energy(std::span<const double> x, const AcProblem& P) {
  const Grid1D& g = P.grid;
  const Vec dx = node_jacobian(x, g);
  const std::size_t M = g.cells();
  double e = 0.0;
  for (std::size_t j = 0; j <= M; ++j) {
    if (!(dx[j] > 0.0)) throw AdmissibilityError("ac_discrete_energy: non-positive d_h x");
    const double wt = (j == 0 || j == M) ? 0.5 : 1.0;
    const double q = P.drho0_node[j] * P.drho0_node[j];
    e += wt * (0.5 * P.epsilon * P.epsilon * q / dx[j] + P.well(P.rho0_node[j]) * dx[j]);
  }
  return e * g.h();
}

/** \brief Margin h(r) - r_max / (2 (r_max + 1)), h(s) = (2s+1)(3-s) / (8(s+1)). */
inline double ac_stability_margin(double r, double r_max = 1.5) {
  return (2.0 * r + 1.0) * (3.0 - r) / (8.0 * (r + 1.0)) - r_max / (2.0 * (r_max + 1.0));
}

namespace detail {

/** \brief Midpoint equations of the Lagrangian Allen-Cahn step and their
 * Galerkin projection onto interior nodes, N_j = (h/2)(R_{j-1/2} + R_{j+1/2}).
 *
 * Testing the midpoint equations with the midpoint average of a nodal
 * variation is what makes the discrete energy argument go through exactly.
 */
class AcSystem {
public:
  AcSystem(const AcProblem& P, const Trajectory1D& tr, double tau, double r)
    : P_(P), g_(P.grid), M_(g_.cells()), tau_(tau) {
    const double h = g_.h();
    c1_ = (2.0 * r + 1.0) / (2.0 * tau * (r + 1.0));
    c2a_ = r * (2.0 * r + 1.0) / (4.0 * tau * (r + 1.0));
    c2b_ = r / (4.0 * tau * (r + 1.0));
    k_.resize(M_);
    for (std::size_t m = 0; m < M_; ++m)
      k_[m] = P.drho0_mid[m] * P.drho0_mid[m] / P.mobility(P.rho0_mid[m]);
    yn_ = midpoint_values(tr.curr, g_);
    const Vec yp = midpoint_values(tr.prev, g_);
    const Vec Dn = forward_diff(tr.curr, g_), Dp = forward_diff(tr.prev, g_);
    b2_.resize(M_);
    hist_.resize(M_);
    for (std::size_t m = 0; m < M_; ++m) {
      if (!(Dn[m] > 0.0) || !(Dp[m] > 0.0))
        throw AdmissibilityError("ac_step: history level is not admissible");
      b2_[m] = 1.0 / Dn[m];
      const double b = std::sqrt(b2_[m]), c = 1.0 / std::sqrt(Dp[m]);
      const double f = P.history == AcHistory::Averaged ? c + b : c - b;
      hist_[m] = f * (yn_[m] - yp[m]);
    }
    Ln_.resize(M_ + 1);
    const Vec dn = node_jacobian(tr.curr, g_);
    for (std::size_t j = 0; j <= M_; ++j) {
      if (!(dn[j] > 0.0)) throw AdmissibilityError("ac_step: history d_h x not positive");
      Ln_[j] = std::log(dn[j]);
    }
    q_.resize(M_ + 1);
    for (std::size_t j = 0; j <= M_; ++j) q_[j] = P.drho0_node[j] * P.drho0_node[j];
    dF_.resize(M_);
    for (std::size_t m = 0; m < M_; ++m)
      dF_[m] = (P.well(P.rho0_node[m + 1]) - P.well(P.rho0_node[m])) / h;
  }

  /// Midpoint residuals R_{m+1/2}; \p scale receives the largest individual term.
  Vec midpoint_residual(std::span<const double> x, double* scale = nullptr) const {
    const double h = g_.h();
    const Vec dx = node_jacobian(x, g_);
    Vec P(M_ + 1);
    for (std::size_t j = 0; j <= M_; ++j) P[j] = node_potential(j, dx[j]);
    Vec R(M_);
    double sc = 0.0;
    for (std::size_t m = 0; m < M_; ++m) {
      const double s = x[m + 1] - x[m];
      const double a2 = h / s, a = std::sqrt(a2), b = std::sqrt(b2_[m]);
      const double y = 0.5 * (x[m] + x[m + 1]);
      const double t1 = c1_ * k_[m] * (a2 + b2_[m]) * (y - yn_[m]);
      const double t3 = -k_[m] * (c2a_ * b - c2b_ * a) * hist_[m];
      const double t4 = (P[m + 1] - P[m]) - (Pn(m + 1) - Pn(m));
      const double t5 = -dF_[m];
      R[m] = t1 + t3 + t4 + t5;
      sc = std::max({sc, std::abs(t1), std::abs(t3), std::abs(P[m + 1]), std::abs(P[m]), std::abs(t5)});
    }
    if (scale) *scale = sc;
    return R;
  }

  /// Interior nodal residuals, length M - 1.
  Vec residual(std::span<const double> x, double* scale = nullptr) const {
    const Vec R = midpoint_residual(x, scale);
    const double hh = 0.5 * g_.h();
    Vec N(M_ - 1);
    for (std::size_t j = 1; j < M_; ++j) N[j - 1] = hh * (R[j - 1] + R[j]);
    if (scale) *scale *= g_.h();
    return N;
  }

  /// Pentadiagonal Jacobian of the interior residual.
  BandedMatrix jacobian(std::span<const double> x) const {
    const double h = g_.h(), hh = 0.5 * h;
    const Vec dx = node_jacobian(x, g_);
    Vec dP(M_ + 1);
    for (std::size_t j = 0; j <= M_; ++j) dP[j] = node_potential_slope(j, dx[j]);
    BandedMatrix J(M_ - 1, 2, 2);
    auto put = [&](std::size_t m, std::size_t k, double v) {
      if (k == 0 || k == M_) return;
      // R_m enters N_j for j = m and j = m + 1
      if (m >= 1) J.add(m - 1, k - 1, hh * v);
      if (m + 1 < M_) J.add(m, k - 1, hh * v);
    };
    auto put_node = [&](std::size_t m, std::size_t j, double coef) {
      // d(node quantity at j)/dx through d_h x_j
      if (j == 0) {
        put(m, 1, coef / h);
        put(m, 0, -coef / h);
      } else if (j == M_) {
        put(m, M_, coef / h);
        put(m, M_ - 1, -coef / h);
      } else {
        put(m, j + 1, 0.5 * coef / h);
        put(m, j - 1, -0.5 * coef / h);
      }
    };
    for (std::size_t m = 0; m < M_; ++m) {
      const double s = x[m + 1] - x[m];
      const double a2 = h / s, a = std::sqrt(a2);
      const double y = 0.5 * (x[m] + x[m + 1]);
      const double da2 = h / (s * s);  // -d(a2)/ds
      const double t1s = c1_ * k_[m] * da2 * (y - yn_[m]);
      const double t1y = 0.5 * c1_ * k_[m] * (a2 + b2_[m]);
      const double t3s = k_[m] * c2b_ * hist_[m] * (-0.5 * a / s);  // d t3 / ds
      put(m, m, t1s + t1y - t3s);
      put(m, m + 1, -t1s + t1y + t3s);
      put_node(m, m + 1, dP[m + 1]);
      put_node(m, m, -dP[m]);
    }
    return J;
  }

  const Grid1D& grid() const { return g_; }

private:
  double node_potential(std::size_t j, double d) const {
    if (!(d > 0.0)) throw AdmissibilityError("ac_step: non-positive d_h x");
    const double h = g_.h();
    return -(P_.eta * tau_ / h) * std::log(d) + 0.5 * P_.epsilon * P_.epsilon * q_[j] / (d * d * h);
  }
  double node_potential_slope(std::size_t j, double d) const {
    const double h = g_.h();
    return -(P_.eta * tau_ / h) / d - P_.epsilon * P_.epsilon * q_[j] / (d * d * d * h);
  }
  double Pn(std::size_t j) const { return -(P_.eta * tau_ / g_.h()) * Ln_[j]; }

  const AcProblem& P_;
  const Grid1D& g_;
  std::size_t M_;
  double tau_;
  double c1_, c2a_, c2b_;
  Vec k_, yn_, b2_, hist_, Ln_, q_, dF_;
};

inline void ac_gaps(std::span<const double> x, const Grid1D& g, Vec& gap) {
  const std::size_t M = g.cells();
  gap.resize(2 * M + 1);
  for (std::size_t m = 0; m < M; ++m) gap[m] = x[m + 1] - x[m];
  const Vec d = node_jacobian(x, g);
  for (std::size_t j = 0; j <= M; ++j) gap[M + j] = d[j];
}

} // namespace detail

/// Interior residual of the fully discrete scheme at candidate \p x_next.
inline Vec ac_residual(std::span<const double> x_next, const Trajectory1D& tr, double tau,
                       const AcProblem& P) {
  P.grid.require_nodes(x_next.size(), "ac_residual");
  const double r = tr.tau_prev > 0.0 ? tau / tr.tau_prev : 0.0;
  return detail::AcSystem(P, tr, tau, r).residual(x_next);
}

/** \brief One adaptive BDF2 step, damped Newton on the pentadiagonal system.
 *
 * A trajectory with tau_prev == 0 takes the one-step variant (r = 0).
 */
inline Trajectory1D ac_step(const Trajectory1D& tr, double tau, const AcProblem& P,
                            const NewtonOptions& opt = {}, NewtonReport* report = nullptr) {
  const Grid1D& g = P.grid;
  g.require_nodes(tr.curr.size(), "ac_step(curr)");
  g.require_nodes(tr.prev.size(), "ac_step(prev)");
  if (!(tau > 0.0)) throw LayoutError("ac_step: tau must be positive");
  const double r = tr.tau_prev > 0.0 ? tau / tr.tau_prev : 0.0;
  detail::AcSystem sys(P, tr, tau, r);
  const std::size_t M = g.cells();

  Vec x = tr.curr;
  if (r > 0.0) {
    Vec guess(M + 1);
    for (std::size_t j = 0; j <= M; ++j) guess[j] = tr.curr[j] + r * (tr.curr[j] - tr.prev[j]);
    Vec gap;
    detail::ac_gaps(guess, g, gap);
    if (std::all_of(gap.begin(), gap.end(), [](double v) { return v > 0.0; })) x = guess;
  }
  double scale = 0.0;
  Vec N = sys.residual(x, &scale);
  NewtonReport rep;
  for (;; ++rep.iterations) {
    rep.residual = max_abs(N);
    if (rep.residual <= std::max(opt.atol, opt.rtol * scale)) break;
    if (rep.iterations >= opt.max_iter)
      throw ConvergenceError("ac_step: Newton did not converge, residual " + fmt_sci(rep.residual));
    BandedMatrix J = sys.jacobian(x);
    if (!J.factor()) throw ConvergenceError("ac_step: singular Jacobian");
    Vec d = N;
    J.solve(d);
    Vec dx(M + 1, 0.0);
    for (std::size_t j = 1; j < M; ++j) dx[j] = -d[j - 1];
    Vec gap, gnew;
    detail::ac_gaps(x, g, gap);
    detail::ac_gaps(dx, g, gnew);
    // node_jacobian is linear, so gnew holds the gap increments
    double alpha = fraction_to_boundary(gap, gnew, opt.boundary_fraction);
    const double f0 = [&] { double s = 0; for (double v : N) s += v * v; return s; }();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      Vec xt = x;
      for (std::size_t j = 1; j < M; ++j) xt[j] += alpha * dx[j];
      double sc = 0.0;
      Vec Nt = sys.residual(xt, &sc);
      double f = 0.0;
      for (double v : Nt) f += v * v;
      if (f <= (1.0 - 1e-4 * alpha) * f0 || max_abs(Nt) <= std::max(opt.atol, opt.rtol * sc)) {
        x = std::move(xt);
        N = std::move(Nt);
        scale = sc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (rep.residual <= 1e3 * std::max(opt.atol, opt.rtol * scale)) break;
      throw ConvergenceError("ac_step: line search stalled at residual " + fmt_sci(rep.residual));
    }
  }
  if (report) *report = rep;
  if (!strictly_increasing(x)) throw AdmissibilityError("ac_step: result not strictly increasing");
  return tr.advanced(std::move(x), tau);
}

/// First step from x^0: same system with r = 0 (no history term).
inline Trajectory1D ac_first_step(const Trajectory1D& tr0, double tau, const AcProblem& P,
                                  const NewtonOptions& opt = {}) {
  Trajectory1D t = tr0;
  t.prev = t.curr;
  t.tau_prev = 0.0;
  return ac_step(t, tau, P, opt);
}

/** \brief Lyapunov functional E_h^n + r_max / (2 tau_n (r_max+1)) ((rho0')^2/M ((D_h x^n)^{-1} + (D_h x^{n-1})^{-1}) dx, dx)_h
 * with dx the midpoint increment x^n - x^{n-1}; plain energy before the first step.
 */
inline double ac_modified_energy(const Trajectory1D& tr, const AcProblem& P, double r_max = 1.5) {
  const double e = ac_discrete_energy(tr.curr, P);
  if (!(tr.tau_prev > 0.0)) return e;
  const Grid1D& g = P.grid;
  const Vec D1 = forward_diff(tr.curr, g), D0 = forward_diff(tr.prev, g);
  const Vec y1 = midpoint_values(tr.curr, g), y0 = midpoint_values(tr.prev, g);
  double s = 0.0;
  for (std::size_t m = 0; m < g.cells(); ++m) {
    const double k = P.drho0_mid[m] * P.drho0_mid[m] / P.mobility(P.rho0_mid[m]);
    const double d = y1[m] - y0[m];
    s += k * (1.0 / D1[m] + 1.0 / D0[m]) * d * d;
  }
  return e + r_max / (2.0 * tr.tau_prev * (r_max + 1.0)) * s * g.h();
}

/// Density values never change; positions are the current midpoints.
inline DensityField1D ac_recover_density(const Trajectory1D& tr, const AcProblem& P) {
  return {P.rho0_mid, midpoint_values(tr.curr, P.grid)};
}

} // namespace lagflow

#endif
