#ifndef LAGFLOW_ENERGY_ENERGY1D_HPP
#define LAGFLOW_ENERGY_ENERGY1D_HPP

#include <cmath>
#include <span>

#include "lagflow/core/operators.hpp"
#include "lagflow/energy/models.hpp"
#include "lagflow/linalg/banded.hpp"

namespace lagflow {

namespace detail {

inline double gfun(double u) { return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u; }

/** \brief Frozen partner configuration for the logarithmic interaction.
 *
 * psi(a) = sum_j rho_j int_{p_j}^{p_{j+1}} log|a - y| dy, evaluated exactly
 * through the antiderivative; c_k = rho_k - rho_{k-1} are the jumps of the
 * piecewise-constant partner density at its nodes.
 */
struct LogPartner {
  Vec p, c;

  LogPartner(std::span<const double> nodes, std::span<const double> rho0, double h) {
    const std::size_t M = rho0.size();
    p.assign(nodes.begin(), nodes.end());
    c.assign(M + 1, 0.0);
    for (std::size_t j = 0; j < M; ++j) {
      const double dx = p[j + 1] - p[j];
      if (!(dx > 0.0)) throw AdmissibilityError("interaction partner: non-positive cell width");
      const double rho = rho0[j] * h / dx;
      c[j] += rho;
      c[j + 1] -= rho;
    }
  }

  double psi(double a) const {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += c[k] * gfun(a - p[k]);
    return s;
  }
  double dpsi(double a) const {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += c[k] * std::log(std::abs(a - p[k]));
    return s;
  }
  double d2psi(double a) const {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += c[k] / (a - p[k]);
    return s;
  }
};

inline void check_inputs_1d(std::span<const double> x, std::span<const double> rho0, const Grid1D& g) {
  g.require_nodes(x.size(), "energy_1d(x)");
  g.require_midpoints(rho0.size(), "energy_1d(rho0)");
}

} // namespace detail

/** \brief Discrete energy E_h(x) = (F(rho0 / D_h x), D_h x)_h plus model extras.
 *
 * Fokker-Planck adds (rho0, V(x_{j+1/2}))_h. Keller-Segel adds
 * chi * sum_i h rho0_i psi(x_{i+1/2}); with \p partner given the inner
 * integral uses the frozen partner nodes and the weight doubles, which is
 * the per-step functional whose first variation matches the full one.
 */
inline double discrete_energy_1d(const EnergyModel& model, std::span<const double> x,
                                 std::span<const double> rho0, const Grid1D& g,
                                 const Vec* partner = nullptr) {
  detail::check_inputs_1d(x, rho0, g);
  validate(model);
  const double h = g.h();
  double e = 0.0;
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double w = (x[j + 1] - x[j]) / h;
    if (!(w > 0.0)) throw AdmissibilityError("discrete_energy_1d: non-positive D_h x");
    e += h * cell_energy(model, rho0[j], w).f;
  }
  if (auto* fp = std::get_if<FokkerPlanck>(&model)) {
    for (std::size_t j = 0; j < g.cells(); ++j) e += h * rho0[j] * fp->V.value(0.5 * (x[j] + x[j + 1]));
  } else if (auto* ks = std::get_if<KellerSegel1D>(&model)) {
    detail::LogPartner lp(partner ? std::span<const double>(*partner) : x, rho0, h);
    const double w = partner ? 2.0 * ks->chi : ks->chi;
    for (std::size_t j = 0; j < g.cells(); ++j) e += w * h * rho0[j] * lp.psi(0.5 * (x[j] + x[j + 1]));
  }
  return e;
}

/** \brief Partial derivatives dE_h/dx_j at every node (boundary entries included).
 *
 * Keller-Segel uses the partner-frozen functional; without \p partner the
 * partner is x itself.
 */
inline Vec energy_gradient_1d(const EnergyModel& model, std::span<const double> x,
                              std::span<const double> rho0, const Grid1D& g,
                              const Vec* partner = nullptr) {
  detail::check_inputs_1d(x, rho0, g);
  validate(model);
  const double h = g.h();
  Vec grad(g.nodes(), 0.0);
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double w = (x[j + 1] - x[j]) / h;
    if (!(w > 0.0)) throw AdmissibilityError("energy_gradient_1d: non-positive D_h x");
    const double df = cell_energy(model, rho0[j], w).df;
    grad[j + 1] += df;
    grad[j] -= df;
  }
  if (auto* fp = std::get_if<FokkerPlanck>(&model)) {
    for (std::size_t j = 0; j < g.cells(); ++j) {
      const double f = 0.5 * h * rho0[j] * fp->V.slope(0.5 * (x[j] + x[j + 1]));
      grad[j] += f;
      grad[j + 1] += f;
    }
  } else if (auto* ks = std::get_if<KellerSegel1D>(&model)) {
    detail::LogPartner lp(partner ? std::span<const double>(*partner) : x, rho0, h);
    for (std::size_t j = 0; j < g.cells(); ++j) {
      const double f = ks->chi * h * rho0[j] * lp.dpsi(0.5 * (x[j] + x[j + 1]));
      grad[j] += f;
      grad[j + 1] += f;
    }
  }
  return grad;
}

/** \brief Tridiagonal Hessian of the energy over all nodes.
 *
 * The interaction curvature is optional because it can make the matrix indefinite.
 */
inline Tridiag energy_hessian_1d(const EnergyModel& model, std::span<const double> x,
                                 std::span<const double> rho0, const Grid1D& g,
                                 const Vec* partner = nullptr, bool interaction_curvature = true) {
  detail::check_inputs_1d(x, rho0, g);
  const double h = g.h();
  Tridiag H(g.nodes());
  for (std::size_t j = 0; j < g.cells(); ++j) {
    const double w = (x[j + 1] - x[j]) / h;
    if (!(w > 0.0)) throw AdmissibilityError("energy_hessian_1d: non-positive D_h x");
    const double c = cell_energy(model, rho0[j], w).d2f / h;
    H.add_pair(j, c, -c, c);
  }
  if (auto* fp = std::get_if<FokkerPlanck>(&model)) {
    for (std::size_t j = 0; j < g.cells(); ++j) {
      const double c = 0.25 * h * rho0[j] * fp->V.curvature(0.5 * (x[j] + x[j + 1]));
      H.add_pair(j, c, c, c);
    }
  } else if (auto* ks = std::get_if<KellerSegel1D>(&model); ks && interaction_curvature) {
    detail::LogPartner lp(partner ? std::span<const double>(*partner) : x, rho0, h);
    for (std::size_t j = 0; j < g.cells(); ++j) {
      const double c = 0.5 * ks->chi * h * rho0[j] * lp.d2psi(0.5 * (x[j] + x[j + 1]));
      H.add_pair(j, c, c, c);
    }
  }
  return H;
}

/** \brief Symmetrised pair kernel of the 1D interaction sum.
 *
 * A_ij is the mean of log|x_{i+1/2} - y| over cell j; the result is (A_ij + A_ji) / 2.
 */
inline double interaction_pair_1d(std::span<const double> x, std::size_t i, std::size_t j) {
  auto mean_log = [&](std::size_t a, std::size_t b) {
    const double c = 0.5 * (x[a] + x[a + 1]);
    const double lo = x[b], hi = x[b + 1];
    return (detail::gfun(c - lo) - detail::gfun(c - hi)) / (hi - lo);
  };
  return 0.5 * (mean_log(i, j) + mean_log(j, i));
}

} // namespace lagflow

#endif
