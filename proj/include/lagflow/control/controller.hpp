#ifndef LAGFLOW_CONTROL_CONTROLLER_HPP
#define LAGFLOW_CONTROL_CONTROLLER_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lagflow/core/errors.hpp"
#include "lagflow/core/trajectory.hpp"
#include "lagflow/solvers/newton.hpp"

namespace lagflow {

enum class Scheme { AllenCahn, Wgf1d, Wgf2d };

/// Ratio bound under which the scheme's energy law is proved.
inline double theory_ratio_bound(Scheme s) {
  switch (s) {
    case Scheme::AllenCahn: return 1.5;
    case Scheme::Wgf1d: return 0.5 * (3.0 + std::sqrt(17.0));
    case Scheme::Wgf2d: return 1.25;
  }
  return 0.0;
}

/** \brief Margin of the sufficient condition for energy stability at ratio r.
 *
 * AllenCahn: (2r+1)(3-r)/(8(r+1)) - r_max/(2(r_max+1));
 * Wgf1d: (2+3r-r^2)/(1+r); Wgf2d: 1/4 - r^3/((1+r)(1+2r)).
 */
inline double stability_margin(Scheme s, double r, double r_max = 1.5) {
  if (!(r > 0.0)) throw LayoutError("stability_margin: r must be positive");
  switch (s) {
    case Scheme::AllenCahn: return (2.0 * r + 1.0) * (3.0 - r) / (8.0 * (r + 1.0)) - r_max / (2.0 * (r_max + 1.0));
    case Scheme::Wgf1d: return (2.0 + 3.0 * r - r * r) / (1.0 + r);
    case Scheme::Wgf2d: return 0.25 - r * r * r / ((1.0 + r) * (1.0 + 2.0 * r));
  }
  return 0.0;
}

enum class Strategy { TrajectoryChange = 1, EnergyChange = 2 };

struct StepController {
  Strategy strategy = Strategy::TrajectoryChange;
  double sensitivity = 0.0;  ///< gamma for TrajectoryChange, beta for EnergyChange
  double tau_min = 1e-4, tau_max = 1e-2;
  double r_user = 1.5;
  double r_max_theory = 1.5;
  bool enforce_theory = false;
  int max_halvings = 20;

  void validate() const {
    if (!(tau_min > 0.0) || !(tau_max >= tau_min)) throw ConfigError("controller: need 0 < tau_min <= tau_max");
    if (!(sensitivity >= 0.0)) throw ConfigError("controller: sensitivity must be non-negative");
    if (!(r_user > 0.0)) throw ConfigError("controller: r_user must be positive");
    if (max_halvings < 0) throw ConfigError("controller: max_halvings must be non-negative");
  }

  /// Smallest step the halving loop may attempt.
  double tau_floor() const { return std::ldexp(tau_min, -max_halvings); }
};

struct StepHistory {
  double tau_n = 0.0;
  double trajectory_rate = 0.0;  ///< ||(x^n - x^{n-1}) / tau_n||
  double energy_rate = 0.0;      ///< |E^n - E^{n-1}| / tau_n
};

/** \brief Next step: min(max(tau_min, tau_max / sqrt(1 + s q^2)), r_user tau_n),
 * with q the trajectory or energy rate; optionally also capped at r_max_theory tau_n.
 */
inline double propose_dt(const StepController& c, const StepHistory& h) {
  const double q = c.strategy == Strategy::TrajectoryChange ? h.trajectory_rate : h.energy_rate;
  double tau = std::min(std::max(c.tau_min, c.tau_max / std::sqrt(1.0 + c.sensitivity * q * q)), c.r_user * h.tau_n);
  if (c.enforce_theory) tau = std::min(tau, c.r_max_theory * h.tau_n);
  return tau;
}

/// True when the ratio cap undercuts tau_min, so the literal formula returns a step below it.
inline bool floor_violated(const StepController& c, const StepHistory& h) {
  return c.r_user * h.tau_n < c.tau_min || (c.enforce_theory && c.r_max_theory * h.tau_n < c.tau_min);
}

/// L2_h node norm of (x^n - x^{n-1}) / tau_n with half weights at the two ends.
inline double trajectory_rate(const Trajectory1D& tr) {
  if (!(tr.tau_prev > 0.0)) return 0.0;
  const std::size_t n = tr.curr.size();
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = tr.curr[j] - tr.prev[j];
    s += (j == 0 || j + 1 == n ? 0.5 : 1.0) * d * d;
  }
  return std::sqrt(s * tr.grid.h()) / tr.tau_prev;
}

/// 2D analogue with half weights on edges and quarter weights at corners.
inline double trajectory_rate(const Trajectory2D& tr) {
  if (!(tr.tau_prev > 0.0)) return 0.0;
  const Grid2D& g = tr.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const std::size_t k = g.idx(i, j);
      const double w = (i == 0 || i == g.my() ? 0.5 : 1.0) * (j == 0 || j == g.mx() ? 0.5 : 1.0);
      const double dx = tr.curr_x[k] - tr.prev_x[k], dy = tr.curr_y[k] - tr.prev_y[k];
      s += w * (dx * dx + dy * dy);
    }
  return std::sqrt(s * g.hx() * g.hy()) / tr.tau_prev;
}

/** \brief One accepted step of a run. */
struct StepEvent {
  std::size_t n = 0;
  double t = 0.0, tau = 0.0, ratio = 0.0, energy = 0.0;
  int rejections = 0;
  bool floor_warning = false;
};

struct RunLog {
  std::vector<StepEvent> events;
  std::size_t rejections = 0;
  std::size_t floor_warnings = 0;
  std::vector<std::string> messages;
};

/** \brief Problem-side callbacks used by the run loops. */
template <class State>
struct StepOps {
  std::function<State(const State&, double)> step;  ///< throws StepFailure on rejection
  std::function<double(const State&)> energy;
  std::function<double(const State&)> rate;         ///< trajectory rate of the latest step
  std::function<void(const State&, const StepEvent&)> on_accept;  ///< optional
};

namespace detail {

template <class State>
void accept(const StepOps<State>& ops, const State& s, const StepEvent& ev, RunLog& log) {
  log.events.push_back(ev);
  if (ops.on_accept) ops.on_accept(s, ev);
}

} // namespace detail

/** \brief Adaptive loop: the first steps use \p start_taus, later steps come from
 * propose_dt. A StepFailure halves tau and retries; going below tau_floor()
 * throws ControllerAbort. The run lands on T exactly: the last step is
 * shortened, and a remainder below tau_min is merged into the step before it.
 */
template <class State>
State run_adaptive(const StepOps<State>& ops, const StepController& c, State s, double T,
                   const std::vector<double>& start_taus, RunLog& log) {
  c.validate();
  if (start_taus.empty()) throw ConfigError("run_adaptive: need at least one starting step");
  double t = 0.0, tau_n = 0.0, e_curr = ops.energy(s), e_prev = e_curr;
  std::size_t n = 0;
  const double eps_t = 1e-12 * T;
  while (t < T - eps_t) {
    StepEvent ev;
    double tau;
    if (n < start_taus.size()) {
      tau = start_taus[n];
    } else {
      const StepHistory hist{tau_n, ops.rate(s), std::abs(e_curr - e_prev) / tau_n};
      tau = propose_dt(c, hist);
      if (floor_violated(c, hist)) {
        ev.floor_warning = true;
        ++log.floor_warnings;
      }
    }
    const double remaining = T - t;
    if (tau >= remaining - eps_t) {
      tau = remaining;
    } else if (remaining - tau < c.tau_min) {
      // absorb a sliver left over before T, or split the rest in two
      tau = remaining <= std::max(tau, c.tau_max) ? remaining : 0.5 * remaining;
    }
    for (;;) {
      try {
        State next = ops.step(s, tau);
        s = std::move(next);
        break;
      } catch (const StepFailure& e) {
        ++ev.rejections;
        ++log.rejections;
        const double half = 0.5 * tau;
        if (half < c.tau_floor()) {
          log.messages.push_back(e.what());
          throw ControllerAbort("run_adaptive: step " + std::to_string(n + 1) + " at t = " + fmt_sci(t) +
                                " rejected down to tau = " + fmt_sci(tau) + " (" + e.what() + ")");
        }
        tau = half;
      }
    }
    t += tau;
    ++n;
    ev.n = n;
    ev.t = t;
    ev.ratio = tau_n > 0.0 ? tau / tau_n : 0.0;
    ev.tau = tau;
    ev.energy = ops.energy(s);
    e_prev = e_curr;
    e_curr = ev.energy;
    tau_n = tau;
    detail::accept(ops, s, ev, log);
  }
  return s;
}

/// Runs a prescribed step sequence; failures propagate.
template <class State>
State run_schedule(const StepOps<State>& ops, State s, const std::vector<double>& taus, RunLog& log) {
  double t = 0.0, tau_n = 0.0;
  for (std::size_t n = 0; n < taus.size(); ++n) {
    s = ops.step(s, taus[n]);
    t += taus[n];
    StepEvent ev;
    ev.n = n + 1;
    ev.t = t;
    ev.tau = taus[n];
    ev.ratio = tau_n > 0.0 ? taus[n] / tau_n : 0.0;
    ev.energy = ops.energy(s);
    tau_n = taus[n];
    detail::accept(ops, s, ev, log);
  }
  return s;
}

} // namespace lagflow

#endif
