#ifndef LAGFLOW_IO_EXPERIMENT_HPP
#define LAGFLOW_IO_EXPERIMENT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lagflow/control/controller.hpp"
#include "lagflow/diag/diagnostics.hpp"
#include "lagflow/io/config.hpp"
#include "lagflow/io/rng.hpp"
#include "lagflow/io/svg.hpp"
#include "lagflow/solvers/ac.hpp"
#include "lagflow/solvers/wgf1d.hpp"
#include "lagflow/solvers/wgf2d.hpp"

namespace lagflow {

/** \brief Per accepted step. */
struct RunRow {
  std::size_t n = 0;
  double t = 0.0, tau = 0.0, ratio = 0.0, energy = 0.0, mass = 0.0;
  double min_density = 0.0, max_density = 0.0, min_jacobian = 0.0;
  int rejections = 0;
};

inline const char* run_csv_header() {
  return "n,t,tau,ratio,energy,mass,min_density,max_density,min_jacobian,rejections";
}

/** \brief Density profile at one time (1D presets). */
struct Snapshot1D {
  double t = 0.0;
  Vec x, rho;  ///< cell midpoints and densities
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<RunRow> rows;
  RunRow initial;  ///< n = 0 state
  std::string termination = "reached-T";  ///< or "tau-exhausted"
  std::string message;
  std::size_t rejections = 0, floor_warnings = 0;
  std::map<std::string, double> metrics;
  // final state, 1D
  Vec X, x;
  DensityField1D density1d;
  std::vector<Snapshot1D> snapshots;
  // final state, 2D
  std::optional<DensityField2D> density2d;
  std::optional<DensityField2D> initial2d;

  double max_ratio() const {
    double r = 0.0;
    for (const auto& w : rows) r = std::max(r, w.ratio);
    return r;
  }
  double min_jacobian() const {
    double m = initial.min_jacobian;
    for (const auto& w : rows) m = std::min(m, w.min_jacobian);
    return m;
  }
  /// Largest |mass - mass_0| / mass_0 over the run.
  double mass_drift() const {
    double d = 0.0;
    for (const auto& w : rows) d = std::max(d, std::abs(w.mass - initial.mass) / std::abs(initial.mass));
    return d;
  }
};

namespace detail {

inline double nonradial_rho0(double x, double y) {
  const double r = std::hypot(x, y);
  if (r >= 0.5 && r <= 1.0 && (x < 0.0 || y < 0.0)) return 25.0 * std::pow(0.0625 - (r - 0.75) * (r - 0.75), 1.5);
  const double a = x * x + (y - 0.75) * (y - 0.75);
  if (a <= 0.0625 && x >= 0.0) return 25.0 * std::pow(0.0625 - a, 1.5);
  const double b = (x - 0.75) * (x - 0.75) + y * y;
  if (b <= 0.0625 && y >= 0.0) return 25.0 * std::pow(0.0625 - b, 1.5);
  return 0.0;
}

/// Widest angular gap, in degrees, of the support inside the first quadrant.
inline double quadrant_gap_degrees(const DensityField2D& f) {
  std::vector<double> ang{0.0, 90.0};
  for (std::size_t k = 0; k < f.values.size(); ++k)
    if (f.values[k] > 0.0 && f.x[k] >= 0.0 && f.y[k] >= 0.0 && std::hypot(f.x[k], f.y[k]) > 0.3)
      ang.push_back(std::atan2(f.y[k], f.x[k]) * 180.0 / std::numbers::pi);
  std::sort(ang.begin(), ang.end());
  double g = 0.0;
  for (std::size_t i = 1; i < ang.size(); ++i) g = std::max(g, ang[i] - ang[i - 1]);
  return g;
}

inline std::vector<double> fixed_schedule(double T, double tau) {
  const auto N = static_cast<std::size_t>(std::ceil(T / tau - 1e-9));
  std::vector<double> s(std::max<std::size_t>(N, 1), tau);
  s.back() = T - tau * static_cast<double>(s.size() - 1);
  if (s.back() <= 1e-12 * T) s.pop_back();
  return s;
}

inline std::vector<double> schedule_for(const ExperimentConfig& c) {
  if (c.mode == StepMode::Random) return random_step_sequence(c.steps, c.T, c.seed);
  return fixed_schedule(c.T, c.tau);
}

/// Wraps a step so that failures carry step context and count as aborts (for prescribed schedules).
template <class State>
StepOps<State> as_schedule_ops(StepOps<State> ops) {
  auto inner = ops.step;
  ops.step = [inner](const State& s, double tau) {
    try {
      return inner(s, tau);
    } catch (const StepFailure& e) {
      throw ControllerAbort(std::string("prescribed step of tau = ") + fmt_sci(tau) + " failed (" + e.what() + ")");
    }
  };
  return ops;
}

/// Runs the configured step mode; ControllerAbort either ends the run at the last accepted state or propagates.
template <class State>
State drive(const ExperimentConfig& c, StepOps<State> ops, State s, RunRecord& rec) {
  RunLog log;
  State last = s;
  auto user = ops.on_accept;
  ops.on_accept = [&last, user](const State& st, const StepEvent& ev) {
    last = st;
    if (user) user(st, ev);
  };
  try {
    if (c.mode == StepMode::Adaptive)
      last = run_adaptive(ops, c.controller(), std::move(s), c.T, {c.tau_first}, log);
    else
      last = run_schedule(as_schedule_ops(ops), std::move(s), schedule_for(c), log);
  } catch (const ControllerAbort& e) {
    rec.rejections = log.rejections;
    rec.floor_warnings = log.floor_warnings;
    rec.termination = "tau-exhausted";
    rec.message = e.what();
    if (!c.abort_is_result) throw;
    return last;
  }
  rec.rejections = log.rejections;
  rec.floor_warnings = log.floor_warnings;
  return last;
}

inline RunRow row_of(const StepEvent& ev) {
  RunRow r;
  r.n = ev.n;
  r.t = ev.t;
  r.tau = ev.tau;
  r.ratio = ev.ratio;
  r.energy = ev.energy;
  r.rejections = ev.rejections;
  return r;
}

inline void fill_1d(RunRow& r, const Vec& x, const DensityField1D& f, const Grid1D& g) {
  r.mass = total_mass(f, x);
  r.min_density = *std::min_element(f.values.begin(), f.values.end());
  r.max_density = *std::max_element(f.values.begin(), f.values.end());
  const Vec d = forward_diff(x, g);
  r.min_jacobian = *std::min_element(d.begin(), d.end());
}

inline void fill_2d(RunRow& r, const DensityField2D& f) {
  r.mass = total_mass(f);
  const Grid2D& g = f.grid;
  double lo = f.values[g.idx(1, 1)], hi = lo;
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      lo = std::min(lo, f.values[g.idx(i, j)]);
      hi = std::max(hi, f.values[g.idx(i, j)]);
    }
  r.min_density = lo;
  r.max_density = hi;
  r.min_jacobian = min_interior(jacobian_det_2d(f.x, f.y, g), g);
}

/// Records snapshots when t crosses multiples of T/4.
struct SnapshotClock {
  double T = 1.0;
  int next = 1;
  bool due(double t) {
    if (next > 4 || t < next * T / 4.0 - 1e-12 * T) return false;
    while (next <= 4 && t >= next * T / 4.0 - 1e-12 * T) ++next;
    return true;
  }
};

inline RunRecord run_1d_wgf(const ExperimentConfig& c) {
  RunRecord rec;
  rec.config = c;
  const double pi = std::numbers::pi;
  std::optional<Grid1D> grid;
  Vec rho0;
  EnergyModel model = PorousMedium{c.m};
  std::size_t edge_lo = 0, edge_hi = 0;
  switch (c.preset) {
    case Preset::PmeConvergence:
      grid.emplace(-1.0, 1.0, c.mx);
      for (std::size_t j = 0; j < c.mx; ++j) rho0.push_back(std::cos(0.5 * pi * grid->midpoint(j)));
      break;
    case Preset::PmeWaitingTime: {
      const double h = pi / static_cast<double>(c.mx);
      grid.emplace(-pi - h * static_cast<double>(c.pad), h * static_cast<double>(c.pad), c.mx + 2 * c.pad);
      edge_lo = c.pad;
      edge_hi = c.pad + c.mx;
      rho0.assign(grid->cells(), 0.0);
      for (std::size_t j = c.pad; j < c.pad + c.mx; ++j) {
        const double s = std::sin(grid->midpoint(j)), s2 = s * s;
        rho0[j] = std::pow((c.m - 1.0) / c.m * ((1.0 - c.theta) * s2 + c.theta * s2 * s2), 1.0 / (c.m - 1.0));
      }
      break;
    }
    case Preset::KsBlowup1d:
      grid.emplace(-15.0, 15.0, c.mx);
      model = KellerSegel1D{};
      for (std::size_t j = 0; j < c.mx; ++j) {
        const double X = grid->midpoint(j);
        rho0.push_back(c.C / std::sqrt(2.0 * pi) * std::exp(-0.5 * X * X) + 1e-8);
      }
      break;
    default: throw ConfigError("run_1d_wgf: not a 1D conservative preset");
  }
  const Wgf1dProblem P(*grid, model, rho0, c.eps_visc);
  const Grid1D& g = P.grid;
  std::vector<EdgeSample> edges;
  SnapshotClock clock{c.T};
  auto snap = [&](double t, const Trajectory1D& s) {
    const auto f = wgf1d_recover_density(s, P);
    rec.snapshots.push_back({t, f.positions, f.values});
  };

  StepOps<Trajectory1D> ops;
  ops.step = [&P](const Trajectory1D& s, double tau) { return wgf1d_step(s, tau, P); };
  ops.energy = [&P](const Trajectory1D& s) { return wgf1d_energy(s.curr, P); };
  ops.rate = [](const Trajectory1D& s) { return trajectory_rate(s); };
  ops.on_accept = [&](const Trajectory1D& s, const StepEvent& ev) {
    RunRow r = row_of(ev);
    fill_1d(r, s.curr, wgf1d_recover_density(s, P), g);
    rec.rows.push_back(r);
    if (c.preset == Preset::PmeWaitingTime) edges.push_back({ev.t, {s.curr[edge_lo], s.curr[edge_hi]}});
    if (clock.due(ev.t)) snap(ev.t, s);
  };

  Trajectory1D s = Trajectory1D::identity(g);
  rec.initial.energy = ops.energy(s);
  fill_1d(rec.initial, s.curr, wgf1d_recover_density(s, P), g);
  snap(0.0, s);
  if (c.preset == Preset::PmeWaitingTime) edges.push_back({0.0, {s.curr[edge_lo], s.curr[edge_hi]}});
  s = drive(c, ops, std::move(s), rec);

  rec.X = g.node_coords();
  rec.x = s.curr;
  rec.density1d = wgf1d_recover_density(s, P);
  if (rec.snapshots.back().t < s.time) snap(s.time, s);
  if (c.preset == Preset::PmeWaitingTime) {
    rec.metrics["aronson_waiting_time"] = aronson_waiting_time(c.m, c.theta);
    rec.metrics["detection_threshold"] = c.threshold * pi;
    const auto tw = waiting_time_detect(edges, c.threshold * pi);
    rec.metrics["waiting_time"] = tw ? *tw : std::nan("");
  }
  if (c.preset == Preset::KsBlowup1d) rec.metrics["final_max_density"] = rec.rows.empty() ? 0.0 : rec.rows.back().max_density;
  return rec;
}

inline AcProblem ac_problem(const ExperimentConfig& c) {
  Mobility mob;
  if (c.degenerate_mobility) mob.kind = Mobility::Kind::Degenerate;
  return AcProblem::make(
    Grid1D(-1.0, 1.0, c.mx), c.epsilon, [](double X) { return 1.0 - X * X; }, [](double X) { return -2.0 * X; }, mob,
    c.eta);
}

inline RunRecord run_ac(const ExperimentConfig& c) {
  RunRecord rec;
  rec.config = c;
  const AcProblem P = ac_problem(c);
  const Grid1D& g = P.grid;
  SnapshotClock clock{c.T};
  auto snap = [&](double t, const Trajectory1D& s) {
    const auto f = ac_recover_density(s, P);
    rec.snapshots.push_back({t, f.positions, f.values});
  };
  StepOps<Trajectory1D> ops;
  ops.step = [&P](const Trajectory1D& s, double tau) { return ac_step(s, tau, P); };
  ops.energy = [&P](const Trajectory1D& s) { return ac_discrete_energy(s.curr, P); };
  ops.rate = [](const Trajectory1D& s) { return trajectory_rate(s); };
  Vec sorted0 = P.rho0_mid;
  std::sort(sorted0.begin(), sorted0.end());
  double mbp_violations = 0.0;
  ops.on_accept = [&](const Trajectory1D& s, const StepEvent& ev) {
    RunRow r = row_of(ev);
    const DensityField1D f = ac_recover_density(s, P);
    fill_1d(r, s.curr, f, g);
    rec.rows.push_back(r);
    Vec v = f.values;
    std::sort(v.begin(), v.end());
    if (v != sorted0) mbp_violations += 1.0;
    if (clock.due(ev.t)) snap(ev.t, s);
  };
  Trajectory1D s = Trajectory1D::identity(g);
  rec.initial.energy = ops.energy(s);
  fill_1d(rec.initial, s.curr, ac_recover_density(s, P), g);
  snap(0.0, s);
  s = drive(c, ops, std::move(s), rec);
  rec.X = g.node_coords();
  rec.x = s.curr;
  rec.density1d = ac_recover_density(s, P);
  if (rec.snapshots.back().t < s.time) snap(s.time, s);
  rec.metrics["mbp_violations"] = mbp_violations;
  return rec;
}

inline Wgf2dProblem problem_2d(const ExperimentConfig& c) {
  double L = 2.0;
  EnergyModel model = PorousMedium{c.m};
  std::function<double(double, double)> f;
  switch (c.preset) {
    case Preset::Barenblatt2d:
      f = [m = c.m](double x, double y) { return barenblatt_2d(x, y, 0.0, m); };
      break;
    case Preset::PmeNonradial2d:
      L = 1.5;
      f = nonradial_rho0;
      break;
    case Preset::Ks2d:
      L = 5.0;
      model = KellerSegel2D{c.m, c.nu};
      f = [C = c.C](double x, double y) { return C * std::exp(-x * x - y * y); };
      break;
    default: throw ConfigError("problem_2d: not a 2D preset");
  }
  const Grid2D g(-L, L, c.mx, -L, L, c.my);
  Vec r0(g.size());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) r0[g.idx(i, j)] = f(g.X(j), g.Y(i));
  return Wgf2dProblem(g, model, std::move(r0), c.eps_visc,
                      c.visc_tau_squared ? ViscosityScaling::TauSquared : ViscosityScaling::Tau);
}

inline RunRecord run_2d(const ExperimentConfig& c) {
  RunRecord rec;
  rec.config = c;
  const Wgf2dProblem P = problem_2d(c);
  StepOps<Trajectory2D> ops;
  if (c.implicit)
    ops.step = [&P](const Trajectory2D& s, double tau) { return wgf2d_step_implicit(s, tau, P); };
  else
    ops.step = [&P](const Trajectory2D& s, double tau) { return wgf2d_step_explicit(s, tau, P); };
  ops.energy = [&P](const Trajectory2D& s) { return wgf2d_energy(s, P); };
  ops.rate = [](const Trajectory2D& s) { return trajectory_rate(s); };
  ops.on_accept = [&](const Trajectory2D& s, const StepEvent& ev) {
    RunRow r = row_of(ev);
    fill_2d(r, recover_density_2d(s, P));
    rec.rows.push_back(r);
  };
  Trajectory2D s = Trajectory2D::identity(P.grid);
  rec.initial.energy = ops.energy(s);
  rec.initial2d = recover_density_2d(s, P);
  fill_2d(rec.initial, *rec.initial2d);
  s = drive(c, ops, std::move(s), rec);
  rec.density2d = recover_density_2d(s, P);
  if (c.preset == Preset::Barenblatt2d) {
    const double r = interface_radius(*rec.density2d), ex = barenblatt_radius(s.time, c.m);
    rec.metrics["interface_radius"] = r;
    rec.metrics["exact_radius"] = ex;
    rec.metrics["radius_relative_error"] = (r - ex) / ex;
  }
  if (c.preset == Preset::PmeNonradial2d) {
    rec.metrics["quadrant_gap_initial_deg"] = quadrant_gap_degrees(*rec.initial2d);
    rec.metrics["quadrant_gap_final_deg"] = quadrant_gap_degrees(*rec.density2d);
  }
  rec.metrics["final_max_density"] = rec.rows.empty() ? rec.initial.max_density : rec.rows.back().max_density;
  return rec;
}

/** \brief Marching-squares segments of the level set of a node field, mapped to physical positions. */
inline std::vector<std::array<double, 4>> level_segments(const DensityField2D& f, double level) {
  const Grid2D& g = f.grid;
  std::vector<std::array<double, 4>> out;
  for (std::size_t i = 0; i < g.my(); ++i)
    for (std::size_t j = 0; j < g.mx(); ++j) {
      const std::size_t k[4] = {g.idx(i, j), g.idx(i, j + 1), g.idx(i + 1, j + 1), g.idx(i + 1, j)};
      std::vector<std::array<double, 2>> pts;
      for (int e = 0; e < 4; ++e) {
        const std::size_t a = k[e], b = k[(e + 1) % 4];
        const double va = f.values[a] - level, vb = f.values[b] - level;
        if ((va < 0.0) == (vb < 0.0)) continue;
        const double s = va / (va - vb);
        pts.push_back({f.x[a] + s * (f.x[b] - f.x[a]), f.y[a] + s * (f.y[b] - f.y[a])});
      }
      for (std::size_t p = 0; p + 1 < pts.size(); p += 2) out.push_back({pts[p][0], pts[p][1], pts[p + 1][0], pts[p + 1][1]});
    }
  return out;
}

} // namespace detail

/** \brief Runs a validated config and returns its record without writing files. */
inline RunRecord simulate(const ExperimentConfig& c) {
  validate(c);
  switch (c.preset) {
    case Preset::AcInterface: return detail::run_ac(c);
    case Preset::PmeConvergence:
    case Preset::PmeWaitingTime:
    case Preset::KsBlowup1d: return detail::run_1d_wgf(c);
    default: return detail::run_2d(c);
  }
}

namespace detail {

inline std::string sci(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.16e", v);
  return b;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  return f;
}

inline nlohmann::ordered_json metrics_json(const std::map<std::string, double>& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m) {
    if (std::isfinite(v)) j[k] = v;
    else j[k] = nullptr;
  }
  return j;
}

inline void write_plots(const RunRecord& rec, const std::filesystem::path& dir) {
  std::vector<double> t, e, tau, ratio;
  for (const auto& r : rec.rows) {
    t.push_back(r.t);
    e.push_back(r.energy);
    tau.push_back(r.tau);
    ratio.push_back(r.ratio);
  }
  const std::string name = preset_name(rec.config.preset);
  Plot pe{name + ": energy", "t", "energy", "", {}, {}, false, false};
  pe.series.push_back({"discrete energy", t, e});
  write_svg((dir / "energy.svg").string(), pe);
  Plot pt{name + ": time steps", "t", "tau", "ratio", {}, {}, false, false};
  pt.series.push_back({"tau", t, tau, "#1f77b4"});
  pt.series.push_back({"ratio", t, ratio, "#d62728", false, true});
  write_svg((dir / "timestep.svg").string(), pt);
  if (!rec.snapshots.empty()) {
    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    Plot pd{name + ": density", "x", "density", "", {}, {}, false, false};
    for (std::size_t k = 0; k < rec.snapshots.size(); ++k)
      pd.series.push_back({"t = " + num(rec.snapshots[k].t), rec.snapshots[k].x, rec.snapshots[k].rho, colors[k % 6]});
    write_svg((dir / "density.svg").string(), pd);
  }
  if (rec.density2d) {
    double mx = 0.0;
    for (double v : rec.initial2d->values) mx = std::max(mx, v);
    Plot ps{name + ": support at t = " + num(rec.rows.empty() ? 0.0 : rec.rows.back().t), "x", "y", "", {}, {}, true,
            false};
    ps.segments.push_back({"#999999", "initial support", level_segments(*rec.initial2d, 1e-3 * mx)});
    double mf = 0.0;
    for (double v : rec.density2d->values) mf = std::max(mf, v);
    ps.segments.push_back({"#d62728", "computed support", level_segments(*rec.density2d, 1e-3 * mf)});
    if (rec.config.preset == Preset::Barenblatt2d) {
      const double R = rec.metrics.at("exact_radius");
      PlotSeries circ{"exact interface", {}, {}, "#1f77b4", true};
      for (int k = 0; k <= 180; ++k) {
        circ.x.push_back(R * std::cos(2.0 * std::numbers::pi * k / 180.0));
        circ.y.push_back(R * std::sin(2.0 * std::numbers::pi * k / 180.0));
      }
      ps.series.push_back(circ);
    }
    const DensityField2D& f = *rec.density2d;
    PlotSeries nodes{"", {}, {}, "#555555", false, false, true};
    for (std::size_t k = 0; k < f.values.size(); ++k)
      if (f.values[k] > 1e-3 * mf) {
        nodes.x.push_back(f.x[k]);
        nodes.y.push_back(f.y[k]);
      }
    ps.series.push_back(nodes);
    write_svg((dir / "support.svg").string(), ps);
  }
}

} // namespace detail

/** \brief Writes steps.csv, final_state.csv, summary.json and (optionally) SVG plots into \p dir. */
inline void write_artifacts(const RunRecord& rec, const std::filesystem::path& dir) {
  using detail::sci;
  std::filesystem::create_directories(dir);
  {
    auto f = detail::open_out(dir / "steps.csv");
    f << run_csv_header() << "\n";
    for (const auto& r : rec.rows)
      f << r.n << ',' << sci(r.t) << ',' << sci(r.tau) << ',' << sci(r.ratio) << ',' << sci(r.energy) << ','
        << sci(r.mass) << ',' << sci(r.min_density) << ',' << sci(r.max_density) << ',' << sci(r.min_jacobian) << ','
        << r.rejections << "\n";
  }
  {
    auto f = detail::open_out(dir / "final_state.csv");
    if (rec.density2d) {
      const DensityField2D& d = *rec.density2d;
      const Grid2D& g = d.grid;
      f << "i,j,X,Y,x,y,rho\n";
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) {
          const std::size_t k = g.idx(i, j);
          f << i << ',' << j << ',' << sci(g.X(j)) << ',' << sci(g.Y(i)) << ',' << sci(d.x[k]) << ',' << sci(d.y[k])
            << ',' << sci(d.values[k]) << "\n";
        }
    } else {
      f << "kind,j,X,x,rho\n";
      for (std::size_t j = 0; j < rec.x.size(); ++j) f << "node," << j << ',' << sci(rec.X[j]) << ',' << sci(rec.x[j]) << ",\n";
      for (std::size_t j = 0; j < rec.density1d.values.size(); ++j)
        f << "cell," << j << ',' << sci(0.5 * (rec.X[j] + rec.X[j + 1])) << ',' << sci(rec.density1d.positions[j])
          << ',' << sci(rec.density1d.values[j]) << "\n";
    }
  }
  {
    nlohmann::ordered_json j;
    j["preset"] = preset_name(rec.config.preset);
    j["termination"] = rec.termination;
    j["message"] = rec.message;
    j["accepted_steps"] = rec.rows.size();
    j["final_time"] = rec.rows.empty() ? 0.0 : rec.rows.back().t;
    j["rejections"] = rec.rejections;
    j["floor_warnings"] = rec.floor_warnings;
    j["energy_initial"] = rec.initial.energy;
    j["energy_final"] = rec.rows.empty() ? rec.initial.energy : rec.rows.back().energy;
    j["mass_initial"] = rec.initial.mass;
    j["mass_final"] = rec.rows.empty() ? rec.initial.mass : rec.rows.back().mass;
    j["mass_max_relative_drift"] = rec.mass_drift();
    j["min_jacobian"] = rec.min_jacobian();
    j["max_ratio"] = rec.max_ratio();
    j["seed"] = rec.config.seed;
    j["metrics"] = detail::metrics_json(rec.metrics);
    j["config"] = serialize_config(rec.config);
    detail::open_out(dir / "summary.json") << j.dump(2) << "\n";
  }
  if (rec.config.plots) detail::write_plots(rec, dir);
}

/** \brief simulate() followed by write_artifacts() into config.out_dir. */
inline RunRecord run_experiment(const ExperimentConfig& c) {
  RunRecord rec = simulate(c);
  write_artifacts(rec, c.out_dir);
  return rec;
}

/** \brief One member of a resolution sweep. */
struct SweepRow {
  std::size_t mx = 0, steps = 0;
  double tau_max = 0.0, max_ratio = 0.0, error = 0.0;
  double order_grid = std::nan(""), order_step = std::nan("");
};

struct SweepRecord {
  ExperimentConfig config;
  std::vector<SweepRow> rows;
};

/** \brief Trajectory errors of sweep.mx against a fixed-step reference at sweep.reference_mx. */
inline SweepRecord run_sweep(const ExperimentConfig& c) {
  validate(c);
  if (c.preset != Preset::PmeConvergence && c.preset != Preset::AcInterface)
    throw ConfigError("sweep: only pme-convergence and ac-interface support resolution sweeps");
  if (c.sweep_mx.empty()) throw ConfigError("sweep: sweep.mx is empty");
  if (c.mode == StepMode::Adaptive) throw ConfigError("sweep: time.mode must be fixed or random");
  ExperimentConfig ref = c;
  ref.mx = c.reference_mx;
  ref.mode = StepMode::Fixed;
  ref.tau = c.T / static_cast<double>(c.reference_steps);
  const RunRecord rr = simulate(ref);
  const Grid1D gref(-1.0, 1.0, c.reference_mx);
  SweepRecord out;
  out.config = c;
  std::vector<double> errs, ms, taus;
  for (std::size_t i = 0; i < c.sweep_mx.size(); ++i) {
    ExperimentConfig m = c;
    m.mx = c.sweep_mx[i];
    m.steps = c.sweep_steps[i];
    m.tau = c.T / static_cast<double>(m.steps);
    const RunRecord r = simulate(m);
    SweepRow row;
    row.mx = m.mx;
    row.steps = r.rows.size();
    for (const auto& w : r.rows) row.tau_max = std::max(row.tau_max, w.tau);
    row.max_ratio = r.max_ratio();
    row.error = trajectory_l2_error(r.x, Grid1D(-1.0, 1.0, m.mx), rr.x, gref);
    errs.push_back(row.error);
    ms.push_back(static_cast<double>(m.mx));
    taus.push_back(row.tau_max);
    if (i > 0) {
      const double e2[] = {errs[i - 1], errs[i]}, m2[] = {ms[i - 1], ms[i]}, t2[] = {taus[i - 1], taus[i]};
      row.order_grid = convergence_order(e2, m2, Resolution::GridSize)[0];
      row.order_step = convergence_order(e2, t2, Resolution::StepSize)[0];
    }
    out.rows.push_back(row);
  }
  return out;
}

inline void write_sweep(const SweepRecord& s, const std::filesystem::path& dir) {
  using detail::sci;
  std::filesystem::create_directories(dir);
  auto f = detail::open_out(dir / "sweep.csv");
  f << "mx,steps,tau_max,max_ratio,error,order_grid,order_step\n";
  for (const auto& r : s.rows)
    f << r.mx << ',' << r.steps << ',' << sci(r.tau_max) << ',' << sci(r.max_ratio) << ',' << sci(r.error) << ','
      << (std::isnan(r.order_grid) ? std::string() : sci(r.order_grid)) << ','
      << (std::isnan(r.order_step) ? std::string() : sci(r.order_step)) << "\n";
  nlohmann::ordered_json j;
  j["preset"] = preset_name(s.config.preset);
  j["reference_mx"] = s.config.reference_mx;
  j["reference_steps"] = s.config.reference_steps;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : s.rows) {
    nlohmann::ordered_json o;
    o["mx"] = r.mx;
    o["error"] = r.error;
    o["tau_max"] = r.tau_max;
    o["max_ratio"] = r.max_ratio;
    if (!std::isnan(r.order_grid)) o["order_grid"] = r.order_grid;
    if (!std::isnan(r.order_step)) o["order_step"] = r.order_step;
    j["rows"].push_back(o);
  }
  j["config"] = serialize_config(s.config);
  detail::open_out(dir / "sweep_summary.json") << j.dump(2) << "\n";
}

} // namespace lagflow

#endif
