#ifndef LAGFLOW_TOOLS_ACCEPTANCE_SUITE_HPP
#define LAGFLOW_TOOLS_ACCEPTANCE_SUITE_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "lagflow/energy/energy1d.hpp"
#include "lagflow/energy/energy2d.hpp"
#include "lagflow/io/experiment.hpp"

namespace lagflow::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

inline bool in_range(double v, double lo, double hi) { return v >= lo && v <= hi; }

/// Ratio sequence in (0, r_hi] from the counter RNG, redrawn until tau stays in [lo, hi].
inline std::vector<double> ratio_taus(std::size_t N, double tau0, double r_hi, double lo, double hi,
                                      std::uint64_t seed) {
  std::vector<double> taus{tau0};
  std::uint64_t n = 0;
  while (taus.size() < N + 1) {
    const double r = r_hi * uniform_open01(seed, n++);
    const double t = taus.back() * r;
    if (t >= lo && t <= hi) taus.push_back(t);
  }
  return taus;
}

} // namespace detail

/** \brief Runs each acceptance criterion once; preset runs are cached across criteria. */
class Suite {
 public:
  Result run(int id) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    r.id = id;
    switch (id) {
      case 1: c1(r); break;
      case 2: c2(r); break;
      case 3: c3(r); break;
      case 4: c4(r); break;
      case 5: c5(r); break;
      case 6: c6(r); break;
      case 7: c7(r); break;
      case 8: c8(r); break;
      case 9: c9(r); break;
      case 10: c10(r); break;
      case 11: c11(r); break;
      case 12: c12(r); break;
      case 13: c13(r); break;
      default: r.name = "unknown criterion"; break;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }

  /// Prints one line per criterion; returns true when all pass.
  bool run_all(std::ostream& os, const std::vector<int>& ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13}) {
    bool ok = true;
    for (int id : ids) {
      Result r;
      try {
        r = run(id);
      } catch (const std::exception& e) {
        r.id = id;
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
      }
      ok = ok && r.pass;
      os << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " [" << r.name << "] " << r.detail << " ("
         << detail::fmt("%.1f", r.seconds) << " s)" << std::endl;
    }
    return ok;
  }

 private:
  std::map<std::string, RunRecord> runs_;

  const RunRecord& record(const std::string& key) {
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    ExperimentConfig c;
    if (key == "pme") c = preset_defaults(Preset::PmeConvergence);
    else if (key == "wt2") c = preset_defaults(Preset::PmeWaitingTime);
    else if (key == "wt2.5") {
      c = preset_defaults(Preset::PmeWaitingTime);
      c.m = 2.5;
    } else if (key == "ks5pi") c = preset_defaults(Preset::KsBlowup1d);
    else if (key == "ks1") {
      c = preset_defaults(Preset::KsBlowup1d);
      c.C = 1.0;
    } else if (key == "bb") c = preset_defaults(Preset::Barenblatt2d);
    else if (key == "bb-implicit") {
      c = preset_defaults(Preset::Barenblatt2d);
      c.implicit = true;
      c.mx = c.my = 32;
    } else if (key == "nonradial") c = preset_defaults(Preset::PmeNonradial2d);
    else if (key == "ks2d") c = preset_defaults(Preset::Ks2d);
    else if (key == "ac") c = preset_defaults(Preset::AcInterface);
    else if (key == "ac-degenerate") {
      c = preset_defaults(Preset::AcInterface);
      c.degenerate_mobility = true;
      c.T = 0.5;
    } else throw ConfigError("acceptance: unknown run " + key);
    c.plots = false;
    return runs_.emplace(key, simulate(c)).first->second;
  }

  static const std::vector<std::string>& conservative_runs() {
    static const std::vector<std::string> k = {"pme", "wt2", "wt2.5", "ks5pi", "ks1",
                                               "bb",  "bb-implicit", "nonradial", "ks2d"};
    return k;
  }

  static std::string orders_text(const SweepRecord& s) {
    std::string o;
    for (std::size_t i = 1; i < s.rows.size(); ++i)
      o += detail::fmt(" %.4f", s.rows[i].order_grid) + "/" + detail::fmt("%.4f", s.rows[i].order_step);
    return o;
  }

  void c1(Result& r) {
    r.name = "PME 1D fixed-step convergence";
    const SweepRecord s = run_sweep(preset_defaults(Preset::PmeConvergence));
    r.pass = true;
    for (std::size_t i = 1; i < s.rows.size(); ++i) r.pass = r.pass && detail::in_range(s.rows[i].order_grid, 1.85, 2.10);
    r.detail = "orders (grid/step)" + orders_text(s) + ", target [1.85, 2.10]";
  }

  void c2(Result& r) {
    r.name = "PME 1D random-step convergence";
    ExperimentConfig c = preset_defaults(Preset::PmeConvergence);
    c.mode = StepMode::Random;
    c.sweep_steps = {200, 400, 800};
    const SweepRecord s = run_sweep(c);
    r.pass = true;
    double maxr = 0.0;
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      maxr = std::max(maxr, s.rows[i].max_ratio);
      if (i > 0)
        r.pass = r.pass && detail::in_range(s.rows[i].order_grid, 1.8, 2.15) &&
                 detail::in_range(s.rows[i].order_step, 1.8, 2.15);
    }
    const double bound = theory_ratio_bound(Scheme::Wgf1d);
    r.pass = r.pass && maxr > bound;
    r.detail = "orders (grid/step)" + orders_text(s) + ", target [1.8, 2.15]; max ratio " + detail::fmt("%.4g", maxr) +
               " vs bound " + detail::fmt("%.4g", bound);
  }

  void c3(Result& r) {
    r.name = "Allen-Cahn convergence, fixed and random steps";
    r.pass = true;
    for (StepMode mode : {StepMode::Fixed, StepMode::Random}) {
      ExperimentConfig c = preset_defaults(Preset::AcInterface);
      c.degenerate_mobility = true;
      c.T = 0.5;
      c.mode = mode;
      const SweepRecord s = run_sweep(c);
      for (std::size_t i = 1; i < s.rows.size(); ++i)
        r.pass = r.pass && detail::in_range(s.rows[i].order_grid, 1.8, 2.2) &&
                 detail::in_range(s.rows[i].order_step, 1.8, 2.2);
      r.detail += std::string(mode == StepMode::Fixed ? "fixed" : "random") + orders_text(s) + "; ";
    }
    r.detail += "target [1.8, 2.2], mobility 1 - rho^2";
  }

  void c4(Result& r) {
    r.name = "Allen-Cahn modified energy monotone for ratios in (0, 1.5]";
    double worst = -1e300;
    for (auto kind : {Mobility::Kind::Constant, Mobility::Kind::Degenerate}) {
      ExperimentConfig c = preset_defaults(Preset::AcInterface);
      c.mx = 64;
      c.degenerate_mobility = kind == Mobility::Kind::Degenerate;
      const AcProblem P = lagflow::detail::ac_problem(c);
      const auto taus = detail::ratio_taus(200, 1e-3, 1.5, 1e-4, 1e-2, 4);
      Trajectory1D tr = ac_first_step(Trajectory1D::identity(P.grid), taus[0], P);
      double prev = ac_modified_energy(tr, P, 1.5);
      for (std::size_t n = 1; n < taus.size(); ++n) {
        tr = ac_step(tr, taus[n], P);
        const double v = ac_modified_energy(tr, P, 1.5);
        worst = std::max(worst, v - prev);
        prev = v;
      }
    }
    r.pass = worst <= 1e-10;
    r.detail = "largest per-step increase " + detail::fmt("%.3e", worst) + " over 2 x 200 steps, tolerance 1e-10";
  }

  void c5(Result& r) {
    r.name = "PME augmented energy monotone for ratios in (0, 3.56]";
    ExperimentConfig c = preset_defaults(Preset::PmeConvergence);
    c.mx = 64;
    const Grid1D g(-1.0, 1.0, c.mx);
    Vec rho0(c.mx);
    for (std::size_t j = 0; j < c.mx; ++j) rho0[j] = std::cos(0.5 * std::numbers::pi * g.midpoint(j));
    const Wgf1dProblem P(g, PorousMedium{2.0}, rho0, c.eps_visc);
    const double rmax = theory_ratio_bound(Scheme::Wgf1d);
    const auto taus = detail::ratio_taus(300, 2e-3, rmax, 1e-4, 2e-2, 5);
    Trajectory1D tr = wgf1d_first_step(Trajectory1D::identity(g), taus[0], P);
    double prev = wgf1d_augmented_energy(tr, P, rmax), worst = -1e300, maxr = 0.0;
    for (std::size_t n = 1; n < taus.size(); ++n) {
      maxr = std::max(maxr, taus[n] / taus[n - 1]);
      tr = wgf1d_step(tr, taus[n], P);
      const double v = wgf1d_augmented_energy(tr, P, rmax);
      worst = std::max(worst, v - prev);
      prev = v;
    }
    r.pass = worst <= 1e-10;
    r.detail = "largest per-step increase " + detail::fmt("%.3e", worst) + " over 300 steps (max ratio " +
               detail::fmt("%.3f", maxr) + "), tolerance 1e-10";
  }

  void c6(Result& r) {
    r.name = "mass conservation";
    double w1 = 0.0, w2 = 0.0;
    for (const auto& k : conservative_runs()) {
      const RunRecord& rec = record(k);
      (rec.density2d ? w2 : w1) = std::max(rec.density2d ? w2 : w1, rec.mass_drift());
    }
    r.pass = w1 <= 1e-12 && w2 <= 1e-11;
    r.detail = "max relative drift 1D " + detail::fmt("%.2e", w1) + " (<= 1e-12), 2D " + detail::fmt("%.2e", w2) +
               " (<= 1e-11) over " + std::to_string(conservative_runs().size()) + " runs";
  }

  void c7(Result& r) {
    r.name = "Allen-Cahn maximum bound principle, exact";
    double bad = 0.0;
    std::size_t steps = 0;
    for (const char* k : {"ac", "ac-degenerate"}) {
      bad += record(k).metrics.at("mbp_violations");
      steps += record(k).rows.size();
    }
    r.pass = bad == 0.0;
    r.detail = detail::fmt("%.0f", bad) + " steps with a changed density multiset out of " + std::to_string(steps);
  }

  void c8(Result& r) {
    r.name = "positivity of D_h x and det F";
    double lo = 1e300;
    std::string where;
    std::vector<std::string> keys = conservative_runs();
    keys.push_back("ac");
    keys.push_back("ac-degenerate");
    for (const auto& k : keys) {
      const double v = record(k).min_jacobian();
      if (v < lo) lo = v, where = k;
    }
    r.pass = lo > 0.0;
    r.detail = "smallest value " + detail::fmt("%.3e", lo) + " (run " + where + ") over " + std::to_string(keys.size()) +
               " runs";
  }

  void c9(Result& r) {
    r.name = "PME waiting time";
    const double a = record("wt2").metrics.at("waiting_time"), b = record("wt2.5").metrics.at("waiting_time");
    r.pass = detail::in_range(a, 0.19, 0.26) && detail::in_range(b, 0.16, 0.23);
    r.detail = "m=2: " + detail::fmt("%.4f", a) + " in [0.19, 0.26] (closed form " +
               detail::fmt("%.4f", aronson_waiting_time(2.0, 0.25)) + "); m=2.5: " + detail::fmt("%.4f", b) +
               " in [0.16, 0.23] (closed form " + detail::fmt("%.4f", aronson_waiting_time(2.5, 0.25)) + ")";
  }

  void c10(Result& r) {
    r.name = "2D Barenblatt interface radius";
    const RunRecord& e = record("bb");
    const RunRecord& i = record("bb-implicit");
    const double ex = barenblatt_radius(2.0, 2.0);
    const double de = e.metrics.at("interface_radius") / ex - 1.0, di = i.metrics.at("interface_radius") / ex - 1.0;
    r.pass = e.termination == "reached-T" && i.termination == "reached-T" && std::abs(de) <= 0.05 &&
             std::abs(di) <= 0.08;
    r.detail = "exact " + detail::fmt("%.4f", ex) + "; explicit 64^2 " + detail::fmt("%.4f", e.metrics.at("interface_radius")) +
               " (" + detail::fmt("%+.2f", 100 * de) + "%, limit 5%); implicit 32^2 " +
               detail::fmt("%.4f", i.metrics.at("interface_radius")) + " (" + detail::fmt("%+.2f", 100 * di) +
               "%, limit 8%)";
  }

  void c11(Result& r) {
    r.name = "stability-margin identities";
    const double a = stability_margin(Scheme::AllenCahn, 1.5, 1.5);
    const double b = stability_margin(Scheme::Wgf1d, 0.5 * (3.0 + std::sqrt(17.0)));
    const double c = stability_margin(Scheme::Wgf2d, 1.0);
    r.pass = std::abs(a) <= 1e-12 && std::abs(b) <= 1e-12 && std::abs(c - 1.0 / 12.0) <= 1e-12;
    r.detail = "AC(1.5) " + detail::fmt("%.1e", a) + ", WGF1D((3+sqrt17)/2) " + detail::fmt("%.1e", b) +
               ", WGF2D(1) - 1/12 " + detail::fmt("%.1e", c - 1.0 / 12.0);
  }

  void c12(Result& r) {
    r.name = "gradient oracles against central differences";
    double worst = 0.0;
    int configs = 0;
    std::uint64_t draw = 0;
    auto U = [&](double a) { return a * (2.0 * uniform_open01(12, draw++) - 1.0); };
    const EnergyModel m1[] = {PorousMedium{2.0}, PorousMedium{3.0}, FokkerPlanck{}, KellerSegel1D{}};
    for (const auto& model : m1)
      for (int trial = 0; trial < 20; ++trial, ++configs) {
        const Grid1D g(-2.0, 2.0, 12 + trial % 5);
        Vec rho0(g.cells());
        for (std::size_t j = 0; j < rho0.size(); ++j) rho0[j] = 0.1 + std::exp(-g.midpoint(j) * g.midpoint(j));
        Vec x = g.node_coords(), partner = g.node_coords();
        for (std::size_t j = 1; j < g.cells(); ++j) {
          x[j] += U(0.35) * g.h();
          partner[j] += U(0.2) * g.h();
        }
        const Vec* p = std::holds_alternative<KellerSegel1D>(model) ? &partner : nullptr;
        const Vec an = energy_gradient_1d(model, x, rho0, g, p);
        double num = 0.0, den = 0.0;
        const double eps = 1e-6 * g.h();
        for (std::size_t j = 1; j < g.cells(); ++j) {
          Vec xp = x, xm = x;
          xp[j] += eps;
          xm[j] -= eps;
          const double fd =
            (discrete_energy_1d(model, xp, rho0, g, p) - discrete_energy_1d(model, xm, rho0, g, p)) / (2 * eps);
          num = std::max(num, std::abs(fd - an[j]));
          den = std::max(den, std::abs(fd));
        }
        worst = std::max(worst, num / den);
      }
    const EnergyModel m2[] = {PorousMedium{2.0}, PorousMedium{3.0}, KellerSegel2D{1.0, 1.0}, KellerSegel2D{2.0, 0.5}};
    for (const auto& model : m2)
      for (int trial = 0; trial < 20; ++trial, ++configs) {
        const Grid2D g(-1.0, 1.0, 5 + trial % 3, -1.0, 1.0, 6);
        Trajectory2D t = Trajectory2D::identity(g);
        Vec rho0(g.size());
        for (std::size_t k = 0; k < g.size(); ++k)
          rho0[k] = 0.05 + std::exp(-2.0 * (t.curr_x[k] * t.curr_x[k] + t.curr_y[k] * t.curr_y[k]));
        for (std::size_t i = 1; i < g.my(); ++i)
          for (std::size_t j = 1; j < g.mx(); ++j) {
            t.curr_x[g.idx(i, j)] += U(0.2) * g.hx();
            t.curr_y[g.idx(i, j)] += U(0.2) * g.hy();
          }
        const auto [gx, gy] = energy_gradient_2d(model, t.curr_x, t.curr_y, rho0, g);
        const double eps = 1e-6 * g.hx(), area = g.hx() * g.hy();
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i < g.my(); ++i)
          for (std::size_t j = 1; j < g.mx(); ++j)
            for (int comp = 0; comp < 2; ++comp) {
              Vec& v = comp == 0 ? t.curr_x : t.curr_y;
              const std::size_t k = g.idx(i, j);
              const double v0 = v[k];
              v[k] = v0 + eps;
              const double ep = discrete_energy_2d(model, t.curr_x, t.curr_y, rho0, g);
              v[k] = v0 - eps;
              const double em = discrete_energy_2d(model, t.curr_x, t.curr_y, rho0, g);
              v[k] = v0;
              const double fd = (ep - em) / (2.0 * eps * area);
              num = std::max(num, std::abs(fd - (comp == 0 ? gx[k] : gy[k])));
              den = std::max(den, std::abs(fd));
            }
        worst = std::max(worst, num / den);
      }
    r.pass = worst <= 1e-6;
    r.detail = "worst relative error " + detail::fmt("%.2e", worst) + " over " + std::to_string(configs) +
               " configurations (4 models in 1D, 4 in 2D), tolerance 1e-6";
  }

  void c13(Result& r) {
    r.name = "Keller-Segel 1D blow-up and small-mass boundedness";
    const RunRecord& b = record("ks5pi");
    const RunRecord& s = record("ks1");
    const double tau_min = b.config.tau_min;
    bool collapsed = b.termination == "tau-exhausted" && !b.rows.empty() &&
                     b.rows.back().tau <= tau_min * (1.0 + 1e-12);
    bool monotone = b.rows.size() >= 21;
    for (std::size_t k = b.rows.size() - 20; monotone && k < b.rows.size(); ++k)
      monotone = b.rows[k].max_density > b.rows[k - 1].max_density;
    double smax = s.initial.max_density;
    for (const auto& w : s.rows) smax = std::max(smax, w.max_density);
    const bool bounded = s.termination == "reached-T" && std::abs(s.rows.back().t - s.config.T) < 1e-12 &&
                         smax <= 2.0 * s.initial.max_density;
    r.pass = collapsed && monotone && bounded;
    r.detail = "C=5pi: " + b.termination + " at t=" + detail::fmt("%.4f", b.rows.back().t) + ", last tau " +
               detail::fmt("%.2e", b.rows.back().tau) + ", max density " + detail::fmt("%.4g", b.rows.back().max_density) +
               (monotone ? " rising over the last 20 steps" : " NOT monotone over the last 20 steps") +
               "; C=1: " + s.termination + ", max density " + detail::fmt("%.4f", smax) + " (initial " +
               detail::fmt("%.4f", s.initial.max_density) + ")";
  }
};

} // namespace lagflow::acceptance

#endif
