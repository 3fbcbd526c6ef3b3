#ifndef LAGFLOW_IO_CONFIG_HPP
#define LAGFLOW_IO_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lagflow/control/controller.hpp"
#include "lagflow/core/errors.hpp"

namespace lagflow {

enum class Preset { AcInterface, PmeConvergence, PmeWaitingTime, KsBlowup1d, Barenblatt2d, PmeNonradial2d, Ks2d };
enum class StepMode { Fixed, Random, Adaptive };

inline const std::vector<std::pair<Preset, std::string>>& preset_names() {
  static const std::vector<std::pair<Preset, std::string>> n = {
    {Preset::AcInterface, "ac-interface"},       {Preset::PmeConvergence, "pme-convergence"},
    {Preset::PmeWaitingTime, "pme-waiting-time"}, {Preset::KsBlowup1d, "ks-blowup-1d"},
    {Preset::Barenblatt2d, "barenblatt-2d"},     {Preset::PmeNonradial2d, "pme-nonradial-2d"},
    {Preset::Ks2d, "ks-2d"}};
  return n;
}

inline std::string preset_name(Preset p) {
  for (const auto& [k, v] : preset_names())
    if (k == p) return v;
  return "?";
}

inline bool is_2d(Preset p) { return p == Preset::Barenblatt2d || p == Preset::PmeNonradial2d || p == Preset::Ks2d; }

/// Mass-conserving presets (all but the Allen-Cahn one).
inline bool is_conservative(Preset p) { return p != Preset::AcInterface; }

struct ExperimentConfig {
  Preset preset = Preset::PmeConvergence;
  // model
  double m = 2.0, theta = 0.25, epsilon = 0.01, eta = 0.0, C = 1.0, nu = 1.0;
  bool degenerate_mobility = false;
  // grid
  std::size_t mx = 100, my = 0, pad = 0;
  // time
  double T = 0.5, tau = 5e-3, tau_first = 1e-4;
  StepMode mode = StepMode::Fixed;
  std::size_t steps = 100;  ///< random-mode step count
  // controller
  int strategy = 2;
  double gamma = 10.0, beta = 1e-2, tau_min = 1e-4, tau_max = 1e-2, r_user = 1.5;
  bool enforce_theory = false;
  int max_halvings = 20;
  // scheme
  double eps_visc = 1.0;
  bool visc_tau_squared = false;  ///< 2D regularisation eps tau^2 instead of eps tau
  bool implicit = false;          ///< 2D: Newton on the step functional instead of the explicit scheme
  bool abort_is_result = false;   ///< tau exhaustion ends the run instead of failing it
  // sweep
  std::vector<std::size_t> sweep_mx, sweep_steps;
  std::size_t reference_mx = 0, reference_steps = 0;
  // waiting-time detection, as a fraction of the support length
  double threshold = 1e-2;
  // output
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  bool plots = true;

  bool operator==(const ExperimentConfig&) const = default;

  StepController controller() const {
    StepController c;
    c.strategy = strategy == 1 ? Strategy::TrajectoryChange : Strategy::EnergyChange;
    c.sensitivity = strategy == 1 ? gamma : beta;
    c.tau_min = tau_min;
    c.tau_max = tau_max;
    c.r_user = r_user;
    c.enforce_theory = enforce_theory;
    c.max_halvings = max_halvings;
    return c;
  }
};

/// Defaults taken from the experiment set-ups of each preset.
inline ExperimentConfig preset_defaults(Preset p) {
  ExperimentConfig c;
  c.preset = p;
  switch (p) {
    case Preset::AcInterface:
      c.epsilon = 0.01;
      c.mx = 100;
      c.T = 20.0;
      c.tau = 1e-2;
      c.mode = StepMode::Random;
      c.steps = 2000;
      c.r_user = 1.5;
      c.tau_first = 1e-4;
      c.sweep_mx = {16, 32, 64};
      c.sweep_steps = {625, 1250, 2500};
      c.reference_mx = 512;
      c.reference_steps = 20000;
      break;
    case Preset::PmeConvergence:
      c.m = 2.0;
      c.mx = 100;
      c.tau = 1.0 / 200.0;
      c.T = 0.5;
      c.steps = 200;
      c.sweep_mx = {100, 200, 400};
      c.sweep_steps = {100, 200, 400};
      c.reference_mx = 1600;
      c.reference_steps = 1600;
      break;
    case Preset::PmeWaitingTime:
      c.m = 2.0;
      c.theta = 0.25;
      c.mx = 800;
      c.pad = 100;
      c.tau = 1.0 / 800.0;
      c.T = 0.3;
      c.eps_visc = 1e-6;
      c.threshold = 1e-2;
      c.strategy = 1;
      c.gamma = 10.0;
      c.tau_max = 5e-3;
      c.tau_min = 1e-6;
      c.tau_first = 1e-6;
      c.r_user = 1.4;
      break;
    case Preset::KsBlowup1d:
      c.C = 5.0 * std::numbers::pi;
      c.mx = 800;
      c.T = 1.0;
      c.mode = StepMode::Adaptive;
      c.strategy = 2;
      c.beta = 1e-2;
      c.tau_min = 1e-4;
      c.tau_max = 1e-2;
      c.tau_first = 1e-4;
      c.r_user = 3.5;
      c.max_halvings = 0;
      c.abort_is_result = true;
      break;
    case Preset::Barenblatt2d:
      c.m = 2.0;
      c.mx = c.my = 64;
      c.T = 2.0;
      c.tau = 1e-2;
      c.mode = StepMode::Adaptive;
      c.eps_visc = 0.5;
      c.strategy = 2;
      c.beta = 1e-2;
      c.tau_min = 1e-4;
      c.tau_max = 1e-2;
      c.tau_first = 1e-2;
      c.r_user = 1.25;
      break;
    case Preset::PmeNonradial2d:
      c.m = 3.0;
      c.mx = c.my = 64;
      c.T = 0.6;
      c.tau = 1e-3;
      c.eps_visc = 100.0;
      break;
    case Preset::Ks2d:
      c.m = 1.0;
      c.nu = 1.0;
      c.C = 1.0;
      c.mx = c.my = 64;
      c.T = 0.2;
      c.mode = StepMode::Adaptive;
      c.eps_visc = 0.1;
      c.strategy = 2;
      c.beta = 1e-2;
      c.tau_min = 1e-4;
      c.tau_max = 1e-2;
      c.tau_first = 1e-4;
      c.r_user = 1.5;
      c.max_halvings = 0;
      c.abort_is_result = true;
      break;
  }
  return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t p = 0; (p = s.find(from, p)) != std::string::npos; p += to.size()) s.replace(p, from.size(), to);
  return s;
}

/// Greek letters to ASCII names, lower case, '-' to '_'.
inline std::string normalize_key(std::string k) {
  static const std::pair<const char*, const char*> greek[] = {
    {"δt", "tau"}, {"Δt", "tau"}, {"θ", "theta"}, {"ε", "epsilon"}, {"η", "eta"}, {"τ", "tau"},
    {"β", "beta"}, {"γ", "gamma"}, {"ν", "nu"},   {"κ", "kappa"}};
  for (const auto& [g, a] : greek) k = replace_all(k, g, a);
  for (char& ch : k) {
    if (ch == '-') ch = '_';
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return k;
}

/** \brief Number with optional products and quotients of numbers and pi, e.g. "5pi", "1/200", "2*π". */
inline double parse_number(const std::string& raw, const std::string& key) {
  const std::string s = replace_all(replace_all(trim(raw), "π", "pi"), " ", "");
  if (s.empty()) throw ConfigError("key '" + key + "': empty value");
  double acc = 1.0;
  char op = '*';
  std::size_t i = 0;
  while (i <= s.size()) {
    std::size_t j = s.find_first_of("*/", i);
    if (j == std::string::npos) j = s.size();
    std::string f = s.substr(i, j - i);
    double v = 1.0;
    if (f.size() >= 2 && f.compare(f.size() - 2, 2, "pi") == 0) {
      v = std::numbers::pi;
      f.resize(f.size() - 2);
    }
    if (!f.empty()) {
      char* end = nullptr;
      const double a = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size()) throw ConfigError("key '" + key + "': cannot parse number '" + raw + "'");
      v *= a;
    } else if (v == 1.0) {
      throw ConfigError("key '" + key + "': cannot parse number '" + raw + "'");
    }
    acc = op == '*' ? acc * v : acc / v;
    if (j == s.size()) break;
    op = s[j];
    i = j + 1;
  }
  if (!std::isfinite(acc)) throw ConfigError("key '" + key + "': value is not finite");
  return acc;
}

inline std::size_t parse_count(const std::string& raw, const std::string& key) {
  const double v = parse_number(raw, key);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) throw ConfigError("key '" + key + "': expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& raw, const std::string& key) {
  const std::string v = normalize_key(trim(raw));
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + raw + "'");
}

inline std::vector<std::size_t> parse_list(const std::string& raw, const std::string& key) {
  std::vector<std::size_t> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_count(item, key));
  }
  return out;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

struct KeySpec {
  std::string name;  ///< canonical dotted key
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline KeySpec real_key(std::string name, double ExperimentConfig::*f) {
  return {name, [f, name](ExperimentConfig& c, const std::string& v) { c.*f = parse_number(v, name); },
          [f](const ExperimentConfig& c) { return fmt_double(c.*f); }};
}

inline KeySpec count_key(std::string name, std::size_t ExperimentConfig::*f) {
  return {name, [f, name](ExperimentConfig& c, const std::string& v) { c.*f = parse_count(v, name); },
          [f](const ExperimentConfig& c) { return std::to_string(c.*f); }};
}

inline KeySpec bool_key(std::string name, bool ExperimentConfig::*f) {
  return {name, [f, name](ExperimentConfig& c, const std::string& v) { c.*f = parse_bool(v, name); },
          [f](const ExperimentConfig& c) { return std::string(c.*f ? "true" : "false"); }};
}

inline KeySpec int_key(std::string name, int ExperimentConfig::*f) {
  return {name,
          [f, name](ExperimentConfig& c, const std::string& v) {
            const double x = parse_number(v, name);
            if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError("key '" + name + "': expected an integer");
            c.*f = static_cast<int>(x);
          },
          [f](const ExperimentConfig& c) { return std::to_string(c.*f); }};
}

inline KeySpec list_key(std::string name, std::vector<std::size_t> ExperimentConfig::*f) {
  return {name, [f, name](ExperimentConfig& c, const std::string& v) { c.*f = parse_list(v, name); },
          [f](const ExperimentConfig& c) { return fmt_list(c.*f); }};
}

template <class E>
KeySpec enum_key(std::string name, E ExperimentConfig::*f, std::vector<std::pair<E, std::string>> names) {
  return {name,
          [f, name, names](ExperimentConfig& c, const std::string& v) {
            const std::string w = normalize_key(trim(v));
            for (const auto& [e, s] : names)
              if (normalize_key(s) == w) {
                c.*f = e;
                return;
              }
            throw ConfigError("key '" + name + "': unknown value '" + v + "'");
          },
          [f, names](const ExperimentConfig& c) {
            for (const auto& [e, s] : names)
              if (e == c.*f) return s;
            return std::string("?");
          }};
}

inline KeySpec choice_key(std::string name, bool ExperimentConfig::*f, std::string off, std::string on) {
  return enum_key<bool>(name, f, {{false, off}, {true, on}});
}

inline const std::vector<KeySpec>& key_specs() {
  using C = ExperimentConfig;
  static const std::vector<KeySpec> specs = {
    enum_key<Preset>("preset", &C::preset, preset_names()),
    real_key("model.m", &C::m),
    real_key("model.theta", &C::theta),
    real_key("model.epsilon", &C::epsilon),
    real_key("model.eta", &C::eta),
    real_key("model.c", &C::C),
    real_key("model.nu", &C::nu),
    choice_key("model.mobility", &C::degenerate_mobility, "constant", "degenerate"),
    count_key("grid.mx", &C::mx),
    count_key("grid.my", &C::my),
    count_key("grid.pad", &C::pad),
    real_key("time.t", &C::T),
    real_key("time.tau", &C::tau),
    real_key("time.tau_first", &C::tau_first),
    enum_key<StepMode>("time.mode", &C::mode,
                       {{StepMode::Fixed, "fixed"}, {StepMode::Random, "random"}, {StepMode::Adaptive, "adaptive"}}),
    count_key("time.steps", &C::steps),
    int_key("controller.strategy", &C::strategy),
    real_key("controller.gamma", &C::gamma),
    real_key("controller.beta", &C::beta),
    real_key("controller.tau_min", &C::tau_min),
    real_key("controller.tau_max", &C::tau_max),
    real_key("controller.r_user", &C::r_user),
    bool_key("controller.enforce_theory_ratio", &C::enforce_theory),
    int_key("controller.max_halvings", &C::max_halvings),
    bool_key("controller.abort_is_result", &C::abort_is_result),
    real_key("scheme.eps_visc", &C::eps_visc),
    choice_key("scheme.visc_scaling", &C::visc_tau_squared, "tau", "tau2"),
    choice_key("scheme.solver", &C::implicit, "explicit", "implicit"),
    list_key("sweep.mx", &C::sweep_mx),
    list_key("sweep.steps", &C::sweep_steps),
    count_key("sweep.reference_mx", &C::reference_mx),
    count_key("sweep.reference_steps", &C::reference_steps),
    real_key("detect.threshold", &C::threshold),
    {"run.seed",
     [](C& c, const std::string& v) {
       const std::string s = trim(v);
       char* end = nullptr;
       const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
       if (s.empty() || s[0] == '-' || end != s.c_str() + s.size())
         throw ConfigError("key 'run.seed': expected a non-negative integer");
       c.seed = x;
     },
     [](const C& c) { return std::to_string(c.seed); }},
    {"output.dir", [](C& c, const std::string& v) { c.out_dir = trim(v); }, [](const C& c) { return c.out_dir; }},
    bool_key("output.plots", &C::plots),
  };
  return specs;
}

/// Undotted spellings accepted anywhere, mapped to canonical keys.
inline const std::map<std::string, std::string>& flat_aliases() {
  static const std::map<std::string, std::string> a = {
    {"preset", "preset"},
    {"m", "model.m"},
    {"theta", "model.theta"},
    {"epsilon", "model.epsilon"},
    {"eta", "model.eta"},
    {"c", "model.c"},
    {"nu", "model.nu"},
    {"mobility", "model.mobility"},
    {"mx", "grid.mx"},
    {"m_x", "grid.mx"},
    {"my", "grid.my"},
    {"m_y", "grid.my"},
    {"pad", "grid.pad"},
    {"t", "time.t"},
    {"t_end", "time.t"},
    {"tau", "time.tau"},
    {"dt", "time.tau"},
    {"tau_first", "time.tau_first"},
    {"mode", "time.mode"},
    {"steps", "time.steps"},
    {"n", "time.steps"},
    {"strategy", "controller.strategy"},
    {"gamma", "controller.gamma"},
    {"beta", "controller.beta"},
    {"tau_min", "controller.tau_min"},
    {"tau_max", "controller.tau_max"},
    {"r_user", "controller.r_user"},
    {"enforce_theory_ratio", "controller.enforce_theory_ratio"},
    {"max_halvings", "controller.max_halvings"},
    {"abort_is_result", "controller.abort_is_result"},
    {"eps_visc", "scheme.eps_visc"},
    {"epsilon_visc", "scheme.eps_visc"},
    {"visc_scaling", "scheme.visc_scaling"},
    {"solver", "scheme.solver"},
    {"reference_mx", "sweep.reference_mx"},
    {"reference_steps", "sweep.reference_steps"},
    {"threshold", "detect.threshold"},
    {"seed", "run.seed"},
    {"out_dir", "output.dir"},
    {"plots", "output.plots"},
  };
  return a;
}

inline const KeySpec* find_spec(const std::string& canonical) {
  for (const auto& k : key_specs())
    if (k.name == canonical) return &k;
  return nullptr;
}

/// Resolves a key written under \p section to its canonical name, or "" if unknown.
inline std::string resolve_key(const std::string& raw, const std::string& section) {
  const std::string k = normalize_key(trim(raw));
  if (k.find('.') != std::string::npos) {
    const std::string full = section.empty() ? k : section + "." + k;
    return find_spec(full) ? full : "";
  }
  if (!section.empty()) {
    if (find_spec(section + "." + k)) return section + "." + k;
    const auto it = flat_aliases().find(k);
    if (it != flat_aliases().end() && it->second.rfind(section + ".", 0) == 0) return it->second;
    return "";
  }
  const auto it = flat_aliases().find(k);
  return it == flat_aliases().end() ? "" : it->second;
}

} // namespace detail

/** \brief Preset-specific range checks; throws ConfigError naming the key. */
inline void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const Preset p = c.preset;
  need(c.T > 0.0, "time.T must be positive");
  need(c.tau > 0.0, "time.tau must be positive");
  need(c.mx >= 2, "grid.mx must be at least 2");
  need(c.steps >= 1, "time.steps must be at least 1");
  need(c.strategy == 1 || c.strategy == 2, "controller.strategy must be 1 or 2");
  need(c.gamma >= 0.0 && c.beta >= 0.0, "controller.gamma and controller.beta must be non-negative");
  need(c.tau_first > 0.0, "time.tau_first must be positive");
  try {
    c.controller().validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("controller: ") + e.what());
  }
  if (c.mode == StepMode::Adaptive)
    need(c.tau_first >= c.tau_min && c.tau_first <= c.tau_max,
         "time.tau_first must lie in [controller.tau_min, controller.tau_max]");
  need(c.eps_visc >= 0.0, "scheme.eps_visc must be non-negative");
  need(c.threshold > 0.0, "detect.threshold must be positive");
  switch (p) {
    case Preset::AcInterface:
      need(c.epsilon > 0.0, "model.epsilon must be positive");
      need(c.eta >= 0.0, "model.eta must be non-negative");
      break;
    case Preset::PmeConvergence:
    case Preset::Barenblatt2d:
    case Preset::PmeNonradial2d: need(c.m > 1.0, "model.m must exceed 1 for the porous medium equation"); break;
    case Preset::PmeWaitingTime:
      need(c.m > 1.0, "model.m must exceed 1 for the porous medium equation");
      need(c.theta >= 0.0 && c.theta <= 0.25, "model.theta must lie in [0, 0.25] for the waiting-time data");
      break;
    case Preset::KsBlowup1d: need(c.C > 0.0, "model.C must be positive"); break;
    case Preset::Ks2d:
      need(c.m >= 1.0, "model.m must be at least 1 for the Keller-Segel diffusion");
      need(c.nu > 0.0, "model.nu must be positive");
      need(c.C > 0.0, "model.C must be positive");
      break;
  }
  if (is_2d(p)) need(c.my >= 2, "grid.my must be at least 2");
  if (!c.sweep_mx.empty() || !c.sweep_steps.empty()) {
    need(c.sweep_mx.size() == c.sweep_steps.size(), "sweep.mx and sweep.steps must have equal length");
    need(std::is_sorted(c.sweep_mx.begin(), c.sweep_mx.end()), "sweep.mx must be ascending");
    for (std::size_t i = 0; i < c.sweep_mx.size(); ++i) {
      need(c.sweep_mx[i] >= 2 && c.sweep_steps[i] >= 1, "sweep entries must be positive");
      need(c.reference_mx > 0 && c.reference_mx % c.sweep_mx[i] == 0,
           "sweep.reference_mx must be a multiple of every sweep.mx");
    }
    need(c.reference_steps >= 1, "sweep.reference_steps must be positive");
  }
}

/** \brief Parses "key = value" lines with '#' comments, optional [section]
 * headers and dotted keys. Starts from the preset's defaults.
 */
inline ExperimentConfig parse_config(const std::string& text) {
  struct Entry {
    std::size_t line;
    std::string key, canonical, value;
  };
  std::vector<Entry> entries;
  std::istringstream in(text);
  std::string line, section;
  std::size_t ln = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(ln) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = detail::normalize_key(detail::trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& k : detail::key_specs()) known = known || k.name.rfind(section + ".", 0) == 0;
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find_first_of("=:");
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    std::string value = detail::trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    const std::string canonical = detail::resolve_key(key, section);
    if (canonical.empty()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(canonical).second) throw ConfigError(where + "duplicate key '" + canonical + "'");
    entries.push_back({ln, key, canonical, value});
  }
  const auto it = std::find_if(entries.begin(), entries.end(), [](const Entry& e) { return e.canonical == "preset"; });
  if (it == entries.end()) throw ConfigError("missing 'preset'");
  ExperimentConfig probe;
  try {
    detail::find_spec("preset")->set(probe, it->value);
  } catch (const ConfigError& e) {
    throw ConfigError("line " + std::to_string(it->line) + ": " + e.what());
  }
  ExperimentConfig c = preset_defaults(probe.preset);
  for (const auto& e : entries) {
    try {
      detail::find_spec(e.canonical)->set(c, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError("line " + std::to_string(e.line) + ": " + err.what());
    }
  }
  validate(c);
  return c;
}

/// Every key in canonical sectioned form; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out = "preset = " + preset_name(c.preset) + "\n";
  std::string section;
  for (const auto& k : detail::key_specs()) {
    if (k.name == "preset") continue;
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot), leaf = k.name.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += leaf + " = " + k.get(c) + "\n";
  }
  return out;
}

} // namespace lagflow

#endif
