#ifndef LAGFLOW_SOLVERS_NEWTON_HPP
#define LAGFLOW_SOLVERS_NEWTON_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace lagflow {

struct NewtonOptions {
  double atol = 1e-11;     ///< absolute bound on the max residual
  double rtol = 1e-13;     ///< bound relative to the residual term scale
  std::size_t max_iter = 60;
  double boundary_fraction = 0.1;  ///< cells keep at least this share of their current size
};

struct NewtonReport {
  std::size_t iterations = 0;
  double residual = 0.0;
  bool fallback_used = false;
};

inline std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

/** \brief Largest step in [0, 1] keeping every gap g + a*dg above fraction * g. */
inline double fraction_to_boundary(const std::vector<double>& gap, const std::vector<double>& dgap,
                                   double fraction) {
  double a = 1.0;
  for (std::size_t k = 0; k < gap.size(); ++k)
    if (dgap[k] < 0.0) a = std::min(a, (1.0 - fraction) * gap[k] / -dgap[k]);
  return a;
}

} // namespace lagflow

#endif
