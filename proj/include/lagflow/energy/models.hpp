#ifndef LAGFLOW_ENERGY_MODELS_HPP
#define LAGFLOW_ENERGY_MODELS_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include "lagflow/core/errors.hpp"

namespace lagflow {

/// U(s) = s^m / (m - 1), m > 1.
struct PorousMedium {
  double m = 2.0;
};

/// Scalar external potential with its first two derivatives.
struct Potential {
  std::function<double(double)> value, slope, curvature;

  static Potential quadratic(double k = 1.0) {
    return {[k](double x) { return 0.5 * k * x * x; }, [k](double x) { return k * x; },
            [k](double) { return k; }};
  }
};

/// U(s) = s log s plus confinement V.
struct FokkerPlanck {
  Potential V = Potential::quadratic();
};

/** \brief Entropy plus logarithmic aggregation in 1D.
 *
 * E = int rho log rho + chi * int int log|x - y| rho(x) rho(y), chi = 1/(2 pi) by default.
 */
struct KellerSegel1D {
  double chi = 0.5 / std::numbers::pi;
};

/** \brief Diffusion nu U_m plus interaction (1/2) int int W rho rho, W = log|x| / (2 pi).
 *
 * m = 1 selects the entropy nu s log s.
 */
struct KellerSegel2D {
  double m = 1.0;
  double nu = 1.0;
};

/// Double-well F(rho) = (rho^2 - 1)^2 / 4 with interface parameter epsilon.
struct GinzburgLandau {
  double epsilon = 0.01;
};

using EnergyModel = std::variant<PorousMedium, FokkerPlanck, KellerSegel1D, KellerSegel2D, GinzburgLandau>;

inline void validate(const EnergyModel& model) {
  std::visit(
    [](const auto& mdl) {
      using T = std::decay_t<decltype(mdl)>;
      if constexpr (std::is_same_v<T, PorousMedium>) {
        if (!(mdl.m > 1.0)) throw LayoutError("PorousMedium: exponent m must exceed 1");
      } else if constexpr (std::is_same_v<T, KellerSegel2D>) {
        if (!(mdl.m >= 1.0)) throw LayoutError("KellerSegel2D: exponent m must be >= 1");
        if (!(mdl.nu > 0.0)) throw LayoutError("KellerSegel2D: nu must be positive");
      } else if constexpr (std::is_same_v<T, GinzburgLandau>) {
        if (!(mdl.epsilon > 0.0)) throw LayoutError("GinzburgLandau: epsilon must be positive");
      } else if constexpr (std::is_same_v<T, FokkerPlanck>) {
        if (!mdl.V.value || !mdl.V.slope || !mdl.V.curvature)
          throw LayoutError("FokkerPlanck: potential is incomplete");
      }
    },
    model);
}

inline double xlogx(double s) { return s > 0.0 ? s * std::log(s) : 0.0; }

/// Local energy density U(s) of the model (interaction and potential parts excluded).
inline double energy_density(const EnergyModel& model, double s) {
  return std::visit(
    [s](const auto& mdl) -> double {
      using T = std::decay_t<decltype(mdl)>;
      if (!std::is_same_v<T, GinzburgLandau> && !(s >= 0.0))
        throw LayoutError("energy_density: density must be non-negative");
      if constexpr (std::is_same_v<T, PorousMedium>) {
        if (!(mdl.m > 1.0)) throw LayoutError("PorousMedium: exponent m must exceed 1");
        return std::pow(s, mdl.m) / (mdl.m - 1.0);
      } else if constexpr (std::is_same_v<T, KellerSegel2D>) {
        if (mdl.m == 1.0) return mdl.nu * xlogx(s);
        return mdl.nu * std::pow(s, mdl.m) / (mdl.m - 1.0);
      } else if constexpr (std::is_same_v<T, GinzburgLandau>) {
        const double q = s * s - 1.0;
        return 0.25 * q * q;
      } else {
        return xlogx(s);
      }
    },
    model);
}

/// phi(w) = U(rho0 / w) w and its first two w-derivatives.
struct CellEnergy {
  double f = 0.0, df = 0.0, d2f = 0.0;
};

inline CellEnergy power_cell(double rho0, double w, double m, double scale) {
  if (rho0 <= 0.0) return {};
  const double p = scale * std::pow(rho0 / w, m);  // scale * rho^m
  return {p * w / (m - 1.0), -p, m * p / w};
}

inline CellEnergy entropy_cell(double rho0, double w, double scale) {
  if (rho0 <= 0.0) return {};
  return {scale * rho0 * std::log(rho0 / w), -scale * rho0 / w, scale * rho0 / (w * w)};
}

/** \brief Local cell energy for the Wasserstein models; w is the cell Jacobian. */
inline CellEnergy cell_energy(const EnergyModel& model, double rho0, double w) {
  return std::visit(
    [rho0, w](const auto& mdl) -> CellEnergy {
      using T = std::decay_t<decltype(mdl)>;
      if constexpr (std::is_same_v<T, PorousMedium>) {
        return power_cell(rho0, w, mdl.m, 1.0);
      } else if constexpr (std::is_same_v<T, KellerSegel2D>) {
        if (mdl.m == 1.0) return entropy_cell(rho0, w, mdl.nu);
        return power_cell(rho0, w, mdl.m, mdl.nu);
      } else if constexpr (std::is_same_v<T, GinzburgLandau>) {
        throw LayoutError("cell_energy: Ginzburg-Landau energy is not a Wasserstein cell energy");
      } else {
        return entropy_cell(rho0, w, 1.0);
      }
    },
    model);
}

inline std::string model_name(const EnergyModel& model) {
  static const char* names[] = {"porous-medium", "fokker-planck", "keller-segel-1d",
                                "keller-segel-2d", "ginzburg-landau"};
  return names[model.index()];
}

/// Allen-Cahn mobility M(rho): constant 1 or degenerate 1 - rho^2.
struct Mobility {
  enum class Kind { Constant, Degenerate } kind = Kind::Constant;

  double operator()(double rho) const {
    return kind == Kind::Constant ? 1.0 : 1.0 - rho * rho;
  }
};

} // namespace lagflow

#endif
