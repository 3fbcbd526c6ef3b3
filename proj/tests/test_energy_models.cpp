#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lagflow/energy/energy1d.hpp"
#include "lagflow/energy/energy2d.hpp"
#include "lagflow/core/trajectory.hpp"

using namespace lagflow;

namespace {

Vec perturbed_nodes(const Grid1D& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-amp, amp);
  Vec x = g.node_coords();
  for (std::size_t j = 1; j < g.cells(); ++j) x[j] += U(rng) * g.h();
  return x;
}

Vec midpoint_profile(const Grid1D& g, double floor) {
  Vec r(g.cells());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = floor + std::exp(-g.midpoint(j) * g.midpoint(j));
  return r;
}

// Central finite difference of E with respect to every interior node.
template <class F>
Vec fd_gradient(F&& E, Vec x, double eps) {
  Vec g(x.size(), 0.0);
  for (std::size_t j = 1; j + 1 < x.size(); ++j) {
    const double x0 = x[j];
    x[j] = x0 + eps;
    const double ep = E(x);
    x[j] = x0 - eps;
    const double em = E(x);
    x[j] = x0;
    g[j] = (ep - em) / (2.0 * eps);
  }
  return g;
}

double rel_err(const Vec& a, const Vec& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j + 1 < a.size(); ++j) {
    num = std::max(num, std::abs(a[j] - b[j]));
    den = std::max(den, std::abs(b[j]));
  }
  return num / std::max(den, 1e-300);
}

} // namespace

TEST(EnergyDensity, ClosedForms) {
  EXPECT_DOUBLE_EQ(energy_density(PorousMedium{2.0}, 3.0), 9.0);
  EXPECT_NEAR(energy_density(PorousMedium{2.5}, 1.0), 1.0 / 1.5, 1e-15);
  EXPECT_DOUBLE_EQ(energy_density(KellerSegel1D{}, 0.0), 0.0);
  EXPECT_NEAR(energy_density(FokkerPlanck{}, std::exp(1.0)), std::exp(1.0), 1e-14);
  EXPECT_DOUBLE_EQ(energy_density(GinzburgLandau{}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(energy_density(GinzburgLandau{}, 0.0), 0.25);
  EXPECT_THROW(energy_density(PorousMedium{1.0}, 1.0), LayoutError);
  EXPECT_THROW(energy_density(PorousMedium{2.0}, -0.1), LayoutError);
}

TEST(Energy1D, PorousMediumAtRestHasZeroForce) {
  Grid1D g(0.0, 1.0, 16);
  Vec rho0(16, 1.0);
  const Vec grad = energy_gradient_1d(PorousMedium{2.0}, g.node_coords(), rho0, g);
  for (std::size_t j = 1; j < 16; ++j) EXPECT_NEAR(grad[j], 0.0, 1e-14);
  EXPECT_NEAR(discrete_energy_1d(PorousMedium{2.0}, g.node_coords(), rho0, g), 1.0, 1e-14);
}

TEST(Energy1D, PorousMediumGradientClosedForm) {
  std::mt19937_64 rng(5);
  Grid1D g(-1.0, 1.0, 24);
  const double m = 2.5, h = g.h();
  const Vec rho0 = midpoint_profile(g, 0.05);
  const Vec x = perturbed_nodes(g, rng, 0.3);
  const Vec grad = energy_gradient_1d(PorousMedium{m}, x, rho0, g);
  for (std::size_t j = 1; j < 24; ++j) {
    const double want = std::pow(h, m) * (std::pow(rho0[j], m) / std::pow(x[j + 1] - x[j], m) -
                                          std::pow(rho0[j - 1], m) / std::pow(x[j] - x[j - 1], m));
    EXPECT_NEAR(grad[j], want, 1e-12 * std::max(1.0, std::abs(want)));
  }
}

class GradientOracle1D : public ::testing::TestWithParam<int> {};

TEST_P(GradientOracle1D, MatchesFiniteDifferences) {
  const int which = GetParam();
  std::mt19937_64 rng(100 + which);
  EnergyModel model;
  switch (which) {
    case 0: model = PorousMedium{2.0}; break;
    case 1: model = PorousMedium{3.0}; break;
    case 2: model = FokkerPlanck{}; break;
    default: model = KellerSegel1D{}; break;
  }
  for (int trial = 0; trial < 20; ++trial) {
    Grid1D g(-2.0, 2.0, 12 + trial % 5);
    const Vec rho0 = midpoint_profile(g, 0.1);
    const Vec x = perturbed_nodes(g, rng, 0.35);
    const Vec partner = perturbed_nodes(g, rng, 0.2);
    const Vec* p = which == 3 ? &partner : nullptr;
    const auto E = [&](const Vec& z) { return discrete_energy_1d(model, z, rho0, g, p); };
    const Vec fd = fd_gradient(E, x, 1e-6 * g.h());
    const Vec an = energy_gradient_1d(model, x, rho0, g, p);
    EXPECT_LT(rel_err(an, fd), 1e-6) << model_name(model) << " trial " << trial;

    // Hessian columns against differences of the analytic gradient
    const Tridiag H = energy_hessian_1d(model, x, rho0, g, p);
    Vec xp = x;
    const std::size_t j = 1 + trial % (g.cells() - 1);
    const double eps = 1e-6 * g.h();
    xp[j] += eps;
    const Vec gp = energy_gradient_1d(model, xp, rho0, g, p);
    const double hjj = (gp[j] - an[j]) / eps, hj1 = (gp[j + 1] - an[j + 1]) / eps;
    EXPECT_NEAR(H.di[j], hjj, 1e-4 * std::abs(hjj) + 1e-8);
    EXPECT_NEAR(H.lo[j + 1], hj1, 1e-4 * std::abs(H.di[j]) + 1e-8);
  }
}

INSTANTIATE_TEST_SUITE_P(Models, GradientOracle1D, ::testing::Values(0, 1, 2, 3));

TEST(Energy1D, ConvexModelsHavePositiveHessian) {
  std::mt19937_64 rng(9);
  Grid1D g(-1.0, 1.0, 20);
  const Vec rho0 = midpoint_profile(g, 0.1);
  const Vec x = perturbed_nodes(g, rng, 0.3);
  for (EnergyModel m : {EnergyModel{PorousMedium{2.0}}, EnergyModel{FokkerPlanck{}}}) {
    Tridiag H = energy_hessian_1d(m, x, rho0, g);
    Vec rhs(g.nodes(), 1.0);
    EXPECT_TRUE(solve_spd_interior(H, rhs)) << model_name(m);
  }
}

TEST(Energy1D, InteractionPairIsSymmetricAndSumsToEnergy) {
  std::mt19937_64 rng(21);
  Grid1D g(-3.0, 3.0, 14);
  const Vec rho0 = midpoint_profile(g, 0.01);
  const Vec x = perturbed_nodes(g, rng, 0.3);
  double pair = 0.0;
  for (std::size_t i = 0; i < 14; ++i)
    for (std::size_t j = 0; j < 14; ++j) {
      EXPECT_NEAR(interaction_pair_1d(x, i, j), interaction_pair_1d(x, j, i), 1e-15);
      pair += rho0[i] * rho0[j] * g.h() * g.h() * interaction_pair_1d(x, i, j);
    }
  double entropy = 0.0;
  for (std::size_t j = 0; j < 14; ++j) {
    const double w = (x[j + 1] - x[j]) / g.h();
    entropy += g.h() * rho0[j] * std::log(rho0[j] / w);
  }
  const KellerSegel1D ks;
  EXPECT_NEAR(discrete_energy_1d(ks, x, rho0, g), entropy + ks.chi * pair, 1e-12);
}

TEST(Energy2D, IdentityMatchesReferenceEnergy) {
  Grid2D g(-1.0, 1.0, 8, -1.0, 1.0, 8);
  auto t = Trajectory2D::identity(g);
  Vec rho0(g.size(), 0.5);
  const double e = discrete_energy_2d(PorousMedium{2.0}, t.curr_x, t.curr_y, rho0, g);
  EXPECT_NEAR(e, 0.25 * 49 * g.hx() * g.hy(), 1e-14);
  const auto [gx, gy] = energy_gradient_2d(PorousMedium{2.0}, t.curr_x, t.curr_y, rho0, g);
  // uniform density: only nodes next to the pinned frame feel a force
  EXPECT_NEAR(gx[g.idx(4, 4)], 0.0, 1e-13);
  EXPECT_NEAR(gy[g.idx(4, 4)], 0.0, 1e-13);
}

class GradientOracle2D : public ::testing::TestWithParam<int> {};

TEST_P(GradientOracle2D, MatchesFiniteDifferences) {
  const int which = GetParam();
  std::mt19937_64 rng(300 + which);
  std::uniform_real_distribution<double> U(-0.2, 0.2);
  EnergyModel model = which == 0 ? EnergyModel{PorousMedium{2.0}}
                    : which == 1 ? EnergyModel{PorousMedium{3.0}}
                    : which == 2 ? EnergyModel{KellerSegel2D{1.0, 1.0}}
                                 : EnergyModel{KellerSegel2D{2.0, 0.5}};
  for (int trial = 0; trial < 20; ++trial) {
    Grid2D g(-1.0, 1.0, 5 + trial % 3, -1.0, 1.0, 6);
    auto t = Trajectory2D::identity(g);
    Vec rho0(g.size());
    for (std::size_t k = 0; k < g.size(); ++k)
      rho0[k] = 0.05 + std::exp(-2.0 * (t.curr_x[k] * t.curr_x[k] + t.curr_y[k] * t.curr_y[k]));
    for (std::size_t i = 1; i < g.my(); ++i)
      for (std::size_t j = 1; j < g.mx(); ++j) {
        t.curr_x[g.idx(i, j)] += U(rng) * g.hx();
        t.curr_y[g.idx(i, j)] += U(rng) * g.hy();
      }
    const double area = g.hx() * g.hy();
    auto [gx, gy] = energy_gradient_2d(model, t.curr_x, t.curr_y, rho0, g);
    double num = 0.0, den = 0.0;
    const double eps = 1e-6 * g.hx();
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
          const double an = comp == 0 ? gx[k] : gy[k];
          num = std::max(num, std::abs(fd - an));
          den = std::max(den, std::abs(fd));
        }
    EXPECT_LT(num / den, 1e-6) << model_name(model) << " trial " << trial;
  }
}

INSTANTIATE_TEST_SUITE_P(Models, GradientOracle2D, ::testing::Values(0, 1, 2, 3));

TEST(Energy2D, FoldedMeshIsRejected) {
  Grid2D g(0.0, 1.0, 4, 0.0, 1.0, 4);
  auto t = Trajectory2D::identity(g);
  Vec rho0(g.size(), 1.0);
  std::swap(t.curr_x[g.idx(2, 1)], t.curr_x[g.idx(2, 3)]);
  EXPECT_THROW(discrete_energy_2d(PorousMedium{2.0}, t.curr_x, t.curr_y, rho0, g), AdmissibilityError);
}
