#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lagflow/solvers/ac.hpp"

using namespace lagflow;

namespace {

AcProblem parabola(std::size_t M, Mobility::Kind kind = Mobility::Kind::Degenerate, double eta = 0.0) {
  Mobility mob;
  mob.kind = kind;
  return AcProblem::make(Grid1D(-1.0, 1.0, M), 0.01, [](double X) { return 1.0 - X * X; },
                         [](double X) { return -2.0 * X; }, mob, eta);
}

Vec wiggle(const Grid1D& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-amp, amp);
  Vec x = g.node_coords();
  for (std::size_t j = 1; j < g.cells(); ++j) x[j] += U(rng) * g.h();
  return x;
}

// Literal midpoint form of the fully discrete equation, left minus right,
// then tested against the nodal hat functions.
Vec transcribed_residual(const AcProblem& P, const Vec& x2, const Vec& x1, const Vec& x0, double tau,
                         double r, bool averaged) {
  const double h = P.grid.h(), eps = P.epsilon;
  const std::size_t M = P.grid.cells();
  auto D = [&](const Vec& x, std::size_t m) { return (x[m + 1] - x[m]) / h; };
  auto mid = [&](const Vec& x, std::size_t m) { return 0.5 * (x[m] + x[m + 1]); };
  auto d = [&](const Vec& x, std::size_t j) {
    if (j == 0) return (mid(x, 0) - x[0]) / (0.5 * h);
    if (j == M) return (x[M] - mid(x, M - 1)) / (0.5 * h);
    return (mid(x, j) - mid(x, j - 1)) / h;
  };
  auto F = [](double s) { return 0.25 * (s * s - 1.0) * (s * s - 1.0); };
  Vec R(M);
  for (std::size_t m = 0; m < M; ++m) {
    const double k = P.drho0_mid[m] * P.drho0_mid[m] / P.mobility(P.rho0_mid[m]);
    double lhs = (2 * r + 1) * k / (2 * tau * (r + 1)) * (1 / D(x2, m) + 1 / D(x1, m)) * (mid(x2, m) - mid(x1, m));
    lhs -= P.eta * tau / h *
           ((std::log(d(x2, m + 1)) - std::log(d(x1, m + 1))) - (std::log(d(x2, m)) - std::log(d(x1, m))));
    if (r > 0) {
      const double inner = (1 + 1 / (2 * r)) / std::sqrt(D(x1, m)) - 1 / (2 * r) / std::sqrt(D(x2, m));
      const double c = 1 / std::sqrt(D(x0, m)), b = 1 / std::sqrt(D(x1, m));
      lhs -= r * r * k / (2 * tau * (r + 1)) * inner * (averaged ? c + b : c - b) * (mid(x1, m) - mid(x0, m));
    }
    auto sq = [&](std::size_t j) {
      const double v = P.drho0_node[j] / d(x2, j);
      return v * v;
    };
    const double rhs = -0.5 * eps * eps * (sq(m + 1) - sq(m)) / h + (F(P.rho0_node[m + 1]) - F(P.rho0_node[m])) / h;
    R[m] = lhs - rhs;
  }
  Vec N(M - 1);
  for (std::size_t j = 1; j < M; ++j) N[j - 1] = 0.5 * h * (R[j - 1] + R[j]);
  return N;
}

} // namespace

TEST(AcProblem, RejectsVanishingMobilityAndBadParameters) {
  Mobility deg;
  deg.kind = Mobility::Kind::Degenerate;
  // odd cell count puts a midpoint at X = 0 where rho0 = 1
  EXPECT_THROW(AcProblem::make(Grid1D(-1, 1, 5), 0.01, [](double X) { return 1 - X * X; }, std::nullopt, deg),
               LayoutError);
  EXPECT_THROW(AcProblem::make(Grid1D(-1, 1, 4), 0.0, [](double) { return 0.5; }), LayoutError);
  EXPECT_THROW(AcProblem::make(Grid1D(-1, 1, 4), 0.1, [](double) { return 0.5; }, std::nullopt, {}, -1.0),
               LayoutError);
}

TEST(AcProblem, FiniteDifferenceDerivativeFallback) {
  const auto a = AcProblem::make(Grid1D(-1, 1, 40), 0.01, [](double X) { return 1 - X * X; });
  const auto b = parabola(40, Mobility::Kind::Constant);
  for (std::size_t m = 0; m < 40; ++m) EXPECT_NEAR(a.drho0_mid[m], b.drho0_mid[m], 1e-12);
  for (std::size_t j = 1; j < 40; ++j) EXPECT_NEAR(a.drho0_node[j], b.drho0_node[j], 1e-12);
}

TEST(AcResidual, ConstantDensityAtRestVanishes) {
  const auto P = AcProblem::make(Grid1D(-1, 1, 16), 0.01, [](double) { return 0.3; });
  auto tr = Trajectory1D::identity(P.grid);
  tr.tau_prev = 0.01;
  for (double v : ac_residual(tr.curr, tr, 0.01, P)) EXPECT_EQ(v, 0.0);
  const auto t1 = ac_first_step(Trajectory1D::identity(P.grid), 0.01, P);
  const auto t2 = ac_step(t1, 0.02, P);
  for (std::size_t j = 0; j <= 16; ++j) EXPECT_NEAR(t2.curr[j], P.grid.node(j), 1e-15);
}

TEST(AcResidual, AtRestEqualsEnergyGradient) {
  std::mt19937_64 rng(4);
  const auto P = parabola(12, Mobility::Kind::Constant);
  for (int trial = 0; trial < 20; ++trial) {
    auto tr = Trajectory1D::identity(P.grid);
    tr.curr = tr.prev = wiggle(P.grid, rng, 0.3);
    tr.tau_prev = 0.01;
    const Vec N = ac_residual(tr.curr, tr, 0.013, P);
    Vec x = tr.curr;
    const double e = 1e-6 * P.grid.h();
    for (std::size_t j = 1; j < 12; ++j) {
      const double x0 = x[j];
      x[j] = x0 + e;
      const double ep = ac_discrete_energy(x, P);
      x[j] = x0 - e;
      const double em = ac_discrete_energy(x, P);
      x[j] = x0;
      const double fd = (ep - em) / (2 * e);
      EXPECT_NEAR(N[j - 1], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "trial " << trial << " node " << j;
    }
  }
}

TEST(AcResidual, MatchesTranscriptionOnFourCells) {
  std::mt19937_64 rng(8);
  for (AcHistory hist : {AcHistory::Averaged, AcHistory::Difference})
    for (double eta : {0.0, 0.3}) {
      auto P = parabola(4, Mobility::Kind::Degenerate, eta);
      P.history = hist;
      const Vec x0 = wiggle(P.grid, rng, 0.2), x1 = wiggle(P.grid, rng, 0.2), x2 = wiggle(P.grid, rng, 0.2);
      Trajectory1D tr = Trajectory1D::identity(P.grid);
      tr.prev = x0;
      tr.curr = x1;
      tr.tau_prev = 0.02;
      const double tau = 0.031, r = tau / 0.02;
      const Vec got = ac_residual(x2, tr, tau, P);
      const Vec want = transcribed_residual(P, x2, x1, x0, tau, r, hist == AcHistory::Averaged);
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got[j], want[j], 1e-13 * std::max(1.0, std::abs(want[j])));
    }
}

TEST(AcJacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  auto P = parabola(10, Mobility::Kind::Constant, 0.2);
  Trajectory1D tr = Trajectory1D::identity(P.grid);
  tr.prev = wiggle(P.grid, rng, 0.2);
  tr.curr = wiggle(P.grid, rng, 0.2);
  tr.tau_prev = 0.01;
  detail::AcSystem sys(P, tr, 0.012, 1.2);
  Vec x = wiggle(P.grid, rng, 0.2);
  BandedMatrix J = sys.jacobian(x);
  const double e = 1e-7;
  for (std::size_t k = 1; k < 10; ++k) {
    Vec xp = x, xm = x;
    xp[k] += e;
    xm[k] -= e;
    const Vec Np = sys.residual(xp), Nm = sys.residual(xm);
    for (std::size_t i = 0; i < 9; ++i) {
      const double fd = (Np[i] - Nm[i]) / (2 * e);
      EXPECT_NEAR(J.get(i, k - 1), fd, 1e-5 * std::max(1.0, std::abs(fd))) << i << "," << k;
    }
  }
}

TEST(AcFirstStep, DisplacementScalesLinearlyInTau) {
  const auto P = parabola(32);
  double prev = 0.0;
  for (double tau : {4e-3, 2e-3, 1e-3, 5e-4}) {
    const auto t = ac_first_step(Trajectory1D::identity(P.grid), tau, P);
    double d = 0.0;
    for (std::size_t j = 0; j <= 32; ++j) d = std::max(d, std::abs(t.curr[j] - P.grid.node(j)));
    for (double w : forward_diff(t.curr, P.grid)) EXPECT_GT(w, 0.0);
    if (prev > 0.0) {
      EXPECT_NEAR(prev / d, 2.0, 0.05);
    }
    prev = d;
  }
}

TEST(AcStep, ConvergedResidualIsBelowTolerance) {
  const auto P = parabola(32, Mobility::Kind::Constant);
  auto tr = ac_first_step(Trajectory1D::identity(P.grid), 1e-3, P);
  NewtonReport rep;
  const auto t2 = ac_step(tr, 1.3e-3, P, {}, &rep);
  double sc = 0.0;
  detail::AcSystem(P, tr, 1.3e-3, 1.3).residual(t2.curr, &sc);
  EXPECT_LE(max_abs(ac_residual(t2.curr, tr, 1.3e-3, P)), std::max(1e-11, 1e-13 * sc));
  EXPECT_GE(rep.iterations, 1u);
}

TEST(AcStep, MaximumBoundPrincipleIsExact) {
  const auto P = parabola(40, Mobility::Kind::Constant);
  auto tr = ac_first_step(Trajectory1D::identity(P.grid), 1e-2, P);
  for (int n = 0; n < 50; ++n) {
    tr = ac_step(tr, 1e-2, P);
    const auto rho = ac_recover_density(tr, P);
    EXPECT_EQ(rho.values, P.rho0_mid);
    for (double w : forward_diff(tr.curr, P.grid)) ASSERT_GT(w, 0.0);
  }
}

TEST(AcModifiedEnergy, ReducesToEnergyWithoutMotion) {
  const auto P = parabola(16);
  auto tr = Trajectory1D::identity(P.grid);
  tr.tau_prev = 0.1;
  EXPECT_DOUBLE_EQ(ac_modified_energy(tr, P), ac_discrete_energy(tr.curr, P));
}

TEST(AcModifiedEnergy, NonIncreasingUnderRandomRatios) {
  for (auto kind : {Mobility::Kind::Constant, Mobility::Kind::Degenerate}) {
    const auto P = parabola(64, kind);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.5);
    double tau = 1e-3;
    auto tr = ac_first_step(Trajectory1D::identity(P.grid), tau, P);
    double prev = ac_modified_energy(tr, P);
    for (int n = 0; n < 200; ++n) {
      double r;
      do {
        r = U(rng);
      } while (r <= 0.0 || tau * r < 1e-4 || tau * r > 1e-2);
      tau *= r;
      tr = ac_step(tr, tau, P);
      const double v = ac_modified_energy(tr, P);
      ASSERT_LE(v, prev + 1e-10) << "step " << n;
      prev = v;
    }
  }
}

TEST(AcStabilityMargin, BoundIsSharp) {
  EXPECT_NEAR(ac_stability_margin(1.5, 1.5), 0.0, 1e-12);
  EXPECT_NEAR((2 * 1.5 + 1) * (3 - 1.5) / (8 * 2.5), 0.3, 1e-15);
  EXPECT_GT(ac_stability_margin(1.0), 0.0);
  EXPECT_LT(ac_stability_margin(2.0), 0.0);
}
