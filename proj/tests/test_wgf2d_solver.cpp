#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lagflow/diag/diagnostics.hpp"
#include "lagflow/solvers/wgf2d.hpp"

using namespace lagflow;

namespace {

Vec bump(const Grid2D& g, double base = 0.2) {
  Vec r0(g.size());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const double X = g.X(j), Y = g.Y(i);
      r0[g.idx(i, j)] = base + std::exp(-2.0 * (X * X + Y * Y));
    }
  return r0;
}

Vec skew_bump(const Grid2D& g) {
  Vec r0(g.size());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const double X = g.X(j), Y = g.Y(i);
      r0[g.idx(i, j)] = 0.3 + std::exp(-3.0 * ((X - 0.3) * (X - 0.3) + 2.0 * (Y + 0.2) * (Y + 0.2)));
    }
  return r0;
}

void perturb(Trajectory2D& tr, std::mt19937_64& rng, double amp) {
  const Grid2D& g = tr.grid;
  std::uniform_real_distribution<double> U(-amp, amp);
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      tr.curr_x[g.idx(i, j)] += U(rng) * g.hx();
      tr.curr_y[g.idx(i, j)] += U(rng) * g.hy();
    }
}

double max_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

} // namespace

TEST(D2Operator, KnownCases) {
  const Vec a{1.5, -2.0, 3.0};
  for (double v : d2_operator(a, a, a, 0.1, 0.7)) EXPECT_NEAR(v, 0.0, 1e-14);
  // a(t) = a0 + b t on t_{n-1} = 0, t_n = tau / r, t_{n+1} = tau / r + tau
  for (double r : {1.0, 0.4, 2.5}) {
    const double tau = 0.03, b = 1.7, a0 = 0.2;
    const Vec am1{a0}, an{a0 + b * tau / r}, ap{a0 + b * (tau / r + tau)};
    EXPECT_NEAR(d2_operator(ap, an, am1, tau, r)[0], b, 1e-12) << r;
  }
  const Vec x1{2.0}, x0{1.0}, xm{0.5};
  EXPECT_NEAR(d2_operator(x1, x0, xm, 0.2, 1.0)[0], (3 * 2.0 - 4 * 1.0 + 0.5) / (2 * 0.2), 1e-14);
  EXPECT_THROW(d2_operator(x1, Vec{1.0, 2.0}, xm, 0.2, 1.0), LayoutError);
}

TEST(RecoverDensity2d, IdentityAndLinearMaps) {
  const Grid2D g(-1.0, 1.0, 8, -1.0, 1.0, 6);
  const Wgf2dProblem P(g, PorousMedium{2.0}, skew_bump(g));
  auto tr = Trajectory2D::identity(g);
  const auto id = recover_density_2d(tr, P);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(id.values[k], P.rho0[k], 1e-15);
  for (std::size_t k = 0; k < g.size(); ++k) {
    tr.curr_x[k] *= 2.0;
    tr.curr_y[k] *= 3.0;
  }
  const auto f = recover_density_2d(tr, P);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) {
      const std::size_t k = g.idx(i, j);
      EXPECT_NEAR(f.values[k], g.boundary(i, j) ? P.rho0[k] : P.rho0[k] / 6.0, 1e-14);
    }
  EXPECT_NEAR(total_mass(f), P.mass(), 1e-13 * P.mass());
  std::swap(tr.curr_x[g.idx(2, 2)], tr.curr_x[g.idx(2, 4)]);
  EXPECT_THROW(recover_density_2d(tr, P), AdmissibilityError);
}

TEST(Wgf2dExplicit, ZeroGradientModelLeavesTrajectoryUnchanged) {
  const Grid2D g(0.0, 1.0, 6, 0.0, 1.0, 6);
  const Wgf2dProblem P(g, PorousMedium{2.0}, Vec(g.size(), 0.0), 1.0, ViscosityScaling::Tau);
  const auto tr = Trajectory2D::identity(g);
  const auto a = wgf2d_step_explicit(tr, 0.05, P);
  const auto b = wgf2d_step_explicit(a, 0.05, P);
  EXPECT_EQ(b.curr_x, tr.curr_x);
  EXPECT_EQ(b.curr_y, tr.curr_y);
  const auto c = wgf2d_step_implicit(a, 0.05, P);
  EXPECT_EQ(c.curr_x, tr.curr_x);
  EXPECT_EQ(c.curr_y, tr.curr_y);
}

TEST(Wgf2dExplicit, SatisfiesLinearSystem) {
  std::mt19937_64 rng(3);
  const Grid2D g(-1.0, 1.0, 10, -1.0, 1.0, 8);
  const Wgf2dProblem P(g, PorousMedium{2.0}, skew_bump(g), 0.7, ViscosityScaling::Tau);
  auto tr = Trajectory2D::identity(g);
  perturb(tr, rng, 0.05);
  tr.tau_prev = 0.02;
  const double tau = 0.03, r = tau / 0.02;
  const auto next = wgf2d_step_explicit(tr, tau, P);
  Vec ex(g.size()), ey(g.size()), dx(g.size()), dy(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    ex[k] = (1 + r) * tr.curr_x[k] - r * tr.prev_x[k];
    ey[k] = (1 + r) * tr.curr_y[k] - r * tr.prev_y[k];
    dx[k] = next.curr_x[k] - tr.curr_x[k];
    dy[k] = next.curr_y[k] - tr.curr_y[k];
  }
  const auto [gx, gy] = energy_gradient_2d(P.model, ex, ey, P.rho0, g);
  const Vec D2x = d2_operator(next.curr_x, tr.curr_x, tr.prev_x, tau, r);
  const Vec D2y = d2_operator(next.curr_y, tr.curr_y, tr.prev_y, tau, r);
  const Vec Lx = laplacian_2d(dx, g), Ly = laplacian_2d(dy, g);
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) {
      const std::size_t k = g.idx(i, j);
      EXPECT_NEAR(P.rho0[k] * D2x[k] - 0.7 * tau * Lx[k] + gx[k], 0.0, 1e-9);
      EXPECT_NEAR(P.rho0[k] * D2y[k] - 0.7 * tau * Ly[k] + gy[k], 0.0, 1e-9);
    }
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < g.cols(); ++j)
      if (g.boundary(i, j)) {
        EXPECT_EQ(next.curr_x[g.idx(i, j)], g.X(j));
        EXPECT_EQ(next.curr_y[g.idx(i, j)], g.Y(i));
      }
}

TEST(Wgf2dExplicit, ConservesMassAndKeepsDeterminantPositive) {
  const Grid2D g(-1.5, 1.5, 24, -1.5, 1.5, 24);
  const Wgf2dProblem P(g, PorousMedium{2.0}, skew_bump(g), 0.5, ViscosityScaling::Tau);
  auto tr = Trajectory2D::identity(g);
  const double m0 = P.mass();
  for (int n = 0; n < 30; ++n) {
    tr = wgf2d_step_explicit(tr, 0.01, P);
    const auto rho = recover_density_2d(tr, P);
    EXPECT_NEAR(total_mass(rho), m0, 1e-12 * m0);
    EXPECT_GT(min_interior(jacobian_det_2d(tr.curr_x, tr.curr_y, g), g), 0.0);
  }
}

TEST(Wgf2dExplicit, RejectsFoldedExtrapolation) {
  const Grid2D g(0.0, 1.0, 6, 0.0, 1.0, 6);
  const Wgf2dProblem P(g, PorousMedium{2.0}, Vec(g.size(), 1.0), 0.1);
  auto tr = Trajectory2D::identity(g);
  tr.tau_prev = 0.01;
  // x^{n-1} shifted so that the extrapolation 2x^n - x^{n-1} folds at one node
  tr.prev_x[g.idx(3, 3)] += 0.3;
  EXPECT_THROW(wgf2d_step_explicit(tr, 0.01, P), AdmissibilityError);
  EXPECT_THROW(wgf2d_step_explicit(tr, 0.0, P), LayoutError);
  EXPECT_THROW(Wgf2dProblem(g, PorousMedium{2.0}, Vec(3, 1.0)), LayoutError);
  EXPECT_THROW(Wgf2dProblem(g, PorousMedium{2.0}, Vec(g.size(), 1.0), -1.0), LayoutError);
}

TEST(Wgf2dImplicit, GradientAndHessianMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (EnergyModel model : {EnergyModel{PorousMedium{2.0}}, EnergyModel{PorousMedium{3.0}},
                            EnergyModel{KellerSegel2D{1.0, 1.0}}}) {
    const Grid2D g(-1.0, 1.0, 6, -1.0, 1.0, 5);
    const Wgf2dProblem P(g, model, skew_bump(g), 0.4, ViscosityScaling::Tau);
    auto tr = Trajectory2D::identity(g);
    perturb(tr, rng, 0.05);
    tr.tau_prev = 0.05;
    detail::Wgf2dSystem sys(P, tr, 0.04, 0.8);
    Trajectory2D at = tr;
    perturb(at, rng, 0.05);
    Vec x = at.curr_x, y = at.curr_y;
    const auto [gx, gy] = sys.gradient(x, y);
    const auto H = Eigen::MatrixXd(sys.hessian(x, y));
    const bool ks = std::holds_alternative<KellerSegel2D>(model);
    const double e = 1e-6;
    for (std::size_t k : sys.interior()) {
      for (int comp = 0; comp < 2; ++comp) {
        Vec& v = comp == 0 ? x : y;
        const double v0 = v[k];
        v[k] = v0 + e;
        const double jp = sys.value(x, y);
        const auto gp = sys.gradient(x, y);
        v[k] = v0 - e;
        const double jm = sys.value(x, y);
        const auto gm = sys.gradient(x, y);
        v[k] = v0;
        const double fd = (jp - jm) / (2 * e);
        const double an = (comp == 0 ? gx : gy)[k];
        EXPECT_NEAR(an, fd, 1e-6 * std::max(1.0, std::abs(fd))) << model_name(model);
        if (ks) continue;
        const std::size_t col = 2 * sys.dof(k) + comp;
        for (std::size_t q : sys.interior())
          for (int c2 = 0; c2 < 2; ++c2) {
            const double hfd = ((c2 == 0 ? gp.first : gp.second)[q] - (c2 == 0 ? gm.first : gm.second)[q]) / (2 * e);
            EXPECT_NEAR(H(2 * sys.dof(q) + c2, col), hfd, 1e-5 * std::max(1.0, std::abs(hfd))) << model_name(model);
          }
      }
    }
  }
}

TEST(Wgf2dImplicit, MinimisesStepFunctional) {
  std::mt19937_64 rng(21);
  const Grid2D g(-1.0, 1.0, 12, -1.0, 1.0, 12);
  const Wgf2dProblem P(g, PorousMedium{2.0}, skew_bump(g), 0.5, ViscosityScaling::Tau);
  auto tr = Trajectory2D::identity(g);
  const double m0 = P.mass();
  for (int n = 0; n < 15; ++n) {
    const double tau = 0.02 * (1.0 + 0.2 * (n % 3));
    NewtonReport rep;
    const auto next = wgf2d_step_implicit(tr, tau, P, {}, &rep);
    EXPECT_LE(wgf2d_step_functional(next.curr_x, next.curr_y, tr, tau, P),
              wgf2d_step_functional(tr.curr_x, tr.curr_y, tr, tau, P));
    EXPECT_LE(wgf2d_residual(next.curr_x, next.curr_y, tr, tau, P), 1e-10);
    tr = next;
    EXPECT_NEAR(total_mass(recover_density_2d(tr, P)), m0, 1e-12 * m0);
  }
}

TEST(Wgf2dImplicit, KellerSegelConverges) {
  const Grid2D g(-2.0, 2.0, 12, -2.0, 2.0, 12);
  const Wgf2dProblem P(g, KellerSegel2D{1.0, 1.0}, bump(g, 0.05), 0.1);
  auto tr = Trajectory2D::identity(g);
  for (int n = 0; n < 5; ++n) tr = wgf2d_step_implicit(tr, 0.01, P);
  EXPECT_GT(min_interior(jacobian_det_2d(tr.curr_x, tr.curr_y, g), g), 0.0);
}

TEST(Wgf2dImplicit, AgreesWithExplicitToSecondOrder) {
  const Grid2D g(-1.0, 1.0, 6, -1.0, 1.0, 6);
  const Wgf2dProblem P(g, PorousMedium{2.0}, skew_bump(g), 0.0);
  std::vector<double> diffs;
  for (double tau : {4e-3, 2e-3, 1e-3, 5e-4}) {
    // history x^{n-1} = x^0, x^n after one step of the same size
    auto tr = wgf2d_step_implicit(Trajectory2D::identity(g), tau, P);
    const auto a = wgf2d_step_implicit(tr, tau, P), b = wgf2d_step_explicit(tr, tau, P);
    diffs.push_back(std::max(max_diff(a.curr_x, b.curr_x), max_diff(a.curr_y, b.curr_y)));
  }
  for (std::size_t k = 1; k < diffs.size(); ++k) {
    const double slope = std::log2(diffs[k - 1] / diffs[k]);
    EXPECT_GE(slope, 1.9) << k;
  }
}

TEST(Wgf2dSymmetry, FourFoldSymmetryPreserved) {
  const std::size_t M = 16;
  const Grid2D g(-1.0, 1.0, M, -1.0, 1.0, M);
  for (int scheme = 0; scheme < 2; ++scheme) {
    const Wgf2dProblem P(g, PorousMedium{2.0}, bump(g), 0.5, ViscosityScaling::Tau);
    auto tr = Trajectory2D::identity(g);
    for (int n = 0; n < 8; ++n) tr = scheme == 0 ? wgf2d_step_explicit(tr, 0.01, P) : wgf2d_step_implicit(tr, 0.01, P);
    const auto rho = recover_density_2d(tr, P);
    for (std::size_t i = 0; i <= M; ++i)
      for (std::size_t j = 0; j <= M; ++j) {
        const std::size_t k = g.idx(i, j);
        const std::size_t rot = g.idx(j, M - i);  // rotation by 90 degrees
        const std::size_t ref = g.idx(i, M - j);  // reflection X -> -X
        const std::size_t dia = g.idx(j, i);      // reflection across X = Y
        EXPECT_NEAR(tr.curr_x[ref], -tr.curr_x[k], 1e-10);
        EXPECT_NEAR(tr.curr_y[ref], tr.curr_y[k], 1e-10);
        EXPECT_NEAR(tr.curr_x[dia], tr.curr_y[k], 1e-10);
        EXPECT_NEAR(tr.curr_y[dia], tr.curr_x[k], 1e-10);
        EXPECT_NEAR(rho.values[rot], rho.values[k], 1e-10);
      }
  }
}

TEST(Wgf2dAugmentedEnergy, NonIncreasingForRatiosUpToFiveQuarters) {
  const Grid2D g(-1.5, 1.5, 16, -1.5, 1.5, 16);
  const Wgf2dProblem P(g, PorousMedium{2.0}, skew_bump(g), 0.5, ViscosityScaling::Tau);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.25);
  double tau = 1e-2;
  auto tr = wgf2d_step_implicit(Trajectory2D::identity(g), tau, P);
  double prev = wgf2d_augmented_energy(tr, P);
  for (int n = 0; n < 60; ++n) {
    double r;
    do {
      r = U(rng);
    } while (r <= 0.0 || tau * r < 1e-3 || tau * r > 5e-2);
    tau *= r;
    tr = wgf2d_step_implicit(tr, tau, P);
    const double v = wgf2d_augmented_energy(tr, P);
    ASSERT_LE(v, prev + 1e-9) << "step " << n;
    prev = v;
  }
  auto rest = Trajectory2D::identity(g);
  rest.tau_prev = 0.1;
  EXPECT_DOUBLE_EQ(wgf2d_augmented_energy(rest, P), wgf2d_energy(rest, P));
}
