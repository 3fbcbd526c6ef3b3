#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lagflow/core/trajectory.hpp"

using namespace lagflow;

namespace {

Vec random_monotone(const Grid1D& g, std::mt19937_64& rng, double amp = 0.3) {
  std::uniform_real_distribution<double> U(-amp, amp);
  Vec x = g.node_coords();
  for (std::size_t j = 1; j < g.cells(); ++j) x[j] += U(rng) * g.h();
  return x;
}

} // namespace

TEST(Grid1D, RejectsDegenerateInput) {
  EXPECT_THROW(Grid1D(0.0, 1.0, 1), LayoutError);
  EXPECT_THROW(Grid1D(1.0, 1.0, 8), LayoutError);
  EXPECT_THROW(Grid1D(1.0, 0.0, 8), LayoutError);
  Grid1D g(-1.0, 1.0, 4);
  EXPECT_DOUBLE_EQ(g.h(), 0.5);
  EXPECT_DOUBLE_EQ(g.midpoint(0), -0.75);
}

TEST(ForwardDiff, SquareMapMatchesHandValues) {
  Grid1D g(0.0, 1.0, 4);
  Vec x = g.node_coords();
  for (double& v : x) v *= v;
  const Vec d = forward_diff(x, g);
  const double want[] = {0.25, 0.75, 1.25, 1.75};
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(d[j], want[j], 1e-15);
}

TEST(ForwardDiff, IdentityIsOne) {
  Grid1D g(-3.0, 2.0, 17);
  for (double v : forward_diff(g.node_coords(), g)) EXPECT_NEAR(v, 1.0, 1e-14);
  for (double v : node_jacobian(g.node_coords(), g)) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(ForwardDiff, RejectsWrongLength) {
  Grid1D g(0.0, 1.0, 4);
  Vec x(4, 0.0);
  EXPECT_THROW(forward_diff(x, g), LayoutError);
  EXPECT_THROW(midpoint_diff(x, g), LayoutError);
  EXPECT_THROW(inner_product(InnerKind::Node, x, x, g), LayoutError);
}

TEST(MidpointDiff, SummationByParts) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (std::size_t M : {4u, 9u, 32u}) {
    Grid1D g(-1.0, 2.0, M);
    Vec u(M + 1), v(M + 2, 0.0);
    for (double& a : u) a = U(rng);
    for (std::size_t j = 1; j <= M; ++j) v[j] = U(rng);
    const Vec Du = forward_diff(u, g);
    const Vec vm(v.begin() + 1, v.end() - 1);
    const double lhs = inner_product(InnerKind::Midpoint, Du, vm, g);
    const double rhs = -inner_product(InnerKind::Node, u, midpoint_diff(v, g), g);
    EXPECT_NEAR(lhs, rhs, 1e-13);
  }
}

TEST(MidpointDiff, NodeJacobianIsDiffOfAugmentedMidpoints) {
  std::mt19937_64 rng(3);
  Grid1D g(0.0, 1.0, 10);
  const Vec x = random_monotone(g, rng);
  Vec aug{x.front()};
  for (double m : midpoint_values(x, g)) aug.push_back(m);
  aug.push_back(x.back());
  const Vec a = midpoint_diff(aug, g), b = node_jacobian(x, g);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-13);
}

TEST(InnerProduct, ConstantsIntegrateExactly) {
  Grid1D g(-2.0, 3.0, 7);
  Vec one_n(8, 1.0), one_m(7, 1.0);
  EXPECT_NEAR(inner_product(InnerKind::Node, one_n, one_n, g), 5.0, 1e-14);
  EXPECT_NEAR(inner_product(InnerKind::Midpoint, one_m, one_m, g), 5.0, 1e-14);
}

TEST(Pushforward1D, ConservesMassAndIdentity) {
  std::mt19937_64 rng(11);
  Grid1D g(-1.0, 1.0, 40);
  Vec rho0(40);
  for (std::size_t j = 0; j < 40; ++j) rho0[j] = std::cos(M_PI * g.midpoint(j) / 2.0);
  const auto id = pushforward_1d(g.node_coords(), rho0, g);
  for (std::size_t j = 0; j < 40; ++j) EXPECT_NEAR(id.values[j], rho0[j], 1e-14);
  const Vec x = random_monotone(g, rng, 0.45);
  const auto f = pushforward_1d(x, rho0, g);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < 40; ++j) {
    m0 += rho0[j] * g.h();
    m1 += f.values[j] * (x[j + 1] - x[j]);
  }
  EXPECT_NEAR(m0, m1, 1e-14);
  Vec bad = g.node_coords();
  std::swap(bad[4], bad[5]);
  EXPECT_THROW(pushforward_1d(bad, rho0, g), AdmissibilityError);
  EXPECT_FALSE(strictly_increasing(bad));
}

TEST(JacobianDet2D, AffineMapsGiveConstantDeterminant) {
  Grid2D g(-1.0, 1.0, 6, -2.0, 1.0, 5);
  auto t = Trajectory2D::identity(g);
  for (double d : jacobian_det_2d(t.curr_x, t.curr_y, g)) EXPECT_NEAR(d, 1.0, 1e-14);
  Vec x(g.size()), y(g.size());
  const double A[2][2] = {{1.3, 0.4}, {-0.2, 0.7}};
  for (std::size_t k = 0; k < g.size(); ++k) {
    x[k] = A[0][0] * t.curr_x[k] + A[0][1] * t.curr_y[k] + 0.3;
    y[k] = A[1][0] * t.curr_x[k] + A[1][1] * t.curr_y[k] - 1.1;
  }
  const Vec det = jacobian_det_2d(x, y, g);
  const double want = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  for (std::size_t i = 1; i < g.my(); ++i)
    for (std::size_t j = 1; j < g.mx(); ++j) EXPECT_NEAR(det[g.idx(i, j)], want, 1e-13);
  // rotation
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (std::size_t k = 0; k < g.size(); ++k) {
    x[k] = c * t.curr_x[k] - s * t.curr_y[k];
    y[k] = s * t.curr_x[k] + c * t.curr_y[k];
  }
  EXPECT_NEAR(min_interior(jacobian_det_2d(x, y, g), g), 1.0, 1e-13);
}

TEST(Pushforward2D, BoundaryKeepsReferenceDensity) {
  Grid2D g(0.0, 1.0, 4, 0.0, 1.0, 4);
  auto t = Trajectory2D::identity(g);
  Vec rho0(g.size(), 2.0);
  for (std::size_t k = 0; k < g.size(); ++k) t.curr_x[k] *= 1.0 + 0.1 * t.curr_x[k];
  const auto f = pushforward_2d(t.curr_x, t.curr_y, rho0, g);
  EXPECT_DOUBLE_EQ(f.values[g.idx(0, 2)], 2.0);
  EXPECT_LT(f.values[g.idx(2, 2)], 2.0);
  EXPECT_THROW(jacobian_det_2d(Vec(3), Vec(3), g), LayoutError);
}
