#include "bec/diagnostics.hpp"
#include "bec/initdata.hpp"
#include "bec/solver.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstring>
#include <random>

using namespace bec;

namespace {

struct Fixture {
  explicit Fixture(std::size_t N = 128, double eps = 1e-3)
      : grid(build_grid(N, 2.0, 1.0)), weights(grid, eps, 6.5), ops(grid) {
    params.epsilon = eps;
  }
  Grid grid;
  WeightProfiles weights;
  DifferenceOperators ops;
  ModelParameters params;
};

// Closed-form blow-up time of z' = 2^{-m} b z^m, z(0) = a.
double closed_form(const GronwallInputs& g) {
  return std::pow(2.0, g.m) / ((g.m - 1.0) * g.b * std::pow(g.a, g.m - 1.0));
}

}  // namespace

TEST(Record, UnitDataHasZeroEntropy) {
  Fixture s;
  const auto r = record(s.grid, s.weights, s.ops, s.params, std::vector<double>(128, 1.0), 0.0);
  EXPECT_EQ(r.entropy, 0.0);
  EXPECT_EQ(r.entropy_production, 0.0);
  EXPECT_EQ(r.sup_norm, 1.0);
  EXPECT_NEAR(r.mass, weighted_integral(s.grid, std::vector<double>(128, 1.0), 0.5, 1e-3), 1e-15);
}

TEST(Record, ConstantHasNoProduction) {
  Fixture s;
  const auto r = record(s.grid, s.weights, s.ops, s.params, std::vector<double>(128, 3.0), 0.0);
  EXPECT_EQ(r.entropy_production, 0.0);
  EXPECT_LT(r.entropy, 0.0);
}

TEST(Record, ProductionDensityLinearProfile) {
  // u = x + 1, n = 2: g u^{-2} (0 - 2)^2 = 4 g / (x+1)^2.
  for (double x : {0.0, 0.3, 0.9}) {
    const double g = g_eps(x, 1e-2, 6.5, 1.0);
    EXPECT_DOUBLE_EQ(entropy_production_density(g, x + 1.0, 1.0, 0.0, 2.0), 4.0 * g / ((x + 1.0) * (x + 1.0)));
  }
}

TEST(Record, ProductionMatchesQuadrature) {
  // u = 2 + cos(pi x) has zero slope at both ends, matching the mirrored stencils.
  const double eps = 1e-2, n = 2.0, alpha = 6.5;
  Fixture s(400, eps);
  std::vector<double> u(400);
  for (std::size_t i = 0; i < 400; ++i) u[i] = 2.0 + std::cos(M_PI * s.grid.centers[i]);
  const auto r = record(s.grid, s.weights, s.ops, s.params, u, 0.0);
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  const double expect = gk.integrate(
      [&](double x) {
        const double v = 2.0 + std::cos(M_PI * x);
        const double vx = -M_PI * std::sin(M_PI * x);
        const double vxx = -M_PI * M_PI * std::cos(M_PI * x);
        return entropy_production_density(g_eps(x, eps, alpha, 1.0), v, vx, vxx, n);
      },
      0.0, 1.0, 15, 1e-12);
  EXPECT_NEAR(r.entropy_production, expect, 2e-2 * expect);
}

TEST(Record, FloorMakesEntropyInfinite) {
  Fixture s;
  std::vector<double> u(128, 1.0);
  u[5] = 0.0;
  const auto r = record(s.grid, s.weights, s.ops, s.params, u, 0.0);
  EXPECT_TRUE(std::isinf(r.entropy));
  u[5] = -1.0;
  EXPECT_THROW(record(s.grid, s.weights, s.ops, s.params, u, 0.0), std::invalid_argument);
}

TEST(Record, Pure) {
  Fixture s;
  std::vector<double> u(128);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  for (auto& v : u) v = U(rng);
  const auto a = record(s.grid, s.weights, s.ops, s.params, u, 0.25, 1e-3);
  const auto b = record(s.grid, s.weights, s.ops, s.params, u, 0.25, 1e-3);
  EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
}

TEST(Gronwall, BoundExamples) {
  EXPECT_DOUBLE_EQ(gronwall_bound({4, 1, 1, 2}), 1.0);
  EXPECT_THROW(gronwall_bound({2, 1, 1, 2}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(gronwall_bound({8, 1, 1, 2}), 0.5 * gronwall_bound({4, 1, 1, 2}));
  EXPECT_THROW(gronwall_bound({4, 1, 1, 1}), std::invalid_argument);
  EXPECT_THROW(gronwall_bound({4, 0, 1, 2}), std::invalid_argument);
}

TEST(Gronwall, OracleExamples) {
  EXPECT_NEAR(gronwall_ode_oracle({4, 1, 0, 2}, 1e-3), 1.0, 5e-3);
  EXPECT_NEAR(gronwall_ode_oracle({1, 1, 0, 2}, 1e-3), 4.0, 4.0 * 5e-3);
  EXPECT_DOUBLE_EQ(gronwall_bound({1, 1, 0, 2}), 4.0);
  const double t1 = gronwall_ode_oracle({3, 1, 0, 2.5}, 1e-3);
  const double t4 = gronwall_ode_oracle({3, 4, 0, 2.5}, 1e-3);
  EXPECT_NEAR(t4, t1 / 4.0, 5e-3 * t1);
}

TEST(GronwallProperty, RandomInputsAgree) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    GronwallInputs g;
    g.a = 0.5 + 10.0 * U(rng);
    g.b = 0.1 + 5.0 * U(rng);
    g.d = 0.49 * g.a * U(rng);
    g.m = 2.0 + 2.0 * U(rng);
    const double T = gronwall_bound(g);
    EXPECT_NEAR(T, closed_form(g), 1e-12 * T);
    EXPECT_NEAR(gronwall_ode_oracle(g, 1e-3 * T), T, 5e-3 * T);
  }
}

TEST(Monitor, ConstantTrajectory) {
  std::vector<DiagnosticsRecord> traj(20);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    traj[i].t = 0.1 * static_cast<double>(i);
    traj[i].mass = 1.0;
    traj[i].moment_y = 0.8;  // below C3 B = mass: integrand zero
  }
  const auto m = moment_inequality_monitor(traj, 2.0, 0.0, 2.0);
  EXPECT_TRUE(m.satisfied);
  EXPECT_EQ(m.c2_hat, 0.0);
  EXPECT_EQ(m.offset, 0.0);
  EXPECT_TRUE(m.monotone);
  EXPECT_FALSE(m.convex);
}

TEST(Monitor, ExactRiccatiTrajectory) {
  // y' = c2 (y - 1)^3 solved exactly: (y - 1)^{-2} = (y0 - 1)^{-2} - 2 c2 t.
  const double c2 = 0.5, y0 = 2.0;
  std::vector<DiagnosticsRecord> traj;
  for (int i = 0; i <= 400; ++i) {
    DiagnosticsRecord r;
    r.t = 0.002 * i;
    r.mass = 1.0;
    r.moment_y = 1.0 + 1.0 / std::sqrt(1.0 / ((y0 - 1.0) * (y0 - 1.0)) - 2.0 * c2 * r.t);
    traj.push_back(r);
  }
  const auto m = moment_inequality_monitor(traj, 2.0, 0.0, 0.8);
  EXPECT_NEAR(m.c2_hat, c2, 0.01 * c2);
  EXPECT_TRUE(m.satisfied);
  EXPECT_TRUE(m.monotone);
  EXPECT_TRUE(m.convex);

  // Subsampling by two changes the fit by trapezoid error only.
  std::vector<DiagnosticsRecord> half;
  for (std::size_t i = 0; i < traj.size(); i += 2) half.push_back(traj[i]);
  const auto h = moment_inequality_monitor(half, 2.0, 0.0, 0.8);
  EXPECT_NEAR(h.c2_hat, m.c2_hat, 0.01 * m.c2_hat);
}

TEST(Monitor, NeedsTenSamples) {
  std::vector<DiagnosticsRecord> traj(5);
  for (std::size_t i = 0; i < 5; ++i) traj[i].t = static_cast<double>(i);
  EXPECT_THROW(moment_inequality_monitor(traj, 2.0, 0.0, 10.0), std::invalid_argument);
}
