#include "bec/initdata.hpp"

#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace bec;

namespace {

ModelParameters physical() { return ModelParameters{}; }

double loglog_slope(const std::vector<double>& k, const std::vector<double>& v) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    mx += std::log(k[i]) / k.size();
    my += std::log(v[i]) / k.size();
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    sxx += (std::log(k[i]) - mx) * (std::log(k[i]) - mx);
    sxy += (std::log(k[i]) - mx) * (std::log(v[i]) - my);
  }
  return sxy / sxx;
}

}  // namespace

TEST(Bump, Values) {
  EXPECT_DOUBLE_EQ(standard_bump(0.5, 0.5, 0.2, 3.0), 3.0);
  EXPECT_EQ(standard_bump(0.7, 0.5, 0.2, 3.0), 0.0);
  EXPECT_EQ(standard_bump(0.3, 0.5, 0.2, 3.0), 0.0);
}

TEST(Bump, IntegralAgainstTanhSinh) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double unit = ts.integrate([](double s) { return std::exp(1.0 - 1.0 / (1.0 - s * s)); }, -1.0, 1.0);
  // 0.4439... is the integral of exp(-1/(1-s^2)); the peak-normalized bump carries a factor e.
  EXPECT_NEAR(unit / std::exp(1.0), 0.4439, 1e-4);
  const double h = 2.0, w = 0.1;
  const double I = ts.integrate([&](double x) { return standard_bump(x, 0.5, w, h); }, 0.4, 0.6);
  EXPECT_GT(I, 0.4 * h * w);
  EXPECT_NEAR(I, unit * h * w, 1e-10);
}

TEST(Bump, SupportMustFitDomain) {
  EXPECT_THROW(validate_bump(BumpProfile{0.1, 0.2, 1.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(validate_bump(BumpProfile{0.5, 0.25, 1.0, 0.0}, 1.0));
}

TEST(Concentration, KOneIsUnscaled) {
  const auto g = build_grid(128, 1.0, 1.0);
  const std::vector<double> u0(128, 1.0);
  const BumpProfile phi{0.5, 0.25, 1.0, 0.0};
  const auto r = concentration_family(g, u0, 1, 1.3, phi, 0.5, 0.4);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_DOUBLE_EQ(r.field.values[i], 1.0 + standard_bump(g.centers[i], 0.5, 0.25, 1.0));
  }
}

TEST(Concentration, ThetaWindow) {
  const auto g = build_grid(64, 1.0, 1.0);
  const std::vector<double> u0(64, 1.0);
  const BumpProfile phi{0.5, 0.25, 1.0, 0.0};
  EXPECT_THROW(concentration_family(g, u0, 2, 1.1, phi, 0.5, 0.4), std::invalid_argument);
  EXPECT_THROW(concentration_family(g, u0, 2, 1.5, phi, 0.5, 0.4), std::invalid_argument);
  EXPECT_THROW(concentration_family(g, u0, 0, 1.3, phi, 0.5, 0.4), std::invalid_argument);
  EXPECT_THROW(concentration_family(g, u0, 2, 1.3, phi, 0.5, 0.4, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(concentration_family(g, u0, 2, 1.3, phi, 0.5, 0.4, 0.5));
  EXPECT_DOUBLE_EQ(default_theta(0.5, 0.4), 1.3);
}

TEST(Concentration, UnderResolvedWarns) {
  const auto g = build_grid(32, 1.0, 1.0);
  const std::vector<double> u0(32, 1.0);
  const auto r = concentration_family(g, u0, 64, 1.3, BumpProfile{0.5, 0.25, 1.0, 0.0}, 0.5, 0.4);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Concentration, ExponentArithmetic) {
  const double beta = 0.5, kappa = 0.4, theta = 1.3;
  EXPECT_NEAR(theta - beta + kappa - 1.0, 0.2, 1e-15);
  EXPECT_NEAR(theta - beta - 1.0, -0.2, 1e-15);
}

TEST(ConcentrationProperty, ScalingSlopes) {
  const auto p = physical();
  const double theta = default_theta(p.beta, p.kappa);
  const auto g = build_grid(1024, 2.0, 1.0);
  const std::vector<double> u0(g.size(), 1.0);
  const BumpProfile phi{0.5, 0.25, 1.0, 0.0};
  std::vector<double> ks, moment, mass;
  for (std::int64_t k : {4, 8, 16, 32, 64}) {
    const auto r = concentration_family(g, u0, k, theta, phi, p.beta, p.kappa);
    std::vector<double> diff(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) diff[i] = r.field.values[i] - u0[i];
    ks.push_back(static_cast<double>(k));
    moment.push_back(weighted_integral(g, diff, p.beta - p.kappa));
    mass.push_back(weighted_integral(g, diff, p.beta));
  }
  const double s_moment = loglog_slope(ks, moment);
  const double s_mass = loglog_slope(ks, mass);
  EXPECT_NEAR(s_moment, theta - p.beta + p.kappa - 1.0, 0.05 * 0.2);
  EXPECT_NEAR(s_mass, theta - p.beta - 1.0, 0.05 * 0.2);
}

double log_integral(const Grid& g, std::span<const double> u, double beta) {
  const auto w = cell_weights(g, beta);
  double D = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (u[i] < 1.0) D += w[i] * std::log(1.0 / u[i]);
  }
  return D;
}

TEST(ConcentrationProperty, LogIntegralBoundedByBase) {
  // phi >= 0 only raises u, so int x^beta ln_+(1/u_k) <= int x^beta ln_+(1/u_0) for every k.
  const auto p = physical();
  const auto g = build_grid(512, 2.0, 1.0);
  std::vector<double> u0(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u0[i] = 0.2 + 0.1 * g.centers[i];
  const double D0 = log_integral(g, u0, p.beta);
  double last = 0.0;
  for (std::int64_t k = 1; k <= 128; k *= 2) {
    const auto r = concentration_family(g, u0, k, 1.3, BumpProfile{0.5, 0.25, 1.0, 0.0}, p.beta, p.kappa);
    last = log_integral(g, r.field.values, p.beta);
    EXPECT_LE(last, D0) << k;
  }
  // The support shrinks towards 0, so the bound is approached from below.
  EXPECT_NEAR(last, D0, 0.01 * D0);
}

TEST(Profiles, TableRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "bec_table_test.txt";
  {
    std::ofstream out(path);
    out << "# x u\n0 1\n0.5 2  # mid\n1 1\n";
  }
  const auto t = read_table(path.string());
  EXPECT_EQ(t.x.size(), 3u);
  EXPECT_EQ(t.source, path.string());
  EXPECT_DOUBLE_EQ(interpolate(t, 0.25), 1.5);
  EXPECT_DOUBLE_EQ(interpolate(t, 2.0), 1.0);
  std::filesystem::remove(path);
  EXPECT_THROW(read_table("/nonexistent/table"), std::runtime_error);
}

TEST(Profiles, SampleProfileRejectsNegative) {
  const auto g = build_grid(16, 1.0, 1.0);
  EXPECT_THROW(sample_profile(Profile{ConstantProfile{-1.0}}, g, physical()), std::invalid_argument);
  const auto r = sample_profile(Profile{ConstantProfile{2.0}}, g, physical());
  for (double v : r.field.values) EXPECT_EQ(v, 2.0);
}

TEST(Regularize, ConstantDataShiftsByDelta) {
  const auto g = build_grid(128, 1.0, 1.0);
  const std::vector<double> u(128, 0.7);
  const std::vector<double> eps{1e-1, 1e-2, 1e-3};
  const auto r = regularize_initial_data(g, u, eps, 0.5, 0.5);
  ASSERT_EQ(r.fields.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t i = 0; i < 128; ++i) EXPECT_DOUBLE_EQ(r.fields[j].values[i], 0.7 + r.schedule.delta[j]);
  }
}

TEST(Regularize, InputValidation) {
  const auto g = build_grid(16, 1.0, 1.0);
  const std::vector<double> u(16, 1.0);
  const std::vector<double> inc{1e-3, 1e-2};
  const std::vector<double> ok{1e-2};
  EXPECT_THROW(regularize_initial_data(g, u, inc, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(regularize_initial_data(g, u, ok, 1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(regularize_initial_data(g, std::vector<double>(16, -1.0), ok, 0.5, 0.5), std::invalid_argument);
}

class RegularizeRough : public ::testing::Test {
protected:
  void SetUp() override {
    grid = build_grid(400, 1.5, 1.0);
    u.resize(grid.size());
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    // Kinks plus a noisy plateau and a zero stretch.
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid.centers[i];
      double v = std::abs(std::sin(7.0 * x)) + (x > 0.6 && x < 0.8 ? 0.3 * U(rng) : 0.0);
      if (x > 0.3 && x < 0.35) v = 0.0;
      u[i] = v;
    }
  }
  Grid grid;
  std::vector<double> u;
  std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
};

TEST_F(RegularizeRough, Sandwich) {
  const auto r = regularize_initial_data(grid, u, eps, 0.5, 0.5);
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const double d = r.schedule.delta[j];
    EXPECT_GT(d, 0.0);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double diff = r.fields[j].values[i] - u[i];
      EXPECT_GE(diff, 0.5 * d * (1.0 - 1e-12)) << "j=" << j << " i=" << i;
      EXPECT_LE(diff, 1.5 * d * (1.0 + 1e-12)) << "j=" << j << " i=" << i;
      max_dev = std::max(max_dev, std::abs(diff));
    }
    EXPECT_LE(max_dev, 1.5 * d * (1.0 + 1e-12));
    if (j > 0) EXPECT_LT(d, r.schedule.delta[j - 1]);
  }
}

TEST_F(RegularizeRough, GradientEnergyIdentityAndConvergence) {
  const auto r = regularize_initial_data(grid, u, eps, 0.5, 0.5);
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const double direct = weighted_gradient_energy(grid, r.fields[j].values, 0.5, eps[j]);
    EXPECT_NEAR(direct, r.schedule.gradient_energy[j], 1e-10 * direct);
  }
  const double target = weighted_gradient_energy(grid, u, 0.5, 0.0);
  EXPECT_NEAR(target, r.schedule.target_gradient_energy, 1e-12 * target);
  EXPECT_NEAR(r.schedule.gradient_energy.back(), target, 0.02 * target);
}

TEST_F(RegularizeRough, PositiveFields) {
  const auto r = regularize_initial_data(grid, u, eps, 0.5, 0.5);
  for (const auto& f : r.fields) {
    for (double v : f.values) EXPECT_GT(v, 0.0);
  }
}
