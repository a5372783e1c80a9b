#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "oracles.hpp"
#include "vofml/experiments.hpp"

using namespace vofml;

namespace {

constexpr double kPi = std::numbers::pi;

std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("vofml_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(InitialCondition, ZalesakMembership) {
  EXPECT_TRUE(experiments_detail::zalesak(Vec3(0, 0, 0.3)));
  EXPECT_FALSE(experiments_detail::zalesak(Vec3(0, 0, -0.3)));
  EXPECT_FALSE(experiments_detail::zalesak(Vec3(0.45, 0, 0)));
  EXPECT_TRUE(experiments_detail::zalesak(Vec3(0.3, 0, -0.1)));
  // The rotated region contains exactly the rotated points.
  const auto inside = initial_condition(1);
  const Mat3 r0 = initial_rotation();
  oracle::Uniform rng(1);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p(rng.in(-0.5, 0.5), rng.in(-0.5, 0.5), rng.in(-0.5, 0.5));
    EXPECT_EQ(inside(r0 * p), experiments_detail::zalesak(p));
  }
}

TEST(InitialCondition, RotationOrder) {
  const Mat3 r0 = initial_rotation();
  EXPECT_LT((r0.transpose() * r0 - Mat3::Identity()).norm(), 1e-14);
  EXPECT_NEAR(r0.determinant(), 1.0, 1e-14);
  const Mat3 expect = rotation_z(kPi / 9) * rotation_y(kPi / 7) * rotation_x(kPi / 5);
  EXPECT_LT((r0 - expect).norm(), 1e-15);
  // Not the reverse product.
  EXPECT_GT((r0 - rotation(kPi / 5, kPi / 7, kPi / 9)).norm(), 1e-3);
}

TEST(InitialCondition, SphereAndBars) {
  using experiments_detail::sphere_and_bars;
  EXPECT_TRUE(sphere_and_bars(Vec3(0.5, 0.5, 0.5)));
  EXPECT_TRUE(sphere_and_bars(Vec3(0.79, 0.5, 0.5)));
  EXPECT_TRUE(sphere_and_bars(Vec3(0.5, 0.21, 0.5)));
  EXPECT_TRUE(sphere_and_bars(Vec3(0.5, 0.5, 0.79)));
  EXPECT_FALSE(sphere_and_bars(Vec3(0.81, 0.5, 0.5)));
  EXPECT_FALSE(sphere_and_bars(Vec3(0.75, 0.6, 0.5)));
  const auto inside = initial_condition(2);
  const Mat3 r0 = initial_rotation();
  const Vec3 c = Vec3::Constant(0.5);
  EXPECT_TRUE(inside(c + r0 * Vec3(0.29, 0, 0)));
  EXPECT_FALSE(inside(c + r0 * Vec3(0.29, 0.1, 0)));
}

TEST(InitialCondition, Test3Sphere) {
  const auto inside = initial_condition(3);
  EXPECT_TRUE(inside(Vec3(0.35, 0.35, 0.49)));
  EXPECT_FALSE(inside(Vec3(0.35, 0.35, 0.51)));
  EXPECT_THROW(initial_condition(4), std::invalid_argument);
}

TEST(Velocity, Test1Constant) {
  const auto v = velocity_field(1);
  EXPECT_EQ(v.u(Vec3(0.3, -0.2, 0.9), 1.7), Vec3(1, 2, 3));
  EXPECT_TRUE(v.componentwise_derivative_free);
}

TEST(Velocity, Test2HalfTimeAndDerivatives) {
  const auto v = velocity_field(2);
  oracle::Uniform rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(rng.next(), rng.next(), rng.next());
    EXPECT_LT(v.u(p, 0.5).norm(), 1e-15);
    // u1 ignores x, u2 ignores y, u3 ignores z.
    for (int a = 0; a < 3; ++a) {
      Vec3 q = p;
      q[a] = rng.next();
      EXPECT_EQ(v.u(p, 0.2)[a], v.u(q, 0.2)[a]);
    }
  }
  EXPECT_TRUE(v.componentwise_derivative_free);
}

TEST(Velocity, Test3DivergenceFree) {
  const auto v = velocity_field(3);
  EXPECT_FALSE(v.componentwise_derivative_free);
  oracle::Uniform rng(3);
  const double h = 1e-5;
  bool nonzero_partial = false;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p(rng.next(), rng.next(), rng.next());
    const double t = rng.in(0, 2);
    double div = 0;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      const double d = (v.u(p + e, t)[a] - v.u(p - e, t)[a]) / (2 * h);
      nonzero_partial = nonzero_partial || std::abs(d) > 1e-3;
      div += d;
    }
    EXPECT_NEAR(div, 0.0, 1e-8);
  }
  EXPECT_TRUE(nonzero_partial);
}

TEST(Convergence, Fits) {
  const std::vector<int> n{10, 14, 20, 27, 38};
  std::vector<double> e1, e0, e2;
  for (int k : n) {
    e1.push_back(3.0 / k);
    e0.push_back(0.25);
    e2.push_back(7.0 * std::pow(k, -2.0));
  }
  EXPECT_NEAR(convergence(n, e1).rate, 1.0, 1e-12);
  EXPECT_NEAR(convergence(n, e0).rate, 0.0, 1e-12);
  EXPECT_NEAR(convergence(n, e2).rate, 2.0, 1e-12);
  EXPECT_NEAR(convergence(n, e1).intercept, std::log(3.0), 1e-12);
  EXPECT_THROW(convergence({10, 20}, {0.1, 0.05}), InsufficientPoints);
  EXPECT_THROW(convergence({10, 10, 10}, {0.1, 0.05, 0.02}), InsufficientPoints);
}

TEST(Run, Test1UpwindCoarse) {
  const auto r = run(1, FluxScheme::upwind(), 10);
  EXPECT_EQ(r.steps, 100);
  EXPECT_DOUBLE_EQ(r.dt, 0.02);
  EXPECT_EQ(r.history.size(), 101u);
  EXPECT_GT(r.error, 0.1);
  EXPECT_LT(r.max_mass_drift, 1e-12);
  EXPECT_GE(r.min_value, -1e-12);
  EXPECT_LE(r.max_value, 1 + 1e-12);
  EXPECT_GT(r.rmix_ratio, 3.0);
  for (const auto& s : r.history) {
    EXPECT_GE(s.rmix, 0.0);
    EXPECT_LE(s.rmix, 1.0);
  }
  EXPECT_NEAR(r.history.back().time, 2.0, 1e-12);
}

TEST(Run, Test2And3LimitedDownwindCoarse) {
  const auto r2 = run(2, FluxScheme::limited_downwind(), 10);
  EXPECT_EQ(r2.steps, 100);
  EXPECT_LT(r2.max_mass_drift, 1e-12);
  EXPECT_GE(r2.min_value, -1e-12);
  EXPECT_LE(r2.max_value, 1 + 1e-12);
  const auto r3 = run(3, FluxScheme::limited_downwind(), 10);
  EXPECT_EQ(r3.steps, 200);
  EXPECT_EQ(r3.max_sum_defect, 0.0);
  EXPECT_GE(r3.min_value, -1e-12);
  EXPECT_LE(r3.max_value, 1 + 1e-12);
  // With mass conserved the relative L1 error cannot exceed 2.
  EXPECT_LE(r3.error, 2.0);
}

TEST(Run, LimitedDownwindIsExactForSingleAxisTranslation) {
  auto tc = test_case(1);
  tc.inside = [](const Vec3& p) { return p.cwiseAbs().maxCoeff() < 0.4; };
  tc.velocity.u = [](const Vec3&, double) { return Vec3(0, 0, 3); };
  const auto r = run(tc, FluxScheme::limited_downwind(), 10);
  EXPECT_LT(r.error, 1e-13);
}

TEST(Run, LimitedDownwindBeatsUpwind) {
  const auto uw = run(2, FluxScheme::upwind(), 10);
  const auto ld = run(2, FluxScheme::limited_downwind(), 10);
  EXPECT_LT(ld.error, uw.error);
  EXPECT_LT(ld.rmix_ratio, uw.rmix_ratio);
}

TEST(Reports, SummaryRoundTripAndConvergenceDirectory) {
  const auto dir = scratch_dir("reports");
  std::vector<RunReport> reports;
  for (int n : {10, 14, 20}) {
    RunReport r;
    r.test = 1;
    r.scheme = "ld";
    r.nh = n;
    r.error = 2.0 / n;
    r.rmix_ratio = 1.5;
    r.history.push_back({0, 0.0, 0.1, 1.0, 1.0, 0.0});
    write_history_csv(r, dir / history_filename(1, "ld", n));
    reports.push_back(r);
  }
  write_summary_csv(reports, dir / summary_filename(1, "ld"));
  const auto rows = read_summary_csv(dir / summary_filename(1, "ld"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].nh, 14);
  EXPECT_DOUBLE_EQ(rows[1].error, 2.0 / 14);
  const auto conv = convergence_from_directory(dir);
  ASSERT_EQ(conv.size(), 1u);
  EXPECT_EQ(conv[0].scheme, "ld");
  EXPECT_NEAR(conv[0].fit.rate, 1.0, 1e-12);
  std::filesystem::remove_all(dir);
}
