#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "finsler/norms.hpp"

using finsler::Norm;
using finsler::Vec2;

namespace {

std::vector<Norm> families() {
  return {Norm::euclidean(), Norm::weighted_quadratic(4.0, 1.0), Norm::weighted_quadratic(0.3, 2.5),
          Norm::lq(1.5), Norm::lq(3.0), Norm::lq(4.0)};
}

std::vector<Vec2> samples(int n, unsigned seed = 7u) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<Vec2> out;
  while (static_cast<int>(out.size()) < n) {
    Vec2 x(u(rng), u(rng));
    if (x.norm() > 1e-3) out.push_back(x);
  }
  return out;
}

Vec2 fd_gradient(const Norm& f, const Vec2& x, double step = 1e-6) {
  const Vec2 e1(step, 0.0), e2(0.0, step);
  return {(f(x + e1) - f(x - e1)) / (2 * step), (f(x + e2) - f(x - e2)) / (2 * step)};
}

// sup over directions of <xi, v> / F(xi): coarse angular scan, then golden
// section around the best angle.
double numeric_polar(const Norm& f, const Vec2& v) {
  auto ratio = [&](double t) {
    const Vec2 xi(std::cos(t), std::sin(t));
    return xi.dot(v) / f(xi);
  };
  const int n = 20000;
  double best_t = 0.0, best = -1e300;
  for (int k = 0; k < n; ++k) {
    const double t = 2 * std::numbers::pi * k / n;
    if (ratio(t) > best) best = ratio(t), best_t = t;
  }
  double a = best_t - 2 * std::numbers::pi / n, b = best_t + 2 * std::numbers::pi / n;
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 100; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    (ratio(c) > ratio(d) ? b : a) = ratio(c) > ratio(d) ? d : c;
  }
  return ratio(0.5 * (a + b));
}

// Area of {(|x|^r + |y|^r)^(1/r) < 1}.
double lr_ball_area(double r) {
  return 4.0 * std::pow(std::tgamma(1.0 + 1.0 / r), 2) / std::tgamma(1.0 + 2.0 / r);
}

}  // namespace

TEST(EvalNorm, Examples) {
  EXPECT_DOUBLE_EQ(Norm::euclidean()(Vec2(3, 4)), 5.0);
  EXPECT_DOUBLE_EQ(Norm::weighted_quadratic(4, 1)(Vec2(1, 0)), 2.0);
  EXPECT_NEAR(Norm::lq(4)(Vec2(1, 1)), std::pow(2.0, 0.25), 1e-15);
  for (const auto& f : families()) EXPECT_EQ(f(Vec2::Zero()), 0.0);
}

TEST(EvalNorm, HomogeneityAndEvenness) {
  for (const auto& f : families())
    for (const auto& x : samples(50))
      for (double t : {-2.0, -1.0, 0.5, 3.0}) EXPECT_NEAR(f(t * x), std::abs(t) * f(x), 4e-16 * std::abs(t) * f(x) * 4);
}

TEST(EvalNorm, Convexity) {
  const auto xs = samples(60, 11u);
  for (const auto& f : families())
    for (std::size_t k = 0; k + 1 < xs.size(); ++k)
      EXPECT_LE(f(0.5 * (xs[k] + xs[k + 1])), 0.5 * (f(xs[k]) + f(xs[k + 1])) + 1e-14);
}

TEST(EvalNorm, EuclideanEquivalenceBounds) {
  for (const auto& f : families()) {
    const double a = f.lower_bound(), b = f.upper_bound();
    ASSERT_GT(a, 0.0);
    ASSERT_LE(a, b);
    for (int k = 0; k < 3600; ++k) {
      const double t = 2 * std::numbers::pi * k / 3600;
      const Vec2 x(std::cos(t), std::sin(t));
      EXPECT_GE(f(x), a - 1e-12);
      EXPECT_LE(f(x), b + 1e-12);
    }
  }
}

TEST(GradNorm, Examples) {
  const Vec2 g1 = Norm::euclidean().gradient(Vec2(0, 2));
  EXPECT_NEAR(g1[0], 0.0, 1e-15);
  EXPECT_NEAR(g1[1], 1.0, 1e-15);
  const Norm wq = Norm::weighted_quadratic(4, 1);
  const Vec2 fd = fd_gradient(wq, Vec2(1, 0));
  EXPECT_NEAR(fd[0], 2.0, 1e-8);
  EXPECT_NEAR(wq.gradient(Vec2(1, 0))[0], fd[0], 1e-8);
  EXPECT_NEAR(wq.gradient(Vec2(1, 0))[1], fd[1], 1e-8);
  const Vec2 g3 = Norm::lq(2).gradient(Vec2(3, 4));
  EXPECT_NEAR(g3[0], 0.6, 1e-15);
  EXPECT_NEAR(g3[1], 0.8, 1e-15);
}

TEST(GradNorm, MatchesFiniteDifferences) {
  for (const auto& f : families())
    for (const auto& x : samples(40, 3u)) {
      const Vec2 g = f.gradient(x), fd = fd_gradient(f, x);
      EXPECT_NEAR(g[0], fd[0], 1e-7);
      EXPECT_NEAR(g[1], fd[1], 1e-7);
    }
}

TEST(GradNorm, ZeroHomogeneous) {
  for (const auto& f : families())
    for (const auto& x : samples(30, 5u))
      for (double t : {0.01, 0.5, 7.0}) EXPECT_LT((f.gradient(t * x) - f.gradient(x)).norm(), 1e-13);
}

TEST(GradNorm, DegenerateInputThrows) {
  for (const auto& f : families()) {
    EXPECT_THROW(f.gradient(Vec2::Zero()), finsler::DegenerateInputError);
    EXPECT_THROW(f.gradient(Vec2(1e-15, 0.0)), finsler::DegenerateInputError);
  }
}

TEST(NormSpec, InvalidParametersThrow) {
  EXPECT_THROW(Norm::lq(1.0), finsler::InvalidNormError);
  EXPECT_THROW(Norm::lq(0.5), finsler::InvalidNormError);
  EXPECT_THROW(Norm::lq(INFINITY), finsler::InvalidNormError);
  EXPECT_THROW(Norm::weighted_quadratic(0.0, 1.0), finsler::InvalidNormError);
  EXPECT_THROW(Norm::weighted_quadratic(1.0, -2.0), finsler::InvalidNormError);
}

TEST(PolarEval, Examples) {
  EXPECT_NEAR(Norm::lq(4).polar(Vec2(1, 1)), std::pow(2.0, 0.75), 1e-14);
  const Norm wq = Norm::weighted_quadratic(4, 1);
  EXPECT_NEAR(numeric_polar(wq, Vec2(2, 0)), 1.0, 1e-9);
  EXPECT_NEAR(wq.polar(Vec2(2, 0)), numeric_polar(wq, Vec2(2, 0)), 1e-9);
  EXPECT_DOUBLE_EQ(Norm::euclidean().polar(Vec2(3, 4)), 5.0);
}

TEST(PolarEval, MatchesNumericSupremum) {
  for (const auto& f : families())
    for (const auto& v : samples(8, 13u)) EXPECT_NEAR(f.polar(v), numeric_polar(f, v), 1e-8 * f.polar(v));
}

TEST(PolarEval, BidualAndCauchySchwarz) {
  const auto xs = samples(100, 17u);
  for (const auto& f : families()) {
    const Norm bidual = f.polar_norm().polar_norm();
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      EXPECT_NEAR(bidual(xs[k]), f(xs[k]), 1e-10);
      EXPECT_LE(std::abs(xs[k].dot(xs[k + 1])), f(xs[k]) * f.polar(xs[k + 1]) * (1 + 1e-12));
    }
  }
}

TEST(WulffMeasure, Examples) {
  EXPECT_NEAR(finsler::wulff_measure(Norm::euclidean()), std::numbers::pi, 1e-6);
  EXPECT_NEAR(finsler::wulff_measure(Norm::weighted_quadratic(4, 1)), 2 * std::numbers::pi, 1e-5);
  EXPECT_NEAR(finsler::wulff_measure(Norm::lq(2)), std::numbers::pi, 1e-6);
}

TEST(WulffMeasure, AgreesWithDoubleResolutionAndClosedForm) {
  for (const auto& f : families()) {
    const double coarse = finsler::wulff_measure(f);
    const double fine = finsler::wulff_measure(f, 2 * finsler::kWulffQuadratureSamples);
    EXPECT_NEAR(coarse, fine, 1e-6 * fine);
  }
  for (double q : {1.5, 3.0, 4.0}) {
    const double qp = q / (q - 1.0);
    EXPECT_NEAR(finsler::wulff_measure(Norm::lq(q)), lr_ball_area(qp), 1e-6);
  }
}

TEST(WulffShape, MembershipAndExtent) {
  const Norm wq = Norm::weighted_quadratic(4, 1);
  const finsler::WulffShape w{Vec2(1, -1), 0.5, wq};
  EXPECT_TRUE(w.contains(Vec2(1, -1)));
  EXPECT_TRUE(w.contains(Vec2(1.99 * 0.5 + 1, -1)));  // F°(x) = sqrt(x1^2/4 + x2^2)
  EXPECT_FALSE(w.contains(Vec2(2.01 * 0.5 + 1, -1)));
  EXPECT_NEAR(w.half_extent()[0], 1.0, 1e-15);
  EXPECT_NEAR(w.half_extent()[1], 0.5, 1e-15);
  EXPECT_NEAR(finsler::wulff_measure(w), 0.25 * 2 * std::numbers::pi, 1e-5);
}

TEST(CheckDuality, Examples) {
  EXPECT_LE(finsler::check_duality(Norm::euclidean(), 100).max_residual, 1e-10);
  EXPECT_LE(finsler::check_duality(Norm::weighted_quadratic(4, 1), 100).max_residual, 1e-8);
  EXPECT_LE(finsler::check_duality(Norm::lq(3), 100).max_residual, 1e-8);
  EXPECT_THROW(finsler::check_duality(Norm::lq(3), 0), finsler::ConfigError);
}

TEST(CheckDuality, DeterministicAndIndependentlyConfirmed) {
  const Norm f = Norm::lq(3);
  const auto a = finsler::check_duality(f, 100), b = finsler::check_duality(f, 100);
  EXPECT_EQ(a.max_residual, b.max_residual);
  // Euler and unit-gradient identities through finite-difference gradients.
  for (const auto& x : samples(50, 23u)) {
    const Vec2 g = fd_gradient(f, x);
    EXPECT_NEAR(g.dot(x), f(x), 1e-7 * f(x));
    EXPECT_NEAR(f.polar(g), 1.0, 1e-7);
    const Vec2 gp = fd_gradient(f.polar_norm(), x);
    EXPECT_NEAR(f(gp), 1.0, 1e-7);
    EXPECT_LT((f.polar(x) * f.gradient(gp) - x).norm(), 1e-6 * x.norm());
  }
}
