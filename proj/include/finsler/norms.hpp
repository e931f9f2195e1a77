#pragma once

// Smooth Finsler norms on the plane, their polars and Wulff shapes.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "finsler/error.hpp"

namespace finsler {

using Vec2 = Eigen::Vector2d;

enum class NormFamily { euclidean, weighted_quadratic, lq };

/// Number of angular samples used by wulff_measure.
inline constexpr int kWulffQuadratureSamples = 2048;

/// Inputs with Euclidean length below this are rejected by gradient().
inline constexpr double kDegenerateThreshold = 1e-14;

/// An even, 1-homogeneous, convex gauge F on R^2.
///
/// Three families are supported:
///   euclidean           F(x) = |x|
///   weighted_quadratic  F(x) = sqrt(a1 x1^2 + a2 x2^2)
///   lq                  F(x) = (|x1|^q + |x2|^q)^(1/q),  1 < q < inf
///
/// Every family is closed under polarity, so polar() is exact.
class Norm {
 public:
  Norm() = default;

  static Norm euclidean() { return Norm(NormFamily::euclidean, 1.0, 1.0, 2.0); }

  static Norm weighted_quadratic(double a1, double a2) {
    if (!(a1 > 0.0) || !(a2 > 0.0) || !std::isfinite(a1) || !std::isfinite(a2))
      throw InvalidNormError("weighted_quadratic weights must be positive and finite");
    return Norm(NormFamily::weighted_quadratic, a1, a2, 2.0);
  }

  static Norm lq(double q) {
    if (!(q > 1.0) || !std::isfinite(q))
      throw InvalidNormError("lq exponent must lie in (1, inf)");
    return Norm(NormFamily::lq, 1.0, 1.0, q);
  }

  NormFamily family() const noexcept { return family_; }
  double a1() const noexcept { return a1_; }
  double a2() const noexcept { return a2_; }
  double q() const noexcept { return q_; }

  /// True when F^2 is a quadratic form (the p = 2 problem is linear).
  bool is_quadratic() const noexcept {
    return family_ != NormFamily::lq || q_ == 2.0;
  }

  /// Diagonal of the quadratic form F^2(x) = x^T diag(w) x; (1,1) for lq.
  Vec2 quadratic_weights() const noexcept {
    if (family_ == NormFamily::weighted_quadratic) return {a1_, a2_};
    return {1.0, 1.0};
  }

  double operator()(const Vec2& x) const { return eval(x); }

  double eval(const Vec2& x) const {
    switch (family_) {
      case NormFamily::euclidean:
        return std::hypot(x[0], x[1]);
      case NormFamily::weighted_quadratic:
        return std::sqrt(a1_ * x[0] * x[0] + a2_ * x[1] * x[1]);
      case NormFamily::lq:
        return lq_eval(x);
    }
    return 0.0;
  }

  /// Gradient of F at x != 0. It is 0-homogeneous and satisfies
  /// <grad F(x), x> = F(x).
  Vec2 gradient(const Vec2& x) const {
    if (std::hypot(x[0], x[1]) < kDegenerateThreshold)
      throw DegenerateInputError("norm gradient requested at the origin");
    switch (family_) {
      case NormFamily::euclidean:
        return x / std::hypot(x[0], x[1]);
      case NormFamily::weighted_quadratic: {
        const double f = eval(x);
        return Vec2(a1_ * x[0], a2_ * x[1]) / f;
      }
      case NormFamily::lq: {
        const double m = std::max(std::abs(x[0]), std::abs(x[1]));
        const Vec2 y = x / m;
        const double f = lq_eval(y);
        return Vec2(signed_pow(y[0] / f, q_ - 1.0), signed_pow(y[1] / f, q_ - 1.0));
      }
    }
    return Vec2::Zero();
  }

  /// F(x) grad F(x) = grad(F^2 / 2), extended by 0 at the origin.
  Vec2 flux(const Vec2& x) const {
    switch (family_) {
      case NormFamily::euclidean:
        return x;
      case NormFamily::weighted_quadratic:
        return Vec2(a1_ * x[0], a2_ * x[1]);
      case NormFamily::lq: {
        const double m = std::max(std::abs(x[0]), std::abs(x[1]));
        if (m == 0.0) return Vec2::Zero();
        const Vec2 y = x / m;
        const double f = lq_eval(y);
        const Vec2 g(signed_pow(y[0] / f, q_ - 1.0), signed_pow(y[1] / f, q_ - 1.0));
        return (f * m) * g;
      }
    }
    return Vec2::Zero();
  }

  /// The polar norm as a member of the same family.
  Norm polar_norm() const {
    switch (family_) {
      case NormFamily::euclidean:
        return euclidean();
      case NormFamily::weighted_quadratic:
        return Norm(NormFamily::weighted_quadratic, 1.0 / a1_, 1.0 / a2_, 2.0);
      case NormFamily::lq:
        return Norm(NormFamily::lq, 1.0, 1.0, q_ / (q_ - 1.0));
    }
    return {};
  }

  /// F°(x) = sup_{xi != 0} <xi, x> / F(xi).
  double polar(const Vec2& x) const { return polar_norm().eval(x); }
  Vec2 polar_gradient(const Vec2& x) const { return polar_norm().gradient(x); }

  /// Best constant a with a|x| <= F(x).
  double lower_bound() const {
    switch (family_) {
      case NormFamily::euclidean:
        return 1.0;
      case NormFamily::weighted_quadratic:
        return std::sqrt(std::min(a1_, a2_));
      case NormFamily::lq:
        return q_ >= 2.0 ? std::pow(2.0, 1.0 / q_ - 0.5) : 1.0;
    }
    return 1.0;
  }

  /// Best constant b with F(x) <= b|x|.
  double upper_bound() const {
    switch (family_) {
      case NormFamily::euclidean:
        return 1.0;
      case NormFamily::weighted_quadratic:
        return std::sqrt(std::max(a1_, a2_));
      case NormFamily::lq:
        return q_ >= 2.0 ? 1.0 : std::pow(2.0, 1.0 / q_ - 0.5);
    }
    return 1.0;
  }

  std::string name() const {
    switch (family_) {
      case NormFamily::euclidean:
        return "euclidean";
      case NormFamily::weighted_quadratic:
        return "weighted_quadratic";
      case NormFamily::lq:
        return "lq";
    }
    return "unknown";
  }

  friend bool operator==(const Norm&, const Norm&) = default;

 private:
  Norm(NormFamily family, double a1, double a2, double q)
      : family_(family), a1_(a1), a2_(a2), q_(q) {}

  static double signed_pow(double v, double e) {
    return std::copysign(std::pow(std::abs(v), e), v);
  }

  double lq_eval(const Vec2& x) const {
    const double m = std::max(std::abs(x[0]), std::abs(x[1]));
    if (m == 0.0) return 0.0;
    const double s = std::pow(std::abs(x[0]) / m, q_) + std::pow(std::abs(x[1]) / m, q_);
    return m * std::pow(s, 1.0 / q_);
  }

  NormFamily family_ = NormFamily::euclidean;
  double a1_ = 1.0;
  double a2_ = 1.0;
  double q_ = 2.0;
};

/// W_r(x0) = { x : F°(x - x0) < r }.
struct WulffShape {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  Norm norm;

  bool contains(const Vec2& x) const { return norm.polar(x - center) < radius; }

  /// Half-widths of the axis-aligned bounding box; the support function of
  /// {F° < r} in direction e_i is r F(e_i).
  Vec2 half_extent() const {
    return {radius * norm.eval(Vec2(1.0, 0.0)), radius * norm.eval(Vec2(0.0, 1.0))};
  }
};

/// kappa_2 = |{F° < 1}|.
///
/// The Wulff shape is star-shaped about the origin with radial function
/// 1 / F°(cos t, sin t), so its area is (1/2) * integral of that squared over
/// a full turn; a midpoint rule on this periodic integrand converges fast.
inline double wulff_measure(const Norm& norm, int samples = kWulffQuadratureSamples) {
  const Norm dual = norm.polar_norm();
  const double dt = 2.0 * std::numbers::pi / samples;
  double sum = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = (k + 0.5) * dt;
    const double r = 1.0 / dual.eval(Vec2(std::cos(t), std::sin(t)));
    sum += r * r;
  }
  return 0.5 * sum * dt;
}

inline double wulff_measure(const WulffShape& shape) {
  return wulff_measure(shape.norm) * shape.radius * shape.radius;
}

struct DualityReport {
  int samples = 0;
  double euler = 0.0;          ///< max |<grad F(x), x> - F(x)| and its polar twin
  double unit_gradient = 0.0;  ///< max |F°(grad F(x)) - 1| and |F(grad F°(x)) - 1|
  double polar_inverse = 0.0;  ///< max |F°(x) grad F(grad F°(x)) - x| (and twin)
  double cauchy_schwarz = 0.0; ///< max violation of |<x,y>| <= F(x) F°(y)
  double max_residual = 0.0;
};

/// Residuals of the standard duality identities on deterministic
/// pseudo-random samples with |x| in [0.5, 2].
inline DualityReport check_duality(const Norm& norm, int sample_count, std::uint32_t seed = 20240611u) {
  if (sample_count < 1) throw ConfigError("check_duality needs at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  auto draw = [&] {
    const double t = angle(rng);
    const double r = radius(rng);
    return Vec2(r * std::cos(t), r * std::sin(t));
  };

  DualityReport rep;
  rep.samples = sample_count;
  for (int s = 0; s < sample_count; ++s) {
    const Vec2 x = draw();
    const Vec2 y = draw();
    const double f = norm.eval(x);
    const double fo = norm.polar(x);
    const Vec2 gf = norm.gradient(x);
    const Vec2 gfo = norm.polar_gradient(x);

    rep.euler = std::max({rep.euler, std::abs(gf.dot(x) - f), std::abs(gfo.dot(x) - fo)});
    rep.unit_gradient = std::max(
        {rep.unit_gradient, std::abs(norm.polar(gf) - 1.0), std::abs(norm.eval(gfo) - 1.0)});
    rep.polar_inverse =
        std::max({rep.polar_inverse, (fo * norm.gradient(gfo) - x).norm(),
                  (f * norm.polar_gradient(gf) - x).norm()});
    rep.cauchy_schwarz =
        std::max(rep.cauchy_schwarz, std::abs(x.dot(y)) - norm.eval(x) * norm.polar(y));
  }
  rep.cauchy_schwarz = std::max(rep.cauchy_schwarz, 0.0);
  rep.max_residual =
      std::max({rep.euler, rep.unit_gradient, rep.polar_inverse, rep.cauchy_schwarz});
  return rep;
}

}  // namespace finsler
