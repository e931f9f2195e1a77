#pragma once

// P1 finite elements on the grid triangulation and the discrete Rayleigh
// functional  R_p(u) = sum_T |T| F^p(grad u|_T) / sum_i h^2 |u_i|^p.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/geometry.hpp"
#include "finsler/norms.hpp"

namespace finsler {

/// Above this exponent energies and masses are evaluated as S^p * sum (x/S)^p.
inline constexpr double kScaledEnergyExponent = 8.0;

/// Half of a grid cell. Lower triangles have vertices (i,j), (i+1,j),
/// (i+1,j+1); upper triangles (i,j), (i+1,j+1), (i,j+1). Vertex entries are
/// interior node indices, -1 for Dirichlet nodes.
struct Triangle {
  std::array<int, 3> node;
  bool lower;
};

/// Every cell touching at least one interior node, split along the main
/// diagonal. The gradient of the P1 interpolant on a lower triangle is
/// ((u_B - u_A)/h, (u_C - u_B)/h); on an upper one ((u_C - u_D)/h, (u_D - u_A)/h).
class Triangulation {
 public:
  explicit Triangulation(GridPtr grid) : grid_(std::move(grid)) {
    const DomainGrid& g = *grid_;
    for (int j = 0; j + 1 < g.ny(); ++j) {
      for (int i = 0; i + 1 < g.nx(); ++i) {
        const int a = g.index(i, j), b = g.index(i + 1, j);
        const int c = g.index(i + 1, j + 1), d = g.index(i, j + 1);
        if (a < 0 && b < 0 && c < 0 && d < 0) continue;
        if (a >= 0 || b >= 0 || c >= 0) triangles_.push_back({{a, b, c}, true});
        if (a >= 0 || c >= 0 || d >= 0) triangles_.push_back({{a, c, d}, false});
      }
    }
  }

  const DomainGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  int node_count() const { return grid_->node_count(); }
  double h() const { return grid_->h(); }
  double triangle_area() const { return 0.5 * h() * h(); }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  /// d(g_x)/du_k and d(g_y)/du_k for the three local vertices.
  static std::array<double, 3> dx_coeff(const Triangle& t) {
    return t.lower ? std::array<double, 3>{-1.0, 1.0, 0.0} : std::array<double, 3>{0.0, 1.0, -1.0};
  }
  static std::array<double, 3> dy_coeff(const Triangle& t) {
    return t.lower ? std::array<double, 3>{0.0, -1.0, 1.0} : std::array<double, 3>{-1.0, 0.0, 1.0};
  }

  Vec2 gradient(const Triangle& t, const Eigen::VectorXd& u) const {
    const double v0 = t.node[0] >= 0 ? u[t.node[0]] : 0.0;
    const double v1 = t.node[1] >= 0 ? u[t.node[1]] : 0.0;
    const double v2 = t.node[2] >= 0 ? u[t.node[2]] : 0.0;
    const double inv_h = 1.0 / h();
    if (t.lower) return {(v1 - v0) * inv_h, (v2 - v1) * inv_h};
    return {(v1 - v2) * inv_h, (v2 - v0) * inv_h};
  }

  /// Accumulates the transpose of the gradient operator: out_k += <c_k, w>.
  void scatter(const Triangle& t, const Vec2& w, Eigen::VectorXd& out) const {
    const auto cx = dx_coeff(t);
    const auto cy = dy_coeff(t);
    const double inv_h = 1.0 / h();
    for (int l = 0; l < 3; ++l)
      if (t.node[l] >= 0) out[t.node[l]] += (cx[l] * w[0] + cy[l] * w[1]) * inv_h;
  }

 private:
  GridPtr grid_;
  std::vector<Triangle> triangles_;
};

using MeshPtr = std::shared_ptr<const Triangulation>;

inline MeshPtr make_mesh(DomainGrid grid) {
  return std::make_shared<const Triangulation>(std::make_shared<const DomainGrid>(std::move(grid)));
}

inline MeshPtr make_mesh(GridPtr grid) { return std::make_shared<const Triangulation>(std::move(grid)); }

/// Node values on the interior nodes of a triangulation; zero elsewhere.
struct ScalarField {
  MeshPtr mesh;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(MeshPtr m, Eigen::VectorXd v) : mesh(std::move(m)), values(std::move(v)) {
    if (!mesh || values.size() != mesh->node_count())
      throw ConfigError("field size does not match its triangulation");
  }

  static ScalarField zeros(MeshPtr m) {
    const int n = m->node_count();
    return ScalarField(std::move(m), Eigen::VectorXd::Zero(n));
  }

  /// Samples f at the interior nodes.
  template <class Fn>
  static ScalarField sample(MeshPtr m, Fn&& f) {
    Eigen::VectorXd v(m->node_count());
    for (int k = 0; k < m->node_count(); ++k) v[k] = f(m->grid().node_point(k));
    return ScalarField(std::move(m), std::move(v));
  }

  const DomainGrid& grid() const { return mesh->grid(); }
};

/// Moves a field onto an aligned grid by node position; nodes of the target
/// that the source does not cover get 0.
inline ScalarField embed(const ScalarField& u, MeshPtr target) {
  const DomainGrid& src = u.grid();
  const DomainGrid& dst = target->grid();
  if (!src.aligned_with(dst)) throw ConfigError("embed requires grids on the same lattice");
  const Vec2 shift = (src.origin() - dst.origin()) / dst.h();
  const int di = static_cast<int>(std::lround(shift[0]));
  const int dj = static_cast<int>(std::lround(shift[1]));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dst.node_count());
  for (int k = 0; k < src.node_count(); ++k) {
    const auto [i, j] = src.ij(k);
    const int t = dst.index(i + di, j + dj);
    if (t >= 0) v[t] = u.values[k];
  }
  return ScalarField(std::move(target), std::move(v));
}

namespace detail {

inline double norm_sq_plus(const Norm& norm, const Vec2& g, double eps) {
  const double f = norm.eval(g);
  return f * f + eps * eps;
}

inline double raw_energy(const Triangulation& mesh, const Eigen::VectorXd& u, const Norm& norm,
                         double p, double eps) {
  const auto& tris = mesh.triangles();
  if (p >= kScaledEnergyExponent) {
    std::vector<double> s2(tris.size());
    double smax = 0.0;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      s2[t] = norm_sq_plus(norm, mesh.gradient(tris[t], u), eps);
      smax = std::max(smax, s2[t]);
    }
    if (smax == 0.0) return 0.0;
    double sum = 0.0;
    for (double v : s2) sum += std::pow(v / smax, 0.5 * p);
    return mesh.triangle_area() * std::pow(smax, 0.5 * p) * sum;
  }
  double sum = 0.0;
  for (const auto& t : tris) sum += std::pow(norm_sq_plus(norm, mesh.gradient(t, u), eps), 0.5 * p);
  return mesh.triangle_area() * sum;
}

inline Eigen::VectorXd raw_energy_gradient(const Triangulation& mesh, const Eigen::VectorXd& u,
                                           const Norm& norm, double p, double eps) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh.node_count());
  const double area = mesh.triangle_area();
  for (const auto& t : mesh.triangles()) {
    const Vec2 g = mesh.gradient(t, u);
    const double s2 = norm_sq_plus(norm, g, eps);
    if (s2 == 0.0) continue;
    const double w = area * p * std::pow(s2, 0.5 * (p - 2.0));
    mesh.scatter(t, w * norm.flux(g), out);
  }
  return out;
}

inline double raw_mass(const Triangulation& mesh, const Eigen::VectorXd& u, double p) {
  const double h2 = mesh.h() * mesh.h();
  if (p >= kScaledEnergyExponent) {
    const double m = u.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    return h2 * std::pow(m, p) * (u.cwiseAbs() / m).array().pow(p).sum();
  }
  return h2 * u.cwiseAbs().array().pow(p).sum();
}

inline Eigen::VectorXd raw_mass_gradient(const Triangulation& mesh, const Eigen::VectorXd& u,
                                         double p) {
  const double h2 = mesh.h() * mesh.h();
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i)
    out[i] = u[i] == 0.0 ? 0.0 : p * h2 * std::copysign(std::pow(std::abs(u[i]), p - 1.0), u[i]);
  return out;
}

inline void check_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("exponent p must lie in (1, inf)");
}

}  // namespace detail

/// Constant gradient of the P1 interpolant on every triangle.
inline std::vector<Vec2> triangle_gradients(const ScalarField& u) {
  const auto& mesh = *u.mesh;
  std::vector<Vec2> out;
  out.reserve(mesh.triangles().size());
  for (const auto& t : mesh.triangles()) out.push_back(mesh.gradient(t, u.values));
  return out;
}

/// sum_T |T| (F^2(grad u) + eps^2)^(p/2).
inline double energy_p(const ScalarField& u, const Norm& norm, double p, double eps = 0.0) {
  detail::check_exponent(p);
  return detail::raw_energy(*u.mesh, u.values, norm, p, eps);
}

/// Exact gradient of energy_p with respect to the node values.
inline ScalarField energy_gradient(const ScalarField& u, const Norm& norm, double p,
                                   double eps = 0.0) {
  detail::check_exponent(p);
  return ScalarField(u.mesh, detail::raw_energy_gradient(*u.mesh, u.values, norm, p, eps));
}

/// Lumped quadrature sum_i h^2 |u_i|^p.
inline double mass_p(const ScalarField& u, double p) {
  detail::check_exponent(p);
  return detail::raw_mass(*u.mesh, u.values, p);
}

inline ScalarField mass_gradient(const ScalarField& u, double p) {
  detail::check_exponent(p);
  return ScalarField(u.mesh, detail::raw_mass_gradient(*u.mesh, u.values, p));
}

/// Left side of the weak eigenvalue equation,
///   sum_T |T| < F^{p-1}(grad u) grad F(grad u), grad v >,
/// assembled directly from the flux rather than through energy_gradient.
inline double weak_form(const ScalarField& u, const ScalarField& v, const Norm& norm, double p) {
  detail::check_exponent(p);
  const auto& mesh = *u.mesh;
  double sum = 0.0;
  for (const auto& t : mesh.triangles()) {
    const Vec2 gu = mesh.gradient(t, u.values);
    const double f = norm.eval(gu);
    if (f == 0.0) continue;
    const Vec2 gv = mesh.gradient(t, v.values);
    sum += std::pow(f, p - 1.0) * norm.gradient(gu).dot(gv);
  }
  return mesh.triangle_area() * sum;
}

/// sum_T |T| w_T (grad u)^T diag(q) (grad u) as a sparse matrix over the
/// interior nodes. With w = 1 and q the quadratic weights of the norm this is
/// the stiffness matrix of the p = 2 energy (energy = u^T K u).
inline Eigen::SparseMatrix<double> weighted_stiffness(const Triangulation& mesh,
                                                      const std::vector<double>& weights,
                                                      const Vec2& q) {
  const auto& tris = mesh.triangles();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(tris.size() * 9);
  const double scale = mesh.triangle_area() / (mesh.h() * mesh.h());
  for (std::size_t n = 0; n < tris.size(); ++n) {
    const auto& t = tris[n];
    const auto cx = Triangulation::dx_coeff(t);
    const auto cy = Triangulation::dy_coeff(t);
    const double w = scale * weights[n];
    for (int a = 0; a < 3; ++a) {
      if (t.node[a] < 0) continue;
      for (int b = 0; b < 3; ++b) {
        if (t.node[b] < 0) continue;
        const double v = w * (q[0] * cx[a] * cx[b] + q[1] * cy[a] * cy[b]);
        if (v != 0.0) trip.emplace_back(t.node[a], t.node[b], v);
      }
    }
  }
  Eigen::SparseMatrix<double> k(mesh.node_count(), mesh.node_count());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

inline Eigen::SparseMatrix<double> stiffness(const Triangulation& mesh, const Norm& norm) {
  return weighted_stiffness(mesh, std::vector<double>(mesh.triangles().size(), 1.0),
                            norm.quadratic_weights());
}

}  // namespace finsler
