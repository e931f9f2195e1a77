#pragma once

// Anisotropic distance to the boundary, inradius, two-Wulff-shape packing
// radius and the sup-norm Rayleigh quotient.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/fem.hpp"
#include "finsler/geometry.hpp"
#include "finsler/norms.hpp"
#include "finsler/parallel.hpp"

namespace finsler {

/// Half-width of the node-offset stencil used by sup_rayleigh.
inline constexpr int kLipschitzStencilRadius = 4;

struct DistanceField {
  GridPtr grid;
  Eigen::VectorXd d;          ///< F°-distance of each interior node to the boundary nodes
  std::vector<int> nearest;   ///< grid linear index of a minimizing boundary node
  double rho_F = 0.0;
  int argmax_node = -1;
};

/// d(x) = min over boundary nodes y of F°(x - y), by exhaustive search.
/// Boundary nodes are the non-mask nodes 4-adjacent to the mask.
inline DistanceField distance_transform(GridPtr grid, const Norm& norm, int threads = 1) {
  const DomainGrid& g = *grid;
  const auto boundary = g.boundary_nodes();
  const Norm dual = norm.polar_norm();
  std::vector<Vec2> bpts;
  std::vector<int> blin;
  bpts.reserve(boundary.size());
  for (const auto& [i, j] : boundary) {
    bpts.push_back(g.point(i, j));
    blin.push_back(g.lin(i, j));
  }

  DistanceField out;
  out.grid = grid;
  out.d.resize(g.node_count());
  out.nearest.assign(g.node_count(), -1);
  parallel_for(g.node_count(), threads, [&](int b, int e) {
    for (int k = b; k < e; ++k) {
      const Vec2 x = g.node_point(k);
      double best = std::numeric_limits<double>::infinity();
      int arg = -1;
      for (std::size_t n = 0; n < bpts.size(); ++n) {
        const double v = dual.eval(x - bpts[n]);
        if (v < best) {
          best = v;
          arg = blin[n];
        }
      }
      out.d[k] = best;
      out.nearest[k] = arg;
    }
  });
  Eigen::Index arg = 0;
  out.rho_F = out.d.maxCoeff(&arg);
  out.argmax_node = static_cast<int>(arg);
  return out;
}

inline DistanceField distance_transform(const DomainGrid& grid, const Norm& norm, int threads = 1) {
  return distance_transform(std::make_shared<const DomainGrid>(grid), norm, threads);
}

struct Inradius {
  double rho = 0.0;
  int node = -1;
};

/// max of d over the nodes; for a disconnected set this is the largest
/// component inradius.
inline Inradius inradius(const DistanceField& field) { return {field.rho_F, field.argmax_node}; }

struct PackingResult {
  double rho2 = 0.0;
  std::array<int, 2> centers{-1, -1};
  Norm norm;
};

namespace detail {

struct DiameterPair {
  double value = -1.0;
  int a = -1, b = -1;
};

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/// F°-diameter of the listed points. `order` must be sorted by (x, y); the
/// diameter of a norm is attained at convex hull vertices.
inline DiameterPair polar_diameter(const std::vector<Vec2>& pts, const std::vector<int>& order,
                                   const Norm& dual) {
  DiameterPair best;
  if (order.size() < 2) return best;
  std::vector<int> hull(2 * order.size());
  std::size_t k = 0;
  for (int idx : order) {
    while (k >= 2 && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[idx]) <= 0.0) --k;
    hull[k++] = idx;
  }
  for (std::size_t n = order.size() - 1, t = k + 1; n-- > 0;) {
    const int idx = order[n];
    while (k >= t && cross(pts[hull[k - 2]], pts[hull[k - 1]], pts[idx]) <= 0.0) --k;
    hull[k++] = idx;
  }
  hull.resize(k > 1 ? k - 1 : k);
  if (hull.size() < 2) hull.assign({order.front(), order.back()});
  for (std::size_t a = 0; a < hull.size(); ++a)
    for (std::size_t b = a + 1; b < hull.size(); ++b) {
      const double v = dual.eval(pts[hull[a]] - pts[hull[b]]);
      if (v > best.value) best = {v, std::min(hull[a], hull[b]), std::max(hull[a], hull[b])};
    }
  return best;
}

}  // namespace detail

/// max over node pairs of min{d(x1), d(x2), F°(x1 - x2)/2}.
///
/// For a threshold t let D(t) be the F°-diameter of {d >= t}; the answer is
/// max_t min(t, D(t)/2) over the distinct values of d. t is increasing and
/// D(t) decreasing, so the crossing is found by binary search.
inline PackingResult two_wulff_radius(const DistanceField& field, const Norm& norm) {
  const DomainGrid& g = *field.grid;
  const int n = g.node_count();
  if (n < 2) throw DegenerateInputError("two_wulff_radius needs at least two interior nodes");
  const Norm dual = norm.polar_norm();

  std::vector<Vec2> pts(n);
  for (int k = 0; k < n; ++k) pts[k] = g.node_point(k);
  std::vector<int> by_xy(n);
  for (int k = 0; k < n; ++k) by_xy[k] = k;
  std::sort(by_xy.begin(), by_xy.end(), [&](int a, int b) {
    return pts[a][0] < pts[b][0] || (pts[a][0] == pts[b][0] && pts[a][1] < pts[b][1]);
  });

  std::vector<double> levels(field.d.data(), field.d.data() + n);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  auto diameter_at = [&](double t) {
    std::vector<int> sub;
    for (int k : by_xy)
      if (field.d[k] >= t) sub.push_back(k);
    return detail::polar_diameter(pts, sub, dual);
  };
  auto feasible = [&](std::size_t idx) { return diameter_at(levels[idx]).value >= 2.0 * levels[idx]; };

  PackingResult out;
  out.norm = norm;
  auto consider = [&](std::size_t idx) {
    const auto pair = diameter_at(levels[idx]);
    if (pair.a < 0) return;
    const double v = std::min({field.d[pair.a], field.d[pair.b], 0.5 * pair.value});
    if (v > out.rho2) {
      out.rho2 = v;
      out.centers = {pair.a, pair.b};
    }
  };

  if (!feasible(0)) {
    consider(0);
  } else {
    std::size_t lo = 0, hi = levels.size() - 1;  // feasible(lo) holds
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo + 1) / 2;
      if (feasible(mid)) lo = mid;
      else hi = mid - 1;
    }
    consider(lo);
    if (lo + 1 < levels.size()) consider(lo + 1);
  }
  if (out.centers[0] < 0) throw DegenerateInputError("no admissible pair of packing centers");
  return out;
}

/// Discrete ||F(grad phi)||_inf / ||phi||_inf.
///
/// The numerator is the F°-Lipschitz constant of phi over node pairs whose
/// offset lies in a (2r+1)^2 stencil, with phi = 0 on every non-mask node.
/// For phi = d_F it equals 1 at any resolution, matching the continuous
/// identity; the per-triangle gradient norm is not used because P1
/// interpolation across the ridge of d_F inflates it by up to sqrt(2).
inline double sup_rayleigh(const ScalarField& phi, const Norm& norm,
                           int stencil_radius = kLipschitzStencilRadius) {
  const DomainGrid& g = phi.grid();
  const double denom = phi.values.size() ? phi.values.cwiseAbs().maxCoeff() : 0.0;
  if (!(denom > 0.0)) throw ZeroFieldError("sup_rayleigh of an identically zero field");
  const Norm dual = norm.polar_norm();

  struct Offset {
    int di, dj;
    double inv_len;
  };
  std::vector<Offset> offsets;
  for (int dj = -stencil_radius; dj <= stencil_radius; ++dj)
    for (int di = -stencil_radius; di <= stencil_radius; ++di)
      if (di != 0 || dj != 0) offsets.push_back({di, dj, 1.0 / dual.eval(g.h() * Vec2(di, dj))});

  double lip = 0.0;
  for (int k = 0; k < g.node_count(); ++k) {
    const auto [i, j] = g.ij(k);
    const double v = phi.values[k];
    for (const auto& o : offsets) {
      const int n = g.index(i + o.di, j + o.dj);
      const double w = n >= 0 ? phi.values[n] : 0.0;
      lip = std::max(lip, std::abs(v - w) * o.inv_len);
    }
  }
  return lip / denom;
}

/// max over triangles of F(grad phi) divided by max |phi| (the plain P1 version).
inline double sup_rayleigh_p1(const ScalarField& phi, const Norm& norm) {
  const double denom = phi.values.size() ? phi.values.cwiseAbs().maxCoeff() : 0.0;
  if (!(denom > 0.0)) throw ZeroFieldError("sup_rayleigh of an identically zero field");
  double num = 0.0;
  for (const auto& g : triangle_gradients(phi)) num = std::max(num, norm.eval(g));
  return num / denom;
}

inline ScalarField as_field(const DistanceField& field, MeshPtr mesh) {
  if (mesh->node_count() != field.grid->node_count())
    throw ConfigError("distance field and mesh disagree on node count");
  return ScalarField(std::move(mesh), field.d);
}

struct UnitGradientStats {
  int considered = 0;
  int within = 0;
  double fraction = 0.0;
};

/// Fraction of triangles with |F(grad d_F) - 1| <= tol among triangles whose
/// vertices are all interior and whose vertices' nearest boundary nodes lie
/// within `spread` cells of each other (away from the ridge of d_F).
inline UnitGradientStats unit_gradient_fraction(const DistanceField& field, const Triangulation& mesh,
                                                const Norm& norm, double tol = 0.1,
                                                double spread = 3.0) {
  const DomainGrid& g = *field.grid;
  const double limit = spread * g.h() * (1.0 + 1e-9);
  auto loc = [&](int lin) { return g.point(lin % g.nx(), lin / g.nx()); };
  UnitGradientStats s;
  for (const auto& t : mesh.triangles()) {
    if (t.node[0] < 0 || t.node[1] < 0 || t.node[2] < 0) continue;
    bool ridge = false;
    for (int a = 0; a < 3 && !ridge; ++a)
      for (int b = a + 1; b < 3 && !ridge; ++b)
        ridge = (loc(field.nearest[t.node[a]]) - loc(field.nearest[t.node[b]])).norm() > limit;
    if (ridge) continue;
    ++s.considered;
    if (std::abs(norm.eval(mesh.gradient(t, field.d)) - 1.0) <= tol) ++s.within;
  }
  s.fraction = s.considered ? double(s.within) / s.considered : 0.0;
  return s;
}

}  // namespace finsler
