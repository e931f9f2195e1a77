#pragma once

// Rasterized bounded open sets on uniform grids.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include "finsler/error.hpp"
#include "finsler/norms.hpp"

namespace finsler {

struct RectanglePrimitive {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

  bool contains(const Vec2& p) const { return x0 < p[0] && p[0] < x1 && y0 < p[1] && p[1] < y1; }
};

struct DiskPrimitive {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;

  bool contains(const Vec2& p) const { return (p - center).norm() < radius; }
};

enum class PrimitiveMode { add, subtract };

using PrimitiveShape = std::variant<RectanglePrimitive, WulffShape, DiskPrimitive>;

struct Primitive {
  PrimitiveShape shape;
  PrimitiveMode mode = PrimitiveMode::add;

  bool contains(const Vec2& p) const {
    return std::visit([&](const auto& s) { return s.contains(p); }, shape);
  }
};

/// Axis-aligned box [lo, hi].
struct Box {
  Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
  Vec2 hi = Vec2::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return !(lo[0] <= hi[0] && lo[1] <= hi[1]); }
  void extend(const Vec2& a, const Vec2& b) {
    lo = lo.cwiseMin(a);
    hi = hi.cwiseMax(b);
  }
};

inline Box bounding_box(const Primitive& prim) {
  Box box;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RectanglePrimitive>) {
          box.extend(Vec2(s.x0, s.y0), Vec2(s.x1, s.y1));
        } else if constexpr (std::is_same_v<T, WulffShape>) {
          const Vec2 e = s.half_extent();
          box.extend(s.center - e, s.center + e);
        } else {
          box.extend(s.center - Vec2::Constant(s.radius), s.center + Vec2::Constant(s.radius));
        }
      },
      prim.shape);
  return box;
}

/// Signed primitives composed left to right: add is union, subtract is
/// set difference with the open primitive.
struct ShapeSpec {
  std::vector<Primitive> primitives;

  ShapeSpec& add(PrimitiveShape s) {
    primitives.push_back({std::move(s), PrimitiveMode::add});
    return *this;
  }
  ShapeSpec& subtract(PrimitiveShape s) {
    primitives.push_back({std::move(s), PrimitiveMode::subtract});
    return *this;
  }

  bool contains(const Vec2& p) const {
    bool in = false;
    for (const auto& prim : primitives) {
      if (prim.mode == PrimitiveMode::add) {
        in = in || prim.contains(p);
      } else if (in) {
        in = !prim.contains(p);
      }
    }
    return in;
  }

  /// Box enclosing every add primitive (empty if there is none).
  Box bounds() const {
    Box box;
    for (const auto& prim : primitives) {
      if (prim.mode != PrimitiveMode::add) continue;
      const Box b = bounding_box(prim);
      box.extend(b.lo, b.hi);
    }
    return box;
  }

  void validate() const {
    const bool any_add = std::any_of(primitives.begin(), primitives.end(),
                                     [](const Primitive& p) { return p.mode == PrimitiveMode::add; });
    if (!any_add) throw ConfigError("shape spec needs at least one add primitive");
    for (const auto& prim : primitives) {
      const Box b = bounding_box(prim);
      if (b.empty() || !b.lo.allFinite() || !b.hi.allFinite())
        throw ConfigError("shape primitive is empty or unbounded");
    }
  }
};

inline ShapeSpec rectangle(double x0, double y0, double x1, double y1) {
  ShapeSpec s;
  s.add(RectanglePrimitive{x0, y0, x1, y1});
  return s;
}

inline ShapeSpec unit_square() { return rectangle(0.0, 0.0, 1.0, 1.0); }

inline ShapeSpec disk(Vec2 center, double radius) {
  ShapeSpec s;
  s.add(DiskPrimitive{center, radius});
  return s;
}

inline ShapeSpec wulff(const Norm& norm, Vec2 center, double radius) {
  ShapeSpec s;
  s.add(WulffShape{center, radius, norm});
  return s;
}

/// Every coordinate and radius multiplied by t.
inline ShapeSpec scale_domain(const ShapeSpec& spec, double t) {
  if (!(t > 0.0)) throw ConfigError("scale factor must be positive");
  ShapeSpec out = spec;
  for (auto& prim : out.primitives) {
    std::visit(
        [&](auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, RectanglePrimitive>) {
            s.x0 *= t, s.y0 *= t, s.x1 *= t, s.y1 *= t;
          } else {
            s.center *= t;
            s.radius *= t;
          }
        },
        prim.shape);
  }
  return out;
}

/// Boolean node mask on a uniform grid with 4-connected component labels.
///
/// Node (i, j) sits at origin + h (i, j). Nodes outside the mask carry
/// homogeneous Dirichlet data. The outermost ring of the grid is always
/// outside the mask.
class DomainGrid {
 public:
  DomainGrid(Vec2 origin, double h, int nx, int ny, std::vector<std::uint8_t> mask)
      : origin_(std::move(origin)), h_(h), nx_(nx), ny_(ny), mask_(std::move(mask)) {
    if (!(h_ > 0.0) || nx_ < 1 || ny_ < 1 || mask_.size() != std::size_t(nx_) * ny_)
      throw ConfigError("inconsistent grid dimensions");
    for (int i = 0; i < nx_; ++i) {
      mask_[lin(i, 0)] = 0;
      mask_[lin(i, ny_ - 1)] = 0;
    }
    for (int j = 0; j < ny_; ++j) {
      mask_[lin(0, j)] = 0;
      mask_[lin(nx_ - 1, j)] = 0;
    }
    index_.assign(mask_.size(), -1);
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        if (mask_[lin(i, j)]) {
          index_[lin(i, j)] = static_cast<int>(nodes_.size());
          nodes_.push_back(lin(i, j));
        }
    label_components();
  }

  const Vec2& origin() const { return origin_; }
  double h() const { return h_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  int lin(int i, int j) const { return j * nx_ + i; }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  bool inside(int i, int j) const { return in_range(i, j) && mask_[lin(i, j)] != 0; }

  /// Interior index of node (i, j), or -1 when it is not in the mask.
  int index(int i, int j) const { return in_range(i, j) ? index_[lin(i, j)] : -1; }

  int node_count() const { return static_cast<int>(nodes_.size()); }
  std::pair<int, int> ij(int k) const { return {nodes_[k] % nx_, nodes_[k] / nx_}; }
  Vec2 point(int i, int j) const { return origin_ + h_ * Vec2(i, j); }
  Vec2 node_point(int k) const {
    const auto [i, j] = ij(k);
    return point(i, j);
  }

  const std::vector<std::uint8_t>& mask() const { return mask_; }

  int component_count() const { return component_count_; }
  int component_id(int k) const { return component_[k]; }
  const std::vector<int>& component_ids() const { return component_; }

  /// Interior node with at least one 4-neighbour outside the mask.
  bool boundary_adjacent(int k) const {
    const auto [i, j] = ij(k);
    return !inside(i - 1, j) || !inside(i + 1, j) || !inside(i, j - 1) || !inside(i, j + 1);
  }

  /// Non-mask nodes with a 4-neighbour in the mask, as (i, j) pairs in
  /// row-major order.
  std::vector<std::pair<int, int>> boundary_nodes() const {
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        if (!inside(i, j) &&
            (inside(i - 1, j) || inside(i + 1, j) || inside(i, j - 1) || inside(i, j + 1)))
          out.emplace_back(i, j);
    return out;
  }

  /// A grid on the same lattice whose mask keeps only interior nodes k with
  /// keep[k] true.
  DomainGrid restricted(const std::vector<std::uint8_t>& keep) const {
    if (keep.size() != nodes_.size()) throw ConfigError("restriction mask size mismatch");
    std::vector<std::uint8_t> m(mask_.size(), 0);
    for (int k = 0; k < node_count(); ++k)
      if (keep[k]) m[nodes_[k]] = 1;
    return DomainGrid(origin_, h_, nx_, ny_, std::move(m));
  }

  /// Same lattice (origin and spacing) as another grid, up to an integer shift.
  bool aligned_with(const DomainGrid& other) const {
    if (std::abs(h_ - other.h_) > 1e-12 * h_) return false;
    const Vec2 d = (other.origin_ - origin_) / h_;
    return std::abs(d[0] - std::round(d[0])) < 1e-6 && std::abs(d[1] - std::round(d[1])) < 1e-6;
  }

 private:
  void label_components() {
    component_.assign(nodes_.size(), -1);
    component_count_ = 0;
    std::vector<int> stack;
    for (int k = 0; k < node_count(); ++k) {
      if (component_[k] >= 0) continue;
      component_[k] = component_count_;
      stack.push_back(k);
      while (!stack.empty()) {
        const int c = stack.back();
        stack.pop_back();
        const auto [i, j] = ij(c);
        const std::array<std::pair<int, int>, 4> nb{{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
        for (const auto& [a, b] : nb) {
          const int n = index(a, b);
          if (n >= 0 && component_[n] < 0) {
            component_[n] = component_count_;
            stack.push_back(n);
          }
        }
      }
      ++component_count_;
    }
  }

  Vec2 origin_;
  double h_;
  int nx_, ny_;
  std::vector<std::uint8_t> mask_;
  std::vector<int> index_;
  std::vector<int> nodes_;
  std::vector<int> component_;
  int component_count_ = 0;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

/// Node (i, j) is interior iff its point and the four points offset by half
/// a cell along the axes all lie in the composed set. The lattice is anchored
/// at integer multiples of h, so rasterizations at equal h are aligned.
inline DomainGrid rasterize(const ShapeSpec& spec, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing must be positive");
  spec.validate();
  const Box box = spec.bounds();
  const long i0 = static_cast<long>(std::floor(box.lo[0] / h)) - 1;
  const long j0 = static_cast<long>(std::floor(box.lo[1] / h)) - 1;
  const long i1 = static_cast<long>(std::ceil(box.hi[0] / h)) + 1;
  const long j1 = static_cast<long>(std::ceil(box.hi[1] / h)) + 1;
  const long nx = i1 - i0 + 1;
  const long ny = j1 - j0 + 1;
  if (nx * ny > 64L * 1024 * 1024) throw ConfigError("grid too large for the requested spacing");

  const Vec2 origin(double(i0) * h, double(j0) * h);
  const double half = 0.5 * h;
  std::vector<std::uint8_t> mask(std::size_t(nx * ny), 0);
  for (long j = 1; j + 1 < ny; ++j) {
    for (long i = 1; i + 1 < nx; ++i) {
      const Vec2 p(double(i0 + i) * h, double(j0 + j) * h);
      const bool in = spec.contains(p) && spec.contains(p + Vec2(half, 0.0)) &&
                      spec.contains(p - Vec2(half, 0.0)) && spec.contains(p + Vec2(0.0, half)) &&
                      spec.contains(p - Vec2(0.0, half));
      mask[std::size_t(j * nx + i)] = in ? 1 : 0;
    }
  }
  DomainGrid grid(origin, h, int(nx), int(ny), std::move(mask));
  if (grid.node_count() == 0) throw EmptyDomainError("rasterization produced no interior node");
  return grid;
}

/// Node count times h^2.
inline double measure(const DomainGrid& grid) { return grid.node_count() * grid.h() * grid.h(); }

/// One grid per 4-connected component, ordered by component id.
inline std::vector<DomainGrid> components(const DomainGrid& grid) {
  std::vector<DomainGrid> out;
  out.reserve(grid.component_count());
  for (int c = 0; c < grid.component_count(); ++c) {
    std::vector<std::uint8_t> keep(grid.node_count(), 0);
    for (int k = 0; k < grid.node_count(); ++k) keep[k] = grid.component_id(k) == c ? 1 : 0;
    out.push_back(grid.restricted(keep));
  }
  return out;
}

}  // namespace finsler
