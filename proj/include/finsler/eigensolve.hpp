#pragma once

// First and second Dirichlet eigenvalues of the anisotropic p-Laplacian on a
// rasterized open set.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "finsler/distance.hpp"
#include "finsler/error.hpp"
#include "finsler/fem.hpp"
#include "finsler/geometry.hpp"
#include "finsler/linear.hpp"
#include "finsler/log.hpp"
#include "finsler/norms.hpp"

namespace finsler {

struct EigenOptions {
  int max_iter = 20000;                               ///< descent iterations, all stages together
  double tol = 1e-8;                                  ///< relative residual of the final stage
  std::vector<double> epsilon_schedule{1e-2, 1e-4, 0.0};
  double stage_tol = 1e-6;                            ///< residual target of the regularized stages
  int max_sweeps = 4;                                 ///< interface sweeps in solve_lambda2
  int chunk = 16;                                     ///< interface nodes moved per trial
  double degeneracy_gap = 0.05;                       ///< relative lambda_3 - lambda_2 gap for rotated starts
  int rotations = 8;                                  ///< starts spread over a nearly degenerate eigenspace
  double stagnation_factor = 100.0;                   ///< accepted residual / tol once R stops decreasing
};

struct EigenResult {
  double lambda = 0.0;
  ScalarField u;  ///< mass_p(u, p) = 1, nonnegative for first eigenfunctions
  double p = 2.0;
  int iterations = 0;
  double residual = 0.0;
  int nodal_count = 0;
};

struct NodalDomains {
  int count = 0;
  std::vector<int> label;  ///< per interior node, -1 where |u| <= theta
};

/// 4-connected components of {u > theta} and {u < -theta}, with
/// theta = threshold * max|u|.
inline NodalDomains nodal_domains(const ScalarField& u, double threshold = 1e-6) {
  const DomainGrid& g = u.grid();
  const int n = g.node_count();
  NodalDomains out;
  out.label.assign(n, -1);
  if (n == 0) return out;
  const double theta = threshold * u.values.cwiseAbs().maxCoeff();
  auto sign_of = [&](int k) { return u.values[k] > theta ? 1 : (u.values[k] < -theta ? -1 : 0); };
  std::vector<int> stack;
  for (int k = 0; k < n; ++k) {
    const int s = sign_of(k);
    if (s == 0 || out.label[k] >= 0) continue;
    out.label[k] = out.count;
    stack.push_back(k);
    while (!stack.empty()) {
      const int c = stack.back();
      stack.pop_back();
      const auto [i, j] = g.ij(c);
      for (const auto& [a, b] : {std::pair{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}) {
        const int nb = g.index(a, b);
        if (nb >= 0 && out.label[nb] < 0 && sign_of(nb) == s) {
          out.label[nb] = out.count;
          stack.push_back(nb);
        }
      }
    }
    ++out.count;
  }
  return out;
}

/// energy_p(u, ., p, 0) / mass_p(u, p).
inline double rayleigh_quotient(const ScalarField& u, const Norm& norm, double p) {
  const double m = mass_p(u, p);
  if (!(m > 0.0)) throw ZeroFieldError("Rayleigh quotient of an identically zero field");
  return energy_p(u, norm, p, 0.0) / m;
}

namespace detail {

/// Weighted stiffness sum_T |T| w_T G_T^T diag(q) G_T with a fixed pattern,
/// refactorized in place when the weights change.
class WeightedStiffness {
 public:
  WeightedStiffness(const Triangulation& mesh, const Vec2& q) : mesh_(mesh), q_(q) {
    const std::vector<double> ones(mesh.triangles().size(), 1.0);
    matrix_ = weighted_stiffness(mesh, ones, q);
    matrix_.makeCompressed();
    slots_.resize(mesh.triangles().size());
    for (std::size_t t = 0; t < mesh.triangles().size(); ++t) {
      const auto& tri = mesh.triangles()[t];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          int slot = -1;
          if (tri.node[a] >= 0 && tri.node[b] >= 0) {
            const auto* outer = matrix_.outerIndexPtr();
            const auto* inner = matrix_.innerIndexPtr();
            const int col = tri.node[b];
            const auto* first = inner + outer[col];
            const auto* last = inner + outer[col + 1];
            const auto* pos = std::lower_bound(first, last, tri.node[a]);
            if (pos != last && *pos == tri.node[a]) slot = static_cast<int>(pos - inner);
          }
          slots_[t][a * 3 + b] = slot;
        }
    }
    chol_.analyzePattern(matrix_);
  }

  void set_weights(const std::vector<double>& w) {
    double* values = matrix_.valuePtr();
    std::fill(values, values + matrix_.nonZeros(), 0.0);
    const double scale = mesh_.triangle_area() / (mesh_.h() * mesh_.h());
    for (std::size_t t = 0; t < slots_.size(); ++t) {
      const auto& tri = mesh_.triangles()[t];
      const auto cx = Triangulation::dx_coeff(tri);
      const auto cy = Triangulation::dy_coeff(tri);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int slot = slots_[t][a * 3 + b];
          if (slot >= 0)
            values[slot] += scale * w[t] * (q_[0] * cx[a] * cx[b] + q_[1] * cy[a] * cy[b]);
        }
    }
    chol_.factorize(matrix_);
    if (chol_.info() != Eigen::Success) throw ConvergenceError("preconditioner factorization failed", 0, 0.0);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& r) const { return chol_.solve(r); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix_ * x; }

 private:
  const Triangulation& mesh_;
  Vec2 q_;
  Eigen::SparseMatrix<double> matrix_;
  std::vector<std::array<int, 9>> slots_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol_;
};

struct DescentState {
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  bool stagnated = false;  ///< neither R nor the residual made progress
};

/// Iterations without a decrease of R beyond rounding or a new smallest
/// residual before a stage stops.
inline constexpr int kStagnationWindow = 30;

/// Smallest positive regularization used for p < 2.
inline constexpr double kFinestEpsilon = 1e-8;

inline void normalize_mass(const Triangulation& mesh, Eigen::VectorXd& u, double p) {
  const double m = raw_mass(mesh, u, p);
  if (!(m > 0.0) || !std::isfinite(m)) throw ZeroFieldError("eigenfunction iterate vanished");
  u *= std::pow(m, -1.0 / p);
}

/// Variable-metric projected gradient descent of R_p on {mass_p = 1}.
///
/// The metric is the stiffness matrix weighted by (F^2 + eps^2)^((p-2)/2)
/// at the current iterate; with the step 1/p this is one step of the
/// nonlinear inverse power method. Step lengths start from a
/// Barzilai-Borwein estimate in that metric and are cut back until the
/// Armijo condition holds.
inline DescentState descend(const Triangulation& mesh, const Norm& norm, double p, double eps,
                            double tol, int max_iter, Eigen::VectorXd& u) {
  DescentState st;
  WeightedStiffness metric(mesh, norm.quadratic_weights());
  const auto& tris = mesh.triangles();
  std::vector<double> weights(tris.size(), 1.0);

  auto refresh_metric = [&](const Eigen::VectorXd& v) {
    if (p == 2.0 && st.iterations > 0) return;
    if (p != 2.0) {
      double fmax = 0.0;
      std::vector<double> s2(tris.size());
      for (std::size_t t = 0; t < tris.size(); ++t) {
        const double f = norm.eval(mesh.gradient(tris[t], v));
        s2[t] = f * f + eps * eps;
        fmax = std::max(fmax, f);
      }
      const double e = 0.5 * (p - 2.0);
      if (p > 2.0) {
        double wmax = 0.0;
        for (std::size_t t = 0; t < tris.size(); ++t) wmax = std::max(wmax, weights[t] = std::pow(s2[t], e));
        for (double& w : weights) w = std::max(w, 1e-12 * wmax);
      } else {
        const double cap = std::pow(std::max(1e-12 * fmax * fmax, eps * eps), e);
        for (std::size_t t = 0; t < tris.size(); ++t)
          weights[t] = s2[t] > 0.0 ? std::min(std::pow(s2[t], e), cap) : cap;
      }
    }
    metric.set_weights(weights);
  };

  normalize_mass(mesh, u, p);
  double r = raw_energy(mesh, u, norm, p, eps);
  Eigen::VectorXd grad, prev_u, prev_grad;
  double alpha_bb = 0.0;
  int stalled = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  const double round = 64.0 * std::numeric_limits<double>::epsilon();

  while (true) {
    // Gradient of u -> E(u / M(u)^(1/p)) at M(u) = 1; the multiplier <grad E, u>/p
    // equals E when eps = 0.
    const Eigen::VectorXd gm = raw_mass_gradient(mesh, u, p);
    const Eigen::VectorXd ge = raw_energy_gradient(mesh, u, norm, p, eps);
    const double mu = ge.dot(u) / p;
    grad = ge - mu * gm;
    const double scale = mu * gm.cwiseAbs().maxCoeff();
    st.residual = scale > 0.0 ? grad.cwiseAbs().maxCoeff() / scale : 0.0;
    if (st.residual <= tol || st.iterations >= max_iter) return st;
    // Near the minimum R is flat to rounding while the residual still falls.
    const bool residual_progress = st.residual < 0.99 * best_residual;
    best_residual = std::min(best_residual, st.residual);

    if (prev_u.size()) {
      const Eigen::VectorXd s = u - prev_u;
      const Eigen::VectorXd y = grad - prev_grad;
      const double sy = s.dot(y);
      const double sps = s.dot(metric.apply(s));
      alpha_bb = sy > 0.0 ? std::clamp(sps / sy, 0.25 / p, 4.0 / p) : 1.0 / p;
    }
    refresh_metric(u);
    const Eigen::VectorXd dir = -metric.solve(grad);
    const double slope = grad.dot(dir);
    if (!(slope < 0.0)) return st;

    // Try the inverse-power step first, then the BB estimate when it differs.
    std::vector<double> starts{1.0 / p};
    if (alpha_bb > 0.0 && std::abs(alpha_bb - 1.0 / p) > 1e-3 / p) starts.insert(starts.begin(), alpha_bb);

    bool accepted = false;
    Eigen::VectorXd trial;
    double r_trial = 0.0;
    for (double alpha0 : starts) {
      double alpha = alpha0;
      for (int bt = 0; bt < 40 && !accepted; ++bt, alpha *= 0.5) {
        trial = u + alpha * dir;
        const double m = raw_mass(mesh, trial, p);
        if (!(m > 0.0) || !std::isfinite(m)) continue;
        trial *= std::pow(m, -1.0 / p);
        r_trial = raw_energy(mesh, trial, norm, p, eps);
        if (std::isfinite(r_trial) && r_trial <= r + 1e-4 * alpha * slope + round * r)
          accepted = true;
      }
      if (accepted) break;
    }
    ++st.iterations;
    if (!accepted) return st;

    stalled = r_trial >= r * (1.0 - round) && !residual_progress ? stalled + 1 : 0;
    prev_u = u;
    prev_grad = grad;
    u = std::move(trial);
    r = r_trial;
    if (stalled >= kStagnationWindow) {
      st.stagnated = true;
      return st;
    }
  }
}

inline Eigen::VectorXd initial_guess(const Triangulation& mesh, const Norm& norm) {
  const Norm oracle = norm.is_quadratic() ? norm : Norm::euclidean();
  auto pairs = linear_eigenpairs(mesh, oracle, 1);
  return pairs.vectors.front().cwiseAbs();
}

}  // namespace detail

/// lambda_1(p, Omega) by minimizing the discrete Rayleigh quotient.
///
/// The iterate starts from the p = 2 eigenfunction (of the norm itself for
/// quadratic norms, Euclidean otherwise) or from `init`, and runs through the
/// regularization schedule; the reported eigenvalue is the unregularized
/// quotient of the final iterate. A start from `init` that does not converge
/// is repeated once from the default guess.
inline EigenResult solve_lambda1(MeshPtr mesh, const Norm& norm, double p, const EigenOptions& opts = {},
                                 const std::optional<Eigen::VectorXd>& init = std::nullopt) {
  detail::check_exponent(p);
  if (mesh->node_count() == 0) throw EmptyDomainError("solve_lambda1 on an empty grid");
  const DomainGrid& grid = mesh->grid();
  if (!init && grid.component_count() > 1) {
    // lambda_1 of a disjoint union is the smallest component value; ties go
    // to the first component.
    EigenResult best;
    int used = 0;
    bool have = false;
    for (const auto& c : components(grid)) {
      auto r = solve_lambda1(make_mesh(c), norm, p, opts);
      used += r.iterations;
      if (!have || r.lambda < best.lambda) best = std::move(r), have = true;
    }
    best.u = embed(best.u, mesh);
    best.iterations = used;
    best.nodal_count = nodal_domains(best.u).count;
    return best;
  }
  Eigen::VectorXd u = init ? *init : detail::initial_guess(*mesh, norm);
  if (u.size() != mesh->node_count()) throw ConfigError("initial field size mismatch");
  if (!(u.cwiseAbs().maxCoeff() > 0.0)) u = detail::initial_guess(*mesh, norm);

  std::vector<double> schedule = opts.epsilon_schedule;
  if (schedule.empty() || schedule.back() != 0.0) schedule.push_back(0.0);
  if (p < 2.0 && schedule.size() > 1) {
    // Continue a regularized schedule down to 1e-8 before the final stage.
    schedule.pop_back();
    for (double e = schedule.back(); e > detail::kFinestEpsilon * (1.0 + 1e-9);)
      schedule.push_back(e = std::max(e * 1e-2, detail::kFinestEpsilon));
    schedule.push_back(0.0);
  }
  if (p == 2.0 && norm.is_quadratic()) schedule = {0.0};

  EigenResult res;
  res.p = p;
  int used = 0;
  detail::DescentState st;
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const bool last = s + 1 == schedule.size();
    const int budget = last ? opts.max_iter - used : std::min(opts.max_iter - used, opts.max_iter / 4);
    st = detail::descend(*mesh, norm, p, schedule[s], last ? opts.tol : opts.stage_tol, budget, u);
    used += st.iterations;
    log().debug("lambda_1 p={} eps={}: {} iterations, residual {:.3e}{}", p, schedule[s], st.iterations,
                st.residual, st.stagnated ? " (stagnated)" : "");
  }
  const bool converged =
      st.residual <= opts.tol || (st.stagnated && st.residual <= opts.stagnation_factor * opts.tol);
  if (!converged && init) {
    log().debug("lambda_1 p={}: warm start stalled at residual {:.3e}, restarting", p, st.residual);
    auto cold = solve_lambda1(mesh, norm, p, opts);
    cold.iterations += used;
    return cold;
  }
  if (!converged)
    throw ConvergenceError("lambda_1 descent did not converge", used, st.residual);

  detail::normalize_mass(*mesh, u, p);
  if (u.sum() < 0.0) u = -u;
  res.u = ScalarField(mesh, std::move(u));
  res.lambda = rayleigh_quotient(res.u, norm, p);
  res.iterations = used;
  res.residual = st.residual;
  res.nodal_count = nodal_domains(res.u).count;
  return res;
}

inline EigenResult solve_lambda1(const DomainGrid& grid, const Norm& norm, double p,
                                 const EigenOptions& opts = {}) {
  return solve_lambda1(make_mesh(grid), norm, p, opts);
}

/// k-th eigenpair (k = 1 or 2) of the linear p = 2 problem.
inline EigenResult solve_linear_p2(const DomainGrid& grid, const Norm& norm, int k) {
  if (k < 1 || k > 2) throw ConfigError("solve_linear_p2 supports k = 1 or k = 2");
  if (!norm.is_quadratic()) throw InvalidNormError("solve_linear_p2 requires a quadratic norm");
  MeshPtr mesh = make_mesh(grid);
  auto pairs = linear_eigenpairs(*mesh, norm, k);
  EigenResult res;
  res.p = 2.0;
  res.lambda = pairs.values[k - 1];
  res.u = ScalarField(mesh, pairs.vectors[k - 1]);
  res.iterations = pairs.iterations;
  res.residual = pairs.residual;
  res.nodal_count = nodal_domains(res.u).count;
  return res;
}

struct BipartitionResult {
  double lambda2 = 0.0;
  std::vector<int> part1, part2;  ///< interior node indices of the input grid
  double lambda1_part1 = 0.0, lambda1_part2 = 0.0;
  ScalarField u;                  ///< u_1 - u_2 on the input grid, mass 1
  int nodal_count = 0;
  std::string candidate;          ///< which candidate family produced the optimum
};

namespace detail {

/// Node labels: +1 / -1 for the two parts, 0 for separating nodes.
using Labels = std::vector<int>;

struct PartSolve {
  double lambda = std::numeric_limits<double>::infinity();
  MeshPtr mesh;
  Eigen::VectorXd u;  ///< on mesh nodes
};

inline std::vector<std::uint8_t> part_mask(const Labels& lab, int sign) {
  std::vector<std::uint8_t> keep(lab.size());
  for (std::size_t k = 0; k < lab.size(); ++k) keep[k] = lab[k] == sign ? 1 : 0;
  return keep;
}

/// Drops the sign from one node of every triangle that touches both parts
/// (the one with the smaller |phi|) until the parts share no triangle.
inline void separate(const Triangulation& mesh, const Eigen::VectorXd& phi, Labels& lab) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& t : mesh.triangles()) {
      bool pos = false, neg = false;
      for (int v : t.node)
        if (v >= 0) pos |= lab[v] > 0, neg |= lab[v] < 0;
      if (!(pos && neg)) continue;
      int drop = -1;
      for (int v : t.node)
        if (v >= 0 && lab[v] != 0 && (drop < 0 || std::abs(phi[v]) < std::abs(phi[drop]))) drop = v;
      lab[drop] = 0;
      changed = true;
    }
  }
}

/// Keeps, for each sign, only the 4-connected piece of largest sum phi^2.
inline void keep_main_pieces(const DomainGrid& grid, const Eigen::VectorXd& phi, Labels& lab) {
  for (int sign : {1, -1}) {
    const DomainGrid part = grid.restricted(part_mask(lab, sign));
    if (part.node_count() == 0) continue;
    std::vector<double> weight(part.component_count(), 0.0);
    std::vector<int> comp_of(grid.node_count(), -1);
    for (int k = 0; k < part.node_count(); ++k) {
      const auto [i, j] = part.ij(k);
      const int g = grid.index(i, j);
      comp_of[g] = part.component_id(k);
      weight[part.component_id(k)] += phi[g] * phi[g];
    }
    const int best = static_cast<int>(std::max_element(weight.begin(), weight.end()) - weight.begin());
    for (int g = 0; g < grid.node_count(); ++g)
      if (lab[g] == sign && comp_of[g] != best) lab[g] = 0;
  }
}

/// Warm start for a part: the previous field restricted to the part's nodes.
inline Eigen::VectorXd restrict_to(const DomainGrid& grid, const Eigen::VectorXd& full, const DomainGrid& part) {
  Eigen::VectorXd v(part.node_count());
  for (int k = 0; k < part.node_count(); ++k) {
    const auto [i, j] = part.ij(k);
    v[k] = std::abs(full[grid.index(i, j)]);
  }
  return v;
}

inline PartSolve solve_part(const DomainGrid& grid, const Labels& lab, int sign, const Norm& norm, double p,
                            const EigenOptions& opts, const Eigen::VectorXd& warm) {
  DomainGrid part = grid.restricted(part_mask(lab, sign));
  if (part.node_count() == 0) throw EmptyPartError("bipartition part has no node");
  PartSolve out;
  Eigen::VectorXd init = restrict_to(grid, warm, part);
  out.mesh = make_mesh(std::move(part));
  const auto r = solve_lambda1(out.mesh, norm, p, opts, init);
  out.lambda = r.lambda;
  // Back onto the full grid so later warm starts can be restricted again.
  out.u = embed(r.u, make_mesh(std::make_shared<const DomainGrid>(grid))).values;
  return out;
}

struct Partition {
  Labels lab;
  PartSolve pos, neg;
  double value() const { return std::max(pos.lambda, neg.lambda); }
};

inline Partition evaluate(const DomainGrid& grid, Labels lab, const Norm& norm, double p,
                          const EigenOptions& opts, const Eigen::VectorXd& warm_pos,
                          const Eigen::VectorXd& warm_neg) {
  Partition out;
  out.lab = std::move(lab);
  out.pos = solve_part(grid, out.lab, 1, norm, p, opts, warm_pos);
  out.neg = solve_part(grid, out.lab, -1, norm, p, opts, warm_neg);
  return out;
}

/// Nodes with label 0 that share a triangle with a node of the given sign.
inline std::vector<int> frontier(const Triangulation& mesh, const Labels& lab, int sign) {
  std::vector<std::uint8_t> mark(lab.size(), 0);
  for (const auto& t : mesh.triangles()) {
    bool touches = false;
    for (int v : t.node) touches |= v >= 0 && lab[v] == sign;
    if (!touches) continue;
    for (int v : t.node)
      if (v >= 0 && lab[v] == 0) mark[v] = 1;
  }
  std::vector<int> out;
  for (std::size_t k = 0; k < mark.size(); ++k)
    if (mark[k]) out.push_back(static_cast<int>(k));
  return out;
}

/// Moves `nodes` to `sign` and drops the opposite label wherever it now
/// shares a triangle with them.
inline Labels grow(const Triangulation& mesh, Labels lab, const std::vector<int>& nodes, int sign) {
  std::vector<std::uint8_t> moved(lab.size(), 0);
  for (int v : nodes) lab[v] = sign, moved[v] = 1;
  for (const auto& t : mesh.triangles()) {
    bool touches = false;
    for (int v : t.node) touches |= v >= 0 && moved[v];
    if (!touches) continue;
    for (int v : t.node)
      if (v >= 0 && lab[v] == -sign) lab[v] = 0;
  }
  return lab;
}

inline bool has_both(const Labels& lab) {
  bool pos = false, neg = false;
  for (int l : lab) pos |= l > 0, neg |= l < 0;
  return pos && neg;
}

/// Greedy interface descent: the part with the larger lambda_1 takes over
/// separating nodes (first a whole layer, then chunks in node order) while
/// max(lambda_1, lambda_1) decreases.
inline Partition refine(const DomainGrid& grid, const Triangulation& mesh, Partition cur, const Norm& norm,
                        double p, const EigenOptions& opts) {
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    bool improved = false;
    const int sign = cur.pos.lambda >= cur.neg.lambda ? 1 : -1;
    const auto front = frontier(mesh, cur.lab, sign);
    std::vector<std::vector<int>> trials{front};
    for (std::size_t b = 0; b < front.size(); b += opts.chunk)
      trials.emplace_back(front.begin() + b, front.begin() + std::min(front.size(), b + opts.chunk));
    for (const auto& nodes : trials) {
      if (nodes.empty()) continue;
      Labels lab = grow(mesh, cur.lab, nodes, sign);
      keep_main_pieces(grid, cur.pos.u - cur.neg.u, lab);
      if (!has_both(lab)) continue;
      Partition next = evaluate(grid, std::move(lab), norm, p, opts, cur.pos.u, cur.neg.u);
      if (next.value() < cur.value() * (1.0 - 1e-10)) {
        cur = std::move(next);
        improved = true;
        if (&nodes == &trials.front()) break;  // re-derive the frontier after a full layer
        if ((cur.pos.lambda >= cur.neg.lambda ? 1 : -1) != sign) break;
      }
    }
    if (!improved) break;
  }
  return cur;
}

inline Labels sign_split(const DomainGrid& grid, const Triangulation& mesh, const Eigen::VectorXd& phi) {
  Labels lab(phi.size());
  for (Eigen::Index k = 0; k < phi.size(); ++k) lab[k] = phi[k] > 0.0 ? 1 : (phi[k] < 0.0 ? -1 : 0);
  separate(mesh, phi, lab);
  keep_main_pieces(grid, phi, lab);
  return lab;
}

inline BipartitionResult finish(const DomainGrid& grid, MeshPtr mesh, const Partition& best, double p,
                                std::string candidate) {
  BipartitionResult out;
  out.lambda1_part1 = best.pos.lambda;
  out.lambda1_part2 = best.neg.lambda;
  out.lambda2 = best.value();
  for (int k = 0; k < grid.node_count(); ++k) {
    if (best.lab[k] > 0) out.part1.push_back(k);
    if (best.lab[k] < 0) out.part2.push_back(k);
  }
  Eigen::VectorXd u = best.pos.u - best.neg.u;
  normalize_mass(*mesh, u, p);
  out.u = ScalarField(std::move(mesh), std::move(u));
  out.nodal_count = nodal_domains(out.u).count;
  out.candidate = std::move(candidate);
  return out;
}

/// Bipartition descent on a connected grid.
inline BipartitionResult connected_lambda2(const DomainGrid& grid, const Norm& norm, double p,
                                           const EigenOptions& opts) {
  if (grid.node_count() < 2) throw DegenerateInputError("lambda_2 needs at least two nodes");
  MeshPtr mesh = make_mesh(grid);
  const Norm oracle = norm.is_quadratic() ? norm : Norm::euclidean();
  const int want = std::min(3, grid.node_count());
  const auto pairs = linear_eigenpairs(*mesh, oracle, want);

  std::vector<std::pair<std::string, Eigen::VectorXd>> starts;
  starts.emplace_back("nodal", pairs.vectors[1]);
  if (want == 3 && pairs.values[2] - pairs.values[1] <= opts.degeneracy_gap * pairs.values[1]) {
    for (int a = 1; a < opts.rotations; ++a) {
      const double t = a * std::numbers::pi / opts.rotations;
      starts.emplace_back("nodal-rotated-" + std::to_string(a) + "/" + std::to_string(opts.rotations),
                          std::cos(t) * pairs.vectors[1] + std::sin(t) * pairs.vectors[2]);
    }
  }
  // F°-Voronoi split between the centers of two largest disjoint Wulff shapes.
  if (grid.node_count() >= 2) {
    const auto field = distance_transform(mesh->grid_ptr(), norm);
    const auto pack = two_wulff_radius(field, norm);
    const Norm dual = norm.polar_norm();
    const Vec2 c1 = grid.node_point(pack.centers[0]);
    const Vec2 c2 = grid.node_point(pack.centers[1]);
    Eigen::VectorXd phi(grid.node_count());
    for (int k = 0; k < grid.node_count(); ++k) {
      const Vec2 x = grid.node_point(k);
      phi[k] = dual.eval(x - c2) - dual.eval(x - c1);
    }
    starts.emplace_back("packing-bisector", std::move(phi));
  }

  std::optional<Partition> best;
  std::string best_name;
  for (const auto& [name, phi] : starts) {
    Labels lab = sign_split(grid, *mesh, phi);
    if (!has_both(lab)) continue;
    Eigen::VectorXd pos = phi.cwiseMax(0.0), neg = (-phi).cwiseMax(0.0);
    Partition cand = evaluate(grid, std::move(lab), norm, p, opts, pos, neg);
    log().debug("lambda_2 candidate {}: {:.10g} / {:.10g}", name, cand.pos.lambda, cand.neg.lambda);
    if (!best || cand.value() < best->value()) {
      best = std::move(cand);
      best_name = name;
    }
  }
  if (!best) throw EmptyPartError("no sign-changing starting field");
  Partition refined = refine(grid, *mesh, std::move(*best), norm, p, opts);
  return finish(grid, mesh, refined, p, best_name);
}

}  // namespace detail

/// lambda_2(p, Omega) as the smallest max(lambda_1(Omega_1), lambda_1(Omega_2))
/// over generated disjoint pairs.
///
/// Disconnected sets enumerate component pairs, component versus the rest of
/// the set, and bipartitions inside a single component. Connected sets start
/// from the sign pattern of the p = 2 second eigenfunction (and its rotations
/// inside a nearly degenerate eigenspace) and move the interface greedily.
inline BipartitionResult solve_lambda2(const DomainGrid& grid, const Norm& norm, double p,
                                       const EigenOptions& opts = {}) {
  detail::check_exponent(p);
  if (grid.node_count() < 2) throw DegenerateInputError("lambda_2 needs at least two nodes");
  if (grid.component_count() == 1) return detail::connected_lambda2(grid, norm, p, opts);

  const auto comps = components(grid);
  MeshPtr mesh = make_mesh(grid);
  const MeshPtr full_mesh = mesh;
  std::vector<EigenResult> first;
  for (const auto& c : comps) first.push_back(solve_lambda1(make_mesh(c), norm, p, opts));

  auto lift = [&](const EigenResult& r) { return embed(r.u, full_mesh).values; };
  auto labels_of = [&](int c, int sign, detail::Labels& lab) {
    for (int k = 0; k < grid.node_count(); ++k)
      if (grid.component_id(k) == c) lab[k] = sign;
  };

  BipartitionResult best;
  best.lambda2 = std::numeric_limits<double>::infinity();
  const int nc = static_cast<int>(comps.size());
  for (int a = 0; a < nc; ++a)
    for (int b = a + 1; b < nc; ++b) {
      const double v = std::max(first[a].lambda, first[b].lambda);
      if (v < best.lambda2) {
        detail::Partition part;
        part.lab.assign(grid.node_count(), 0);
        labels_of(a, 1, part.lab);
        labels_of(b, -1, part.lab);
        part.pos = {first[a].lambda, first[a].u.mesh, lift(first[a])};
        part.neg = {first[b].lambda, first[b].u.mesh, lift(first[b])};
        best = detail::finish(grid, mesh, part, p,
                              "components(" + std::to_string(a) + "," + std::to_string(b) + ")");
      }
    }
  // Component against the rest of the set: lambda_1 of a disjoint union is the
  // smallest component value, so this only confirms the pair candidates.
  for (int a = 0; a < nc; ++a) {
    double rest = std::numeric_limits<double>::infinity();
    for (int b = 0; b < nc; ++b)
      if (b != a) rest = std::min(rest, first[b].lambda);
    if (std::max(first[a].lambda, rest) < best.lambda2)
      throw ConvergenceError("component/complement candidate disagrees with pair enumeration", 0, 0.0);
  }
  // Both parts inside one component: only worth it when that component's
  // lambda_1 is already below the best pair value.
  for (int c = 0; c < nc; ++c) {
    if (!(first[c].lambda < best.lambda2)) continue;
    const auto inner = detail::connected_lambda2(comps[c], norm, p, opts);
    if (inner.lambda2 < best.lambda2) {
      // Map component node indices to indices of the input grid.
      const MeshPtr cmesh = inner.u.mesh;
      const Eigen::VectorXd ids = embed(ScalarField(cmesh, Eigen::VectorXd::LinSpaced(cmesh->node_count(), 1.0,
                                                                                       cmesh->node_count())),
                                        mesh)
                                      .values;
      std::vector<int> to_full(cmesh->node_count(), -1);
      for (int k = 0; k < grid.node_count(); ++k)
        if (ids[k] > 0.0) to_full[static_cast<int>(std::lround(ids[k])) - 1] = k;
      best = inner;
      for (auto* part : {&best.part1, &best.part2})
        for (int& k : *part) k = to_full[k];
      best.u = embed(inner.u, mesh);
      best.candidate = "inside-component(" + std::to_string(c) + ")/" + inner.candidate;
    }
  }
  return best;
}

}  // namespace finsler
