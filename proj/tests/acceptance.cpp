// Acceptance suite: one pass/fail line per criterion on stdout, reports under
// the directory given as the first argument.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/experiments.hpp"

using namespace finsler;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  std::vector<std::string> failures;
  std::string summary;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  bool pass() const { return failures.empty(); }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Reports produced by the suite, keyed by name, with the config that made them.
struct Registry {
  std::filesystem::path dir;
  std::vector<std::pair<ExperimentConfig, std::string>> runs;

  Report run(const ExperimentConfig& c) {
    Report r = run_experiment(c);
    emit_report(r, ReportFormat::json, dir);
    emit_report(r, ReportFormat::csv, dir);
    runs.emplace_back(c, render_json(r) + render_csv(r));
    return r;
  }
};

std::vector<Norm> families() { return {Norm::euclidean(), Norm::weighted_quadratic(4, 1), Norm::lq(3)}; }

std::string label(const Norm& n) {
  if (n.family() == NormFamily::weighted_quadratic) return "wq";
  if (n.family() == NormFamily::lq) return "lq3";
  return "euclidean";
}

ShapeSpec lshape() {
  ShapeSpec s = rectangle(0, 0, 1, 1);
  s.subtract(RectanglePrimitive{0.5, 0.5, 2, 2});
  return s;
}

ShapeSpec two_disks() {
  ShapeSpec s;
  s.add(DiskPrimitive{Vec2(0, 0), 0.5});
  s.add(DiskPrimitive{Vec2(1.5, 0), 0.5});
  return s;
}

ShapeSpec wulff_pair(const Norm& n, double r) {
  ShapeSpec s = wulff(n, Vec2(0, 0), r);
  s.add(WulffShape{Vec2(6 * r, 0), r, n});
  return s;
}

std::vector<std::pair<std::string, ShapeSpec>> matrix_domains() {
  return {{"square", unit_square()}, {"lshape", lshape()}, {"rect2x1", rectangle(0, 0, 2, 1)},
          {"twodisks", two_disks()}};
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& n : families()) {
    const auto d = check_duality(n, 100);
    worst = std::max(worst, d.max_residual);
    o.expect(d.max_residual <= 1e-8, n.name() + " residual " + fmt(d.max_residual));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.expect(secs < 1.0, "runtime " + fmt(secs) + " s");
  o.summary = "max residual " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const double h = 1.0 / 64;
  const std::vector<std::pair<std::string, ShapeSpec>> domains = {
      {"square", unit_square()}, {"disk", disk(Vec2(0, 0), 0.5)}, {"rect2x1", rectangle(0, 0, 2, 1)},
      {"twodisks", two_disks()}};
  double worst = 0.0;
  for (const auto& n : {Norm::euclidean(), Norm::weighted_quadratic(4, 1)})
    for (const auto& [name, shape] : domains) {
      const auto g = rasterize(shape, h);
      const double a = solve_lambda1(g, n, 2.0).lambda;
      const double b = solve_linear_p2(g, n, 1).lambda;
      const double rel = std::abs(a - b) / b;
      worst = std::max(worst, rel);
      o.expect(rel <= 1e-6, name + "/" + label(n) + " relative difference " + fmt(rel));
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.expect(secs < 60.0, "runtime " + fmt(secs) + " s");
  o.summary = "max relative difference " + fmt(worst) + ", " + fmt(secs) + " s";
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto sq = rasterize(unit_square(), 1.0 / 128);
  const double l1 = solve_lambda1(sq, Norm::euclidean(), 2.0).lambda;
  const double l2 = solve_lambda2(sq, Norm::euclidean(), 2.0).lambda2;
  const double e1 = std::abs(l1 / (2 * kPi * kPi) - 1), e2 = std::abs(l2 / (5 * kPi * kPi) - 1);
  o.expect(e1 <= 0.01, "lambda1 " + fmt(l1) + " relative error " + fmt(e1));
  o.expect(e2 <= 0.02, "lambda2 " + fmt(l2) + " relative error " + fmt(e2));
  // F(xi)^2 = a1 xi1^2 + a2 xi2^2 on an L1 x L2 rectangle: a1 pi^2/L1^2 + a2 pi^2/L2^2.
  double worst = 0.0;
  for (const auto& [a1, a2, L1, L2] : {std::tuple{4.0, 1.0, 2.0, 1.0}, std::tuple{1.0, 4.0, 2.0, 1.0},
                                       std::tuple{0.5, 2.0, 1.5, 1.0}}) {
    const double exact = a1 * kPi * kPi / (L1 * L1) + a2 * kPi * kPi / (L2 * L2);
    const double got = solve_lambda1(rasterize(rectangle(0, 0, L1, L2), 1.0 / 64), Norm::weighted_quadratic(a1, a2),
                                     2.0)
                           .lambda;
    const double e = std::abs(got / exact - 1);
    worst = std::max(worst, e);
    o.expect(e <= 0.015, "rectangle a=(" + fmt(a1) + "," + fmt(a2) + ") L=(" + fmt(L1) + "," + fmt(L2) + ") got " +
                             fmt(got) + " expected " + fmt(exact));
  }
  o.summary = "lambda1 err " + fmt(e1) + ", lambda2 err " + fmt(e2) + ", anisotropic err " + fmt(worst);
  return o;
}

ExperimentConfig matrix_config(Experiment e, const std::string& name, const ShapeSpec& shape, const Norm& n) {
  ExperimentConfig c;
  c.name = name;
  c.experiment = e;
  c.domain = shape;
  c.norm = n;
  c.h = 1.0 / 64;
  c.p_list = {1.5, 2.0, 3.0};
  return c;
}

Outcome ratio_criterion(Registry& reg, Experiment e, const std::string& tag) {
  Outcome o;
  double lowest = 1e300, worst_eq = 0.0;
  const auto attempt = [&](const ExperimentConfig& cfg) -> std::optional<Report> {
    try {
      return reg.run(cfg);
    } catch (const std::exception& ex) {
      o.expect(false, cfg.name + ": " + ex.what());
      return std::nullopt;
    }
  };
  for (const auto& n : families()) {
    for (const auto& [dname, shape] : matrix_domains()) {
      auto cfg = matrix_config(e, tag + "_" + dname + "_" + label(n), shape, n);
      // Two equal Euclidean disks are the equality case of the two-shape inequality.
      cfg.expect_equality = e == Experiment::hks && dname == "twodisks" && n.family() == NormFamily::euclidean;
      const auto r = attempt(cfg);
      if (!r) continue;
      for (const auto& c : r->checks)
        o.expect(c.pass(), r->name + ": " + c.name + " " + fmt(c.left) + " vs " + fmt(c.right));
      for (const auto& row : r->rows) lowest = std::min(lowest, row.at("ratio").get<double>());
    }
    const double kappa = wulff_measure(n);
    const double r = 1.0 / std::sqrt(kappa);
    const ShapeSpec own = e == Experiment::faber_krahn ? wulff(n, Vec2(0, 0), r) : wulff_pair(n, r / std::sqrt(2.0));
    auto cfg = matrix_config(e, tag + "_wulff_" + label(n), own, n);
    cfg.expect_equality = true;
    cfg.equality_tolerance = 0.03;
    const auto rep = attempt(cfg);
    if (!rep) continue;
    for (const auto& c : rep->checks)
      o.expect(c.pass(), rep->name + ": " + c.name + " " + fmt(c.left) + " vs " + fmt(c.right));
    for (const auto& row : rep->rows) worst_eq = std::max(worst_eq, std::abs(row.at("ratio").get<double>() - 1));
  }
  o.summary = "min ratio " + fmt(lowest) + ", equality case deviation " + fmt(worst_eq);
  return o;
}

Outcome criterion6() {
  Outcome o;
  double worst = 0.0;
  for (const auto& [name, shape] : std::vector<std::pair<std::string, ShapeSpec>>{{"square", unit_square()},
                                                                                  {"lshape", lshape()}})
    for (double p : {2.0, 3.0}) {
      const double a = solve_lambda1(rasterize(shape, 1.0 / 128), Norm::lq(3), p).lambda;
      for (double t : {0.5, 2.0}) {
        const double b = solve_lambda1(rasterize(scale_domain(shape, t), 1.0 / 128), Norm::lq(3), p).lambda;
        const double e = std::abs(b / (std::pow(t, -p) * a) - 1);
        worst = std::max(worst, e);
        o.expect(e <= 0.02, name + " p=" + fmt(p) + " t=" + fmt(t) + " scaling error " + fmt(e));
      }
    }
  // Nested domains: the small eigenfunction injected into the big mesh is a
  // test field whose quotient equals the small eigenvalue.
  const double h = 1.0 / 32;
  const auto big_mesh = make_mesh(rasterize(unit_square(), h));
  for (double p : {1.5, 2.0, 4.0})
    for (const auto& n : families()) {
      const auto small = solve_lambda1(rasterize(lshape(), h), n, p);
      const auto big = solve_lambda1(big_mesh, n, p);
      const double injected = rayleigh_quotient(embed(small.u, big_mesh), n, p);
      o.expect(std::abs(injected - small.lambda) <= 1e-9 * small.lambda, "injected quotient mismatch");
      o.expect(big.lambda <= injected, label(n) + " p=" + fmt(p) + " monotonicity " + fmt(big.lambda) + " > " +
                                           fmt(injected));
    }
  const auto mesh = make_mesh(rasterize(unit_square(), 1.0 / 64));
  double prev = 0.0;
  std::string seq;
  for (double p : {1.5, 2.0, 3.0, 4.0, 8.0}) {
    const double v = p * std::pow(solve_lambda1(mesh, Norm::euclidean(), p).lambda, 1.0 / p);
    o.expect(v > prev, "p lambda1^(1/p) not increasing at p=" + fmt(p));
    seq += (seq.empty() ? "" : " ") + fmt(v);
    prev = v;
  }
  o.summary = "scaling err " + fmt(worst) + ", p lambda1^(1/p): " + seq;
  return o;
}

Outcome criterion7() {
  Outcome o;
  std::string counts;
  for (const auto& [name, shape] : std::vector<std::pair<std::string, ShapeSpec>>{
           {"square", unit_square()}, {"disk", disk(Vec2(0, 0), 0.5)}})
    for (double p : {1.5, 2.0, 3.0}) {
      const auto r = solve_lambda2(rasterize(shape, 1.0 / 64), Norm::euclidean(), p);
      const int k = nodal_domains(r.u, 1e-6).count;
      counts += (counts.empty() ? "" : " ") + std::to_string(k);
      o.expect(k == 2, name + " p=" + fmt(p) + " has " + std::to_string(k) + " nodal domains");
    }
  o.summary = "nodal counts " + counts;
  return o;
}

double brute_rho2(const DistanceField& f, const Norm& norm) {
  const DomainGrid& g = *f.grid;
  const Norm dual = norm.polar_norm();
  double best = 0.0;
  for (int a = 0; a < g.node_count(); ++a)
    for (int b = a + 1; b < g.node_count(); ++b)
      best = std::max(best, std::min({f.d[a], f.d[b], 0.5 * dual(g.node_point(a) - g.node_point(b))}));
  return best;
}

Outcome criterion8(Registry& reg) {
  Outcome o;
  const double h = 1.0 / 64;
  ExperimentConfig c;
  c.name = "c8_distance_square_euclidean";
  c.experiment = Experiment::distance;
  c.domain = unit_square();
  c.h = h;
  const auto r = reg.run(c);
  const double rho = r.values.at("rho_F").get<double>(), rho2 = r.values.at("rho2_F").get<double>();
  const double sup = r.values.at("sup_rayleigh").get<double>(), frac = r.values.at("unit_gradient_fraction").get<double>();
  o.expect(std::abs(rho - 0.5) <= h, "rho_F " + fmt(rho));
  o.expect(std::abs(sup * rho - 1) <= 0.05, "sup_rayleigh * rho_F " + fmt(sup * rho));
  o.expect(frac >= 0.95, "unit gradient fraction " + fmt(frac));
  const double target = 1.0 / (2.0 + std::sqrt(2.0));
  o.expect(std::abs(rho2 - target) <= 2 * h, "rho2_F " + fmt(rho2));
  const double oracle = brute_rho2(distance_transform(rasterize(unit_square(), h), Norm::euclidean()), Norm::euclidean());
  o.expect(std::abs(rho2 - oracle) <= 1e-12, "rho2_F " + fmt(rho2) + " vs pairwise " + fmt(oracle));
  o.summary = "rho_F " + fmt(rho) + ", sup*rho " + fmt(sup * rho) + ", unit fraction " + fmt(frac) + ", rho2_F " +
              fmt(rho2) + " (pairwise " + fmt(oracle) + ")";
  return o;
}

Outcome criterion9(Registry& reg) {
  Outcome o;
  ExperimentConfig c;
  c.name = "c9_plimit_square_euclidean";
  c.experiment = Experiment::p_limit;
  c.domain = unit_square();
  c.h = 1.0 / 64;
  c.p_list = {2, 4, 8, 16, 32};
  c.lambda2_max_p = 32;
  c.limit_tolerance = 0.2;
  auto take = [&](const Report& r) {
    for (const auto& ch : r.checks)
      o.expect(ch.pass(), r.name + ": " + ch.name + " " + fmt(ch.left) + " vs " + fmt(ch.right));
    const auto& last = r.rows.back();
    return "gap1 " + fmt(last.at("gap1").get<double>()) + " gap2 " + fmt(last.at("gap2").get<double>());
  };
  std::string summary = "square " + take(reg.run(c));
  for (const auto& n : families()) {
    ExperimentConfig w = c;
    w.name = "c9_plimit_wulffpair_" + label(n);
    w.domain = wulff_pair(n, 0.5);
    w.norm = n;
    w.limit_tolerance = 0.15;
    w.expect_equal_limits = true;
    summary += ", pair/" + label(n) + " " + take(reg.run(w));
  }
  o.summary = summary + " at p=32";
  return o;
}

Outcome criterion10(Registry& reg) {
  Outcome o;
  for (const auto& [cfg, bytes] : reg.runs) {
    const Report again = run_experiment(cfg);
    o.expect(render_json(again) + render_csv(again) == bytes, cfg.name + " differs on re-run");
  }
  o.summary = std::to_string(reg.runs.size()) + " reports re-run";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  Registry reg;
  reg.dir = argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::path("acceptance_reports");
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"norm duality identities", criterion1},
      {"p=2 oracle agreement", criterion2},
      {"analytic eigenvalues", criterion3},
      {"faber-krahn", [&] { return ratio_criterion(reg, Experiment::faber_krahn, "c4_fk"); }},
      {"hong-krahn-szego", [&] { return ratio_criterion(reg, Experiment::hks, "c5_hks"); }},
      {"scaling and monotonicity", criterion6},
      {"two nodal domains", criterion7},
      {"distance identities", [&] { return criterion8(reg); }},
      {"limit theorems", [&] { return criterion9(reg); }},
      {"determinism", [&] { return criterion10(reg); }},
  };
  std::set<std::size_t> only;
  if (argc > 2) {
    std::stringstream ss(argv[2]);
    for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoul(tok));
  }
  int failed = 0, ran = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!only.empty() && !only.contains(k + 1)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s (%s; %.1f s)\n", k + 1, criteria[k].first.c_str(), o.pass() ? "PASS" : "FAIL",
                o.summary.c_str(), secs);
    for (const auto& f : o.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
    failed += !o.pass();
  }
  std::printf("%d of %d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
