#pragma once

// Experiment configs, the verification experiments and their reports.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/distance.hpp"
#include "finsler/eigensolve.hpp"
#include "finsler/error.hpp"
#include "finsler/geometry.hpp"
#include "finsler/log.hpp"
#include "finsler/norms.hpp"
#include "finsler/parallel.hpp"

namespace finsler {

using Json = nlohmann::ordered_json;

enum class Experiment { lambda1, lambda2, faber_krahn, hks, p_limit, distance, duality };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::lambda1: return "lambda1";
    case Experiment::lambda2: return "lambda2";
    case Experiment::faber_krahn: return "faber_krahn";
    case Experiment::hks: return "hks";
    case Experiment::p_limit: return "p_limit";
    case Experiment::distance: return "distance";
    case Experiment::duality: return "duality";
  }
  return "unknown";
}

inline Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::lambda1, Experiment::lambda2, Experiment::faber_krahn, Experiment::hks,
                 Experiment::p_limit, Experiment::distance, Experiment::duality})
    if (s == to_string(e)) return e;
  throw ConfigError("unknown experiment '" + s + "'");
}

/// A reference value compared against a computed scalar, optionally at one p.
struct Expectation {
  std::string key;
  std::optional<double> p;
  double value = 0.0;
  double tolerance = 0.0;
  bool absolute = false;
};

struct ExperimentConfig {
  std::string name;
  Experiment experiment = Experiment::lambda1;
  ShapeSpec domain;
  Norm norm;
  double h = 1.0 / 64.0;
  std::vector<double> p_list{2.0};
  EigenOptions solver;
  std::string output;
  int threads = 1;
  int samples = 100;
  double tolerance = 0.0;             ///< relative slack of inequality checks
  bool expect_equality = false;       ///< faber_krahn / hks: check equality instead of the inequality
  double equality_tolerance = 0.03;
  double limit_tolerance = 0.2;       ///< bound on the limit gaps at the largest p
  bool expect_equal_limits = false;   ///< p_limit: lambda_1 and lambda_2 share the limit
  double lambda2_max_p = 32.0;        ///< p_limit computes lambda_2 only up to this p
  std::vector<Expectation> expect;

  std::string stem() const { return name.empty() ? to_string(experiment) : name; }
};

// ---------------------------------------------------------------------------
// JSON <-> domain types

namespace detail {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return get_or<T>(j, key, T{});
}

inline Vec2 point(const Json& j, const char* key) {
  const auto v = require<std::vector<double>>(j, key);
  if (v.size() != 2) throw ConfigError(std::string("field '") + key + "' must hold two numbers");
  return {v[0], v[1]};
}

}  // namespace detail

inline Norm norm_from_json(const Json& j) {
  const auto family = detail::require<std::string>(j, "family");
  if (family == "euclidean") return Norm::euclidean();
  if (family == "weighted_quadratic")
    return Norm::weighted_quadratic(detail::require<double>(j, "a1"), detail::require<double>(j, "a2"));
  if (family == "lq") return Norm::lq(detail::require<double>(j, "q"));
  throw ConfigError("unknown norm family '" + family + "'");
}

inline Json to_json(const Norm& n) {
  Json j;
  j["family"] = n.name();
  if (n.family() == NormFamily::weighted_quadratic) {
    j["a1"] = n.a1();
    j["a2"] = n.a2();
  } else if (n.family() == NormFamily::lq) {
    j["q"] = n.q();
  }
  return j;
}

inline ShapeSpec shape_from_json(const Json& j) {
  const Json& list = j.is_array() ? j : (j.is_object() && j.contains("primitives") ? j.at("primitives") : Json());
  if (!list.is_array()) throw ConfigError("domain must be a primitive list or an object with 'primitives'");
  ShapeSpec spec;
  for (const auto& item : list) {
    const auto type = detail::require<std::string>(item, "type");
    const auto mode = detail::get_or<std::string>(item, "mode", "add");
    if (mode != "add" && mode != "subtract") throw ConfigError("primitive mode must be add or subtract");
    PrimitiveShape shape;
    if (type == "rectangle") {
      shape = RectanglePrimitive{detail::require<double>(item, "x0"), detail::require<double>(item, "y0"),
                                 detail::require<double>(item, "x1"), detail::require<double>(item, "y1")};
    } else if (type == "wulff") {
      const double r = detail::require<double>(item, "radius");
      if (!(r > 0.0)) throw ConfigError("wulff radius must be positive");
      shape = WulffShape{detail::point(item, "center"), r, norm_from_json(detail::require<Json>(item, "norm"))};
    } else if (type == "euclidean_disk") {
      const double r = detail::require<double>(item, "radius");
      if (!(r > 0.0)) throw ConfigError("disk radius must be positive");
      shape = DiskPrimitive{detail::point(item, "center"), r};
    } else {
      throw ConfigError("unknown primitive type '" + type + "'");
    }
    if (mode == "add") spec.add(std::move(shape));
    else spec.subtract(std::move(shape));
  }
  spec.validate();
  return spec;
}

inline Json to_json(const ShapeSpec& spec) {
  Json list = Json::array();
  for (const auto& prim : spec.primitives) {
    Json j;
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, RectanglePrimitive>) {
            j["type"] = "rectangle";
            j["x0"] = s.x0, j["y0"] = s.y0, j["x1"] = s.x1, j["y1"] = s.y1;
          } else if constexpr (std::is_same_v<T, WulffShape>) {
            j["type"] = "wulff";
            j["center"] = {s.center[0], s.center[1]};
            j["radius"] = s.radius;
            j["norm"] = to_json(s.norm);
          } else {
            j["type"] = "euclidean_disk";
            j["center"] = {s.center[0], s.center[1]};
            j["radius"] = s.radius;
          }
        },
        prim.shape);
    j["mode"] = prim.mode == PrimitiveMode::add ? "add" : "subtract";
    list.push_back(std::move(j));
  }
  return Json{{"primitives", std::move(list)}};
}

inline Json to_json(const EigenOptions& o) {
  return Json{{"max_iter", o.max_iter}, {"tol", o.tol}, {"epsilon_schedule", o.epsilon_schedule}};
}

inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.name = detail::get_or<std::string>(j, "name", "");
  c.experiment = parse_experiment(detail::require<std::string>(j, "experiment"));
  c.norm = j.contains("norm") ? norm_from_json(j.at("norm")) : Norm::euclidean();
  c.samples = detail::get_or<int>(j, "samples", c.samples);
  if (c.experiment == Experiment::duality) {
    if (c.samples < 1) throw ConfigError("samples must be at least 1");
  } else {
    c.domain = shape_from_json(detail::require<Json>(j, "domain"));
    c.h = detail::require<double>(j, "h");
    if (!(c.h > 0.0) || !std::isfinite(c.h)) throw ConfigError("h must be positive");
  }
  c.p_list = detail::get_or<std::vector<double>>(j, "p_list", c.p_list);
  const bool needs_p = c.experiment != Experiment::distance && c.experiment != Experiment::duality;
  if (needs_p && c.p_list.empty()) throw ConfigError("p_list must not be empty");
  for (double p : c.p_list)
    if (!(p > 1.0) || !std::isfinite(p)) throw ConfigError("every p must lie in (1, inf)");
  if (c.experiment == Experiment::p_limit && !std::is_sorted(c.p_list.begin(), c.p_list.end()))
    throw ConfigError("p_limit needs an increasing p_list");
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    c.solver.max_iter = detail::get_or<int>(s, "max_iter", c.solver.max_iter);
    c.solver.tol = detail::get_or<double>(s, "tol", c.solver.tol);
    c.solver.epsilon_schedule = detail::get_or<std::vector<double>>(s, "epsilon_schedule", c.solver.epsilon_schedule);
    if (c.solver.max_iter < 1 || !(c.solver.tol > 0.0)) throw ConfigError("solver max_iter and tol must be positive");
    for (double e : c.solver.epsilon_schedule)
      if (!(e >= 0.0)) throw ConfigError("epsilon_schedule entries must be nonnegative");
  }
  c.output = detail::get_or<std::string>(j, "output", "");
  c.threads = std::max(1, detail::get_or<int>(j, "threads", 1));
  c.tolerance = detail::get_or<double>(j, "tolerance", c.tolerance);
  c.expect_equality = detail::get_or<bool>(j, "expect_equality", c.expect_equality);
  c.equality_tolerance = detail::get_or<double>(j, "equality_tolerance", c.equality_tolerance);
  c.limit_tolerance = detail::get_or<double>(j, "limit_tolerance", c.limit_tolerance);
  c.expect_equal_limits = detail::get_or<bool>(j, "expect_equal_limits", c.expect_equal_limits);
  c.lambda2_max_p = detail::get_or<double>(j, "lambda2_max_p", c.lambda2_max_p);
  if (j.contains("expect")) {
    for (const auto& e : j.at("expect")) {
      Expectation x;
      x.key = detail::require<std::string>(e, "key");
      if (e.contains("p")) x.p = e.at("p").get<double>();
      x.value = detail::require<double>(e, "value");
      x.absolute = e.contains("abs_tol");
      x.tolerance = x.absolute ? e.at("abs_tol").get<double>() : detail::require<double>(e, "rel_tol");
      c.expect.push_back(std::move(x));
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports

/// relation: "ge" left >= right - tol |right|, "le" left <= right + tol |right|,
/// "eq" |left - right| <= tol |right|, "eq_abs" |left - right| <= tol.
struct Check {
  std::string name;
  std::string relation;
  double left = 0.0, right = 0.0, tolerance = 0.0;
  double margin() const { return left - right; }
  bool pass() const {
    if (relation == "ge") return left >= right - tolerance * std::abs(right);
    if (relation == "le") return left <= right + tolerance * std::abs(right);
    if (relation == "eq") return std::abs(left - right) <= tolerance * std::abs(right);
    if (relation == "eq_abs") return std::abs(left - right) <= tolerance;
    throw ConfigError("unknown check relation '" + relation + "'");
  }
};

struct Report {
  std::string experiment;
  std::string name;
  Json inputs = Json::object();
  Json values = Json::object();
  Json rows = Json::array();  ///< one object per (domain, norm, p)
  std::vector<Check> checks;

  void check(std::string label, std::string relation, double left, double right, double tolerance) {
    checks.push_back({std::move(label), std::move(relation), left, right, tolerance});
  }
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
};

inline Json to_json(const Report& r) {
  Json j;
  j["experiment"] = r.experiment;
  j["name"] = r.name;
  j["inputs"] = r.inputs;
  j["values"] = r.values;
  j["rows"] = r.rows;
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},     {"relation", c.relation}, {"left", c.left},
                      {"right", c.right},   {"margin", c.margin()},   {"tolerance", c.tolerance},
                      {"pass", c.pass()}});
  j["checks"] = std::move(checks);
  j["pass"] = r.pass();
  return j;
}

/// Recomputes a serialized check's pass flag from its left, right, relation
/// and tolerance.
inline bool recompute_pass(const Json& check) {
  Check c{check.at("name").get<std::string>(), check.at("relation").get<std::string>(),
          check.at("left").get<double>(), check.at("right").get<double>(), check.at("tolerance").get<double>()};
  return c.pass();
}

/// True when every stored flag (and the overall flag) matches its recomputation.
inline bool report_consistent(const Json& report) {
  bool all = true;
  for (const auto& c : report.at("checks")) {
    const bool p = recompute_pass(c);
    if (p != c.at("pass").get<bool>()) return false;
    all = all && p;
  }
  return all == report.at("pass").get<bool>();
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

inline Json base_inputs(const ExperimentConfig& c) {
  Json j;
  j["domain"] = to_json(c.domain);
  j["norm"] = to_json(c.norm);
  j["h"] = c.h;
  j["p_list"] = c.p_list;
  j["solver"] = to_json(c.solver);
  j["tolerance"] = c.tolerance;
  return j;
}

inline Report start(const ExperimentConfig& c) {
  Report r;
  r.experiment = to_string(c.experiment);
  r.name = c.stem();
  r.inputs = c.experiment == Experiment::duality
                 ? Json{{"norm", to_json(c.norm)}, {"samples", c.samples}}
                 : base_inputs(c);
  return r;
}

inline Json row(const ExperimentConfig& c, double p) {
  return Json{{"domain", c.stem()}, {"norm", c.norm.name()}, {"p", p}};
}

/// Runs job(k) for k in [0, n) on cfg.threads threads; results land in order.
template <class T, class Job>
std::vector<T> run_jobs(int n, int threads, Job&& job) {
  std::vector<T> out(n);
  parallel_for(n, threads, [&](int b, int e) {
    for (int k = b; k < e; ++k) out[k] = job(k);
  });
  return out;
}

/// Compares the configured expectations with row values (matched on p) or
/// report-level values.
inline void apply_expectations(const ExperimentConfig& c, Report& r) {
  for (const auto& x : c.expect) {
    std::optional<double> got;
    if (x.p) {
      for (const auto& row : r.rows)
        if (row.contains("p") && row.at("p").get<double>() == *x.p && row.contains(x.key))
          got = row.at(x.key).get<double>();
    } else if (r.values.contains(x.key)) {
      got = r.values.at(x.key).get<double>();
    }
    if (!got) throw ConfigError("expectation refers to unknown value '" + x.key + "'");
    std::string label = "expected " + x.key;
    if (x.p) label += " at p=" + Json(*x.p).dump();
    r.check(std::move(label), x.absolute ? "eq_abs" : "eq", *got, x.value, x.tolerance);
  }
}

/// Wulff shape of the norm, centered at `center`, whose rasterization at h
/// has the node count closest to target / h^2. Rasterized measure is
/// monotone in the radius, so bisection on the radius finds the crossing.
struct MatchedWulff {
  double radius = 0.0;
  ShapeSpec spec;
  DomainGrid grid;
};

inline MatchedWulff matched_wulff(const Norm& norm, double target, double h, const Vec2& center = Vec2::Zero()) {
  const double kappa = wulff_measure(norm);
  const double r0 = std::sqrt(target / kappa);
  const long want = std::lround(target / (h * h));
  auto count_at = [&](double r) -> long {
    try {
      return rasterize(wulff(norm, center, r), h).node_count();
    } catch (const EmptyDomainError&) {
      return 0;
    }
  };
  double lo = 0.5 * r0, hi = 2.0 * r0;
  for (int it = 0; it < 60 && hi - lo > 1e-12 * r0; ++it) {
    const double mid = 0.5 * (lo + hi);
    (count_at(mid) < want ? lo : hi) = mid;
  }
  const long clo = count_at(lo), chi = count_at(hi);
  const double r = std::abs(clo - want) <= std::abs(chi - want) ? lo : hi;
  MatchedWulff out{r, wulff(norm, center, r), rasterize(wulff(norm, center, r), h)};
  return out;
}

/// Two disjoint Wulff shapes, each matched to half the target measure,
/// centered on the x-axis three radii apart (in the x-extent of the shape).
inline MatchedWulff matched_wulff_pair(const Norm& norm, double target, double h) {
  const auto single = matched_wulff(norm, 0.5 * target, h);
  const double offset = 1.5 * single.radius * norm.eval(Vec2(1.0, 0.0));
  ShapeSpec spec;
  spec.add(WulffShape{Vec2(-offset, 0.0), single.radius, norm});
  spec.add(WulffShape{Vec2(offset, 0.0), single.radius, norm});
  MatchedWulff out{single.radius, spec, rasterize(spec, h)};
  return out;
}

inline double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline Report run_lambda1(const ExperimentConfig& c) {
  Report r = detail::start(c);
  const DomainGrid grid = rasterize(c.domain, c.h);
  const double m = measure(grid);
  r.values["measure"] = m;
  r.values["components"] = grid.component_count();
  const int n = static_cast<int>(c.p_list.size());
  const auto results = detail::run_jobs<EigenResult>(n, c.threads, [&](int k) {
    return solve_lambda1(grid, c.norm, c.p_list[k], c.solver);
  });
  for (int k = 0; k < n; ++k) {
    const auto& e = results[k];
    Json row = detail::row(c, e.p);
    row["lambda1"] = e.lambda;
    row["lambda1_root"] = std::pow(e.lambda, 1.0 / e.p);
    row["iterations"] = e.iterations;
    row["residual"] = e.residual;
    row["nodal_count"] = e.nodal_count;
    r.rows.push_back(std::move(row));
    const double lo = e.u.values.minCoeff(), hi = e.u.values.maxCoeff();
    r.check("first eigenfunction sign at p=" + Json(e.p).dump(), "ge", lo, -1e-10 * hi, 0.0);
    if (grid.component_count() == 1)
      r.check("first eigenfunction nodal domains at p=" + Json(e.p).dump(), "eq", e.nodal_count, 1.0, 0.0);
  }
  detail::apply_expectations(c, r);
  return r;
}

inline Report run_lambda2(const ExperimentConfig& c) {
  Report r = detail::start(c);
  const DomainGrid grid = rasterize(c.domain, c.h);
  r.values["measure"] = measure(grid);
  r.values["components"] = grid.component_count();
  const int n = static_cast<int>(c.p_list.size());
  const auto results = detail::run_jobs<BipartitionResult>(n, c.threads, [&](int k) {
    return solve_lambda2(grid, c.norm, c.p_list[k], c.solver);
  });
  for (int k = 0; k < n; ++k) {
    const auto& b = results[k];
    const double p = c.p_list[k];
    Json row = detail::row(c, p);
    row["lambda2"] = b.lambda2;
    row["lambda2_root"] = std::pow(b.lambda2, 1.0 / p);
    row["lambda1_part1"] = b.lambda1_part1;
    row["lambda1_part2"] = b.lambda1_part2;
    row["nodal_count"] = b.nodal_count;
    row["candidate"] = b.candidate;
    r.rows.push_back(std::move(row));
    r.check("bipartition value at p=" + Json(p).dump(), "eq", b.lambda2,
            std::max(b.lambda1_part1, b.lambda1_part2), 0.0);
    if (grid.component_count() == 1)
      r.check("second eigenfunction nodal domains at p=" + Json(p).dump(), "eq", b.nodal_count, 2.0, 0.0);
  }
  detail::apply_expectations(c, r);
  return r;
}

/// lambda_1(p, Omega) |Omega|^(p/2) against the same quantity for the norm's
/// Wulff shape of matched discrete measure.
inline Report run_faber_krahn(const ExperimentConfig& c) {
  Report r = detail::start(c);
  const DomainGrid grid = rasterize(c.domain, c.h);
  const double m = measure(grid);
  const auto ref = detail::matched_wulff(c.norm, m, c.h);
  const double mw = measure(ref.grid);
  r.values["measure"] = m;
  r.values["kappa2"] = wulff_measure(c.norm);
  r.values["wulff_radius"] = ref.radius;
  r.values["wulff_measure"] = mw;
  const int n = static_cast<int>(c.p_list.size());
  const auto results = detail::run_jobs<std::pair<double, double>>(n, c.threads, [&](int k) {
    const double p = c.p_list[k];
    return std::pair{solve_lambda1(grid, c.norm, p, c.solver).lambda,
                     solve_lambda1(ref.grid, c.norm, p, c.solver).lambda};
  });
  for (int k = 0; k < n; ++k) {
    const double p = c.p_list[k];
    const auto [lo, lw] = results[k];
    const double left = lo * std::pow(m, 0.5 * p);
    const double right = lw * std::pow(mw, 0.5 * p);
    Json row = detail::row(c, p);
    row["lambda1"] = lo;
    row["lambda1_wulff"] = lw;
    row["normalized"] = left;
    row["normalized_wulff"] = right;
    row["ratio"] = left / right;
    r.rows.push_back(std::move(row));
    const std::string at = " at p=" + Json(p).dump();
    if (c.expect_equality) r.check("faber-krahn equality" + at, "eq", left, right, c.equality_tolerance);
    else r.check("faber-krahn" + at, "ge", left, right, c.tolerance);
  }
  detail::apply_expectations(c, r);
  return r;
}

/// lambda_2(p, Omega) |Omega|^(p/2) against the same quantity for two
/// disjoint equal Wulff shapes of matched total measure.
inline Report run_hks(const ExperimentConfig& c) {
  Report r = detail::start(c);
  const DomainGrid grid = rasterize(c.domain, c.h);
  const double m = measure(grid);
  const auto pair = detail::matched_wulff_pair(c.norm, m, c.h);
  const double mw = measure(pair.grid);
  r.values["measure"] = m;
  r.values["kappa2"] = wulff_measure(c.norm);
  r.values["wulff_radius"] = pair.radius;
  r.values["wulff_pair_measure"] = mw;
  const int n = static_cast<int>(c.p_list.size());
  const auto results = detail::run_jobs<std::pair<double, double>>(n, c.threads, [&](int k) {
    const double p = c.p_list[k];
    return std::pair{solve_lambda2(grid, c.norm, p, c.solver).lambda2,
                     solve_lambda2(pair.grid, c.norm, p, c.solver).lambda2};
  });
  for (int k = 0; k < n; ++k) {
    const double p = c.p_list[k];
    const auto [lo, lw] = results[k];
    const double left = lo * std::pow(m, 0.5 * p);
    const double right = lw * std::pow(mw, 0.5 * p);
    Json row = detail::row(c, p);
    row["lambda2"] = lo;
    row["lambda2_wulff_pair"] = lw;
    row["normalized"] = left;
    row["normalized_wulff_pair"] = right;
    row["ratio"] = left / right;
    r.rows.push_back(std::move(row));
    const std::string at = " at p=" + Json(p).dump();
    if (c.expect_equality) r.check("hong-krahn-szego equality" + at, "eq", left, right, c.equality_tolerance);
    else r.check("hong-krahn-szego" + at, "ge", left, right, c.tolerance);
  }
  detail::apply_expectations(c, r);
  return r;
}

/// lambda_k(p)^(1/p) along p_list against 1/rho_F and 1/rho_{2,F}.
inline Report run_p_limit(const ExperimentConfig& c) {
  Report r = detail::start(c);
  const DomainGrid grid = rasterize(c.domain, c.h);
  const auto field = distance_transform(grid, c.norm, c.threads);
  const double rho = inradius(field).rho;
  const double rho2 = two_wulff_radius(field, c.norm).rho2;
  r.values["rho_F"] = rho;
  r.values["rho2_F"] = rho2;
  r.values["inv_rho_F"] = 1.0 / rho;
  r.values["inv_rho2_F"] = 1.0 / rho2;

  struct Pair {
    double l1 = 0.0;
    std::optional<double> l2;
  };
  const int n = static_cast<int>(c.p_list.size());
  const auto results = detail::run_jobs<Pair>(n, c.threads, [&](int k) {
    const double p = c.p_list[k];
    Pair out{solve_lambda1(grid, c.norm, p, c.solver).lambda, std::nullopt};
    if (p <= c.lambda2_max_p) out.l2 = solve_lambda2(grid, c.norm, p, c.solver).lambda2;
    return out;
  });

  std::optional<double> prev_gap1, prev_gap2, prev_mono;
  double prev_p = 0.0;
  for (int k = 0; k < n; ++k) {
    const double p = c.p_list[k];
    const std::string at = " at p=" + Json(p).dump();
    const double root1 = std::pow(results[k].l1, 1.0 / p);
    const double gap1 = std::abs(root1 * rho - 1.0);
    Json row = detail::row(c, p);
    row["lambda1"] = results[k].l1;
    row["lambda1_root"] = root1;
    row["gap1"] = gap1;
    row["p_lambda1_root"] = p * root1;
    if (prev_gap1) r.check("gap1 decreases" + at, "le", gap1, *prev_gap1, 0.0);
    if (prev_mono) r.check("p lambda1^(1/p) increases" + at, "ge", p * root1, *prev_mono, 0.0);
    prev_gap1 = gap1;
    prev_mono = p * root1;
    if (results[k].l2) {
      const double root2 = std::pow(*results[k].l2, 1.0 / p);
      const double gap2 = std::abs(root2 * rho2 - 1.0);
      row["lambda2"] = *results[k].l2;
      row["lambda2_root"] = root2;
      row["gap2"] = gap2;
      if (prev_gap2) r.check("gap2 decreases" + at, "le", gap2, *prev_gap2, 0.0);
      prev_gap2 = gap2;
      prev_p = p;
    }
    r.rows.push_back(std::move(row));
  }
  const double p_last = c.p_list.back();
  r.check("gap1 bound at p=" + Json(p_last).dump(), "le", *prev_gap1, c.limit_tolerance, 0.0);
  if (prev_gap2) r.check("gap2 bound at p=" + Json(prev_p).dump(), "le", *prev_gap2, c.limit_tolerance, 0.0);
  if (c.expect_equal_limits) {
    r.check("rho_F equals rho2_F", "eq_abs", rho2, rho, 2.0 * c.h);
    if (results.back().l2)
      r.check("lambda1 equals lambda2 at p=" + Json(p_last).dump(), "eq", *results.back().l2, results.back().l1,
              c.equality_tolerance);
  }
  detail::apply_expectations(c, r);
  return r;
}

/// Distance function, inradius, packing radius and the sup-norm identity.
inline Report run_distance(const ExperimentConfig& c) {
  Report r = detail::start(c);
  auto grid = std::make_shared<const DomainGrid>(rasterize(c.domain, c.h));
  const auto field = distance_transform(grid, c.norm, c.threads);
  const auto mesh = make_mesh(grid);
  const auto pack = two_wulff_radius(field, c.norm);
  const double sup = sup_rayleigh(as_field(field, mesh), c.norm);
  const auto unit = unit_gradient_fraction(field, *mesh, c.norm);
  r.values["rho_F"] = field.rho_F;
  r.values["rho2_F"] = pack.rho2;
  r.values["sup_rayleigh"] = sup;
  r.values["identity_margin"] = std::abs(sup * field.rho_F - 1.0);
  r.values["unit_gradient_fraction"] = unit.fraction;
  r.values["unit_gradient_triangles"] = unit.considered;
  const Vec2 c1 = grid->node_point(pack.centers[0]), c2 = grid->node_point(pack.centers[1]);
  r.values["packing_centers"] = Json::array({Json::array({c1[0], c1[1]}), Json::array({c2[0], c2[1]})});
  r.rows.push_back(Json{{"domain", c.stem()},       {"norm", c.norm.name()},
                        {"rho_F", field.rho_F},      {"rho2_F", pack.rho2},
                        {"sup_rayleigh", sup},       {"unit_gradient_fraction", unit.fraction}});
  r.check("sup-norm identity", "eq_abs", sup * field.rho_F, 1.0, 0.05);
  r.check("unit gradient fraction", "ge", unit.fraction, 0.95, 0.0);
  r.check("rho2_F <= rho_F", "le", pack.rho2, field.rho_F, 0.0);
  detail::apply_expectations(c, r);
  return r;
}

inline Report run_duality(const ExperimentConfig& c) {
  Report r = detail::start(c);
  const auto d = check_duality(c.norm, c.samples);
  r.values["euler"] = d.euler;
  r.values["unit_gradient"] = d.unit_gradient;
  r.values["polar_inverse"] = d.polar_inverse;
  r.values["cauchy_schwarz"] = d.cauchy_schwarz;
  r.values["max_residual"] = d.max_residual;
  r.rows.push_back(Json{{"norm", c.norm.name()}, {"samples", c.samples}, {"max_residual", d.max_residual}});
  r.check("duality residual", "le", d.max_residual, 1e-8, 0.0);
  detail::apply_expectations(c, r);
  return r;
}

inline Report run_experiment(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Report r;
  switch (c.experiment) {
    case Experiment::lambda1: r = run_lambda1(c); break;
    case Experiment::lambda2: r = run_lambda2(c); break;
    case Experiment::faber_krahn: r = run_faber_krahn(c); break;
    case Experiment::hks: r = run_hks(c); break;
    case Experiment::p_limit: r = run_p_limit(c); break;
    case Experiment::distance: r = run_distance(c); break;
    case Experiment::duality: r = run_duality(c); break;
  }
  log().info("{} '{}' finished in {:.2f} s, {}", r.experiment, r.name, detail::elapsed(t0),
             r.pass() ? "pass" : "FAIL");
  return r;
}

// ---------------------------------------------------------------------------
// Output

enum class ReportFormat { json, csv, svg_data };

inline ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  if (s == "svg-data") return ReportFormat::svg_data;
  throw ConfigError("unknown report format '" + s + "'");
}

namespace detail {

inline std::string csv_cell(const Json& v) {
  if (!v.is_string()) return v.dump();
  const auto s = v.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

inline std::string fixed(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::fixed << v;
  return os.str();
}

}  // namespace detail

inline std::string render_json(const Report& r) { return to_json(r).dump(2) + "\n"; }

/// One line per row; the columns are the row keys in order of first use.
inline std::string render_csv(const Report& r) {
  std::vector<std::string> cols;
  for (const auto& row : r.rows)
    for (const auto& [k, v] : row.items())
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  std::ostringstream os;
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      os << (i ? "," : "") << (row.contains(cols[i]) ? detail::csv_cell(row.at(cols[i])) : "");
    os << "\n";
  }
  return os.str();
}

/// SVG plot of lambda_k^(1/p) against p with dashed 1/rho asymptotes.
inline std::string render_svg(const Report& r) {
  struct Series {
    std::string key, color, label;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series{{"lambda1_root", "#1f77b4", "lambda1^(1/p)", {}},
                             {"lambda2_root", "#d62728", "lambda2^(1/p)", {}}};
  for (const auto& row : r.rows)
    for (auto& s : series)
      if (row.contains(s.key)) s.pts.emplace_back(row.at("p").get<double>(), row.at(s.key).get<double>());
  struct Line {
    std::string key, color, label;
  };
  std::vector<std::pair<Line, double>> lines;
  for (const Line& l : {Line{"inv_rho_F", "#1f77b4", "1/rho_F"}, Line{"inv_rho2_F", "#d62728", "1/rho2_F"}})
    if (r.values.contains(l.key)) lines.emplace_back(l, r.values.at(l.key).get<double>());

  double x0 = 1.0, x1 = 2.0, y0 = 0.0, y1 = 1.0;
  bool any = false;
  auto take = [&](double x, double y) {
    if (!any) x0 = x1 = x, y0 = y1 = y, any = true;
    x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  };
  for (const auto& s : series)
    for (const auto& [x, y] : s.pts) take(x, y);
  for (const auto& [l, y] : lines) take(any ? x0 : 1.0, y);
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;

  const double W = 640, H = 400, L = 60, R = 20, T = 20, B = 40;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<title>" << r.name << "</title>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\">p</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << sy(y0) << "\" text-anchor=\"end\">" << detail::fixed(y0)
     << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << sy(y1) << "\" text-anchor=\"end\">" << detail::fixed(y1)
     << "</text>\n";
  os << "<text x=\"" << sx(x0) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << detail::fixed(x0)
     << "</text>\n";
  os << "<text x=\"" << sx(x1) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << detail::fixed(x1)
     << "</text>\n";
  for (const auto& [l, y] : lines)
    os << "<line class=\"asymptote\" data-key=\"" << l.key << "\" data-value=\"" << Json(y).dump() << "\" x1=\""
       << sx(x0) << "\" y1=\"" << sy(y) << "\" x2=\"" << sx(x1) << "\" y2=\"" << sy(y) << "\" stroke=\"" << l.color
       << "\" stroke-dasharray=\"6,4\"><title>" << l.label << "</title></line>\n";
  for (const auto& s : series) {
    if (s.pts.empty()) continue;
    os << "<polyline class=\"series\" data-key=\"" << s.key << "\" fill=\"none\" stroke=\"" << s.color
       << "\" points=\"";
    for (std::size_t i = 0; i < s.pts.size(); ++i)
      os << (i ? " " : "") << sx(s.pts[i].first) << "," << sy(s.pts[i].second);
    os << "\"><title>" << s.label << "</title></polyline>\n";
    for (const auto& [x, y] : s.pts)
      os << "<circle data-p=\"" << Json(x).dump() << "\" data-value=\"" << Json(y).dump() << "\" cx=\"" << sx(x)
         << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string render(const Report& r, ReportFormat f) {
  switch (f) {
    case ReportFormat::json: return render_json(r);
    case ReportFormat::csv: return render_csv(r);
    case ReportFormat::svg_data: return render_svg(r);
  }
  throw ConfigError("unknown report format");
}

/// Writes <dir>/<report name>.<ext> and returns the path.
inline std::filesystem::path emit_report(const Report& r, ReportFormat f, const std::filesystem::path& dir) {
  static constexpr const char* ext[] = {".json", ".csv", ".svg"};
  std::error_code ec;
  if (!dir.empty()) std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto path = dir / (r.name + ext[static_cast<int>(f)]);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << render(r, f);
  if (!out) throw IoError("write failed for " + path.string());
  return path;
}

inline std::filesystem::path emit_report(const Report& r, const std::string& format,
                                         const std::filesystem::path& dir) {
  return emit_report(r, parse_format(format), dir);
}

}  // namespace finsler
