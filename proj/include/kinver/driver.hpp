#pragma once

#include "kinver/boltzmann_kernel.hpp"
#include "kinver/dist_model.hpp"
#include "kinver/frame_transform.hpp"
#include "kinver/kinetic_geometry.hpp"
#include "kinver/landau.hpp"
#include "kinver/mass_geometry.hpp"
#include "kinver/observables.hpp"
#include "kinver/suites.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace kinver {

inline constexpr int kSchemaVersion = 1;

struct Diagnostic {
  std::string field;
  std::string message;
};

inline std::string to_string(const Diagnostic& d) { return d.field + ": " + d.message; }

struct TaskKind {
  const char* name;
  const char* summary;
  bool needs_distribution;
  bool needs_admissible;
};

inline const std::vector<TaskKind>& task_kinds() {
  static const std::vector<TaskKind> kinds{
      {"observables", "mass, mean velocity, pressure tensor, temperature, energy, entropy, moments", true, false},
      {"hydro_check", "hydrodynamic bounds against thresholds m0, M0, p0, Mq, E0, H0", true, false},
      {"tube_scan", "minimal mass outside linear tubes of radius delta inside B_R", true, false},
      {"ellipticity", "kernel conditions upper | nondeg | coercive | cancel on a (v, r) grid", true, true},
      {"uniformity", "condition constants of the transformed kernel across base velocities v0", true, true},
      {"landau", "transformed Landau matrix ellipticity and lower order coefficients across v0", true, false},
      {"identities", "weighted change-of-variables identities and their ellipsoid form", false, false},
      {"counterexample_sweep", "mass, tube mass and third moment of the counterexample family over R", false, false},
      {"kinetic_norms", "sampled kinetic Hoelder norms and the interpolation inequality", false, false},
      {"giusti", "iteration lemma hypothesis and conclusion on a sampled profile", false, false},
  };
  return kinds;
}

inline const TaskKind* find_task_kind(const std::string& name) {
  for (auto& k : task_kinds())
    if (name == k.name) return &k;
  return nullptr;
}

// Line and column of a byte offset, 1-based.
inline std::pair<int, int> line_col(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line, col = 1;
    else ++col;
  }
  return {line, col};
}

inline nlohmann::json parse_config_text(const std::string& text, std::vector<Diagnostic>& diags) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    auto [l, c] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    diags.push_back({"line " + std::to_string(l) + ", column " + std::to_string(c), e.what()});
    return nullptr;
  }
}

inline QuadratureBudget budget_from_json(const nlohmann::json& j) {
  QuadratureBudget b;
  b.max_evals = 4000000;
  if (j.is_object()) {
    b.rel_tol = j.value("rel_tol", b.rel_tol);
    b.abs_tol = j.value("abs_tol", b.abs_tol);
    b.max_evals = j.value("max_evals", b.max_evals);
    b.truncation_radius = j.value("truncation_radius", b.truncation_radius);
  }
  b.validate();
  return b;
}

// Distributions as an object {name: spec} or an array of specs with a "name" field.
inline std::map<std::string, nlohmann::json> distribution_specs(const nlohmann::json& cfg) {
  std::map<std::string, nlohmann::json> out;
  if (!cfg.contains("distributions")) return out;
  const auto& d = cfg.at("distributions");
  require(d.is_object() || d.is_array(), "distributions must be an object or an array");
  if (d.is_object())
    for (auto it = d.begin(); it != d.end(); ++it) out[it.key()] = it.value();
  else
    for (auto& e : d) {
      require(e.is_object() && e.contains("name"), "array distributions need a 'name' field");
      out[e.at("name").get<std::string>()] = e;
    }
  return out;
}

inline std::string task_name(const nlohmann::json& t, std::size_t i) {
  if (t.is_object() && t.contains("name") && t.at("name").is_string()) return t.at("name").get<std::string>();
  std::string type = t.is_object() ? t.value("type", std::string("task")) : std::string("task");
  return type + "_" + std::to_string(i);
}

inline std::vector<Vec> json_vec_list(const nlohmann::json& a, int n, const std::string& what) {
  require(a.is_array(), what + " must be an array");
  std::vector<Vec> out;
  for (auto& e : a) {
    if (e.is_number()) {
      out.push_back(e.get<double>() * unit_vector(n, 0));
      continue;
    }
    require(e.is_array() && static_cast<int>(e.size()) == n, what + " entries must be numbers or length-" +
                                                                  std::to_string(n) + " arrays");
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = e[i].get<double>();
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> json_doubles(const nlohmann::json& j, const std::string& field, std::vector<double> dflt) {
  if (!j.contains(field)) return dflt;
  require(j.at(field).is_array(), field + " must be an array");
  std::vector<double> out;
  for (auto& e : j.at(field)) out.push_back(e.get<double>());
  return out;
}

inline std::vector<Diagnostic> validate_config(const nlohmann::json& cfg) {
  std::vector<Diagnostic> d;
  if (!cfg.is_object()) {
    d.push_back({"config", "top level must be a JSON object"});
    return d;
  }
  KernelParams p;
  bool kernel_ok = true;
  try {
    p = kernel_params_from_json(cfg.value("kernel", nlohmann::json::object()));
  } catch (const std::exception& e) {
    d.push_back({"kernel", e.what()});
    kernel_ok = false;
  }
  try {
    budget_from_json(cfg.value("quad", nlohmann::json::object()));
  } catch (const std::exception& e) {
    d.push_back({"quad", e.what()});
  }
  if (cfg.contains("seed") && !cfg.at("seed").is_number_integer()) d.push_back({"seed", "seed must be an integer"});
  std::map<std::string, nlohmann::json> dists;
  try {
    dists = distribution_specs(cfg);
  } catch (const std::exception& e) {
    d.push_back({"distributions", e.what()});
  }
  for (auto& [name, spec] : dists) {
    try {
      distribution_from_json(spec);
    } catch (const std::exception& e) {
      d.push_back({"distributions." + name, e.what()});
    }
  }
  if (!cfg.contains("tasks")) return d;
  if (!cfg.at("tasks").is_array()) {
    d.push_back({"tasks", "tasks must be an array"});
    return d;
  }
  std::set<std::string> names;
  const auto& tasks = cfg.at("tasks");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    std::string where = "tasks[" + std::to_string(i) + "]";
    if (!t.is_object() || !t.contains("type") || !t.at("type").is_string()) {
      d.push_back({where, "task must be an object with a string 'type'"});
      continue;
    }
    std::string type = t.at("type").get<std::string>();
    const TaskKind* k = find_task_kind(type);
    if (!k) {
      d.push_back({where + ".type", "unknown task type '" + type + "'"});
      continue;
    }
    std::string nm = task_name(t, i);
    if (!names.insert(nm).second) d.push_back({where + ".name", "duplicate task name '" + nm + "'"});
    if (k->needs_distribution) {
      if (!t.contains("distribution") || !t.at("distribution").is_string())
        d.push_back({where + ".distribution", "missing distribution reference"});
      else if (!dists.count(t.at("distribution").get<std::string>()))
        d.push_back({where + ".distribution", "unknown distribution '" + t.at("distribution").get<std::string>() + "'"});
    }
    if (k->needs_admissible && kernel_ok && !p.admissible())
      d.push_back({where, "kernel not admissible: gamma + 2s = " + std::to_string(p.gamma + 2 * p.s) +
                              " must lie in [0, q_reference = " + std::to_string(p.q_reference) + "]"});
    if (type == "ellipticity" || type == "uniformity") {
      try {
        Condition c = condition_from_string(t.value("condition", std::string("nondeg")));
        if (type == "uniformity" && c == Condition::coercive)
          d.push_back({where + ".condition", "uniformity scans cover conditions upper, nondeg and cancel"});
      } catch (const std::exception& e) {
        d.push_back({where + ".condition", e.what()});
      }
    }
    if (type == "kinetic_norms" && kernel_ok) {
      double alpha = t.value("alpha", 0.5), pw = t.value("p", 4.0);
      int n = t.value("n", p.n);
      double hi = n + p.gamma + 2 * p.s;
      bool in_range = (pw > alpha && pw < n - 1) || pw > hi;
      if (!(alpha > 0.0 && alpha < 1.0)) d.push_back({where + ".alpha", "alpha must lie in (0,1)"});
      if (!in_range)
        d.push_back({where + ".p", "p = " + std::to_string(pw) + " outside (alpha, n-1) U (n+gamma+2s, inf) = (" +
                                       std::to_string(alpha) + ", " + std::to_string(n - 1) + ") U (" +
                                       std::to_string(hi) + ", inf)"});
    }
    if (type == "giusti") {
      if (t.value("gamma", 1.0) <= 0.0) d.push_back({where + ".gamma", "gamma must be positive"});
      if (t.value("A", 1.0) < 0.0) d.push_back({where + ".A", "A must be nonnegative"});
    }
  }
  return d;
}

struct TaskOutcome {
  std::string name;
  std::string type;
  std::string status = "pass";  // pass | fail | error
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> csvs;  // file name, contents
};

struct RunContext {
  KernelParams kernel;
  QuadratureBudget budget;
  std::map<std::string, nlohmann::json> dists;
  std::uint64_t seed = 1;
  int jobs = 1;
};

namespace detail {

inline std::string safe_name(const std::string& s) {
  std::string o;
  for (char c : s) o += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  return o;
}

inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline void run_ellipticity(const nlohmann::json& t, const VelocityDistribution& f, const RunContext& ctx,
                            TaskOutcome& out) {
  Condition c = condition_from_string(t.value("condition", std::string("nondeg")));
  KernelParams p = ctx.kernel;
  require(f.dimension() == p.n, "distribution dimension differs from kernel n");
  if (c == Condition::coercive) {
    CoercivityGrid g;
    if (t.contains("grid")) {
      g.spacing = t.at("grid").value("spacing", g.spacing);
      g.half_width = t.at("grid").value("half_width", g.half_width);
      g.angles = t.at("grid").value("angles", g.angles);
    }
    auto fit = coercivity_fit(f, p, g, ctx.budget, ctx.jobs);
    out.metrics = {{"condition", "coercive"}, {"lambda_meas", num(fit.lambda)}, {"spread", num(fit.spread)},
                   {"ratios", fit.ratios}};
    out.status = fit.pass() ? "pass" : "fail";
    return;
  }
  const auto& grids = t.value("grids", nlohmann::json::object());
  std::vector<double> r_list = json_doubles(grids, "r_list", c == Condition::cancel ? std::vector<double>{0.5}
                                                                                     : std::vector<double>{0.5, 1.0});
  std::vector<Vec> v_grid = grids.contains("v_grid") ? json_vec_list(grids.at("v_grid"), p.n, "v_grid")
                                                     : default_v_grid(p.n);
  EllipticityThresholds thr;
  thr.lambda_min = t.value("lambda_min", 0.0);
  if (t.contains("Lambda_max")) thr.Lambda_max = t.at("Lambda_max").get<double>();
  HomogeneousKernel K = surrogate_kernel(f, p, ctx.budget);
  EllipticityReport rep;
  if (c == Condition::upper) rep = condition_upper_bound(K, r_list, v_grid, ctx.budget, ctx.jobs, thr);
  else if (c == Condition::nondeg)
    rep = condition_nondegeneracy(K, r_list, v_grid, ctx.budget, ctx.jobs, &f, &p, thr);
  else rep = condition_cancellation(K, r_list, v_grid, ctx.budget, ctx.jobs, {}, thr);
  rep.params = p;
  out.metrics = to_json(rep);
  out.status = rep.pass ? "pass" : "fail";
  out.csvs.push_back({"cells.csv", cells_csv(rep)});
}

inline void run_task(const nlohmann::json& t, const RunContext& ctx, TaskOutcome& out) {
  const std::string& type = out.type;
  std::optional<VelocityDistribution> f;
  if (t.contains("distribution")) f = distribution_from_json(ctx.dists.at(t.at("distribution").get<std::string>()));
  const QuadratureBudget& b = ctx.budget;
  if (type == "observables" || type == "hydro_check") {
    std::vector<double> orders = json_doubles(t, "moment_orders", {ctx.kernel.q_reference});
    HydroThresholds thr;
    if (type == "hydro_check") {
      const auto& th = t.value("thresholds", nlohmann::json::object());
      thr.m0 = th.value("m0", thr.m0);
      thr.M0 = th.value("M0", thr.M0);
      thr.p0 = th.value("p0", thr.p0);
      thr.Mq = th.value("Mq", thr.Mq);
      thr.q = th.value("q", ctx.kernel.q_reference);
      if (th.contains("E0")) thr.E0 = th.at("E0").get<double>();
      if (th.contains("H0")) thr.H0 = th.at("H0").get<double>();
      if (std::find(orders.begin(), orders.end(), thr.q) == orders.end()) orders.push_back(thr.q);
    }
    auto rep = compute_observables(*f, orders, t.value("tol", 1e-8));
    out.metrics = to_json(rep);
    if (type == "hydro_check") {
      auto h = check_hydro_bounds(rep, thr);
      out.metrics["conditions"] = to_json(h);
      out.metrics["failures"] = h.failures();
      out.status = h.all_pass() ? "pass" : "fail";
    }
    return;
  }
  if (type == "tube_scan") {
    double delta = t.value("delta", 0.5), R = t.value("R", 5.0);
    auto s = worst_tube_scan(*f, delta, R, t.value("directions", 36), t.value("offsets", 21), b, ctx.jobs);
    out.metrics = {{"delta", delta}, {"R", R}, {"min_mass", s.min_mass}, {"grid_min", s.grid_min},
                   {"argmin_direction", vec_to_json(s.argmin.e0)}, {"argmin_point", vec_to_json(s.argmin.a0)}};
    out.status = s.min_mass > t.value("min_mass", 0.0) ? "pass" : "fail";
    std::ostringstream os;
    os.precision(12);
    os << "direction,offset,mass\n";
    for (auto& r : s.rows) {
      os << r.direction(0);
      for (Eigen::Index i = 1; i < r.direction.size(); ++i) os << " " << r.direction(i);
      os << "," << r.offset(0);
      for (Eigen::Index i = 1; i < r.offset.size(); ++i) os << " " << r.offset(i);
      os << "," << r.mass << "\n";
    }
    out.csvs.push_back({"tubes.csv", os.str()});
    return;
  }
  if (type == "ellipticity") return run_ellipticity(t, *f, ctx, out);
  if (type == "uniformity") {
    KernelParams p = ctx.kernel;
    Condition c = condition_from_string(t.value("condition", std::string("nondeg")));
    auto v0s = json_vec_list(t.value("v0_list", nlohmann::json::array({0.0, 2.0, 5.0, 20.0})), p.n, "v0_list");
    const auto& grids = t.value("grids", nlohmann::json::object());
    ScanGrids g;
    g.r_list = json_doubles(grids, "r_list", g.r_list);
    if (grids.contains("v_grid")) g.v_grid = json_vec_list(grids.at("v_grid"), p.n, "v_grid");
    auto S = uniformity_scan(*f, p, c, v0s, g, b, t.value("transformed", true), ctx.jobs, t.value("tail", false));
    double max_ratio = t.value("max_ratio", 10.0);
    nlohmann::json rows = nlohmann::json::array();
    for (auto& r : S.rows)
      rows.push_back({{"v0_norm", r.v0.norm()}, {"lambda", num(r.lambda)}, {"Lambda", num(r.Lambda)}, {"tail", num(r.tail)}});
    out.metrics = {{"condition", to_string(c)},       {"transformed", S.transformed}, {"ratio_lambda", num(S.ratio_lambda)},
                   {"ratio_Lambda", num(S.ratio_Lambda)}, {"ratio", num(S.ratio)},      {"max_ratio", max_ratio},
                   {"rows", rows}};
    out.status = std::isfinite(S.ratio) && S.ratio <= max_ratio ? "pass" : "fail";
    out.csvs.push_back({"scan.csv", scan_csv(S)});
    return;
  }
  if (type == "landau") {
    double gamma = t.value("gamma", std::max(0.0, ctx.kernel.gamma));
    int n = f->dimension();
    auto v0s = json_vec_list(t.value("v0_list", nlohmann::json::array({0.0, 5.0, 50.0})), n, "v0_list");
    std::vector<Vec> vg = t.contains("v_grid") ? json_vec_list(t.at("v_grid"), n, "v_grid") : default_v_grid(n);
    auto S = landau_ellipticity_scan(*f, gamma, v0s, vg, b, ctx.jobs);
    double max_ratio = t.value("max_ratio", 10.0);
    out.metrics = {{"gamma", gamma},       {"lambda", S.lambda},       {"Lambda", S.Lambda},
                   {"ratio", S.ratio},     {"b_max", S.b_max},         {"c_scaled_max", S.c_scaled_max},
                   {"c_scaled_ratio", S.c_scaled_ratio}, {"max_ratio", max_ratio}};
    bool ok = S.lambda > 0.0 && S.ratio <= max_ratio && S.c_scaled_ratio <= max_ratio;
    out.status = ok ? "pass" : "fail";
    out.csvs.push_back({"landau.csv", landau_scan_csv(S)});
    return;
  }
  if (type == "identities") {
    auto ids = identity_suite(b, ctx.jobs);
    double tol = t.value("max_rel_err", 1e-2), worst = 0.0;
    for (auto& i : ids) worst = std::max(worst, i.check.rel_err);
    out.metrics = {{"cases", ids.size()}, {"max_rel_err", worst}, {"tolerance", tol}};
    out.status = worst < tol ? "pass" : "fail";
    out.csvs.push_back({"identities.csv", identities_csv(ids)});
    return;
  }
  if (type == "counterexample_sweep") {
    auto S = counterexample_sweep(json_doubles(t, "R_list", {5, 10, 20, 40}), b);
    out.metrics = {{"slope", S.slope}, {"mass_in_range", S.mass_in_range}, {"tube_bounded", S.tube_bounded},
                   {"slope_ok", S.slope_ok}};
    out.status = S.pass() ? "pass" : "fail";
    out.csvs.push_back({"sweep.csv", counterexample_csv(S)});
    return;
  }
  if (type == "kinetic_norms") {
    NormSpec spec;
    spec.alpha = t.value("alpha", 0.5);
    spec.p = t.value("p", 4.0);
    auto win = json_doubles(t, "window", {0.0, 3.0});
    require(win.size() == 2, "window must have two entries");
    spec.tau = win[0];
    spec.T = win[1];
    spec.radii = json_doubles(t, "radii", {1.0, 0.3, 0.05});
    int n = t.value("n", ctx.kernel.n);
    double s = t.value("s", ctx.kernel.s);
    auto plan = make_sample_plan(spec, n, t.value("centers", 12), t.value("x_half", 1.0), t.value("v_half", 2.5),
                                 ctx.seed, t.value("points_per_cylinder", 12));
    auto eps = json_doubles(t, "eps_list", {0.5, 0.1, 0.02});
    std::string which = t.value("function", std::string("all"));
    nlohmann::json tabs = nlohmann::json::object();
    bool ok = true, any = false;
    std::ostringstream csv;
    csv.precision(12);
    csv << "function,epsilon,lhs,holder_term,l1_term,rhs,slack\n";
    for (auto& [name, F] : interpolation_test_fields(spec.p)) {
      if (which != "all" && which != name) continue;
      any = true;
      auto tab = verify_interpolation(F, spec, plan, s, eps, b, ctx.jobs);
      tabs[name] = to_json(tab);
      for (auto& r : tab.rows) {
        ok = ok && r.slack > 0.0;
        csv << name << "," << r.epsilon << "," << r.lhs << "," << r.holder_term << "," << r.l1_term << "," << r.rhs
            << "," << r.slack << "\n";
      }
    }
    require(any, "unknown kinetic_norms function '" + which + "'");
    out.metrics = {{"alpha", spec.alpha}, {"p", spec.p}, {"centers", plan.centers.size()}, {"tables", tabs}};
    out.status = ok ? "pass" : "fail";
    out.csvs.push_back({"interpolation.csv", csv.str()});
    return;
  }
  if (type == "giusti") {
    double gamma = t.value("gamma", 1.0), A = t.value("A", 1.0);
    auto iv = json_doubles(t, "interval", {0.0, 1.0});
    require(iv.size() == 2, "interval must have two entries");
    const auto& pr = t.value("profile", nlohmann::json{{"kind", "constant"}, {"value", 0.0}});
    std::string kind = pr.value("kind", std::string("constant"));
    std::function<double(double)> F;
    if (kind == "constant") {
      double c = pr.value("value", 0.0);
      F = [c](double) { return c; };
    } else if (kind == "power") {
      // B (t - T1 + shift)^{-exponent}
      double B = pr.value("B", 1.0), sh = pr.value("shift", 0.1), ex = pr.value("exponent", gamma), T1 = iv[0];
      F = [=](double x) { return B * std::pow(x - T1 + sh, -ex); };
    } else if (kind == "blowup") {
      // B (T2 + shift - t)^{-exponent}
      double B = pr.value("B", 1.0), sh = pr.value("shift", 1e-3), ex = pr.value("exponent", gamma), T2 = iv[1];
      F = [=](double x) { return B * std::pow(T2 + sh - x, -ex); };
    } else {
      throw DomainError("unknown giusti profile kind '" + kind + "'");
    }
    auto g = giusti_verify(F, iv[0], iv[1], gamma, A, t.value("samples", 200));
    out.metrics = to_json(g);
    out.status = !g.hypothesis_ok || g.conclusion_ok ? "pass" : "fail";
    return;
  }
  throw DomainError("unknown task type '" + type + "'");
}

}  // namespace detail

struct RunResult {
  int exit_code = 0;
  nlohmann::json report;
  nlohmann::json run_info;
  std::vector<TaskOutcome> outcomes;
};

// Executes tasks in order and collects failures; exit 0 all pass, 2 a check failed, 1 an execution error.
inline RunResult run_config(const nlohmann::json& cfg, int jobs) {
  RunResult R;
  auto diags = validate_config(cfg);
  if (!diags.empty()) {
    std::string msg;
    for (auto& d : diags) msg += to_string(d) + "\n";
    throw DomainError("invalid config:\n" + msg);
  }
  RunContext ctx;
  ctx.kernel = kernel_params_from_json(cfg.value("kernel", nlohmann::json::object()));
  ctx.budget = budget_from_json(cfg.value("quad", nlohmann::json::object()));
  ctx.dists = distribution_specs(cfg);
  ctx.seed = cfg.value("seed", 1);
  ctx.jobs = std::max(1, jobs);
  nlohmann::json tasks = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  const auto& tl = cfg.value("tasks", nlohmann::json::array());
  bool failed = false, errored = false;
  for (std::size_t i = 0; i < tl.size(); ++i) {
    const auto& t = tl[i];
    TaskOutcome out;
    out.name = task_name(t, i);
    out.type = t.at("type").get<std::string>();
    auto t0 = std::chrono::steady_clock::now();
    try {
      detail::run_task(t, ctx, out);
    } catch (const QuadratureFailure& e) {
      out.status = "fail";
      out.metrics = {{"error", e.what()}, {"estimate", detail::num(e.estimate())}, {"error_estimate", detail::num(e.error())}};
      out.csvs.clear();
    } catch (const std::exception& e) {
      out.status = "error";
      out.metrics = {{"error", e.what()}};
      out.csvs.clear();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed = failed || out.status == "fail";
    errored = errored || out.status == "error";
    nlohmann::json arts = nlohmann::json::array();
    for (auto& [file, _] : out.csvs) arts.push_back(detail::safe_name(out.name) + "_" + file);
    tasks.push_back({{"name", out.name}, {"type", out.type}, {"status", out.status}, {"metrics", out.metrics},
                     {"artifacts", arts}});
    timing.push_back({{"name", out.name}, {"seconds", secs}});
    R.outcomes.push_back(std::move(out));
  }
  R.report = {{"schema_version", kSchemaVersion},
              {"params",
               {{"kernel",
                 {{"n", ctx.kernel.n},
                  {"s", ctx.kernel.s},
                  {"gamma", ctx.kernel.gamma},
                  {"normalization", ctx.kernel.normalization == Normalization::plain ? "plain" : "grazing"},
                  {"q_reference", ctx.kernel.q_reference}}},
                {"quad",
                 {{"rel_tol", ctx.budget.rel_tol},
                  {"abs_tol", ctx.budget.abs_tol},
                  {"max_evals", ctx.budget.max_evals},
                  {"truncation_radius", ctx.budget.truncation_radius}}},
                {"seed", ctx.seed}}},
              {"tasks", tasks}};
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[64];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  R.run_info = {{"started_utc", buf}, {"jobs", ctx.jobs}, {"timing", timing}};
  R.exit_code = errored ? 1 : failed ? 2 : 0;
  return R;
}

inline void write_outputs(const RunResult& R, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << R.report.dump(2) << "\n";
  std::ofstream(dir / "run_info.json") << R.run_info.dump(2) << "\n";
  for (auto& o : R.outcomes)
    for (auto& [file, body] : o.csvs) std::ofstream(dir / (detail::safe_name(o.name) + "_" + file)) << body;
}

}  // namespace kinver
