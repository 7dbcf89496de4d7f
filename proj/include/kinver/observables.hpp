#pragma once

#include "kinver/dist_model.hpp"
#include "kinver/linalg.hpp"
#include "kinver/quad_core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kinver {

struct ObservableReport {
  int n = 2;
  double rho = 0.0;
  Vec vbar;
  Mat pressure;
  double temperature = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  double first_moment = 0.0;
  std::map<double, double> moments;
  Vec pressure_eigs;  // ascending
};

namespace detail {

// Integral of x^k over (a, b).
inline double monomial_interval(double a, double b, int k) {
  return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
}

// Integral of |v|^{2k} over an axis-aligned box, by multinomial expansion.
inline double box_even_moment(const Vec& c, const Vec& h, int k) {
  const int n = static_cast<int>(c.size());
  std::vector<double> fact(2 * k + 2, 1.0);
  for (int i = 1; i < static_cast<int>(fact.size()); ++i) fact[i] = fact[i - 1] * i;
  auto rec = [&](auto&& self, int axis, int left) -> double {
    if (axis == n - 1) return monomial_interval(c(axis) - h(axis), c(axis) + h(axis), 2 * left) / fact[left];
    double s = 0.0;
    for (int a = 0; a <= left; ++a)
      s += monomial_interval(c(axis) - h(axis), c(axis) + h(axis), 2 * a) / fact[a] * self(self, axis + 1, left - a);
    return s;
  };
  return fact[k] * rec(rec, 0, k);
}

// Closed form of the weighted integral of |v|^q against one component, when known.
inline std::optional<double> component_moment_closed(const Component& c, double q) {
  if (q == 0.0) return c.mass();
  double k2 = q / 2.0;
  if (k2 != std::floor(k2) || k2 < 0) return std::nullopt;
  int k = static_cast<int>(k2);
  const int n = c.dimension();
  const Vec& m = c.center();
  switch (c.kind()) {
    case ComponentKind::box:
      if (k > 8) return std::nullopt;
      return c.weight() * box_even_moment(m, c.half_widths(), k);
    case ComponentKind::gaussian: {
      const Mat& C = c.covariance();
      double trc = C.trace(), mm = m.squaredNorm();
      if (k == 1) return c.weight() * (trc + mm);
      if (k == 2) return c.weight() * ((trc + mm) * (trc + mm) + 2.0 * (C * C).trace() + 4.0 * m.dot(C * m));
      return std::nullopt;
    }
    case ComponentKind::ball:
      if (k == 1) return c.mass() * (m.squaredNorm() + n * c.radius() * c.radius() / (n + 2.0));
      return std::nullopt;
  }
  return std::nullopt;
}

inline bool all_boxes(const VelocityDistribution& f) {
  for (auto& c : f.components())
    if (c.kind() != ComponentKind::box) return false;
  return true;
}

// Box mixtures are constant on the cells cut by all faces; integrate F(density) cell by cell.
template <class F>
double box_cell_integral(const VelocityDistribution& f, F&& fn) {
  const int n = f.dimension();
  std::vector<std::vector<double>> cuts(n);
  for (auto& c : f.components())
    for (int i = 0; i < n; ++i) {
      cuts[i].push_back(c.center()(i) - c.half_widths()(i));
      cuts[i].push_back(c.center()(i) + c.half_widths()(i));
    }
  for (auto& cu : cuts) {
    std::sort(cu.begin(), cu.end());
    cu.erase(std::unique(cu.begin(), cu.end()), cu.end());
  }
  std::vector<size_t> idx(n, 0);
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    if (cuts[i].size() < 2) return 0.0;
  for (;;) {
    Vec v(n);
    double vol = 1.0;
    for (int i = 0; i < n; ++i) {
      v(i) = 0.5 * (cuts[i][idx[i]] + cuts[i][idx[i] + 1]);
      vol *= cuts[i][idx[i] + 1] - cuts[i][idx[i]];
    }
    total += vol * fn(f.density(v));
    int k = 0;
    while (k < n && ++idx[k] == cuts[k].size() - 1) idx[k++] = 0;
    if (k == n) break;
  }
  return total;
}

inline double xlogx(double d) { return d > 0.0 ? d * std::log(d) : 0.0; }

}  // namespace detail

// Integral of f |v|^q.
inline double moment(const VelocityDistribution& f, double q, const QuadratureBudget& budget) {
  require(q >= 0.0, "moment order must be nonnegative");
  double s = 0.0;
  for (auto& c : f.components()) {
    auto closed = detail::component_moment_closed(c, q);
    if (closed) {
      s += *closed;
      continue;
    }
    s += c.integrate_against<double>([q](const Vec& v) { return std::pow(v.norm(), q); }, Vec::Zero(f.dimension()),
                                     budget);
  }
  return s;
}

// Entropy density h = integral of f log f, with 0 log 0 = 0.
inline double entropy(const VelocityDistribution& f, const QuadratureBudget& budget) {
  const int n = f.dimension();
  if (detail::all_boxes(f)) return detail::box_cell_integral(f, detail::xlogx);
  if (f.components().size() == 1 && f.components()[0].kind() == ComponentKind::gaussian) {
    const auto& c = f.components()[0];
    double w = c.weight();
    double diff = 0.5 * n * (1.0 + std::log(2.0 * pi)) + 0.5 * std::log(c.covariance().determinant());
    return w * std::log(w) - w * diff;
  }
  Vec lo, hi;
  f.bounding_box(lo, hi, 9.0);
  Vec v(n);
  // Breaks on axis k given v(0..k-1): faces, centers, and exact ball slice edges.
  auto slice_breaks = [&](int k) {
    std::vector<double> br;
    for (auto& c : f.components()) {
      const Vec& m = c.center();
      br.push_back(m(k));
      if (c.kind() == ComponentKind::box) {
        br.push_back(m(k) - c.half_widths()(k));
        br.push_back(m(k) + c.half_widths()(k));
      } else if (c.kind() == ComponentKind::ball) {
        double rem = c.radius() * c.radius();
        for (int j = 0; j < k; ++j) rem -= std::pow(v(j) - m(j), 2);
        if (rem > 0.0) {
          br.push_back(m(k) - std::sqrt(rem));
          br.push_back(m(k) + std::sqrt(rem));
        }
      }
    }
    return br;
  };
  auto level = [&](auto&& self, int k, const QuadratureBudget& b) -> double {
    auto fk = [&](double x) -> double {
      v(k) = x;
      if (k == n - 1) return detail::xlogx(f.density(v));
      return self(self, k + 1, b.inner(0.3));
    };
    return integrate(fk, breaks_within(lo(k), hi(k), slice_breaks(k)), b).value;
  };
  return level(level, 0, budget);
}

inline ObservableReport compute_observables(const VelocityDistribution& f, const std::vector<double>& moment_orders,
                                            double tol) {
  require(tol > 0.0, "compute_observables: tol must be positive");
  require(!f.empty(), "compute_observables: empty distribution");
  QuadratureBudget budget;
  budget.rel_tol = tol;
  budget.max_evals = 4000000;
  const int n = f.dimension();
  ObservableReport r;
  r.n = n;
  r.rho = f.mass();
  require(r.rho > 0.0, "compute_observables: distribution has no mass");
  Vec mom1 = Vec::Zero(n);
  Mat S = Mat::Zero(n, n);
  for (auto& c : f.components()) {
    mom1 += c.mass() * c.center();
    S += c.second_moment();
  }
  r.vbar = mom1 / r.rho;
  r.pressure = S - r.rho * r.vbar * r.vbar.transpose();
  r.pressure = 0.5 * (r.pressure + r.pressure.transpose());
  r.pressure_eigs = symmetric_eigenvalues(r.pressure);
  r.temperature = r.pressure.trace() / (n * r.rho);
  r.energy = 0.5 * S.trace();
  r.first_moment = moment(f, 1.0, budget);
  for (double q : moment_orders) r.moments[q] = moment(f, q, budget);
  r.entropy = entropy(f, budget);
  return r;
}

// inf over unit e of e.Pe.
inline double pressure_condition_directional(const Mat& P) {
  require(is_symmetric(P), "pressure matrix must be symmetric");
  return symmetric_eigenvalues(P)(0);
}

// inf over sigma of sup over e perpendicular to sigma of e.Pe, which is the
// second-largest eigenvalue.
inline double pressure_condition_two_directions(const Mat& P) {
  require(is_symmetric(P), "pressure matrix must be symmetric");
  Vec ev = symmetric_eigenvalues(P);
  return ev(ev.size() - 2);
}

// Brute-force inf-sup over direction grids, with a local pattern search around the grid argmin.
inline double pressure_two_directions_grid(const Mat& P, int circle_points = 720, int sphere_level = 4) {
  require(is_symmetric(P), "pressure matrix must be symmetric");
  const int n = static_cast<int>(P.rows());
  if (n == 2) {
    // e perpendicular to sigma is unique up to sign, so scan e directly.
    double best = std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (int k = 0; k < circle_points; ++k) {
      double phi = pi * k / circle_points;
      Vec e = circle_point(phi);
      double val = e.dot(P * e);
      if (val < best) best = val, arg = phi;
    }
    for (double step = pi / circle_points; step > 1e-12; step *= 0.5) {
      for (double d : {-step, step}) {
        Vec e = circle_point(arg + d);
        double val = e.dot(P * e);
        if (val < best) best = val, arg += d;
      }
    }
    return best;
  }
  auto sup_perp = [&](const Vec& sigma) {
    Mat B = complement_basis(sigma);
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < circle_points; ++k) {
      double phi = pi * k / circle_points;
      Vec e = std::cos(phi) * B.col(0) + std::sin(phi) * B.col(1);
      best = std::max(best, e.dot(P * e));
    }
    return best;
  };
  auto grid = icosphere(sphere_level);
  double best = std::numeric_limits<double>::infinity();
  Vec arg = grid.front();
  for (auto& s : grid) {
    double val = sup_perp(s);
    if (val < best) best = val, arg = s;
  }
  for (double step = 0.05; step > 1e-7; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      Mat B = complement_basis(arg);
      for (int c = 0; c < 2 && !moved; ++c)
        for (double d : {-step, step}) {
          Vec cand = normalized(arg + d * B.col(c));
          double val = sup_perp(cand);
          if (val < best) {
            best = val, arg = cand, moved = true;
            break;
          }
        }
    }
  }
  return best;
}

struct HydroThresholds {
  double m0 = 0.0;
  double M0 = std::numeric_limits<double>::infinity();
  double p0 = 0.0;
  double Mq = std::numeric_limits<double>::infinity();
  double q = 0.0;
  std::optional<double> E0;
  std::optional<double> H0;
};

struct ConditionResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double bound = 0.0;
};

struct HydroCheck {
  std::vector<ConditionResult> conditions;

  bool all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.pass; });
  }

  const ConditionResult& get(const std::string& name) const {
    for (auto& c : conditions)
      if (c.name == name) return c;
    throw DomainError("no hydrodynamic condition named '" + name + "'");
  }

  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (auto& c : conditions)
      if (!c.pass) out.push_back(c.name);
    return out;
  }
};

inline HydroCheck check_hydro_bounds(const ObservableReport& r, const HydroThresholds& t) {
  require(t.m0 >= 0.0 && t.M0 > 0.0 && t.p0 >= 0.0 && t.Mq > 0.0, "hydrodynamic thresholds must be positive");
  auto it = r.moments.find(t.q);
  require(it != r.moments.end(), "moment of order " + std::to_string(t.q) + " missing from the report");
  HydroCheck h;
  h.conditions.push_back({"mass_lower", r.rho >= t.m0, r.rho, t.m0});
  h.conditions.push_back({"mass_upper", r.rho <= t.M0, r.rho, t.M0});
  double p2 = pressure_condition_two_directions(r.pressure);
  h.conditions.push_back({"pressure_two_directions", p2 >= t.p0, p2, t.p0});
  h.conditions.push_back({"moment", it->second <= t.Mq, it->second, t.Mq});
  if (t.E0) h.conditions.push_back({"energy", r.energy <= *t.E0, r.energy, *t.E0});
  if (t.H0) h.conditions.push_back({"entropy", r.entropy <= *t.H0, r.entropy, *t.H0});
  return h;
}

inline nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_to_json(m.row(i).transpose()));
  return a;
}

inline nlohmann::json to_json(const ObservableReport& r) {
  nlohmann::json j;
  j["rho"] = r.rho;
  j["vbar"] = vec_to_json(r.vbar);
  j["pressure"] = mat_to_json(r.pressure);
  j["temperature"] = r.temperature;
  j["energy"] = r.energy;
  j["entropy"] = r.entropy;
  j["first_moment"] = r.first_moment;
  j["pressure_eigs"] = vec_to_json(r.pressure_eigs);
  nlohmann::json m = nlohmann::json::array();
  for (auto& [q, v] : r.moments) m.push_back({{"q", q}, {"value", v}});
  j["moments"] = m;
  return j;
}

inline nlohmann::json to_json(const HydroCheck& h) {
  nlohmann::json a = nlohmann::json::array();
  for (auto& c : h.conditions) a.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"bound", c.bound}});
  return a;
}

}  // namespace kinver
