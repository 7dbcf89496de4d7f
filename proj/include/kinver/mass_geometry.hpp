#pragma once

#include "kinver/dist_model.hpp"
#include "kinver/linalg.hpp"
#include "kinver/parallel.hpp"
#include "kinver/quad_core.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace kinver {

struct LineSpec {
  Vec a0;
  Vec e0;

  LineSpec() = default;
  LineSpec(const Vec& a, const Vec& e) : a0(a), e0(normalized(e)) {}

  double distance(const Vec& w) const {
    Vec d = w - a0;
    return (d - d.dot(e0) * e0).norm();
  }
};

// Centroid of f (closed form; every primitive is symmetric about its center).
inline Vec mean_velocity(const VelocityDistribution& f) {
  Vec m = Vec::Zero(f.dimension());
  for (auto& c : f.components()) m += c.mass() * c.center();
  return m / f.mass();
}

// Density of the push-forward of f under w -> w.e (e unit), at u.
inline double marginal_density(const VelocityDistribution& f, const Vec& e, double u, const QuadratureBudget& budget) {
  double s = 0.0;
  VelocityDistribution rest(f.dimension());
  for (auto& c : f.components()) {
    if (c.kind() == ComponentKind::gaussian) {
      double mu = c.center().dot(e), var = e.dot(c.covariance() * e);
      s += c.weight() * std::exp(-0.5 * (u - mu) * (u - mu) / var) / std::sqrt(2.0 * pi * var);
    } else {
      rest.add(c);
    }
  }
  if (!rest.empty()) s += hyperplane_mass(rest, e, u, budget);
  return s;
}

// Breakpoints of the marginal along e.
inline std::vector<double> marginal_breaks(const VelocityDistribution& f, const Vec& e) {
  return f.projected_breaks(Vec::Zero(f.dimension()), e);
}

// Mass of f in B_R(center) outside the open tube {dist(., L) < delta}. R may be infinite.
inline double tube_complement_mass(const VelocityDistribution& f, const LineSpec& line, double delta, double R,
                                   const QuadratureBudget& budget, const Vec* center = nullptr) {
  require(delta > 0.0 && R > 0.0, "tube_complement_mass: delta and R must be positive");
  const int n = f.dimension();
  require(line.a0.size() == n && line.e0.size() == n, "tube_complement_mass: line dimension mismatch");
  const Vec c = center ? *center : Vec(Vec::Zero(n));
  const Vec& e0 = line.e0;
  Vec a = line.a0 - c;
  Vec a_perp = a - a.dot(e0) * e0;
  const double inf = std::numeric_limits<double>::infinity();
  const bool bounded = std::isfinite(R);
  const double reach = bounded ? R : f.support_radius() + c.norm();
  // Mass on the chord of B_R(center) through c + q parallel to e0, q perpendicular to e0.
  auto line_mass = [&](const Vec& q, const QuadratureBudget& b) {
    double h = inf;
    if (bounded) {
      double r2 = R * R - q.squaredNorm();
      if (r2 <= 0.0) return 0.0;
      h = std::sqrt(r2);
    }
    return line_power_integral(f, Vec(c + q), e0, 0.0, -h, h, b);
  };
  Mat B = complement_basis(e0);
  QuadratureBudget in = budget.inner();
  if (n == 2) {
    Vec u = B.col(0);
    double alpha = a_perp.dot(u);
    double lo = -reach - alpha, hi = reach - alpha;
    std::vector<double> br = f.projected_breaks(Vec(c + a_perp), u);
    if (bounded) {
      br.push_back(-R - alpha);
      br.push_back(R - alpha);
    }
    auto g = [&](double y) { return line_mass(Vec(a_perp + y * u), in); };
    double s = 0.0;
    if (hi > delta) s += integrate(g, breaks_within(std::max(delta, lo), hi, br), budget).value;
    if (lo < -delta) s += integrate(g, breaks_within(lo, std::min(-delta, hi), br), budget).value;
    return s;
  }
  Vec b1 = B.col(0), b2 = B.col(1);
  double rmax = reach + a_perp.norm();
  if (rmax <= delta) return 0.0;
  auto ring = [&](double rho) {
    auto h = [&](double phi) { return line_mass(Vec(a_perp + rho * (std::cos(phi) * b1 + std::sin(phi) * b2)), in.inner()); };
    return rho * integrate(h, std::vector<double>{0.0, 0.5 * pi, pi, 1.5 * pi, 2.0 * pi}, in).value;
  };
  std::vector<double> br;
  for (double x : f.projected_breaks(Vec(c + a_perp), b1)) br.push_back(std::abs(x));
  for (double x : f.projected_breaks(Vec(c + a_perp), b2)) br.push_back(std::abs(x));
  if (bounded) br.push_back(std::abs(R - a_perp.norm()));
  return integrate(ring, breaks_within(delta, rmax, br), budget).value;
}

struct TubeScanRow {
  Vec direction;
  Vec offset;
  double mass = 0.0;
};

struct TubeScanResult {
  double min_mass = 0.0;
  double grid_min = 0.0;
  LineSpec argmin;
  std::vector<TubeScanRow> rows;
};

// Half-sphere direction grid: angles k*pi/N (n=2) or icosphere vertices with a
// positive leading nonzero coordinate (n=3).
inline std::vector<Vec> half_sphere_directions(int n, int count) {
  std::vector<Vec> out;
  if (n == 2) {
    for (int k = 0; k < count; ++k) out.push_back(circle_point(pi * k / count));
    return out;
  }
  int level = 0;
  while (5 * (1 << (2 * level)) + 1 < count && level < 6) ++level;
  for (auto& p : icosphere(level)) {
    int i = 0;
    while (i < 3 && std::abs(p(i)) < 1e-14) ++i;
    if (i < 3 && p(i) > 0.0) out.push_back(p);
  }
  return out;
}

// Minimizes tube_complement_mass over lines a0 = vbar + offset, offset perpendicular to the
// direction within a box of half-width 2R, then refines the grid argmin by pattern search.
inline TubeScanResult worst_tube_scan(const VelocityDistribution& f, double delta, double R, int direction_grid_size,
                                      int offset_grid, const QuadratureBudget& budget, int jobs = 1) {
  require(direction_grid_size >= 1 && offset_grid >= 1, "worst_tube_scan: grids must be nonempty");
  require(std::isfinite(R), "worst_tube_scan: R must be finite");
  const int n = f.dimension();
  const Vec vbar = mean_velocity(f);
  auto dirs = half_sphere_directions(n, direction_grid_size);
  std::vector<double> offs;
  for (int k = 0; k < offset_grid; ++k)
    offs.push_back(offset_grid == 1 ? 0.0 : -2.0 * R + 4.0 * R * k / (offset_grid - 1));
  struct Cell {
    size_t dir;
    Vec offset;
  };
  std::vector<Cell> cells;
  for (size_t d = 0; d < dirs.size(); ++d) {
    Mat B = complement_basis(dirs[d]);
    if (n == 2) {
      for (double o : offs) cells.push_back({d, Vec(o * B.col(0))});
    } else {
      for (double o1 : offs)
        for (double o2 : offs) cells.push_back({d, Vec(o1 * B.col(0) + o2 * B.col(1))});
    }
  }
  auto eval = [&](const Vec& dir, const Vec& off) {
    return tube_complement_mass(f, LineSpec(Vec(vbar + off), dir), delta, R, budget);
  };
  auto masses = parallel_map<double>(cells.size(), jobs, [&](size_t i) { return eval(dirs[cells[i].dir], cells[i].offset); });
  TubeScanResult res;
  size_t best = 0;
  for (size_t i = 0; i < cells.size(); ++i) {
    res.rows.push_back({dirs[cells[i].dir], cells[i].offset, masses[i]});
    if (masses[i] < masses[best]) best = i;
  }
  res.grid_min = masses[best];
  Vec dir = dirs[cells[best].dir], off = cells[best].offset;
  double val = masses[best];
  double astep = n == 2 ? pi / dirs.size() : std::sqrt(2.0 * pi / dirs.size());
  double ostep = offset_grid > 1 ? 4.0 * R / (offset_grid - 1) : R;
  for (int it = 0; it < 12; ++it) {
    bool moved = true;
    while (moved) {
      moved = false;
      Mat B = complement_basis(dir);
      std::vector<std::pair<Vec, Vec>> cand;
      for (int k = 0; k < n - 1; ++k)
        for (double s : {-1.0, 1.0}) {
          Vec nd = normalized(Vec(dir + s * astep * B.col(k)));
          Vec no = off - off.dot(nd) * nd;
          cand.push_back({nd, no});
          cand.push_back({dir, Vec(off + s * ostep * B.col(k))});
        }
      for (auto& [nd, no] : cand) {
        double m = eval(nd, no);
        if (m < val) {
          val = m, dir = nd, off = no, moved = true;
          break;
        }
      }
    }
    astep *= 0.5;
    ostep *= 0.5;
  }
  res.min_mass = val;
  res.argmin = LineSpec(Vec(vbar + off), dir);
  return res;
}

// inf over directions sigma of the mass of B_R(vbar) outside the delta-tube around vbar + R sigma.
inline double line_mass_location(const VelocityDistribution& f, double delta, double R, int direction_grid_size,
                                 const QuadratureBudget& budget, int jobs = 1) {
  const Vec vbar = mean_velocity(f);
  auto dirs = half_sphere_directions(f.dimension(), direction_grid_size);
  auto m = parallel_map<double>(dirs.size(), jobs, [&](size_t i) {
    return tube_complement_mass(f, LineSpec(vbar, dirs[i]), delta, R, budget, &vbar);
  });
  double best = m[0];
  for (double x : m) best = std::min(best, x);
  return best;
}

// Integral of marginal(u) * u^k over |u| >= eta, for the marginal of f(vbar + .) along e.
inline double centered_marginal_tail(const VelocityDistribution& f, const Vec& e, const Vec& vbar, double eta, int k,
                                     const QuadratureBudget& budget) {
  const double shift = vbar.dot(e);
  double S = f.support_radius() + std::abs(shift);
  std::vector<double> br;
  for (double x : marginal_breaks(f, e)) br.push_back(x - shift);
  QuadratureBudget in = budget.inner();
  auto g = [&](double u) { return std::pow(u, k) * marginal_density(f, e, u + shift, in); };
  double s = 0.0;
  if (S > eta) {
    s += integrate(g, breaks_within(eta, S, br), budget).value;
    s += integrate(g, breaks_within(-S, -eta, br), budget).value;
  }
  return s;
}

// sup over unit e perpendicular to sigma of the integral of f(vbar + w)|w.e|^2 over |w.e| >= eta.
inline double slab_second_moment(const VelocityDistribution& f, const Vec& sigma, double eta,
                                 const QuadratureBudget& budget, int circle_points = 180) {
  require(eta >= 0.0, "slab_second_moment: eta must be nonnegative");
  const int n = f.dimension();
  const Vec vbar = mean_velocity(f);
  Mat B = complement_basis(sigma);
  auto val = [&](const Vec& e) { return centered_marginal_tail(f, e, vbar, eta, 2, budget); };
  if (n == 2) return val(Vec(B.col(0)));
  double best = -1.0, arg = 0.0;
  for (int k = 0; k < circle_points; ++k) {
    double phi = pi * k / circle_points;
    double v = val(Vec(std::cos(phi) * B.col(0) + std::sin(phi) * B.col(1)));
    if (v > best) best = v, arg = phi;
  }
  for (double step = pi / circle_points; step > 1e-6; step *= 0.5)
    for (double d : {-step, step}) {
      double v = val(Vec(std::cos(arg + d) * B.col(0) + std::sin(arg + d) * B.col(1)));
      if (v > best) best = v, arg += d;
    }
  return best;
}

struct HalfspaceBalance {
  double forward = 0.0;       // mass of {w.e0 >= eta}
  double backward = 0.0;      // mass of B_varrho intersected with {w.e0 <= 0}
  double premise_tail = 0.0;  // integral of f|w.e0| outside B_varrho
  double lower_bound = 0.0;   // forward * eta / (2 varrho)
  bool premise_ok = false;
  bool conclusion_ok = false;
};

// Mass balance around the centroid: if f puts mass lambda1 at distance eta ahead along e0,
// it puts at least lambda1 eta / (2 varrho) behind, inside B_varrho.
inline HalfspaceBalance halfspace_mass_balance(const VelocityDistribution& f, const Vec& e0_in, double eta,
                                               double varrho, const QuadratureBudget& budget) {
  require(eta > 0.0 && varrho > 0.0, "halfspace_mass_balance: eta and varrho must be positive");
  const int n = f.dimension();
  Vec e0 = normalized(e0_in);
  const Vec vbar = mean_velocity(f);
  QuadratureBudget in = budget.inner();
  HalfspaceBalance r;
  double S = f.support_radius() + std::abs(vbar.dot(e0));
  std::vector<double> br;
  for (double x : marginal_breaks(f, e0)) br.push_back(x - vbar.dot(e0));
  if (S > eta)
    r.forward = integrate([&](double u) { return marginal_density(f, e0, u + vbar.dot(e0), in); },
                          breaks_within(eta, S, br), budget)
                    .value;
  Mat B = complement_basis(e0);
  // Mass and first absolute moment of the slice {w.e0 = u} inside and outside B_varrho.
  auto slice = [&](double u, bool inside, const QuadratureBudget& b) {
    double rad2 = varrho * varrho - u * u;
    Vec x0 = vbar + u * e0;
    const double inf = std::numeric_limits<double>::infinity();
    if (n == 2) {
      Vec d = B.col(0);
      if (inside) {
        if (rad2 <= 0.0) return 0.0;
        double h = std::sqrt(rad2);
        return line_power_integral(f, x0, d, 0.0, -h, h, b);
      }
      double total = line_power_integral(f, x0, d, 0.0, -inf, inf, b);
      if (rad2 <= 0.0) return total;
      double h = std::sqrt(rad2);
      return total - line_power_integral(f, x0, d, 0.0, -h, h, b);
    }
    double reach = f.support_radius() + vbar.norm() + std::abs(u);
    auto row = [&](double c) {
      Vec y = x0 + c * B.col(0);
      double h2 = rad2 - c * c;
      if (inside) {
        if (h2 <= 0.0) return 0.0;
        return line_power_integral(f, y, B.col(1), 0.0, -std::sqrt(h2), std::sqrt(h2), b.inner());
      }
      double total = line_power_integral(f, y, B.col(1), 0.0, -inf, inf, b.inner());
      if (h2 <= 0.0) return total;
      return total - line_power_integral(f, y, B.col(1), 0.0, -std::sqrt(h2), std::sqrt(h2), b.inner());
    };
    std::vector<double> cb = f.projected_breaks(x0, B.col(0));
    if (rad2 > 0.0) {
      cb.push_back(-std::sqrt(rad2));
      cb.push_back(std::sqrt(rad2));
    }
    if (inside) {
      if (rad2 <= 0.0) return 0.0;
      return integrate(row, breaks_within(-std::sqrt(rad2), std::sqrt(rad2), cb), b).value;
    }
    return integrate(row, breaks_within(-reach, reach, cb), b).value;
  };
  std::vector<double> ub = br;
  ub.push_back(0.0);
  ub.push_back(-varrho);
  ub.push_back(varrho);
  r.backward = integrate([&](double u) { return slice(u, true, in); }, breaks_within(-varrho, 0.0, ub), budget).value;
  r.premise_tail =
      integrate([&](double u) { return std::abs(u) * slice(u, false, in); }, breaks_within(-S, S, ub), budget).value;
  r.lower_bound = r.forward * eta / (2.0 * varrho);
  r.premise_ok = r.premise_tail <= r.forward * eta / 2.0;
  r.conclusion_ok = r.backward >= r.lower_bound;
  return r;
}

// Integral of f(w)(w - vbar).e, which vanishes for every e.
inline double centered_first_moment(const VelocityDistribution& f, const Vec& e, const QuadratureBudget& budget) {
  const Vec vbar = mean_velocity(f);
  Vec u = normalized(e);
  double S = f.support_radius() + vbar.norm();
  std::vector<double> br;
  for (double x : marginal_breaks(f, u)) br.push_back(x - vbar.dot(u));
  // The exact value is 0, so the tolerance is absolute on the scale of the mass.
  QuadratureBudget b = budget;
  b.abs_tol = std::max(budget.abs_tol, budget.rel_tol * f.mass());
  return integrate([&](double t) { return t * marginal_density(f, u, t + vbar.dot(u), b.inner()); },
                   breaks_within(-S, S, br), b)
      .value;
}

}  // namespace kinver
