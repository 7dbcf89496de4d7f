#pragma once

#include "kinver/dist_model.hpp"
#include "kinver/linalg.hpp"
#include "kinver/observables.hpp"
#include "kinver/parallel.hpp"
#include "kinver/quad_core.hpp"
#include "kinver/quadrature.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace kinver {

// Integral of f(x0 + w) W(|w|) over the hyperplane w . normal = 0.
template <class W>
double hyperplane_weighted_integral(const VelocityDistribution& f, const Vec& x0, const Vec& normal, W&& weight,
                                    const QuadratureBudget& budget) {
  const double inf = std::numeric_limits<double>::infinity();
  Mat B = complement_basis(normal);
  if (f.dimension() == 2)
    return line_weighted_integral(f, x0, B.col(0), [&](double t) { return weight(std::abs(t)); }, -inf, inf, {0.0},
                                  budget);
  auto inner = [&](double phi) {
    Vec u = std::cos(phi) * B.col(0) + std::sin(phi) * B.col(1);
    return line_weighted_integral(f, x0, u, [&](double t) { return weight(std::abs(t)) * std::abs(t); }, -inf, inf,
                                  {0.0}, budget.inner());
  };
  return integrate(inner, 0.0, pi, budget).value;
}

// a(v; theta) = integral over w perpendicular to theta of f(v + w)|w|^{gamma+2s+1}.
inline double hyperplane_density(const VelocityDistribution& f, const KernelParams& p, const Vec& v, const Vec& theta,
                                 const QuadratureBudget& budget) {
  return hyperplane_power_integral(f, v, theta, p.hyperplane_power(), budget);
}

inline double kernel_surrogate(const VelocityDistribution& f, const KernelParams& p, const Vec& v, const Vec& h,
                               const QuadratureBudget& budget) {
  double nh = h.norm();
  require(nh > 0.0, "kernel_surrogate: h must be nonzero");
  return p.kappa() * std::pow(nh, -p.n - 2.0 * p.s) * hyperplane_density(f, p, v, Vec(h / nh), budget);
}

// Carleman form with b(cos theta) = kappa |sin(theta/2)|^{-(n-1)-2s}:
// 2^{n-1} kappa |h|^{-n-2s} times the integral of f(v + w)(|h|^2 + |w|^2)^{(gamma+2s+1)/2} over w perpendicular to h.
inline double kernel_exact(const VelocityDistribution& f, const KernelParams& p, const Vec& v, const Vec& vprime,
                           const QuadratureBudget& budget) {
  Vec h = vprime - v;
  double nh = h.norm();
  require(nh > 0.0, "kernel_exact: v and v' must differ");
  require(p.hyperplane_power() > -(p.n - 1.0), "kernel_exact: hyperplane weight is not integrable");
  const double q = p.hyperplane_power();
  double I = hyperplane_weighted_integral(
      f, v, h, [&](double w) { return std::pow(nh * nh + w * w, 0.5 * q); }, budget);
  return std::pow(2.0, p.n - 1) * p.kappa() * std::pow(nh, -p.n - 2.0 * p.s) * I;
}

struct KernelEvaluation {
  double exact_value = 0.0;
  double surrogate_value = 0.0;
  Vec v, vprime;
};

inline KernelEvaluation evaluate_kernel(const VelocityDistribution& f, const KernelParams& p, const Vec& v,
                                        const Vec& vprime, const QuadratureBudget& budget) {
  return {kernel_exact(f, p, v, vprime, budget), kernel_surrogate(f, p, v, Vec(vprime - v), budget), v, vprime};
}

// Computable upper comparability constant at (v, h):
// 2^{n-1} c_q (1 + |h|^q m(v; theta) / a(v; theta)) with m the hyperplane mass and
// (x + y)^{q/2} <= c_q (x^{q/2} + y^{q/2}).
inline double comparability_upper_constant(const VelocityDistribution& f, const KernelParams& p, const Vec& v,
                                           const Vec& h, const QuadratureBudget& budget) {
  const double q = p.hyperplane_power();
  Vec th = normalized(h);
  double a = hyperplane_density(f, p, v, th, budget);
  double m = hyperplane_power_integral(f, v, th, 0.0, budget);
  double cq = std::max(1.0, std::pow(2.0, 0.5 * q - 1.0));
  return std::pow(2.0, p.n - 1) * cq * (1.0 + std::pow(h.norm(), q) * m / a);
}

// K(v, v + h) = kappa |h|^{-n-2s} A(v; h/|h|) with A even in its second argument.
struct HomogeneousKernel {
  int n = 2;
  double s = 0.5;
  double kappa = 1.0;
  std::function<double(const Vec&, const Vec&)> A;

  double value(const Vec& v, const Vec& h) const {
    double nh = h.norm();
    require(nh > 0.0, "kernel: h must be nonzero");
    return kappa * std::pow(nh, -n - 2.0 * s) * A(v, Vec(h / nh));
  }
};

inline HomogeneousKernel surrogate_kernel(const VelocityDistribution& f, const KernelParams& p,
                                          const QuadratureBudget& budget) {
  p.validate();
  require(f.dimension() == p.n, "kernel dimension does not match the distribution");
  HomogeneousKernel K;
  K.n = p.n;
  K.s = p.s;
  K.kappa = p.kappa();
  K.A = [f, p, budget](const Vec& v, const Vec& th) { return hyperplane_density(f, p, v, th, budget); };
  return K;
}

enum class Condition { upper, nondeg, coercive, cancel };

inline std::string to_string(Condition c) {
  switch (c) {
    case Condition::upper: return "upper";
    case Condition::nondeg: return "nondeg";
    case Condition::coercive: return "coercive";
    case Condition::cancel: return "cancel";
  }
  return "unknown";
}

inline Condition condition_from_string(const std::string& s) {
  if (s == "upper" || s == "i") return Condition::upper;
  if (s == "nondeg" || s == "ii") return Condition::nondeg;
  if (s == "coercive" || s == "iii") return Condition::coercive;
  if (s == "cancel" || s == "iv") return Condition::cancel;
  throw DomainError("unknown condition '" + s + "'");
}

struct EllipticityCell {
  Vec v;
  double r = 0.0;
  std::optional<Vec> e;
  double value = 0.0;
  std::string method;
};

struct EllipticityReport {
  Condition condition = Condition::upper;
  std::vector<EllipticityCell> cells;
  double lambda_meas = std::numeric_limits<double>::quiet_NaN();
  double Lambda_meas = std::numeric_limits<double>::quiet_NaN();
  double cross_method_gap = 0.0;
  bool inconsistent = false;
  bool pass = true;
  KernelParams params;
};

struct EllipticityThresholds {
  double lambda_min = 0.0;
  double Lambda_max = std::numeric_limits<double>::infinity();
};

// Origin plus rings of 8 (n=2) or 6 axis points (n=3) at radii 0.5, 1, 1.5, 1.9.
inline std::vector<Vec> default_v_grid(int n) {
  std::vector<Vec> out{Vec::Zero(n)};
  for (double r : {0.5, 1.0, 1.5, 1.9}) {
    if (n == 2) {
      for (int k = 0; k < 8; ++k) out.push_back(Vec(r * circle_point(pi * k / 4.0)));
    } else {
      for (int i = 0; i < 3; ++i)
        for (double sg : {-1.0, 1.0}) out.push_back(Vec(sg * r * unit_vector(3, i)));
    }
  }
  return out;
}

// Keeps one node from each antipodal pair of a symmetric rule; for even integrands the
// weighted sum is the integral over a half-sphere.
inline SphereRule half_rule(const SphereRule& full) {
  SphereRule h;
  for (size_t i = 0; i < full.size(); ++i) {
    const Vec& t = full.nodes[i];
    int k = 0;
    while (k < t.size() && std::abs(t(k)) < 1e-13) ++k;
    if (k < t.size() && t(k) > 0.0) {
      h.nodes.push_back(t);
      h.weights.push_back(full.weights[i]);
    }
  }
  return h;
}

inline double rel_gap(double a, double b) { return relative_gap(a, b); }

namespace detail {

inline void validate_cells(const std::vector<double>& r_list, const std::vector<Vec>& v_grid, int n) {
  require(!r_list.empty() && !v_grid.empty(), "ellipticity grids must be nonempty");
  for (double r : r_list) require(r > 0.0, "radii must be positive");
  for (auto& v : v_grid) {
    require(v.size() == n, "v grid dimension mismatch");
    require(v.norm() < 2.0 + 1e-12, "v grid must lie in B_2");
  }
}

inline void finish(EllipticityReport& rep, const EllipticityThresholds& t) {
  bool lower = rep.condition == Condition::nondeg || rep.condition == Condition::coercive;
  rep.pass = !rep.inconsistent;
  if (lower) rep.pass = rep.pass && rep.lambda_meas > t.lambda_min;
  if (!std::isnan(rep.Lambda_meas)) rep.pass = rep.pass && rep.Lambda_meas <= t.Lambda_max;
}

}  // namespace detail

// Condition (i): r^{2s} times the mass of K(v, v+h) + K(v+h, v) outside B_r.
// The outgoing part is kappa/(2s) times the sphere integral of A(v; .), for every r; the incoming
// part integrates A(v + rho theta; theta) radially out to the truncation radius.
inline EllipticityReport condition_upper_bound(const HomogeneousKernel& K, const std::vector<double>& r_list,
                                               const std::vector<Vec>& v_grid, const QuadratureBudget& budget,
                                               int jobs = 1, const EllipticityThresholds& thr = {}) {
  detail::validate_cells(r_list, v_grid, K.n);
  EllipticityReport rep;
  rep.condition = Condition::upper;
  std::vector<double> rs = r_list;
  std::sort(rs.begin(), rs.end());
  const double Rt = budget.truncation_radius;
  const double s = K.s;
  double Lmax = -std::numeric_limits<double>::infinity();
  for (auto& v : v_grid) {
    auto S = sample_sphere([&](const Vec& th) { return K.A(v, th); }, K.n, budget, jobs);
    double out = K.kappa / (2.0 * s) * S.integral();
    // Tail integrals of rho^{-1-2s} A(v + rho theta; theta) on [r_k, Rt] for every node.
    QuadratureBudget in = budget.inner();
    auto tails = parallel_map<std::vector<double>>(S.rule.size(), jobs, [&](size_t i) {
      const Vec& th = S.rule.nodes[i];
      auto g = [&](double rho) { return std::pow(rho, -1.0 - 2.0 * s) * K.A(Vec(v + rho * th), th); };
      std::vector<double> seg(rs.size(), 0.0);
      double acc = 0.0;
      for (int k = static_cast<int>(rs.size()) - 1; k >= 0; --k) {
        double hi = k + 1 < static_cast<int>(rs.size()) ? rs[k + 1] : Rt;
        if (hi > rs[k]) acc += integrate(g, rs[k], hi, in).value;
        seg[k] = acc;
      }
      return seg;
    });
    for (size_t k = 0; k < rs.size(); ++k) {
      double inc = 0.0;
      for (size_t i = 0; i < S.rule.size(); ++i) inc += S.rule.weights[i] * tails[i][k];
      inc *= K.kappa * std::pow(rs[k], 2.0 * s);
      rep.cells.push_back({v, rs[k], std::nullopt, out, "outgoing"});
      rep.cells.push_back({v, rs[k], std::nullopt, inc, "incoming"});
      rep.cells.push_back({v, rs[k], std::nullopt, out + inc, "total"});
      Lmax = std::max(Lmax, out + inc);
    }
  }
  rep.Lambda_meas = Lmax;
  detail::finish(rep, thr);
  return rep;
}

inline EllipticityReport condition_upper_bound(const VelocityDistribution& f, const KernelParams& p,
                                               const std::vector<double>& r_list, const std::vector<Vec>& v_grid,
                                               const QuadratureBudget& budget, int jobs = 1) {
  return condition_upper_bound(surrogate_kernel(f, p, budget), r_list, v_grid, budget, jobs);
}

// Direction grid for inf/sup over e: 360 angles on [0, pi) (n=2) or a 2562-point icosphere (n=3).
inline std::vector<Vec> e_grid(int n) {
  std::vector<Vec> out;
  if (n == 2) {
    for (int k = 0; k < 360; ++k) out.push_back(circle_point(pi * k / 360.0));
    return out;
  }
  return icosphere(4);
}

struct DirectionalExtremum {
  double value = 0.0;
  Vec e;
};

// Minimizes (or maximizes) F over unit e on the grid, then refines with golden-section
// searches along great circles through the grid argmin. Ties go to the first grid index.
template <class F>
DirectionalExtremum directional_extremum(F&& F_of_e, int n, bool minimize, const std::vector<Vec>& grid) {
  const double sg = minimize ? 1.0 : -1.0;
  size_t best = 0;
  double bv = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < grid.size(); ++i) {
    double v = sg * F_of_e(grid[i]);
    if (v < bv) bv = v, best = i;
  }
  Vec e = grid[best];
  const double width = n == 2 ? pi / 360.0 : 0.08;
  auto golden = [&](const Vec& base, const Vec& dir) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = -width, b = width;
    auto at = [&](double t) { return Vec(std::cos(t) * base + std::sin(t) * dir); };
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = sg * F_of_e(at(c)), fd = sg * F_of_e(at(d));
    for (int it = 0; it < 40; ++it) {
      if (fc < fd) {
        b = d, d = c, fd = fc;
        c = b - gr * (b - a);
        fc = sg * F_of_e(at(c));
      } else {
        a = c, c = d, fc = fd;
        d = a + gr * (b - a);
        fd = sg * F_of_e(at(d));
      }
    }
    double t = 0.5 * (a + b);
    double ft = sg * F_of_e(at(t));
    return std::make_pair(ft, at(t));
  };
  Mat B = complement_basis(e);
  for (int k = 0; k < n - 1; ++k) {
    auto [fv, ev] = golden(e, Vec(B.col(k)));
    if (fv < bv) bv = fv, e = ev;
    B = complement_basis(e);
  }
  return {sg * bv, e};
}

// Full-space form of the condition (ii) matrix: c(n) times the integral of
// f(v + z)|z|^{gamma+2s}(I - z z^T/|z|^2), equal to the integral of A(v; theta) theta theta^T.
inline Mat nondeg_fullspace_matrix(const VelocityDistribution& f, const KernelParams& p, const Vec& v,
                                   const QuadratureBudget& budget) {
  const int n = p.n;
  const double cn = n == 2 ? 2.0 : pi;
  const double ex = p.gamma + 2.0 * p.s;
  if (n == 2) {
    using M2 = Eigen::Matrix2d;
    M2 T = f.integrate_against<M2>(
        [&](const Vec& u) -> M2 {
          Eigen::Vector2d z(u(0) - v(0), u(1) - v(1));
          double r2 = z.squaredNorm();
          if (r2 == 0.0) return M2::Zero();
          return std::pow(r2, 0.5 * ex) * (M2::Identity() - z * z.transpose() / r2);
        },
        v, budget);
    return cn * Mat(T);
  }
  using M3 = Eigen::Matrix3d;
  M3 T = f.integrate_against<M3>(
      [&](const Vec& u) -> M3 {
        Eigen::Vector3d z(u(0) - v(0), u(1) - v(1), u(2) - v(2));
        double r2 = z.squaredNorm();
        if (r2 == 0.0) return M3::Zero();
        return std::pow(r2, 0.5 * ex) * (M3::Identity() - z * z.transpose() / r2);
      },
      v, budget);
  return cn * Mat(T);
}

struct NondegCell {
  Vec v;
  double lambda = 0.0;   // min over e of kappa/(2-2s) * int A (theta.e)_+^2
  double Lambda = 0.0;   // max over e of the same
  Vec e_min;
  double sphere_at_e = 0.0;
  double fullspace_at_e = 0.0;
  Mat M_sphere;
};

// Condition (ii) at one v from a homogeneous kernel, by sphere quadrature (path a).
inline NondegCell nondeg_sphere_cell(const HomogeneousKernel& K, const Vec& v, const QuadratureBudget& budget,
                                     int jobs = 1) {
  auto S = sample_sphere([&](const Vec& th) { return K.A(v, th); }, K.n, budget, jobs);
  const double c = K.kappa / (2.0 - 2.0 * K.s);
  auto cell = [&](const Vec& e) {
    return c * S.integral_weighted([&](const Vec& t) {
      double d = std::max(0.0, t.dot(e));
      return d * d;
    });
  };
  auto grid = e_grid(K.n);
  auto lo = directional_extremum(cell, K.n, true, grid);
  auto hi = directional_extremum(cell, K.n, false, grid);
  NondegCell out;
  out.v = v;
  out.lambda = lo.value;
  out.Lambda = hi.value;
  out.e_min = lo.e;
  out.sphere_at_e = lo.value;
  out.M_sphere = S.second_moment();
  return out;
}

// Condition (ii): inf over e of the integral of K(v, v+h)(h.e)_+^2 over B_r, divided by r^{2-2s}.
// With a distribution the sphere path is cross-checked against the full-space form.
inline EllipticityReport condition_nondegeneracy(const HomogeneousKernel& K, const std::vector<double>& r_list,
                                                 const std::vector<Vec>& v_grid, const QuadratureBudget& budget,
                                                 int jobs = 1, const VelocityDistribution* f = nullptr,
                                                 const KernelParams* p = nullptr,
                                                 const EllipticityThresholds& thr = {}) {
  detail::validate_cells(r_list, v_grid, K.n);
  EllipticityReport rep;
  rep.condition = Condition::nondeg;
  double lmin = std::numeric_limits<double>::infinity(), Lmax = -lmin;
  for (auto& v : v_grid) {
    NondegCell c = nondeg_sphere_cell(K, v, budget, jobs);
    double fs = std::numeric_limits<double>::quiet_NaN();
    if (f && p) {
      Mat M = nondeg_fullspace_matrix(*f, *p, v, budget.inner());
      fs = K.kappa / (2.0 - 2.0 * K.s) * 0.5 * c.e_min.dot(M * c.e_min);
      double gap = rel_gap(fs, c.lambda);
      rep.cross_method_gap = std::max(rep.cross_method_gap, gap);
      if (gap > 0.05) rep.inconsistent = true;
    }
    for (double r : r_list) {
      // Radial factor integral of rho^{1-2s} over [0, r], divided by r^{2-2s}(2-2s)^{-1}.
      double rad = integrate_power_weight([](double) { return 1.0; }, 1.0 - 2.0 * K.s, r, budget).value *
                   (2.0 - 2.0 * K.s) / std::pow(r, 2.0 - 2.0 * K.s);
      rep.cells.push_back({v, r, c.e_min, c.lambda * rad, "sphere"});
      rep.cells.push_back({v, r, c.e_min, c.Lambda * rad, "sphere_max"});
      if (f && p) rep.cells.push_back({v, r, c.e_min, fs * rad, "fullspace"});
      lmin = std::min(lmin, c.lambda * rad);
      Lmax = std::max(Lmax, c.Lambda * rad);
    }
  }
  rep.lambda_meas = lmin;
  rep.Lambda_meas = Lmax;
  detail::finish(rep, thr);
  return rep;
}

inline EllipticityReport condition_nondegeneracy(const VelocityDistribution& f, const KernelParams& p,
                                                 const std::vector<double>& r_list, const std::vector<Vec>& v_grid,
                                                 const QuadratureBudget& budget, int jobs = 1) {
  return condition_nondegeneracy(surrogate_kernel(f, p, budget), r_list, v_grid, budget, jobs, &f, &p);
}

struct CancellationOptions {
  double rho_split = 0.1;
  double rho_floor = 1e-2;
  int rule_level = 0;
};

// Condition (iv). Over the half-sphere with D = 2A(v) - A(v + rho theta) - A(v - rho theta) and
// D1 = A(v - rho theta) - A(v + rho theta):
//   scalar: r^{2s} |kappa int int_0^r rho^{-1-2s} D|,
//   vector (s >= 1/2): |kappa int theta int_0^r rho^{-2s} D1| / (1 + r^{1-2s}).
// Inside rho_split the integrands are written rho^{1-2s} (D/rho^2, D1/rho) and integrated after
// the substitution u = rho^{2-2s}; below rho_floor the smooth factor is frozen at rho_floor.
inline EllipticityReport condition_cancellation(const HomogeneousKernel& K, const std::vector<double>& r_list,
                                                const std::vector<Vec>& v_grid, const QuadratureBudget& budget,
                                                int jobs = 1, const CancellationOptions& opt = {},
                                                const EllipticityThresholds& thr = {}) {
  detail::validate_cells(r_list, v_grid, K.n);
  for (double r : r_list) require(r < 1.0, "cancellation radii must lie in (0, 1)");
  EllipticityReport rep;
  rep.condition = Condition::cancel;
  const double s = K.s;
  const int n = K.n;
  std::vector<double> rs = r_list;
  std::sort(rs.begin(), rs.end());
  std::vector<double> pts{0.0};
  for (double r : rs) pts.push_back(r);
  if (opt.rho_split < rs.back()) pts.push_back(opt.rho_split);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  SphereRule H = half_rule(SphereRule::make(n, opt.rule_level));
  const bool vec_part = s >= 0.5;
  QuadratureBudget in = budget.inner();
  double Lmax = -std::numeric_limits<double>::infinity();
  for (auto& v : v_grid) {
    // Per node: cumulative (scalar, vector) radial integrals at each r.
    auto rad = parallel_map<std::vector<Eigen::Vector2d>>(H.size(), jobs, [&](size_t i) {
      const Vec& th = H.nodes[i];
      const double A0 = K.A(v, th);
      QuadratureBudget nb = in;
      nb.abs_tol = std::max(nb.abs_tol, nb.rel_tol * std::abs(A0));
      auto diffs = [&](double rho) {
        double ap = K.A(Vec(v + rho * th), th), am = K.A(Vec(v - rho * th), th);
        return Eigen::Vector2d(2.0 * A0 - ap - am, am - ap);
      };
      const double k = 2.0 - 2.0 * s;
      auto inner_u = [&](double u) -> Eigen::Vector2d {
        double rho = std::max(std::pow(u, 1.0 / k), opt.rho_floor);
        Eigen::Vector2d d = diffs(rho);
        return Eigen::Vector2d(d(0) / (rho * rho), d(1) / rho) / k;
      };
      auto outer = [&](double rho) -> Eigen::Vector2d {
        Eigen::Vector2d d = diffs(rho);
        return Eigen::Vector2d(std::pow(rho, -1.0 - 2.0 * s) * d(0), std::pow(rho, -2.0 * s) * d(1));
      };
      std::vector<Eigen::Vector2d> cum;
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      size_t next_r = 0;
      for (size_t j = 0; j + 1 < pts.size(); ++j) {
        double a = pts[j], b = pts[j + 1];
        if (b <= opt.rho_split + 1e-15)
          acc += integrate_adaptive<Eigen::Vector2d>(inner_u, {std::pow(a, k), std::pow(b, k)}, nb).value;
        else
          acc += integrate_adaptive<Eigen::Vector2d>(outer, {a, b}, nb).value;
        while (next_r < rs.size() && std::abs(rs[next_r] - b) < 1e-15) {
          cum.push_back(acc);
          ++next_r;
        }
      }
      return cum;
    });
    for (size_t kk = 0; kk < rs.size(); ++kk) {
      double sc = 0.0;
      Vec vv = Vec::Zero(n);
      for (size_t i = 0; i < H.size(); ++i) {
        sc += H.weights[i] * rad[i][kk](0);
        vv += H.weights[i] * rad[i][kk](1) * H.nodes[i];
      }
      double r = rs[kk];
      double scalar = std::pow(r, 2.0 * s) * std::abs(K.kappa * sc);
      rep.cells.push_back({v, r, std::nullopt, scalar, "scalar"});
      Lmax = std::max(Lmax, scalar);
      if (vec_part) {
        double vecv = K.kappa * vv.norm() / (1.0 + std::pow(r, 1.0 - 2.0 * s));
        rep.cells.push_back({v, r, std::nullopt, vecv, "vector"});
        Lmax = std::max(Lmax, vecv);
      }
    }
  }
  rep.Lambda_meas = Lmax;
  detail::finish(rep, thr);
  return rep;
}

inline EllipticityReport condition_cancellation(const VelocityDistribution& f, const KernelParams& p,
                                                const std::vector<double>& r_list, const std::vector<Vec>& v_grid,
                                                const QuadratureBudget& budget, int jobs = 1,
                                                const CancellationOptions& opt = {}) {
  return condition_cancellation(surrogate_kernel(f, p, budget), r_list, v_grid, budget, jobs, opt);
}

// Nonlocal operator 1/2 int (g(v+h) + g(v-h) - 2g(v)) K(v, v+h) dh, truncated at |h| < truncation_radius.
inline double apply_nonlocal_operator(const HomogeneousKernel& K, const std::function<double(const Vec&)>& g,
                                      const Vec& v, const QuadratureBudget& budget, double rho_split = 0.1,
                                      double rho_floor = 1e-2, int jobs = 1) {
  const double s = K.s, Rt = budget.truncation_radius;
  const double g0 = g(v);
  SphereRule H = half_rule(SphereRule::make(K.n, 0));
  QuadratureBudget in = budget.inner();
  auto vals = parallel_map<double>(H.size(), jobs, [&](size_t i) {
    const Vec& th = H.nodes[i];
    auto d2 = [&](double rho) { return g(Vec(v + rho * th)) + g(Vec(v - rho * th)) - 2.0 * g0; };
    const double k = 2.0 - 2.0 * s;
    auto inner_u = [&](double u) {
      double rho = std::max(std::pow(u, 1.0 / k), rho_floor);
      return d2(rho) / (rho * rho) / k;
    };
    double split = std::min(rho_split, Rt);
    double acc = integrate(inner_u, 0.0, std::pow(split, k), in).value;
    if (Rt > split) acc += integrate([&](double rho) { return std::pow(rho, -1.0 - 2.0 * s) * d2(rho); }, split, Rt, in).value;
    return acc * K.A(v, th);
  });
  double sum = 0.0;
  for (size_t i = 0; i < H.size(); ++i) sum += H.weights[i] * vals[i];
  // Half-sphere sum of the symmetrized integrand equals 1/2 of the full-sphere integral.
  return K.kappa * sum;
}

inline double apply_nonlocal_operator(const VelocityDistribution& f, const KernelParams& p,
                                      const std::function<double(const Vec&)>& g, const Vec& v,
                                      const QuadratureBudget& budget, int jobs = 1) {
  return apply_nonlocal_operator(surrogate_kernel(f, p, budget.inner()), g, v, budget, 0.1, 1e-2, jobs);
}

// Integral of f(v - w)|w|^gamma.
inline double potential_convolution(const VelocityDistribution& f, double gamma, const Vec& v,
                                    const QuadratureBudget& budget) {
  require(gamma > -f.dimension(), "potential exponent must exceed -n");
  if (gamma == 0.0) return f.mass();
  return f.integrate_against<double>([&](const Vec& u) {
    double r = (v - u).norm();
    return r > 0.0 ? std::pow(r, gamma) : 0.0;
  }, v, budget);
}

inline double collision_operator(const VelocityDistribution& f, const KernelParams& p,
                                 const std::function<double(const Vec&)>& g, const Vec& v,
                                 const QuadratureBudget& budget, int jobs = 1) {
  double gv = g(v);
  double conv = gv == 0.0 ? 0.0 : potential_convolution(f, p.gamma, v, budget);
  return apply_nonlocal_operator(f, p, g, v, budget, jobs) + gv * conv;
}

// Anisotropic distance sqrt(|w - w'|^2 + (|w|^2 - |w'|^2)^2 / 4).
inline double gs_distance(const Vec& w, const Vec& wp) {
  double a = (w - wp).squaredNorm();
  double b = w.squaredNorm() - wp.squaredNorm();
  return std::sqrt(a + 0.25 * b * b);
}

struct CoercivityGrid {
  double spacing = 0.1;
  double half_width = 4.0;
  int angles = 128;
  double rho_split = 0.1;

  void validate() const {
    require(spacing > 0.0 && spacing <= 0.1 + 1e-12, "coercivity grid spacing must be at most 0.1");
    require(half_width >= 4.0 - 1e-12, "coercivity grid must cover B_4");
    require(angles >= 8, "coercivity grid needs at least 8 angles");
    require(rho_split > 0.0, "rho_split must be positive");
  }
};

struct CoercivityEnergies {
  double E_K = 0.0;
  double E_aniso = 0.0;
  double E_Hs = 0.0;
  double L2 = 0.0;
};

// Tabulated a(x_j; angle) on the grid, shared across test functions.
class AngularTable {
 public:
  AngularTable() = default;
  AngularTable(const VelocityDistribution& f, const KernelParams& p, const CoercivityGrid& grid,
               const QuadratureBudget& budget, int jobs) : grid_(grid) {
    require(p.n == 2, "coercivity energies are implemented for n = 2");
    grid.validate();
    m_ = static_cast<int>(std::lround(2.0 * grid.half_width / grid.spacing)) + 1;
    pts_.resize(static_cast<size_t>(m_) * m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j)
        pts_[idx(i, j)] = make_vec({-grid.half_width + i * grid.spacing, -grid.half_width + j * grid.spacing});
    const int na = grid.angles;
    table_ = parallel_map<std::vector<double>>(pts_.size(), jobs, [&](size_t q) {
      std::vector<double> row(na);
      for (int k = 0; k < na; ++k) row[k] = hyperplane_density(f, p, pts_[q], circle_point(pi * k / na), budget);
      return row;
    });
  }

  int side() const { return m_; }
  size_t idx(int i, int j) const { return static_cast<size_t>(i) * m_ + j; }
  const Vec& point(size_t q) const { return pts_[q]; }
  size_t size() const { return pts_.size(); }
  const CoercivityGrid& grid() const { return grid_; }

  // Linear interpolation in the angle of theta (period pi).
  double a(size_t q, double phi) const {
    const int na = grid_.angles;
    double x = phi / pi * na;
    x -= na * std::floor(x / na);
    int k0 = static_cast<int>(std::floor(x));
    double t = x - k0;
    k0 %= na;
    int k1 = (k0 + 1) % na;
    return (1.0 - t) * table_[q][k0] + t * table_[q][k1];
  }

 private:
  CoercivityGrid grid_;
  int m_ = 0;
  std::vector<Vec> pts_;
  std::vector<std::vector<double>> table_;
};

inline CoercivityEnergies coercivity_energies(const AngularTable& T, const KernelParams& p,
                                              const std::function<double(const Vec&)>& g) {
  const auto& G = T.grid();
  const double dA = G.spacing * G.spacing;
  const double s = p.s, kappa = p.kappa();
  const double ex = -2.0 - 2.0 * s;
  const double W_ex = 0.5 * (p.gamma + 2.0 * s + 1.0);
  const size_t N = T.size();
  std::vector<double> gv(N);
  std::vector<char> in(N, 0);
  std::vector<size_t> supp;
  for (size_t q = 0; q < N; ++q) {
    gv[q] = g(T.point(q));
    if (gv[q] != 0.0) {
      require(T.point(q).norm() < 2.0, "test function must be supported in B_2");
      in[q] = 1;
      supp.push_back(q);
    }
  }
  CoercivityEnergies E;
  for (size_t q : supp) E.L2 += gv[q] * gv[q] * dA;
  const double rs = G.rho_split;
  const double rs2 = rs * rs * (1.0 - 1e-9);
  std::vector<double> Wt(N);
  for (size_t q = 0; q < N; ++q) Wt[q] = std::pow(1.0 + T.point(q).squaredNorm(), 0.5 * W_ex);
  for (size_t a : supp) {
    const Vec& x = T.point(a);
    for (size_t b = 0; b < N; ++b) {
      if (b == a) continue;
      if (in[b] && b < a) continue;  // both orders added when the lower index is visited
      const Vec& y = T.point(b);
      Vec h = y - x;
      double h2 = h.squaredNorm();
      if (h2 < rs2) continue;
      double dg = gv[a] - gv[b];
      if (dg == 0.0) continue;
      double dg2 = dg * dg;
      double phi = std::atan2(h(1), h(0));
      double hp = std::pow(h2, 0.5 * ex);
      // Ordered pairs (x, y) and (y, x).
      double kxy = kappa * hp * T.a(a, phi);
      double kyx = kappa * hp * T.a(b, phi);
      E.E_K += dg2 * (kxy + kyx) * dA * dA;
      E.E_Hs += 2.0 * dg2 * kappa * hp * dA * dA;
      double d = gs_distance(x, y);
      if (d <= 1.0) E.E_aniso += 2.0 * dg2 * std::sqrt(Wt[a] * Wt[b]) * kappa * std::pow(d, ex) * dA * dA;
    }
  }
  // Near-diagonal part from the gradient: kappa rs^{2-2s}/(2-2s) times angular integrals.
  const double near = kappa * std::pow(rs, 2.0 - 2.0 * s) / (2.0 - 2.0 * s);
  const int na = G.angles;
  const double fd = 1e-5;
  for (size_t q = 0; q < N; ++q) {
    const Vec& x = T.point(q);
    if (x.norm() > 2.0 + rs) continue;
    Vec grad(2);
    grad(0) = (g(Vec(x + fd * unit_vector(2, 0))) - g(Vec(x - fd * unit_vector(2, 0)))) / (2 * fd);
    grad(1) = (g(Vec(x + fd * unit_vector(2, 1))) - g(Vec(x - fd * unit_vector(2, 1)))) / (2 * fd);
    if (grad.squaredNorm() == 0.0) continue;
    double IK = 0.0, Ia = 0.0;
    for (int k = 0; k < 2 * na; ++k) {
      double phi = pi * k / na;
      Vec th = circle_point(phi);
      double gt = grad.dot(th);
      IK += T.a(q, phi) * gt * gt;
      Ia += gt * gt * std::pow(1.0 + std::pow(x.dot(th), 2), -(2.0 + 2.0 * s) / 2.0);
    }
    IK *= pi / na;
    Ia *= pi / na;
    E.E_K += near * IK * dA;
    E.E_aniso += near * Wt[q] * Ia * dA;
    E.E_Hs += near * pi * grad.squaredNorm() * dA;
  }
  return E;
}

inline CoercivityEnergies coercivity_energies(const VelocityDistribution& f, const KernelParams& p,
                                              const std::function<double(const Vec&)>& g, const CoercivityGrid& grid,
                                              const QuadratureBudget& budget, int jobs = 1) {
  AngularTable T(f, p, grid, budget, jobs);
  return coercivity_energies(T, p, g);
}

// Smooth bump exp(1 - 1/(1 - t^2)) for t < 1, scaled to 1 at t = 0.
inline double bump(double t) { return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; }

// Five smooth test functions supported in B_2 (n = 2).
inline std::vector<std::function<double(const Vec&)>> coercivity_test_family() {
  return {
      [](const Vec& v) { return bump(v.norm() / 1.5); },
      [](const Vec& v) { return bump((v - make_vec({0.5, 0.0})).norm() / 1.0); },
      [](const Vec& v) { return bump((v - make_vec({-0.4, 0.5})).norm() / 1.2); },
      [](const Vec& v) { return std::cos(v(0)) * bump(v.norm() / 1.8); },
      [](const Vec& v) { return bump(std::sqrt(v(0) * v(0) / 3.24 + v(1) * v(1))); },
  };
}

struct CarlemanCheck {
  double sigma_side = 0.0;
  double kernel_side = 0.0;
  double rel_err = 0.0;
  double max_pointwise_rel = 0.0;
};

// For n = 2 and each v on a Gauss-Legendre grid over [-L, L]^2, compares
//   int dv_* int dtheta f(v'_*)(g(v') - g(v))^2 |v - v_*|^gamma b(cos theta)
// (post-collisional v', v'_* from sigma at angle theta to v - v_*) with
//   int (g(v') - g(v))^2 K_f(v, v') dv'
// using the exact kernel, then sums both with the grid weights.
inline CarlemanCheck carleman_energy_check(const VelocityDistribution& f, const KernelParams& p,
                                           const std::function<double(const Vec&)>& g, int nodes, double L,
                                           const QuadratureBudget& budget, int jobs = 1) {
  require(p.n == 2 && f.dimension() == 2, "the Carleman cross-check is implemented for n = 2");
  std::vector<double> x, w;
  gauss_legendre(nodes, x, w);
  const double s = p.s, kappa = p.kappa();
  const double R = std::max(budget.truncation_radius, f.support_radius(9.0) + L * std::sqrt(2.0));
  QuadratureBudget b1 = budget, b2 = budget.inner(0.3), b3 = budget.inner(0.09);
  struct Pair {
    double sigma, kernel;
  };
  auto per_v = parallel_map<Pair>(static_cast<size_t>(nodes) * nodes, jobs, [&](size_t idx) {
    Vec v = make_vec({L * x[idx / nodes], L * x[idx % nodes]});
    const double g0 = g(v);
    // Sigma representation, v_* = v - rho omega, sigma = rotation of omega by theta.
    auto sig_rho = [&](double rho) {
      auto sig_om = [&](double om) {
        Vec o = circle_point(om);
        auto th_f = [&](double th) {
          Vec sg = circle_point(om + th);
          Vec vp = v + 0.5 * rho * (sg - o);
          Vec vps = v - 0.5 * rho * (o + sg);
          double fv = f.density(vps);
          if (fv == 0.0) return 0.0;
          double dg = g(vp) - g0;
          return fv * dg * dg * kappa * std::pow(std::abs(std::sin(0.5 * th)), -1.0 - 2.0 * s);
        };
        return integrate(th_f, std::vector<double>{-pi, -0.5 * pi, 0.0, 0.5 * pi, pi}, b3).value;
      };
      return rho * std::pow(rho, p.gamma) * integrate(sig_om, std::vector<double>{0.0, pi, 2.0 * pi}, b2).value;
    };
    double sigma = integrate(sig_rho, 0.0, R, b1).value;
    // Kernel side in polar coordinates around v.
    auto ker_rho = [&](double rho) {
      auto ker_th = [&](double th) {
        Vec t = circle_point(th);
        double dg = g(Vec(v + rho * t)) - g0;
        if (dg == 0.0) return 0.0;
        return dg * dg * kernel_exact(f, p, v, Vec(v + rho * t), b3);
      };
      return rho * integrate(ker_th, std::vector<double>{0.0, pi, 2.0 * pi}, b2).value;
    };
    double kernel = integrate(ker_rho, 0.0, R, b1).value;
    return Pair{sigma, kernel};
  });
  CarlemanCheck c;
  for (size_t idx = 0; idx < per_v.size(); ++idx) {
    double wt = L * L * w[idx / nodes] * w[idx % nodes];
    c.sigma_side += wt * per_v[idx].sigma;
    c.kernel_side += wt * per_v[idx].kernel;
    double scale = std::max(per_v[idx].sigma, per_v[idx].kernel);
    if (scale > 1e-6 * std::max(c.sigma_side, 1e-300))
      c.max_pointwise_rel = std::max(c.max_pointwise_rel, relative_gap(per_v[idx].sigma, per_v[idx].kernel));
  }
  c.rel_err = relative_gap(c.sigma_side, c.kernel_side);
  return c;
}

inline nlohmann::json to_json(const EllipticityReport& r) {
  nlohmann::json j;
  j["condition"] = to_string(r.condition);
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  j["lambda_meas"] = num(r.lambda_meas);
  j["Lambda_meas"] = num(r.Lambda_meas);
  j["cross_method_gap"] = r.cross_method_gap;
  j["inconsistent"] = r.inconsistent;
  j["pass"] = r.pass;
  j["params"] = {{"n", r.params.n}, {"s", r.params.s}, {"gamma", r.params.gamma},
                 {"normalization", r.params.normalization == Normalization::plain ? "plain" : "grazing"}};
  j["cells"] = r.cells.size();
  return j;
}

inline std::string cells_csv(const EllipticityReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "condition,v,r,e,value,method\n";
  auto vs = [](const Vec& v) {
    std::ostringstream o;
    o.precision(12);
    for (Eigen::Index i = 0; i < v.size(); ++i) o << (i ? " " : "") << v(i);
    return o.str();
  };
  for (auto& c : r.cells)
    os << to_string(r.condition) << "," << vs(c.v) << "," << c.r << "," << (c.e ? vs(*c.e) : "") << "," << c.value
       << "," << c.method << "\n";
  return os.str();
}

}  // namespace kinver
