#pragma once

#include "kinver/kinetic_point.hpp"
#include "kinver/linalg.hpp"
#include "kinver/parallel.hpp"
#include "kinver/quadrature.hpp"

#include <Eigen/Geometry>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace kinver {

namespace detail {

inline void check_pair(const KineticPoint& a, const KineticPoint& b, double s) {
  require(s > 0.0 && s <= 1.0, "kinetic distance needs s in (0,1]");
  require(a.dimension() == b.dimension(), "kinetic point dimension mismatch");
}

// Distance from c to B(v1,rho) ∩ B(v2,rho); +inf if the lens is empty.
inline double lens_distance(const Vec& c, const Vec& v1, const Vec& v2, double rho) {
  Vec d = v2 - v1;
  double half = 0.5 * d.norm();
  if (half > rho) return std::numeric_limits<double>::infinity();
  double d1 = (c - v1).norm(), d2 = (c - v2).norm();
  if (d1 <= rho && d2 <= rho) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  // Projection onto one ball, valid if it lies in the other.
  auto try_ball = [&](const Vec& ctr, double dc, const Vec& other) {
    if (dc <= rho) return;
    Vec q = ctr + (c - ctr) * (rho / dc);
    if ((q - other).norm() <= rho * (1 + 1e-14)) best = std::min(best, dc - rho);
  };
  try_ball(v1, d1, v2);
  try_ball(v2, d2, v1);
  // Projection onto the rim sphere {|w - m| = a, w ⊥ d}.
  Vec m = 0.5 * (v1 + v2);
  double a = std::sqrt(std::max(0.0, rho * rho - half * half));
  Vec y = c - m;
  Vec perp = y;
  if (half > 0.0) {
    Vec u = d / (2.0 * half);
    perp = y - y.dot(u) * u;
  }
  Vec dir = perp.norm() > 0.0 ? Vec(perp / perp.norm()) : Vec(complement_basis(half > 0.0 ? d : unit_vector(c.size(), 0)).col(0));
  Vec q = m + a * dir;
  best = std::min(best, (c - q).norm());
  return best;
}

inline double distance_objective(const KineticPoint& a, const KineticPoint& b, double s, const Vec& w) {
  double dt = a.t - b.t;
  return std::max({std::pow(std::abs(dt), 1.0 / (2.0 * s)),
                   std::pow((a.x - b.x - dt * w).norm(), 1.0 / (1.0 + 2.0 * s)), (a.v - w).norm(), (b.v - w).norm()});
}

}  // namespace detail

// d_l(z1,z2) = min_w max(|dt|^{1/2s}, |dx - dt w|^{1/(1+2s)}, |v1 - w|, |v2 - w|).
// The level set {rho feasible} is monotone: bisection on rho with an exact lens test.
inline double kinetic_distance(const KineticPoint& z1, const KineticPoint& z2, double s) {
  detail::check_pair(z1, z2, s);
  const double dt = z1.t - z2.t;
  const Vec dx = z1.x - z2.x;
  const double half = 0.5 * (z1.v - z2.v).norm();
  if (dt == 0.0) return std::max(std::pow(dx.norm(), 1.0 / (1.0 + 2.0 * s)), half);
  const double lo0 = std::max(std::pow(std::abs(dt), 1.0 / (2.0 * s)), half);
  const Vec c = dx / dt;
  auto feasible = [&](double rho) {
    return detail::lens_distance(c, z1.v, z2.v, rho) <= std::pow(rho, 1.0 + 2.0 * s) / std::abs(dt);
  };
  if (feasible(lo0)) return lo0;
  Vec m = 0.5 * (z1.v + z2.v);
  double hi = std::max(lo0, std::pow((dx - dt * m).norm(), 1.0 / (1.0 + 2.0 * s)));
  double lo = lo0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Pattern search from the analytic seeds {v1, v2, (v1+v2)/2, dx/dt}: best-of-poll over a rotated direction set,
// at most 50 moves per step size, restarted from the incumbent until a restart brings no gain.
inline double kinetic_distance_multistart(const KineticPoint& z1, const KineticPoint& z2, double s, double tol = 1e-10) {
  detail::check_pair(z1, z2, s);
  const int n = z1.dimension();
  std::vector<Vec> dirs;
  if (n == 2)
    for (int k = 0; k < 32; ++k) dirs.push_back(circle_point(2.0 * pi * k / 32));
  else
    dirs = icosphere(2);
  Mat R = Mat::Identity(n, n);
  if (n == 2) R << std::cos(0.61), -std::sin(0.61), std::sin(0.61), std::cos(0.61);
  else R = Eigen::AngleAxisd(0.61, normalized(make_vec({1, 2, 3}))).toRotationMatrix();
  std::vector<Vec> seeds{z1.v, z2.v, Vec(0.5 * (z1.v + z2.v))};
  if (z1.t != z2.t) seeds.push_back((z1.x - z2.x) / (z1.t - z2.t));
  double best = std::numeric_limits<double>::infinity();
  for (auto w : seeds) {
    double fw = detail::distance_objective(z1, z2, s, w);
    for (int restart = 0; restart < 8; ++restart) {
      double start = fw;
      double step = std::max(1.0, (z1.v - z2.v).norm());
      int moves = 0;
      while (step > tol) {
        Vec arg = w;
        double fa = fw;
        for (auto& d : dirs) {
          Vec cand = w + step * d;
          double fc = detail::distance_objective(z1, z2, s, cand);
          if (fc < fa) {
            arg = cand;
            fa = fc;
          }
        }
        if (fa < fw * (1 - 1e-14) && ++moves <= 50) {
          w = arg;
          fw = fa;
        } else {
          moves = 0;
          step *= 0.5;
          for (auto& d : dirs) d = R * d;
        }
      }
      if (fw >= start * (1 - 1e-15)) break;
    }
    best = std::min(best, fw);
  }
  return best;
}

// Brute force over a w-grid, zoomed around the best node. The objective is quasi-convex in w.
inline double kinetic_distance_grid(const KineticPoint& z1, const KineticPoint& z2, double s, int nodes = 101,
                                    int zooms = 8) {
  detail::check_pair(z1, z2, s);
  const int n = z1.dimension();
  require(n == 2 || n == 3, "grid oracle supports n = 2, 3");
  Vec lo = z1.v.cwiseMin(z2.v), hi = z1.v.cwiseMax(z2.v);
  if (z1.t != z2.t) {
    Vec c = (z1.x - z2.x) / (z1.t - z2.t);
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  Vec center = 0.5 * (lo + hi);
  double half = 0.5 * (hi - lo).maxCoeff() + 1e-3;
  double best = std::numeric_limits<double>::infinity();
  Vec arg = center;
  if (n == 3) nodes = std::min(nodes, 41);
  for (int z = 0; z <= zooms; ++z) {
    double h = 2.0 * half / (nodes - 1);
    Vec w(n);
    std::vector<int> idx(n, 0);
    while (true) {
      for (int i = 0; i < n; ++i) w(i) = center(i) - half + idx[i] * h;
      double f = detail::distance_objective(z1, z2, s, w);
      if (f < best) {
        best = f;
        arg = w;
      }
      int k = 0;
      while (k < n && ++idx[k] == nodes) idx[k++] = 0;
      if (k == n) break;
    }
    center = arg;
    half = 4.0 * h;
  }
  return best;
}

struct NormSpec {
  double alpha = 0.5;
  double p = 1.0;
  double tau = 0.0;
  double T = 3.0;
  std::vector<double> radii{1.0, 0.5, 0.25};

  void validate() const {
    require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0,1)");
    require(p >= 0.0, "p must be nonnegative");
    require(T > tau, "window needs T > tau");
    require(!radii.empty(), "cylinder radius set is empty");
    for (double r : radii) require(r > 0.0 && r <= 1.0, "cylinder radii must lie in (0,1]");
  }
};

struct SamplePlan {
  std::vector<KineticPoint> centers;
  int points_per_cylinder = 16;
  std::uint64_t seed = 1;
};

// Centers with Q_1(z) inside the window: t in [tau + 1, T), x in [-x_half, x_half]^n, v in [-v_half, v_half]^n.
inline SamplePlan make_sample_plan(const NormSpec& spec, int n, int count, double x_half, double v_half,
                                   std::uint64_t seed, int points_per_cylinder = 16) {
  spec.validate();
  require(spec.T - spec.tau > 1.0, "window shorter than the unit cylinder");
  require(count > 0 && points_per_cylinder > 0, "sample plan needs positive counts");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> Ut(spec.tau + 1.0, spec.T);
  SamplePlan plan;
  plan.seed = seed;
  plan.points_per_cylinder = points_per_cylinder;
  for (int k = 0; k < count; ++k) {
    Vec x(n), v(n);
    for (int i = 0; i < n; ++i) x(i) = x_half * U(rng);
    for (int i = 0; i < n; ++i) v(i) = v_half * U(rng);
    plan.centers.emplace_back(Ut(rng), x, v);
  }
  return plan;
}

using KineticField = std::function<double(const KineticPoint&)>;

struct HolderNorms {
  double c0 = 0.0;              // sup |F|
  double c0_weighted = 0.0;     // sup (1+|v|)^p |F|
  double seminorm = 0.0;        // sup over cylinders of [F]_{C^alpha(Q)}
  double holder_weighted = 0.0; // sup over cylinders of (1+|v_c|)^p (||F||_inf + [F]_{C^alpha(Q)}); [F]_{C^0} = ||F||_inf
  double linf_l1 = 0.0;         // sup over cylinders and (t,x) of int_{B_r(v_c)} |F| (1+|w|)^p dw
  long pairs = 0;
};

namespace detail {

inline Vec uniform_in_ball(std::mt19937_64& rng, int n, double r) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vec g(n);
  for (int i = 0; i < n; ++i) g(i) = N(rng);
  return r * std::pow(U(rng), 1.0 / n) * normalized(g);
}

template <class G>
double ball_integral(G&& g, const Vec& c, double r, const QuadratureBudget& budget) {
  const int n = static_cast<int>(c.size());
  auto inner = budget.inner();
  auto radial = [&](const Vec& th) {
    return integrate([&](double rho) { return std::pow(rho, n - 1) * g(Vec(c + rho * th)); }, 0.0, r, inner).value;
  };
  if (n == 2)
    return integrate([&](double phi) { return radial(circle_point(phi)); },
                     std::vector<double>{0.0, 0.5 * pi, pi, 1.5 * pi, 2.0 * pi}, budget)
        .value;
  return sphere_integral(radial, n, budget);
}

struct CylinderSample {
  KineticPoint center;
  double r = 0.0;
  std::vector<KineticPoint> pts;
};

inline std::vector<CylinderSample> cylinder_samples(const NormSpec& spec, const SamplePlan& plan, double s) {
  std::vector<CylinderSample> out;
  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (auto& z : plan.centers)
    for (double r : spec.radii) {
      require(z.t - std::pow(r, 2.0 * s) >= spec.tau && z.t < spec.T, "sample cylinder leaves the window");
      CylinderSample cs{z, r, {z}};
      const int n = z.dimension();
      for (int k = 0; k < plan.points_per_cylinder; ++k) {
        // Interior sample of Q_r(z); t is kept off the open lower face.
        double t = z.t - (1.0 - 1e-9) * U(rng) * std::pow(r, 2.0 * s);
        Vec v = z.v + uniform_in_ball(rng, n, r);
        Vec x = z.x + (t - z.t) * z.v + uniform_in_ball(rng, n, std::pow(r, 1.0 + 2.0 * s));
        cs.pts.emplace_back(t, x, v);
      }
      out.push_back(std::move(cs));
    }
  return out;
}

}  // namespace detail

// Sampled norms: pairs are all point pairs inside each cylinder of the plan.
inline HolderNorms sampled_holder_norm(const KineticField& F, const NormSpec& spec, const SamplePlan& plan, double s,
                                       const QuadratureBudget& budget, int jobs = 1, int l1_slices = 3) {
  spec.validate();
  require(!plan.centers.empty(), "sample plan is empty");
  require(s > 0.0 && s <= 1.0, "s must lie in (0,1]");
  auto cyl = detail::cylinder_samples(spec, plan, s);
  auto weight = [&](const Vec& v) { return std::pow(1.0 + v.norm(), spec.p); };
  auto per = parallel_map<HolderNorms>(cyl.size(), jobs, [&](std::size_t i) {
    const auto& c = cyl[i];
    HolderNorms h;
    std::vector<double> vals;
    for (auto& z : c.pts) vals.push_back(F(z));
    double sup = 0.0;
    for (std::size_t a = 0; a < vals.size(); ++a) {
      sup = std::max(sup, std::abs(vals[a]));
      h.c0_weighted = std::max(h.c0_weighted, weight(c.pts[a].v) * std::abs(vals[a]));
    }
    h.c0 = sup;
    double semi = 0.0;
    if (spec.alpha > 0.0)
      for (std::size_t a = 0; a < vals.size(); ++a)
        for (std::size_t b = a + 1; b < vals.size(); ++b) {
          double d = kinetic_distance(c.pts[a], c.pts[b], s);
          ++h.pairs;
          if (d > 0.0) semi = std::max(semi, std::abs(vals[a] - vals[b]) / std::pow(d, spec.alpha));
        }
    h.seminorm = semi;
    h.holder_weighted = weight(c.center.v) * (sup + (spec.alpha > 0.0 ? semi : sup));
    int slices = std::min<int>(l1_slices, static_cast<int>(c.pts.size()));
    for (int k = 0; k < slices; ++k) {
      const auto& z = c.pts[k];
      double l1 = detail::ball_integral(
          [&](const Vec& w) { return std::abs(F(KineticPoint(z.t, z.x, w))) * weight(w); }, c.center.v, c.r, budget);
      h.linf_l1 = std::max(h.linf_l1, l1);
    }
    return h;
  });
  HolderNorms out;
  for (auto& h : per) {
    out.c0 = std::max(out.c0, h.c0);
    out.c0_weighted = std::max(out.c0_weighted, h.c0_weighted);
    out.seminorm = std::max(out.seminorm, h.seminorm);
    out.holder_weighted = std::max(out.holder_weighted, h.holder_weighted);
    out.linf_l1 = std::max(out.linf_l1, h.linf_l1);
    out.pairs += h.pairs;
  }
  return out;
}

struct InterpolationRow {
  double epsilon = 0.0;
  double lhs = 0.0;          // ||F||_{C^0_{l,p}}
  double holder_term = 0.0;  // eps^alpha ||F||_{C^alpha_{l,p-alpha}}
  double l1_term = 0.0;      // C eps^{-n} ||F||_{L^inf L^1_{l,p+n}}
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
};

struct InterpolationTable {
  double constant = 0.0;  // 1/|B_1|
  std::vector<InterpolationRow> rows;
  bool all_hold = true;
};

// ||F||_{C^0_{l,p}} <= eps^alpha ||F||_{C^alpha_{l,p-alpha}} + C eps^{-n} ||F||_{L^inf L^1_{l,p+n}}.
inline InterpolationTable verify_interpolation(const KineticField& F, const NormSpec& spec, const SamplePlan& plan,
                                               double s, const std::vector<double>& eps_list,
                                               const QuadratureBudget& budget, int jobs = 1) {
  spec.validate();
  require(spec.alpha > 0.0 && spec.p >= spec.alpha, "interpolation needs alpha > 0 and p >= alpha");
  require(!plan.centers.empty(), "sample plan is empty");
  const int n = plan.centers.front().dimension();
  NormSpec lo = spec, l1 = spec, c0 = spec;
  lo.p = spec.p - spec.alpha;
  l1.p = spec.p + n;
  l1.radii = {1.0};
  c0.alpha = 0.0;
  auto Nc0 = sampled_holder_norm(F, c0, plan, s, budget, jobs, 0);
  auto Nh = sampled_holder_norm(F, lo, plan, s, budget, jobs, 0);
  auto Nl = sampled_holder_norm(F, l1, plan, s, budget, jobs);
  InterpolationTable tab;
  tab.constant = 1.0 / ball_volume(n);
  for (double eps : eps_list) {
    require(eps > 0.0 && eps < 1.0, "epsilon must lie in (0,1)");
    InterpolationRow row;
    row.epsilon = eps;
    row.lhs = Nc0.c0_weighted;
    row.holder_term = std::pow(eps, spec.alpha) * Nh.holder_weighted;
    row.l1_term = tab.constant * std::pow(eps, -n) * Nl.linf_l1;
    row.rhs = row.holder_term + row.l1_term;
    row.slack = row.rhs - row.lhs;
    row.holds = row.slack >= 0.0;
    tab.all_hold = tab.all_hold && row.holds;
    tab.rows.push_back(row);
  }
  return tab;
}

struct GiustiResult {
  bool hypothesis_ok = true;
  bool conclusion_ok = true;
  double c_used = 0.0;
  double sigma = 0.0;
  long pairs = 0;
  long hypothesis_violations = 0;
  long conclusion_violations = 0;
  double worst_conclusion_ratio = 0.0;  // max F(s1)/(A (s2-s1)^{-gamma})
};

// c = (1-sigma)^{-gamma} sum_i 2^{-i/2}, sigma = 2^{-1/(2 gamma)}.
inline double giusti_constant(double gamma) {
  require(gamma > 0.0, "gamma must be positive");
  double sigma = std::pow(2.0, -1.0 / (2.0 * gamma));
  return std::pow(1.0 - sigma, -gamma) / (1.0 - std::pow(2.0, -0.5));
}

// Checks hypothesis and conclusion on all pairs of a uniform grid of `samples` points in [T1,T2].
inline GiustiResult giusti_verify(const std::function<double(double)>& F, double T1, double T2, double gamma, double A,
                                  int samples = 200, double rel_tol = 1e-12) {
  require(gamma > 0.0, "gamma must be positive");
  require(A >= 0.0, "A must be nonnegative");
  require(T2 > T1 && samples >= 2, "need T2 > T1 and at least two samples");
  GiustiResult g;
  g.sigma = std::pow(2.0, -1.0 / (2.0 * gamma));
  g.c_used = giusti_constant(gamma);
  std::vector<double> t(samples), f(samples);
  for (int i = 0; i < samples; ++i) {
    t[i] = T1 + (T2 - T1) * i / (samples - 1);
    f[i] = F(t[i]);
    require(std::isfinite(f[i]) && f[i] >= 0.0, "F must be finite and nonnegative on the samples");
  }
  for (int i = 0; i < samples; ++i)
    for (int j = i + 1; j < samples; ++j) {
      ++g.pairs;
      double pw = A * std::pow(t[j] - t[i], -gamma);
      double rhs = 0.5 * f[j] + pw;
      if (f[i] > rhs * (1 + rel_tol) + rel_tol) ++g.hypothesis_violations;
      double crhs = g.c_used * pw;
      if (f[i] > crhs * (1 + rel_tol) + rel_tol) ++g.conclusion_violations;
      if (pw > 0.0) g.worst_conclusion_ratio = std::max(g.worst_conclusion_ratio, f[i] / pw);
      else if (f[i] > 0.0) g.worst_conclusion_ratio = std::numeric_limits<double>::infinity();
    }
  g.hypothesis_ok = g.hypothesis_violations == 0;
  g.conclusion_ok = g.conclusion_violations == 0;
  return g;
}

inline nlohmann::json to_json(const InterpolationTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (auto& r : t.rows)
    rows.push_back({{"epsilon", r.epsilon}, {"lhs", r.lhs}, {"holder_term", r.holder_term}, {"l1_term", r.l1_term},
                    {"rhs", r.rhs}, {"slack", r.slack}, {"holds", r.holds}});
  return {{"constant", t.constant}, {"all_hold", t.all_hold}, {"rows", rows}};
}

inline nlohmann::json to_json(const GiustiResult& g) {
  return {{"hypothesis_ok", g.hypothesis_ok}, {"conclusion_ok", g.conclusion_ok}, {"c_used", g.c_used},
          {"sigma", g.sigma}, {"pairs", g.pairs}, {"hypothesis_violations", g.hypothesis_violations},
          {"conclusion_violations", g.conclusion_violations}, {"worst_conclusion_ratio", g.worst_conclusion_ratio}};
}

inline std::string interpolation_csv(const InterpolationTable& t) {
  std::ostringstream os;
  os.precision(12);
  os << "epsilon,lhs,holder_term,l1_term,rhs,slack\n";
  for (auto& r : t.rows)
    os << r.epsilon << "," << r.lhs << "," << r.holder_term << "," << r.l1_term << "," << r.rhs << "," << r.slack << "\n";
  return os.str();
}

}  // namespace kinver
