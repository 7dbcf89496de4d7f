#pragma once

#include "kinver/boltzmann_kernel.hpp"
#include "kinver/kinetic_point.hpp"

#include <Eigen/SVD>
#include <random>

namespace kinver {

enum class Regime { near, far };

class FrameTransform {
 public:
  FrameTransform(KineticPoint z0, double gamma, double s) : z0_(std::move(z0)), gamma_(gamma), s_(s) {
    const int n = z0_.dimension();
    const double nv = z0_.v.norm();
    tau_ = Mat::Identity(n, n);
    tau_inv_ = Mat::Identity(n, n);
    regime_ = nv >= 2.0 ? Regime::far : Regime::near;
    if (regime_ == Regime::far) {
      Vec u = z0_.v / nv;
      tau_ += (1.0 / nv - 1.0) * u * u.transpose();
      tau_inv_ += (nv - 1.0) * u * u.transpose();
    }
  }
  FrameTransform(const Vec& v0, const KernelParams& p)
      : FrameTransform(KineticPoint(0.0, Vec::Zero(v0.size()), v0), p.gamma, p.s) {}

  const KineticPoint& z0() const { return z0_; }
  const Vec& v0() const { return z0_.v; }
  Regime regime() const { return regime_; }
  const Mat& tau0() const { return tau_; }
  const Mat& tau0_inv() const { return tau_inv_; }
  double det_tau0() const { return regime_ == Regime::far ? 1.0 / z0_.v.norm() : 1.0; }
  double gamma() const { return gamma_; }
  double s() const { return s_; }

  void check_params(const KernelParams& p) const {
    require(p.gamma == gamma_ && p.s == s_, "frame was built with different kernel parameters");
    require(p.n == z0_.dimension(), "frame dimension does not match the kernel");
  }

  // Time/space scale |v0|^{gamma+2s} in the far regime.
  double scale() const { return regime_ == Regime::far ? std::pow(z0_.v.norm(), gamma_ + 2.0 * s_) : 1.0; }

  KineticPoint apply(const KineticPoint& z) const {
    const double S = scale();
    return {z0_.t + z.t / S, Vec(z0_.x + (tau_ * z.x + z.t * z0_.v) / S), Vec(z0_.v + tau_ * z.v)};
  }

  KineticPoint invert(const KineticPoint& z) const {
    const double S = scale();
    double t = (z.t - z0_.t) * S;
    Vec x = tau_inv_ * ((z.x - z0_.x) * S - t * z0_.v);
    return {t, x, Vec(tau_inv_ * (z.v - z0_.v))};
  }

  Vec apply_velocity(const Vec& v) const { return z0_.v + tau_ * v; }

 private:
  KineticPoint z0_;
  double gamma_, s_;
  Regime regime_;
  Mat tau_, tau_inv_;
};

inline KineticPoint transform_point(const FrameTransform& F, const KineticPoint& z) { return F.apply(z); }
inline KineticPoint inverse_transform_point(const FrameTransform& F, const KineticPoint& z) { return F.invert(z); }

// far: |v0|^{-1-gamma-2s} K_f(v0 + tau0 v, v0 + tau0 (v + h)); near: K_f(v0 + v, v0 + v + h).
inline double transformed_kernel(const VelocityDistribution& f, const KernelParams& p, const FrameTransform& F,
                                 const Vec& v, const Vec& h, const QuadratureBudget& budget, bool exact = false) {
  F.check_params(p);
  require(h.norm() > 0.0, "transformed_kernel: h must be nonzero");
  Vec a = F.apply_velocity(v), b = F.apply_velocity(Vec(v + h));
  double k = exact ? kernel_exact(f, p, a, b, budget) : kernel_surrogate(f, p, a, Vec(b - a), budget);
  if (F.regime() == Regime::near) return k;
  return std::pow(F.v0().norm(), -1.0 - p.gamma - 2.0 * p.s) * k;
}

// Homogeneous form of the transformed surrogate:
// far A(v; theta) = |v0|^{-1-gamma-2s} |tau0 theta|^{-n-2s} a(v0 + tau0 v; tau0 theta / |tau0 theta|),
// near A(v; theta) = a(v0 + v; theta).
inline HomogeneousKernel transformed_homogeneous(const VelocityDistribution& f, const KernelParams& p,
                                                 const FrameTransform& F, const QuadratureBudget& budget) {
  F.check_params(p);
  HomogeneousKernel K;
  K.n = p.n;
  K.s = p.s;
  K.kappa = p.kappa();
  if (F.regime() == Regime::near) {
    Vec v0 = F.v0();
    K.A = [f, p, v0, budget](const Vec& v, const Vec& th) { return hyperplane_density(f, p, Vec(v0 + v), th, budget); };
    return K;
  }
  const double pref = std::pow(F.v0().norm(), -1.0 - p.gamma - 2.0 * p.s);
  K.A = [f, p, F, budget, pref](const Vec& v, const Vec& th) {
    Vec tt = F.tau0() * th;
    double nt = tt.norm();
    return pref * std::pow(nt, -p.n - 2.0 * p.s) * hyperplane_density(f, p, F.apply_velocity(v), Vec(tt / nt), budget);
  };
  return K;
}

// Untransformed kernel seen from v0: A(v; theta) = a(v0 + v; theta).
inline HomogeneousKernel shifted_homogeneous(const VelocityDistribution& f, const KernelParams& p, const Vec& v0,
                                             const QuadratureBudget& budget) {
  HomogeneousKernel K;
  K.n = p.n;
  K.s = p.s;
  K.kappa = p.kappa();
  K.A = [f, p, v0, budget](const Vec& v, const Vec& th) { return hyperplane_density(f, p, Vec(v0 + v), th, budget); };
  return K;
}

struct EllipsoidSets {
  FrameTransform frame;
  double r;

  // E_r(v0) = v0 + tau0(B_r).
  bool in_E(const Vec& v) const { return (frame.tau0_inv() * (v - frame.v0())).norm() < r; }
  // calE_r(z0) = T0(Q_r).
  bool in_calE(const KineticPoint& z) const {
    return cylinder_contains(KineticPoint::origin(frame.z0().dimension()), r, frame.s(), frame.invert(z));
  }
};

inline EllipsoidSets ellipsoid_sets(const FrameTransform& F, double r) {
  require(r > 0.0, "ellipsoid radius must be positive");
  return {F, r};
}

// Smallest radius of the section of tau0(B_r) by the hyperplane perpendicular to u (far regime).
inline double section_min_radius(const FrameTransform& F, double r, const Vec& u) {
  require(F.regime() == Regime::far, "section radius formula holds in the far regime only");
  require(u.norm() > 0.0, "section direction must be nonzero");
  double nv = F.v0().norm();
  double c = u.dot(F.v0()) / (u.norm() * nv);
  double c2 = c * c, s2 = std::max(0.0, 1.0 - c2);
  return r / std::sqrt(nv * nv * s2 + c2);
}

// Same radius from the parametrization y -> B y of the section: r / sigma_max(tau0^{-1} B).
inline double section_min_radius_numeric(const FrameTransform& F, double r, const Vec& u) {
  Mat B = complement_basis(u);
  Eigen::JacobiSVD<Mat> svd(F.tau0_inv() * B);
  return r / svd.singularValues()(0);
}

// |tau0^{-1} e|^2 = 1 + (|v0|^2 - 1) cos^2(v0, e) for unit e.
inline double tau_inv_norm2_formula(const FrameTransform& F, const Vec& e) {
  if (F.regime() == Regime::near) return 1.0;
  double nv = F.v0().norm();
  double c = e.dot(F.v0()) / nv;
  return 1.0 + (nv * nv - 1.0) * c * c;
}

struct DistanceComparison {
  double c0 = 0.0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
};

// Fits c0 with c0|v - v'| <= d(v0 + tau0 v, v0 + tau0 v') <= |v - v'|/c0 over random pairs in B_3.
inline DistanceComparison measure_distance_comparison(const FrameTransform& F, int pairs, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = F.v0().size();
  auto in_ball = [&]() {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = N(rng);
    return Vec(normalized(x) * 3.0 * std::pow(U(rng), 1.0 / n));
  };
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Vec a = in_ball(), b = in_ball();
    double d0 = (a - b).norm();
    if (d0 < 1e-9) continue;
    double r = gs_distance(F.apply_velocity(a), F.apply_velocity(b)) / d0;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {std::min(lo, 1.0 / hi), lo, hi};
}

// Integral over M = {|v + h| < |v0|/8, |h| > 1/2 + |v0|/8} of f(v + h) K_f(v, v + h), surrogate kernel.
inline double improved_tail_integral(const VelocityDistribution& f, const KernelParams& p, const Vec& v0,
                                     const Vec& v, const QuadratureBudget& budget) {
  const double R = v0.norm() / 8.0, hmin = 0.5 + v0.norm() / 8.0;
  if (R <= 0.0) return 0.0;
  const int n = p.n;
  QuadratureBudget in = budget.inner();
  auto rad = [&](double rho) {
    auto ang = [&](const Vec& th) {
      Vec u = rho * th;
      Vec h = u - v;
      if (h.norm() <= hmin) return 0.0;
      double fu = f.density(u);
      if (fu == 0.0) return 0.0;
      return fu * kernel_surrogate(f, p, v, h, in);
    };
    return std::pow(rho, n - 1) * sphere_integral(ang, n, in);
  };
  return integrate(rad, 0.0, R, budget).value;
}

struct UniformityRow {
  Vec v0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double Lambda = std::numeric_limits<double>::quiet_NaN();
  double tail = std::numeric_limits<double>::quiet_NaN();
};

struct UniformityScan {
  Condition condition = Condition::nondeg;
  bool transformed = true;
  std::vector<UniformityRow> rows;
  double ratio_lambda = std::numeric_limits<double>::quiet_NaN();
  double ratio_Lambda = std::numeric_limits<double>::quiet_NaN();
  // max of the defined ratios
  double ratio = std::numeric_limits<double>::quiet_NaN();
};

struct ScanGrids {
  std::vector<double> r_list{0.5};
  std::vector<Vec> v_grid;
};

inline double max_over_min(const std::vector<double>& xs) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : xs) lo = std::min(lo, x), hi = std::max(hi, x);
  return hi / lo;
}

inline UniformityScan uniformity_scan(const VelocityDistribution& f, const KernelParams& p, Condition condition,
                                      const std::vector<Vec>& v0_list, const ScanGrids& grids,
                                      const QuadratureBudget& budget, bool transformed = true, int jobs = 1,
                                      bool with_tail = false) {
  require(!v0_list.empty(), "uniformity scan needs at least one base velocity");
  require(condition != Condition::coercive, "uniformity scans cover conditions (i), (ii) and (iv)");
  std::vector<Vec> vg = grids.v_grid.empty() ? default_v_grid(p.n) : grids.v_grid;
  UniformityScan out;
  out.condition = condition;
  out.transformed = transformed;
  std::vector<double> ls, Ls;
  for (auto& v0 : v0_list) {
    FrameTransform F(v0, p);
    HomogeneousKernel K = transformed ? transformed_homogeneous(f, p, F, budget.inner(0.01))
                                      : shifted_homogeneous(f, p, v0, budget.inner(0.01));
    EllipticityReport rep;
    if (condition == Condition::nondeg)
      rep = condition_nondegeneracy(K, grids.r_list, vg, budget, jobs);
    else if (condition == Condition::upper)
      rep = condition_upper_bound(K, grids.r_list, vg, budget, jobs);
    else
      rep = condition_cancellation(K, grids.r_list, vg, budget, jobs);
    UniformityRow row{v0, rep.lambda_meas, rep.Lambda_meas, std::numeric_limits<double>::quiet_NaN()};
    if (with_tail) row.tail = improved_tail_integral(f, p, v0, v0, budget);
    if (!std::isnan(row.lambda)) ls.push_back(row.lambda);
    if (!std::isnan(row.Lambda)) Ls.push_back(row.Lambda);
    out.rows.push_back(row);
  }
  if (!ls.empty()) out.ratio_lambda = max_over_min(ls);
  if (!Ls.empty()) out.ratio_Lambda = max_over_min(Ls);
  out.ratio = std::isnan(out.ratio_lambda) ? out.ratio_Lambda
              : std::isnan(out.ratio_Lambda) ? out.ratio_lambda
                                             : std::max(out.ratio_lambda, out.ratio_Lambda);
  return out;
}

inline std::string scan_csv(const UniformityScan& s) {
  std::ostringstream os;
  os.precision(12);
  os << "v0_norm,condition,lambda,Lambda,ratio\n";
  for (auto& r : s.rows)
    os << r.v0.norm() << "," << to_string(s.condition) << "," << r.lambda << "," << r.Lambda << "," << s.ratio << "\n";
  return os.str();
}

}  // namespace kinver
