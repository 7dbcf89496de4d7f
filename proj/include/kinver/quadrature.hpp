#pragma once

#include "kinver/linalg.hpp"
#include "kinver/parallel.hpp"
#include "kinver/quad_core.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace kinver {

// Integral over the hyperplane {w : w . normal = 0} through the origin.
template <class G>
QuadResult<double> hyperplane_integral(G&& g, const Vec& normal, const QuadratureBudget& budget) {
  require(normal.norm() > 0.0, "hyperplane_integral: zero normal");
  const int n = static_cast<int>(normal.size());
  const double R = budget.truncation_radius;
  Mat B = complement_basis(normal);
  if (n == 2) {
    Vec u = B.col(0);
    return integrate([&](double t) { return g(Vec(t * u)); }, std::vector<double>{-R, 0.0, R}, budget);
  }
  Vec b1 = B.col(0), b2 = B.col(1);
  QuadratureBudget in = budget.inner();
  auto outer = [&](double c1) {
    return integrate([&](double c2) { return g(Vec(c1 * b1 + c2 * b2)); }, std::vector<double>{-R, 0.0, R}, in).value;
  };
  return integrate(outer, std::vector<double>{-R, 0.0, R}, budget);
}

// Quadrature rule on S^{n-1}: uniform angles (n=2) or Gauss-Legendre in the polar
// cosine times uniform azimuth (n=3). Level k has 720*2^k nodes (n=2) or
// m = 24*2^k polar nodes times 2m azimuths (n=3).
struct SphereRule {
  std::vector<Vec> nodes;
  std::vector<double> weights;

  static SphereRule make(int n, int level) {
    SphereRule r;
    if (n == 2) {
      const int N = 720 << level;
      for (int k = 0; k < N; ++k) {
        r.nodes.push_back(circle_point(2.0 * pi * k / N));
        r.weights.push_back(2.0 * pi / N);
      }
      return r;
    }
    require(n == 3, "sphere rules exist for n = 2 and n = 3");
    const int m = 24 << level;
    std::vector<double> x, w;
    gauss_legendre(m, x, w);
    const int M = 2 * m;
    for (int i = 0; i < m; ++i) {
      double th = std::acos(x[i]);
      for (int k = 0; k < M; ++k) {
        r.nodes.push_back(sphere_point(th, 2.0 * pi * (k + 0.5) / M));
        r.weights.push_back(w[i] * 2.0 * pi / M);
      }
    }
    return r;
  }

  std::size_t size() const { return nodes.size(); }
};

// Node values of a field on the sphere, at the first rule level whose second-moment
// matrix of the field agrees with the previous level to the budget tolerance.
struct SphereSample {
  SphereRule rule;
  std::vector<double> values;

  double integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += rule.weights[i] * values[i];
    return s;
  }

  template <class W>
  double integral_weighted(W&& w) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += rule.weights[i] * values[i] * w(rule.nodes[i]);
    return s;
  }

  Mat second_moment() const {
    const int n = static_cast<int>(rule.nodes.front().size());
    Mat M = Mat::Zero(n, n);
    for (std::size_t i = 0; i < values.size(); ++i)
      M += rule.weights[i] * values[i] * rule.nodes[i] * rule.nodes[i].transpose();
    return M;
  }
};

template <class G>
SphereSample sample_sphere(G&& g, int n, const QuadratureBudget& budget, int jobs = 1) {
  SphereSample prev;
  for (int level = 0;; ++level) {
    SphereSample cur;
    cur.rule = SphereRule::make(n, level);
    cur.values = parallel_map<double>(cur.rule.size(), jobs, [&](std::size_t i) { return g(cur.rule.nodes[i]); });
    if (level > 0) {
      Mat a = cur.second_moment(), b = prev.second_moment();
      double scale = a.cwiseAbs().maxCoeff();
      double diff = (a - b).cwiseAbs().maxCoeff();
      if (diff <= std::max(budget.abs_tol, budget.rel_tol * scale)) return cur;
    }
    if (static_cast<long>(2 * cur.rule.size()) > budget.max_evals || level >= 6) {
      if (level == 0) return cur;
      Mat a = cur.second_moment(), b = prev.second_moment();
      double est = cur.integral();
      throw QuadratureFailure("sphere rule refinement exhausted its budget", est, (a - b).cwiseAbs().maxCoeff());
    }
    prev = std::move(cur);
  }
}

// Integral of g over S^{n-1} with rule refinement until successive levels agree.
template <class G>
double sphere_integral(G&& g, int n, const QuadratureBudget& budget, int jobs = 1) {
  double prev = 0.0;
  for (int level = 0;; ++level) {
    SphereRule r = SphereRule::make(n, level);
    std::vector<double> vals = parallel_map<double>(r.size(), jobs, [&](std::size_t i) { return g(r.nodes[i]); });
    double s = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) s += r.weights[i] * vals[i];
    if (level > 0 && std::abs(s - prev) <= std::max(budget.abs_tol, budget.rel_tol * std::abs(s))) return s;
    if (static_cast<long>(2 * r.size()) > budget.max_evals || level >= 6) {
      if (level == 0) return s;
      throw QuadratureFailure("sphere integral refinement exhausted its budget", s, std::abs(s - prev));
    }
    prev = s;
  }
}

// Integral over the great subsphere S^{n-1} ∩ {theta ⊥ z}. For n = 2 this is the
// counting measure on the two antipodal points.
template <class G>
double sphere_section_integral(G&& g, const Vec& z, const QuadratureBudget& budget) {
  require(z.norm() > 0.0, "sphere_section_integral: zero z");
  Mat B = complement_basis(z);
  if (z.size() == 2) {
    Vec u = B.col(0);
    return g(u) + g(Vec(-u));
  }
  Vec b1 = B.col(0), b2 = B.col(1);
  auto h = [&](double phi) { return g(Vec(std::cos(phi) * b1 + std::sin(phi) * b2)); };
  return integrate(h, std::vector<double>{0.0, 0.5 * pi, pi, 1.5 * pi, 2.0 * pi}, budget).value;
}

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};

inline double relative_gap(double a, double b) {
  double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// lhs = ∫_S ∫_{w⊥θ} g(w,θ) dw dθ, rhs = ∫_{R^n} (∫_{θ⊥z} g(z,θ) dθ) |z|^{-1} dz.
template <class G>
IdentityCheck verify_weighted_trafo(G&& g, int n, const QuadratureBudget& budget, int jobs = 1) {
  QuadratureBudget in = budget.inner();
  auto lhs_field = [&](const Vec& th) {
    return hyperplane_integral([&](const Vec& w) { return g(w, th); }, th, in).value;
  };
  double lhs = sphere_integral(lhs_field, n, budget, jobs);
  const double R = budget.truncation_radius;
  auto rhs_field = [&](const Vec& om) {
    auto radial = [&](double rho) {
      Vec z = rho * om;
      return std::pow(rho, n - 2) * sphere_section_integral([&](const Vec& th) { return g(z, th); }, z, in.inner());
    };
    return integrate(radial, 1e-300, R, in).value;
  };
  double rhs = sphere_integral(rhs_field, n, budget, jobs);
  return {lhs, rhs, relative_gap(lhs, rhs)};
}

// {h : (h.axis)^2/along^2 + |h_perp|^2/across^2 < 1}, centered at the origin.
struct Ellipsoid {
  Vec axis;
  double along = 1.0;
  double across = 1.0;

  bool contains(const Vec& h) const {
    double a = h.dot(axis);
    double p2 = h.squaredNorm() - a * a;
    return a * a / (along * along) + p2 / (across * across) < 1.0;
  }

  // Distance from the origin to the boundary along unit direction u.
  double radial_extent(const Vec& u) const {
    double a = u.dot(axis);
    double p2 = std::max(0.0, 1.0 - a * a);
    return 1.0 / std::sqrt(a * a / (along * along) + p2 / (across * across));
  }
};

// Integral of g over the section E ∩ {h ⊥ w}, in polar coordinates of w-perp with the
// exact radial extent. g may behave like |h|^{radial_power} near 0 (radial_power > -(n-1)).
template <class G>
double ellipsoid_section_integral(G&& g, const Ellipsoid& E, const Vec& w, const QuadratureBudget& budget,
                                  double radial_power = 0.0) {
  require(w.norm() > 0.0, "ellipsoid_section_integral: zero w");
  require(E.along > 0.0 && E.across > 0.0, "ellipsoid_section_integral: degenerate ellipsoid");
  const int n = static_cast<int>(w.size());
  Mat B = complement_basis(w);
  auto ray = [&](const Vec& u, const QuadratureBudget& b) {
    double rm = E.radial_extent(u);
    auto phi = [&](double rho) {
      double val = g(Vec(rho * u));
      return radial_power == 0.0 ? val : val / std::pow(rho, radial_power);
    };
    return integrate_power_weight(phi, radial_power + (n - 2), rm, b).value;
  };
  if (n == 2) {
    Vec u = B.col(0);
    return ray(u, budget) + ray(Vec(-u), budget);
  }
  Vec b1 = B.col(0), b2 = B.col(1);
  QuadratureBudget in = budget.inner();
  auto h = [&](double psi) { return ray(Vec(std::cos(psi) * b1 + std::sin(psi) * b2), in); };
  return integrate(h, std::vector<double>{0.0, 0.5 * pi, pi, 1.5 * pi, 2.0 * pi}, budget).value;
}

// Both orders of integration of the ellipsoid version of the weighted identity:
// lhs = ∫_E ∫_{w⊥h} g(w,h) dw dh, rhs = ∫_{R^n} ∫_{E∩{h⊥w}} g(w,h) |h|/|w| dh dw.
template <class G>
IdentityCheck verify_weighted_trafo_ellipsoid(G&& g, const Ellipsoid& E, int n, const QuadratureBudget& budget,
                                              int jobs = 1) {
  QuadratureBudget in = budget.inner();
  auto lhs_field = [&](const Vec& om) {
    double rm = E.radial_extent(om);
    auto radial = [&](double rho) {
      Vec h = rho * om;
      return std::pow(rho, n - 1) * hyperplane_integral([&](const Vec& w) { return g(w, h); }, h, in.inner()).value;
    };
    return integrate(radial, 1e-300, rm, in).value;
  };
  double lhs = sphere_integral(lhs_field, n, budget, jobs);
  const double R = budget.truncation_radius;
  auto rhs_field = [&](const Vec& om) {
    auto radial = [&](double rho) {
      Vec w = rho * om;
      double sec = ellipsoid_section_integral([&](const Vec& h) { return g(w, h) * h.norm(); }, E, w, in.inner());
      return std::pow(rho, n - 2) * sec;
    };
    return integrate(radial, 1e-300, R, in).value;
  };
  double rhs = sphere_integral(rhs_field, n, budget, jobs);
  return {lhs, rhs, relative_gap(lhs, rhs)};
}

// (1-s) ∫_0^r rho^{1-2s} drho, evaluated exactly.
inline double grazing_radial_factor(double s, double r) { return (1.0 - s) * std::pow(r, 2.0 - 2.0 * s) / (2.0 - 2.0 * s); }

}  // namespace kinver
