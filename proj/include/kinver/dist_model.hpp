#pragma once

#include "kinver/linalg.hpp"
#include "kinver/quad_core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace kinver {

enum class ComponentKind { gaussian, box, ball };

inline std::string to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::gaussian: return "gaussian";
    case ComponentKind::box: return "box";
    case ComponentKind::ball: return "ball";
  }
  return "unknown";
}

// Restriction of one component to a line x0 + t d (|d| = 1).
// Gaussian: amp * exp(-(t-mean)^2 / (2 sigma^2)); indicator: height on (lo, hi).
struct LineRestriction {
  bool gaussian = false;
  double amp = 0.0;
  double mean = 0.0;
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 0.0;

  bool empty() const { return amp == 0.0 || (!gaussian && hi <= lo); }
  double support_lo(double tails = 12.0) const { return gaussian ? mean - tails * sigma : lo; }
  double support_hi(double tails = 12.0) const { return gaussian ? mean + tails * sigma : hi; }
  double operator()(double t) const {
    if (gaussian) {
      double z = (t - mean) / sigma;
      return amp * std::exp(-0.5 * z * z);
    }
    return (t > lo && t < hi) ? amp : 0.0;
  }
};

class Component {
 public:
  static Component gaussian(const Vec& mean, const Mat& cov, double weight) {
    require(mean.size() == cov.rows() && cov.rows() == cov.cols(), "gaussian: dimension mismatch");
    require(is_symmetric(cov, 1e-10), "gaussian: covariance must be symmetric");
    Component c;
    c.kind_ = ComponentKind::gaussian;
    c.center_ = mean;
    c.cov_ = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(c.cov_);
    require(es.eigenvalues().minCoeff() > 0.0, "gaussian: covariance must be positive definite");
    c.eigvec_ = es.eigenvectors();
    c.sigmas_ = es.eigenvalues().cwiseSqrt();
    c.cov_inv_ = c.cov_.inverse();
    const int n = static_cast<int>(mean.size());
    c.norm_ = std::pow(2.0 * pi, -0.5 * n) / std::sqrt(c.cov_.determinant());
    c.weight_ = weight;
    return c;
  }

  static Component box(const Vec& center, const Vec& half_widths, double weight) {
    require(center.size() == half_widths.size(), "box: dimension mismatch");
    require(half_widths.minCoeff() > 0.0, "box: half widths must be positive");
    Component c;
    c.kind_ = ComponentKind::box;
    c.center_ = center;
    c.half_ = half_widths;
    c.weight_ = weight;
    return c;
  }

  static Component ball(const Vec& center, double radius, double weight) {
    require(radius > 0.0, "ball: radius must be positive");
    Component c;
    c.kind_ = ComponentKind::ball;
    c.center_ = center;
    c.radius_ = radius;
    c.weight_ = weight;
    return c;
  }

  ComponentKind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(center_.size()); }
  const Vec& center() const { return center_; }
  const Mat& covariance() const { return cov_; }
  const Vec& half_widths() const { return half_; }
  double radius() const { return radius_; }
  double weight() const { return weight_; }

  // Integral of the unweighted primitive.
  double primitive_mass() const {
    switch (kind_) {
      case ComponentKind::gaussian: return 1.0;
      case ComponentKind::box: return (2.0 * half_).prod();
      case ComponentKind::ball: return ball_volume(dimension()) * std::pow(radius_, dimension());
    }
    return 0.0;
  }

  double mass() const { return weight_ * primitive_mass(); }

  double density(const Vec& v) const {
    switch (kind_) {
      case ComponentKind::gaussian: {
        Vec y = v - center_;
        return weight_ * norm_ * std::exp(-0.5 * y.dot(cov_inv_ * y));
      }
      case ComponentKind::box:
        for (int i = 0; i < dimension(); ++i)
          if (!(std::abs(v(i) - center_(i)) < half_(i))) return 0.0;
        return weight_;
      case ComponentKind::ball: return (v - center_).squaredNorm() < radius_ * radius_ ? weight_ : 0.0;
    }
    return 0.0;
  }

  // Raw second moment integral of v v^T against this component.
  Mat second_moment() const {
    const int n = dimension();
    Mat S(n, n);
    switch (kind_) {
      case ComponentKind::gaussian: S = cov_ + center_ * center_.transpose(); break;
      case ComponentKind::box: {
        S = center_ * center_.transpose();
        for (int i = 0; i < n; ++i) S(i, i) += half_(i) * half_(i) / 3.0;
        break;
      }
      case ComponentKind::ball:
        S = center_ * center_.transpose() + Mat::Identity(n, n) * (radius_ * radius_ / (n + 2.0));
        break;
    }
    return mass() * S;
  }

  LineRestriction restrict_to_line(const Vec& x0, const Vec& d) const {
    LineRestriction r;
    switch (kind_) {
      case ComponentKind::gaussian: {
        Vec y = x0 - center_;
        Vec Sd = cov_inv_ * d;
        double alpha = d.dot(Sd);
        double beta = y.dot(Sd);
        double gamma = y.dot(cov_inv_ * y);
        r.gaussian = true;
        r.mean = -beta / alpha;
        r.sigma = 1.0 / std::sqrt(alpha);
        r.amp = weight_ * norm_ * std::exp(-0.5 * (gamma - beta * beta / alpha));
        return r;
      }
      case ComponentKind::box: {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (int i = 0; i < dimension(); ++i) {
          double a = x0(i) - center_(i);
          if (d(i) == 0.0) {
            if (!(std::abs(a) < half_(i))) return r;
            continue;
          }
          double t1 = (-half_(i) - a) / d(i), t2 = (half_(i) - a) / d(i);
          lo = std::max(lo, std::min(t1, t2));
          hi = std::min(hi, std::max(t1, t2));
        }
        if (hi > lo) {
          r.lo = lo;
          r.hi = hi;
          r.amp = weight_;
        }
        return r;
      }
      case ComponentKind::ball: {
        Vec y = x0 - center_;
        double b = y.dot(d);
        double disc = b * b - (y.squaredNorm() - radius_ * radius_);
        if (disc > 0.0) {
          double sq = std::sqrt(disc);
          r.lo = -b - sq;
          r.hi = -b + sq;
          r.amp = weight_;
        }
        return r;
      }
    }
    return r;
  }

  // Per-axis interval beyond which the density is negligible.
  void bounding_box(double tails, Vec& lo, Vec& hi) const {
    switch (kind_) {
      case ComponentKind::gaussian: {
        Vec s = cov_.diagonal().cwiseSqrt();
        lo = center_ - tails * s;
        hi = center_ + tails * s;
        return;
      }
      case ComponentKind::box: lo = center_ - half_; hi = center_ + half_; return;
      case ComponentKind::ball:
        lo = center_.array() - radius_;
        hi = center_.array() + radius_;
        return;
    }
  }

  // Map z in [-1,1]^n (scaled by tails for gaussians) to the component support, for
  // tensor-product integration of integrand * density over the component.
  // Returns the integral of phi(v) * density(v) over the component.
  template <class T, class Phi>
  T integrate_against(Phi&& phi, const Vec& singular_point, const QuadratureBudget& budget, double tails = 11.0) const {
    const int n = dimension();
    switch (kind_) {
      case ComponentKind::gaussian: {
        // v = mean + U diag(sigma) z with z standard normal.
        Vec zs = (eigvec_.transpose() * (singular_point - center_)).cwiseQuotient(sigmas_);
        const double c1 = 1.0 / std::sqrt(2.0 * pi);
        return tensor_integrate<T>(n, -tails * Vec::Ones(n), tails * Vec::Ones(n), zs, budget, [&](const Vec& z) {
                 Vec v = center_ + eigvec_ * sigmas_.cwiseProduct(z);
                 double w = std::pow(c1, n) * std::exp(-0.5 * z.squaredNorm());
                 return T(phi(v) * w);
               }) *
               weight_;
      }
      case ComponentKind::box:
        return tensor_integrate<T>(n, center_ - half_, center_ + half_, singular_point, budget,
                                   [&](const Vec& v) { return T(phi(v)); }) *
               weight_;
      case ComponentKind::ball: {
        // Nested: first coordinate range, then the remaining coordinates within the slice.
        return tensor_integrate_ball<T>(n, singular_point, budget, phi) * weight_;
      }
    }
    return T();
  }

 private:
  template <class T, class G>
  static T tensor_integrate(int n, const Vec& lo, const Vec& hi, const Vec& sing, const QuadratureBudget& budget, G&& g) {
    Vec v(n);
    auto level = [&](auto&& self, int k, const QuadratureBudget& b) -> T {
      auto fk = [&](double x) -> T {
        v(k) = x;
        if (k == n - 1) return g(v);
        return self(self, k + 1, b.inner(0.3));
      };
      return integrate_adaptive<T>(fk, breaks_within(lo(k), hi(k), {sing(k)}), b).value;
    };
    return level(level, 0, budget);
  }

  template <class T, class Phi>
  T tensor_integrate_ball(int n, const Vec& sing, const QuadratureBudget& budget, Phi& phi) const {
    Vec v(n);
    auto level = [&](auto&& self, int k, double rem2, const QuadratureBudget& b) -> T {
      double half = std::sqrt(std::max(rem2, 0.0));
      auto fk = [&](double x) -> T {
        v(k) = center_(k) + x;
        if (k == n - 1) return T(phi(v));
        return self(self, k + 1, rem2 - x * x, b.inner(0.3));
      };
      return integrate_adaptive<T>(fk, breaks_within(-half, half, {sing(k) - center_(k)}), b).value;
    };
    return level(level, 0, radius_ * radius_, budget);
  }

  ComponentKind kind_ = ComponentKind::gaussian;
  Vec center_;
  Mat cov_, cov_inv_, eigvec_;
  Vec sigmas_;
  Vec half_;
  double radius_ = 0.0;
  double weight_ = 1.0;
  double norm_ = 1.0;
};

class VelocityDistribution {
 public:
  VelocityDistribution() = default;
  explicit VelocityDistribution(int n) : n_(n) { require(n == 2 || n == 3, "dimension must be 2 or 3"); }

  VelocityDistribution& add(const Component& c) {
    require(c.dimension() == n_, "component dimension does not match distribution");
    require(c.weight() > 0.0 || c.kind() == ComponentKind::box,
            "only box correction components may carry a negative weight");
    comps_.push_back(c);
    if (c.weight() < 0.0) check_box_nonnegative();
    return *this;
  }

  int dimension() const { return n_; }
  const std::vector<Component>& components() const { return comps_; }
  bool empty() const { return comps_.empty(); }

  double density(const Vec& v) const {
    require(v.size() == n_, "density: dimension mismatch");
    double s = 0.0;
    for (auto& c : comps_) s += c.density(v);
    return std::max(s, 0.0);
  }

  double mass() const {
    double m = 0.0;
    for (auto& c : comps_) m += c.mass();
    return m;
  }

  // Axis-aligned region carrying all non-negligible mass.
  void bounding_box(Vec& lo, Vec& hi, double tails = 11.0) const {
    lo = Vec::Constant(n_, 0.0);
    hi = Vec::Constant(n_, 0.0);
    bool first = true;
    for (auto& c : comps_) {
      Vec l, h;
      c.bounding_box(tails, l, h);
      if (first) {
        lo = l;
        hi = h;
        first = false;
      } else {
        lo = lo.cwiseMin(l);
        hi = hi.cwiseMax(h);
      }
    }
  }

  // Radius of a ball around the origin that carries all non-negligible mass.
  double support_radius(double tails = 11.0) const {
    double r = 0.0;
    for (auto& c : comps_) {
      Vec l, h;
      c.bounding_box(tails, l, h);
      r = std::max(r, l.cwiseAbs().cwiseMax(h.cwiseAbs()).norm());
    }
    return r;
  }

  // Per-axis coordinates where the density or its derivatives jump.
  std::vector<double> axis_breaks(int axis) const {
    std::vector<double> out;
    for (auto& c : comps_) {
      switch (c.kind()) {
        case ComponentKind::gaussian: out.push_back(c.center()(axis)); break;
        case ComponentKind::box:
          out.push_back(c.center()(axis) - c.half_widths()(axis));
          out.push_back(c.center()(axis) + c.half_widths()(axis));
          break;
        case ComponentKind::ball:
          out.push_back(c.center()(axis) - c.radius());
          out.push_back(c.center()(axis));
          out.push_back(c.center()(axis) + c.radius());
          break;
      }
    }
    return out;
  }

  // Projections of component features onto direction u, used as quadrature breaks.
  std::vector<double> projected_breaks(const Vec& origin, const Vec& u) const {
    std::vector<double> out;
    for (auto& c : comps_) {
      double pc = (c.center() - origin).dot(u);
      switch (c.kind()) {
        case ComponentKind::gaussian: out.push_back(pc); break;
        case ComponentKind::ball:
          out.push_back(pc - c.radius());
          out.push_back(pc + c.radius());
          break;
        case ComponentKind::box: {
          const int corners = 1 << n_;
          for (int m = 0; m < corners; ++m) {
            Vec off(n_);
            for (int i = 0; i < n_; ++i) off(i) = ((m >> i) & 1) ? c.half_widths()(i) : -c.half_widths()(i);
            out.push_back(pc + off.dot(u));
          }
          break;
        }
      }
    }
    return out;
  }

  std::vector<LineRestriction> restrict_to_line(const Vec& x0, const Vec& d) const {
    std::vector<LineRestriction> out;
    out.reserve(comps_.size());
    for (auto& c : comps_) {
      auto r = c.restrict_to_line(x0, d);
      if (!r.empty()) out.push_back(r);
    }
    return out;
  }

  // Integral of phi(v) f(v) dv, summed over components (phi need not be smooth at sing).
  template <class T, class Phi>
  T integrate_against(Phi&& phi, const Vec& sing, const QuadratureBudget& budget) const {
    require(!comps_.empty(), "integral against an empty distribution");
    T acc = comps_[0].template integrate_against<T>(phi, sing, budget);
    for (size_t i = 1; i < comps_.size(); ++i) acc = acc + comps_[i].template integrate_against<T>(phi, sing, budget);
    return acc;
  }

 private:
  // Box mixtures are piecewise constant on the cells cut by all box faces; check every cell.
  void check_box_nonnegative() const {
    std::vector<std::vector<double>> cuts(n_);
    for (auto& c : comps_) {
      if (c.kind() != ComponentKind::box) continue;
      for (int i = 0; i < n_; ++i) {
        cuts[i].push_back(c.center()(i) - c.half_widths()(i));
        cuts[i].push_back(c.center()(i) + c.half_widths()(i));
      }
    }
    std::vector<std::vector<double>> mids(n_);
    for (int i = 0; i < n_; ++i) {
      std::sort(cuts[i].begin(), cuts[i].end());
      for (size_t k = 0; k + 1 < cuts[i].size(); ++k)
        if (cuts[i][k + 1] > cuts[i][k]) mids[i].push_back(0.5 * (cuts[i][k] + cuts[i][k + 1]));
    }
    std::vector<size_t> idx(n_, 0);
    for (;;) {
      Vec v(n_);
      for (int i = 0; i < n_; ++i) v(i) = mids[i][idx[i]];
      double s = 0.0;
      for (auto& c : comps_)
        if (c.kind() == ComponentKind::box) s += c.density(v);
      require(s >= -1e-12, "mixture density would be negative");
      int k = 0;
      while (k < n_ && ++idx[k] == mids[k].size()) idx[k++] = 0;
      if (k == n_) break;
    }
  }

  int n_ = 2;
  std::vector<Component> comps_;
};

// Weight functions and closed forms for line integrals.

// Integral of |t|^q over (a, b), q > -1.
inline double power_antiderivative_interval(double a, double b, double q) {
  if (b <= a) return 0.0;
  auto F = [q](double t) { return (t >= 0 ? 1.0 : -1.0) * std::pow(std::abs(t), q + 1.0) / (q + 1.0); };
  return F(b) - F(a);
}

// Integral of the restriction against |t|^q over (t0, t1).
inline double restriction_power_integral(const LineRestriction& r, double q, double t0, double t1,
                                         const QuadratureBudget& budget) {
  if (r.empty()) return 0.0;
  if (!r.gaussian) return r.amp * power_antiderivative_interval(std::max(r.lo, t0), std::min(r.hi, t1), q);
  double a = std::max(t0, r.support_lo()), b = std::min(t1, r.support_hi());
  if (b <= a) return 0.0;
  if (q == 0.0) {
    const double s2 = r.sigma * std::sqrt(2.0);
    return r.amp * r.sigma * std::sqrt(pi / 2.0) * (std::erf((b - r.mean) / s2) - std::erf((a - r.mean) / s2));
  }
  auto g = [&](double t) { return r(t) * std::pow(std::abs(t), q); };
  return integrate(g, breaks_within(a, b, {0.0, r.mean}), budget).value;
}

// Integral of the restriction against a general weight w(t) over (t0, t1).
template <class W>
double restriction_weighted_integral(const LineRestriction& r, W&& w, double t0, double t1,
                                     const std::vector<double>& extra_breaks, const QuadratureBudget& budget) {
  if (r.empty()) return 0.0;
  double a = std::max(t0, r.support_lo()), b = std::min(t1, r.support_hi());
  if (b <= a) return 0.0;
  std::vector<double> br = extra_breaks;
  if (r.gaussian) br.push_back(r.mean);
  if (!r.gaussian) {
    auto g = [&](double t) { return r.amp * w(t); };
    return integrate(g, breaks_within(a, b, br), budget).value;
  }
  auto g = [&](double t) { return r(t) * w(t); };
  return integrate(g, breaks_within(a, b, br), budget).value;
}

// Integral of f(x0 + t d) |t|^q over t in (t0, t1).
inline double line_power_integral(const VelocityDistribution& f, const Vec& x0, const Vec& d, double q,
                                  double t0, double t1, const QuadratureBudget& budget) {
  double s = 0.0;
  for (auto& r : f.restrict_to_line(x0, d)) s += restriction_power_integral(r, q, t0, t1, budget);
  return s;
}

template <class W>
double line_weighted_integral(const VelocityDistribution& f, const Vec& x0, const Vec& d, W&& w, double t0, double t1,
                              const std::vector<double>& extra_breaks, const QuadratureBudget& budget) {
  double s = 0.0;
  for (auto& r : f.restrict_to_line(x0, d)) s += restriction_weighted_integral(r, w, t0, t1, extra_breaks, budget);
  return s;
}

// Integral of f over the affine hyperplane {x0 + w : w . normal = 0} against |w|^q.
inline double hyperplane_power_integral(const VelocityDistribution& f, const Vec& x0, const Vec& normal, double q,
                                        const QuadratureBudget& budget) {
  const double inf = std::numeric_limits<double>::infinity();
  Mat B = complement_basis(normal);
  if (f.dimension() == 2) return line_power_integral(f, x0, B.col(0), q, -inf, inf, budget);
  // Polar coordinates in the plane: lines through x0 in direction u(phi), weight |t|^{q+1}.
  auto inner = [&](double phi) {
    Vec u = std::cos(phi) * B.col(0) + std::sin(phi) * B.col(1);
    return line_power_integral(f, x0, u, q + 1.0, -inf, inf, budget.inner());
  };
  return integrate(inner, 0.0, pi, budget).value;
}

// Mass of f on the affine hyperplane {w : w . u = offset} (u unit).
inline double hyperplane_mass(const VelocityDistribution& f, const Vec& u, double offset, const QuadratureBudget& budget) {
  const double inf = std::numeric_limits<double>::infinity();
  Vec x0 = offset * u;
  Mat B = complement_basis(u);
  if (f.dimension() == 2) return line_power_integral(f, x0, B.col(0), 0.0, -inf, inf, budget);
  double R = f.support_radius();
  auto inner = [&](double c) { return line_power_integral(f, x0 + c * B.col(0), B.col(1), 0.0, -inf, inf, budget.inner()); };
  return integrate(inner, breaks_within(-R, R, f.projected_breaks(x0, B.col(0))), budget).value;
}

// Generators.

inline VelocityDistribution standard_maxwellian(int n) {
  VelocityDistribution f(n);
  f.add(Component::gaussian(Vec::Zero(n), Mat::Identity(n, n), 1.0));
  return f;
}

inline VelocityDistribution squeezed_gaussian(double epsilon, const Vec& axis) {
  require(epsilon > 0.0 && epsilon <= 1.0, "squeezed_gaussian: epsilon must lie in (0, 1]");
  const int n = static_cast<int>(axis.size());
  Vec a = normalized(axis);
  Mat cov = epsilon * epsilon * Mat::Identity(n, n) + (1.0 - epsilon * epsilon) * a * a.transpose();
  VelocityDistribution f(n);
  f.add(Component::gaussian(Vec::Zero(n), cov, 1.0));
  return f;
}

inline VelocityDistribution counterexample_family(double R) {
  require(R > 1.0, "counterexample_family: R must exceed 1");
  const double r3 = std::pow(R, -3.0), r1 = 1.0 / R;
  VelocityDistribution f(2);
  f.add(Component::box(Vec::Zero(2), make_vec({r3, R}), 1.0));
  f.add(Component::box(Vec::Zero(2), make_vec({R, r3}), 1.0));
  f.add(Component::box(Vec::Zero(2), make_vec({r1, r1}), R * R));
  f.add(Component::box(Vec::Zero(2), make_vec({r3, r3}), -1.0));
  return f;
}

// Closed-form value of the counterexample density, for pointwise checks.
inline double counterexample_density(double R, const Vec& v) {
  const double r3 = std::pow(R, -3.0), r1 = 1.0 / R;
  bool a1 = std::abs(v(0)) < r3 && std::abs(v(1)) < R;
  bool a2 = std::abs(v(0)) < R && std::abs(v(1)) < r3;
  bool a = std::abs(v(0)) < r1 && std::abs(v(1)) < r1;
  return (a1 || a2 ? 1.0 : 0.0) + (a ? R * R : 0.0);
}

// JSON ingestion.

namespace detail {

inline Vec json_vec(const nlohmann::json& j, const std::string& field) {
  require(j.contains(field) && j.at(field).is_array(), "missing or non-array field '" + field + "'");
  const auto& a = j.at(field);
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

inline Mat json_mat(const nlohmann::json& j, const std::string& field, int n) {
  require(j.contains(field) && j.at(field).is_array(), "missing or non-array field '" + field + "'");
  const auto& a = j.at(field);
  require(static_cast<int>(a.size()) == n, "field '" + field + "' has wrong row count");
  Mat m(n, n);
  for (int r = 0; r < n; ++r) {
    require(a[r].is_array() && static_cast<int>(a[r].size()) == n, "field '" + field + "' has wrong column count");
    for (int c = 0; c < n; ++c) m(r, c) = a[r][c].get<double>();
  }
  return m;
}

}  // namespace detail

// Accepts either {"dimension", "components": [...]} or a generator
// {"generator": "maxwellian" | "squeezed_gaussian" | "counterexample", ...}.
inline VelocityDistribution distribution_from_json(const nlohmann::json& j) {
  require(j.is_object(), "distribution must be a JSON object");
  if (j.contains("generator")) {
    std::string g = j.at("generator").get<std::string>();
    int n = j.value("dimension", 2);
    if (g == "maxwellian") return standard_maxwellian(n);
    if (g == "squeezed_gaussian") {
      Vec axis = j.contains("axis") ? detail::json_vec(j, "axis") : unit_vector(n, 0);
      require(axis.size() == n, "squeezed_gaussian: axis dimension mismatch");
      return squeezed_gaussian(j.at("epsilon").get<double>(), axis);
    }
    if (g == "counterexample") {
      require(n == 2, "counterexample: only n = 2 is supported");
      return counterexample_family(j.at("R").get<double>());
    }
    throw DomainError("unknown distribution generator '" + g + "'");
  }
  require(j.contains("dimension"), "distribution: missing field 'dimension'");
  int n = j.at("dimension").get<int>();
  VelocityDistribution f(n);
  require(j.contains("components") && j.at("components").is_array(), "distribution: missing 'components' array");
  for (const auto& c : j.at("components")) {
    std::string kind = c.at("kind").get<std::string>();
    double w = c.value("weight", 1.0);
    require(w > 0.0, "component weights must be positive");
    if (kind == "gaussian") {
      Vec m = detail::json_vec(c, "mean");
      require(m.size() == n, "gaussian: mean dimension mismatch");
      Mat cov = c.contains("covariance") ? detail::json_mat(c, "covariance", n) : Mat(Mat::Identity(n, n));
      f.add(Component::gaussian(m, cov, w));
    } else if (kind == "box") {
      Vec ctr = detail::json_vec(c, "center"), hw = detail::json_vec(c, "half_widths");
      require(ctr.size() == n && hw.size() == n, "box: dimension mismatch");
      f.add(Component::box(ctr, hw, w));
    } else if (kind == "ball") {
      Vec ctr = detail::json_vec(c, "center");
      require(ctr.size() == n, "ball: dimension mismatch");
      f.add(Component::ball(ctr, c.at("radius").get<double>(), w));
    } else {
      throw DomainError("unknown component kind '" + kind + "'");
    }
  }
  require(f.mass() > 0.0, "distribution must have positive mass");
  return f;
}

enum class Normalization { plain, grazing };

struct KernelParams {
  int n = 2;
  double s = 0.5;
  double gamma = 0.0;
  Normalization normalization = Normalization::grazing;
  double q_reference = 4.0;

  void validate() const {
    require(n == 2 || n == 3, "kernel: n must be 2 or 3");
    require(s > 0.0 && s < 1.0, "kernel: s must lie in (0, 1)");
    require(gamma > -n, "kernel: gamma must exceed -n");
    require(q_reference > 2.0, "kernel: q_reference must exceed 2");
  }

  bool admissible() const { return gamma + 2 * s >= 0.0 && gamma + 2 * s <= q_reference; }

  double kappa() const { return normalization == Normalization::grazing ? 1.0 - s : 1.0; }

  // Exponent of |w| in the hyperplane density a(v; theta).
  double hyperplane_power() const { return gamma + 2 * s + 1.0; }
};

inline KernelParams kernel_params_from_json(const nlohmann::json& j) {
  KernelParams p;
  p.n = j.value("n", 2);
  p.s = j.value("s", 0.5);
  p.gamma = j.value("gamma", 0.0);
  std::string norm = j.value("normalization", std::string("grazing"));
  require(norm == "plain" || norm == "grazing", "kernel: normalization must be 'plain' or 'grazing'");
  p.normalization = norm == "plain" ? Normalization::plain : Normalization::grazing;
  p.q_reference = j.value("q_reference", 4.0);
  p.validate();
  return p;
}

}  // namespace kinver
