#pragma once

#include "kinver/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace kinver {

struct QuadratureBudget {
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  long max_evals = 400000;
  double truncation_radius = 12.0;

  void validate() const {
    require(rel_tol > 0 && abs_tol > 0, "quadrature tolerances must be positive");
    require(max_evals >= 1, "max_evals must be at least 1");
    require(truncation_radius > 0, "truncation_radius must be positive");
  }

  // Budget for an inner integral of a nested rule.
  QuadratureBudget inner(double factor = 0.1) const {
    QuadratureBudget b = *this;
    b.rel_tol = std::max(rel_tol * factor, 1e-14);
    b.abs_tol = abs_tol * factor;
    return b;
  }

  QuadratureBudget with_rel(double r) const {
    QuadratureBudget b = *this;
    b.rel_tol = r;
    return b;
  }
};

class QuadratureFailure : public std::runtime_error {
 public:
  QuadratureFailure(const std::string& what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}
  double estimate() const { return estimate_; }
  double error() const { return error_; }

 private:
  double estimate_;
  double error_;
};

template <class T>
struct QuadResult {
  T value;
  double error = 0.0;
  long evals = 0;
};

namespace detail {

inline double qnorm(double x) { return std::abs(x); }

template <class Derived>
double qnorm(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double first_scalar(double x) { return x; }

template <class Derived>
double first_scalar(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m(0);
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool frozen;
};

template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  T fc = f(c);
  T resk = fc * kWgk[7];
  T resg = fc * kWg[3];
  T fv[15];
  fv[7] = fc;
  for (int j = 0; j < 7; ++j) {
    double dx = h * kXgk[j];
    T f1 = f(c - dx);
    T f2 = f(c + dx);
    fv[j] = f1;
    fv[14 - j] = f2;
    resk = resk + (f1 + f2) * kWgk[j];
    if (j % 2 == 1) resg = resg + (f1 + f2) * kWg[j / 2];
  }
  T mean = resk * 0.5;
  double resasc = kWgk[7] * qnorm(fc - mean);
  double resabs = kWgk[7] * qnorm(fc);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (qnorm(fv[j] - mean) + qnorm(fv[14 - j] - mean));
    resabs += kWgk[j] * (qnorm(fv[j]) + qnorm(fv[14 - j]));
  }
  double ah = std::abs(h);
  resasc *= ah;
  resabs *= ah;
  double err = qnorm(resk - resg) * ah;
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return Segment<T>{a, b, resk * h, err, false};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration over consecutive break intervals.
// T may be double or a fixed-size-capable Eigen matrix type.
template <class T, class F>
QuadResult<T> integrate_adaptive(F&& f, const std::vector<double>& breaks, const QuadratureBudget& budget) {
  require(breaks.size() >= 2, "integration needs at least one interval");
  std::vector<double> pts;
  for (double x : breaks) {
    if (pts.empty() || x > pts.back()) pts.push_back(x);
  }
  std::vector<detail::Segment<T>> segs;
  long evals = 0;
  if (pts.size() < 2) {
    T z = f(pts.front()) * 0.0;
    return QuadResult<T>{z, 0.0, 1};
  }
  using Entry = std::pair<double, size_t>;
  std::priority_queue<Entry> heap;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    segs.push_back(detail::gk15<T>(f, pts[i], pts[i + 1]));
    heap.push({segs.back().error, segs.size() - 1});
    evals += 15;
  }
  // Exact sum in positional order, used for the returned value.
  auto ordered_total = [&]() {
    std::vector<size_t> idx(segs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return segs[x].a < segs[y].a; });
    T s = segs[idx[0]].value;
    for (size_t i = 1; i < idx.size(); ++i) s = s + segs[idx[i]].value;
    double e = 0.0;
    for (size_t i : idx) e += segs[i].error;
    return std::make_pair(s, e);
  };
  T sum = segs[0].value;
  for (size_t i = 1; i < segs.size(); ++i) sum = sum + segs[i].value;
  double err = 0.0, frozen_err = 0.0;
  for (auto& sg : segs) err += sg.error;
  for (;;) {
    double tol = std::max(budget.abs_tol, budget.rel_tol * detail::qnorm(sum));
    if (err <= tol || heap.empty() || frozen_err > tol) {
      auto [s, e] = ordered_total();
      return QuadResult<T>{s, e, evals};
    }
    size_t worst = heap.top().second;
    heap.pop();
    auto seg = segs[worst];
    double mid = 0.5 * (seg.a + seg.b);
    double width = seg.b - seg.a;
    if (width <= 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(seg.a) + std::abs(seg.b) + 1e-300)) {
      // Round-off resolution reached in this interval.
      segs[worst].frozen = true;
      frozen_err += seg.error;
      continue;
    }
    if (evals + 30 > budget.max_evals) {
      auto [s, e] = ordered_total();
      std::ostringstream os;
      os << "quadrature budget exhausted after " << evals << " evaluations (estimate "
         << detail::first_scalar(s) << ", error " << e << ", tolerance " << tol << ")";
      throw QuadratureFailure(os.str(), detail::first_scalar(s), e);
    }
    auto left = detail::gk15<T>(f, seg.a, mid);
    auto right = detail::gk15<T>(f, mid, seg.b);
    evals += 30;
    sum = sum - seg.value + left.value + right.value;
    err += left.error + right.error - seg.error;
    segs[worst] = left;
    segs.push_back(right);
    heap.push({left.error, worst});
    heap.push({right.error, segs.size() - 1});
  }
}

template <class F>
QuadResult<double> integrate(F&& f, double a, double b, const QuadratureBudget& budget) {
  return integrate_adaptive<double>(std::forward<F>(f), std::vector<double>{a, b}, budget);
}

template <class F>
QuadResult<double> integrate(F&& f, const std::vector<double>& breaks, const QuadratureBudget& budget) {
  return integrate_adaptive<double>(std::forward<F>(f), breaks, budget);
}

// Sorted break list on [a, b] including interior points that fall strictly inside.
inline std::vector<double> breaks_within(double a, double b, const std::vector<double>& interior) {
  std::vector<double> out{a};
  std::vector<double> in = interior;
  std::sort(in.begin(), in.end());
  for (double x : in)
    if (x > a && x < b) out.push_back(x);
  out.push_back(b);
  return out;
}

// Integral of rho^alpha * phi(rho) over [0, b] with alpha > -1.
// For alpha < 0 the substitution u = rho^(alpha+1) removes the endpoint singularity.
template <class F>
QuadResult<double> integrate_power_weight(F&& phi, double alpha, double b, const QuadratureBudget& budget) {
  require(alpha > -1.0, "power weight must be integrable at 0");
  if (b <= 0.0) return {0.0, 0.0, 0};
  if (alpha < 0.0) {
    const double k = alpha + 1.0;
    auto g = [&](double u) { return phi(std::pow(u, 1.0 / k)) / k; };
    return integrate(g, 0.0, std::pow(b, k), budget);
  }
  auto g = [&](double r) { return std::pow(r, alpha) * phi(r); };
  return integrate(g, 0.0, b, budget);
}

// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double z = std::cos(pi * (i + 0.75) / (m + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= m; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = m * (z * p1 - p2) / (z * z - 1.0);
      double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[m - 1 - i] = z;
    w[i] = w[m - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
}

}  // namespace kinver
