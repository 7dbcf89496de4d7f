#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinver {

// Heap-free storage for n <= 3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr double pi = 3.14159265358979323846;

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

inline Vec unit_vector(int n, int i) {
  Vec e = Vec::Zero(n);
  e(i) = 1.0;
  return e;
}

inline Vec make_vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Vec normalized(const Vec& v) {
  double nv = v.norm();
  require(nv > 0.0, "zero vector cannot be normalized");
  return v / nv;
}

// Columns form an orthonormal basis of u-perp (u need not be unit).
inline Mat complement_basis(const Vec& u) {
  const int n = static_cast<int>(u.size());
  require(n == 2 || n == 3, "dimension must be 2 or 3");
  Vec d = normalized(u);
  Mat B(n, n - 1);
  if (n == 2) {
    B(0, 0) = -d(1);
    B(1, 0) = d(0);
    return B;
  }
  Eigen::Vector3d a(d(0), d(1), d(2));
  int k = 0;
  if (std::abs(a(1)) < std::abs(a(k))) k = 1;
  if (std::abs(a(2)) < std::abs(a(k))) k = 2;
  Eigen::Vector3d ek = Eigen::Vector3d::Unit(k);
  Eigen::Vector3d b1 = (ek - ek.dot(a) * a).normalized();
  Eigen::Vector3d b2 = a.cross(b1);
  for (int i = 0; i < 3; ++i) {
    B(i, 0) = b1(i);
    B(i, 1) = b2(i);
  }
  return B;
}

// |S^{m-1}|, the surface area of the unit sphere in R^m (m >= 1).
inline double sphere_area(int m) {
  return 2.0 * std::pow(pi, 0.5 * m) / std::tgamma(0.5 * m);
}

inline double ball_volume(int m) { return sphere_area(m) / m; }

// sin^2 of the angle between z and e.
inline double sin2_angle(const Vec& z, const Vec& e) {
  double zz = z.squaredNorm(), ee = e.squaredNorm();
  if (zz == 0.0 || ee == 0.0) return 0.0;
  double c = z.dot(e);
  return std::max(0.0, 1.0 - c * c / (zz * ee));
}

// Point on the unit circle (n=2) or unit sphere (n=3, polar angle from e3).
inline Vec circle_point(double phi) { return make_vec({std::cos(phi), std::sin(phi)}); }

inline Vec sphere_point(double theta, double phi) {
  double st = std::sin(theta);
  return make_vec({st * std::cos(phi), st * std::sin(phi), std::cos(theta)});
}

// Eigenvalues of a symmetric matrix in ascending order.
inline Vec symmetric_eigenvalues(const Mat& P) {
  Eigen::SelfAdjointEigenSolver<Mat> es(P, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline bool is_symmetric(const Mat& P, double tol = 1e-12) {
  if (P.rows() != P.cols()) return false;
  double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  return (P - P.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

// Icosahedral geodesic grid with 10*4^k+2 vertices (k=4 gives 2562).
inline std::vector<Vec> icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> pts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : pts) p.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::vector<std::array<int, 3>> next;
    std::map<std::pair<int, int>, int> cache;
    auto mid = [&](int a, int b) {
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
      pts.push_back((pts[a] + pts[b]).normalized());
      int idx = static_cast<int>(pts.size()) - 1;
      cache.emplace(key, idx);
      return idx;
    };
    for (auto& f : faces) {
      int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  std::vector<Vec> out;
  out.reserve(pts.size());
  for (auto& p : pts) out.push_back(make_vec({p(0), p(1), p(2)}));
  return out;
}

}  // namespace kinver
