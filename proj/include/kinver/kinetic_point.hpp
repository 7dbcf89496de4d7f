#pragma once

#include "kinver/linalg.hpp"

#include <cmath>

namespace kinver {

struct KineticPoint {
  double t = 0.0;
  Vec x;
  Vec v;

  KineticPoint() = default;
  KineticPoint(double t_, Vec x_, Vec v_) : t(t_), x(std::move(x_)), v(std::move(v_)) {
    require(x.size() == v.size(), "kinetic point: x and v dimensions differ");
  }
  static KineticPoint origin(int n) { return {0.0, Vec::Zero(n), Vec::Zero(n)}; }
  int dimension() const { return static_cast<int>(v.size()); }
};

// Q_r(z0): t0 - r^{2s} < t <= t0, |x - x0 - (t - t0) v0| < r^{1+2s}, |v - v0| < r.
inline bool cylinder_contains(const KineticPoint& z0, double r, double s, const KineticPoint& z) {
  require(r > 0.0, "cylinder radius must be positive");
  require(z.dimension() == z0.dimension(), "kinetic point dimension mismatch");
  if (!(z.t > z0.t - std::pow(r, 2.0 * s) && z.t <= z0.t)) return false;
  if (!((z.x - z0.x - (z.t - z0.t) * z0.v).norm() < std::pow(r, 1.0 + 2.0 * s))) return false;
  return (z.v - z0.v).norm() < r;
}

}  // namespace kinver
