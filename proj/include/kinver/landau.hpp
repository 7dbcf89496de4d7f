#pragma once

#include "kinver/dist_model.hpp"
#include "kinver/frame_transform.hpp"
#include "kinver/linalg.hpp"
#include "kinver/parallel.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace kinver {

struct LandauCoefficients {
  Mat A;
  Vec b;
  double c = 0.0;
};

namespace detail {

template <int N>
LandauCoefficients landau_fixed(const VelocityDistribution& f, double gamma, const Vec& v,
                                const QuadratureBudget& budget) {
  using V = Eigen::Matrix<double, N, 1>;
  using M = Eigen::Matrix<double, N, N>;
  // Packs A (N*N), b (N) and c into one vector integrand.
  using P = Eigen::Matrix<double, N * N + N + 1, 1>;
  V vv = v.head<N>();
  P tot = f.integrate_against<P>(
      [&](const Vec& u) -> P {
        V w = vv - u.head<N>();
        double r2 = w.squaredNorm();
        P out = P::Zero();
        if (r2 == 0.0) return out;
        double r = std::sqrt(r2);
        double rg = std::pow(r, gamma);
        M A = rg * (r2 * M::Identity() - w * w.transpose());
        out.template head<N * N>() = Eigen::Map<const Eigen::Matrix<double, N * N, 1>>(A.data());
        out.template segment<N>(N * N) = rg * w;
        out(N * N + N) = rg;
        return out;
      },
      v, budget);
  LandauCoefficients L;
  M A = Eigen::Map<const M>(tot.template head<N * N>().data());
  L.A = Mat(0.5 * (A + A.transpose()));
  L.b = Vec(tot.template segment<N>(N * N));
  L.c = tot(N * N + N);
  return L;
}

}  // namespace detail

// A = int (I - w w^T/|w|^2)|w|^{gamma+2} f(v - w), b = int w|w|^gamma f(v - w), c = int |w|^gamma f(v - w).
inline LandauCoefficients landau_coefficients(const VelocityDistribution& f, double gamma, const Vec& v,
                                              const QuadratureBudget& budget) {
  const int n = f.dimension();
  require(gamma > -n, "Landau coefficients need gamma > -n");
  require(v.size() == n, "velocity dimension mismatch");
  if (f.empty()) return {Mat::Zero(n, n), Vec::Zero(n), 0.0};
  return n == 2 ? detail::landau_fixed<2>(f, gamma, v, budget) : detail::landau_fixed<3>(f, gamma, v, budget);
}

inline Mat landau_A(const VelocityDistribution& f, double gamma, const Vec& v, const QuadratureBudget& budget) {
  return landau_coefficients(f, gamma, v, budget).A;
}

inline std::pair<Vec, double> landau_b_c(const VelocityDistribution& f, double gamma, const Vec& v,
                                         const QuadratureBudget& budget) {
  auto L = landau_coefficients(f, gamma, v, budget);
  return {L.b, L.c};
}

// far: A~ = |v0|^{-gamma-2} tau0^{-1} A(v~) tau0^{-1}, b~ = |v0|^{-gamma-2} tau0^{-1} b(v~),
// c~ = |v0|^{-gamma-2} c(v~); near: the coefficients at v0 + v.
inline LandauCoefficients transformed_landau(const VelocityDistribution& f, double gamma, const FrameTransform& F,
                                             const Vec& v, const QuadratureBudget& budget) {
  auto L = landau_coefficients(f, gamma, F.apply_velocity(v), budget);
  if (F.regime() == Regime::near) return L;
  const double k = std::pow(F.v0().norm(), -gamma - 2.0);
  const Mat& Ti = F.tau0_inv();
  return {Mat(k * Ti * L.A * Ti), Vec(k * Ti * L.b), k * L.c};
}

struct LandauScanRow {
  Vec v0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  double b_norm = 0.0;
  double c_value = 0.0;
};

struct LandauScan {
  std::vector<LandauScanRow> rows;
  double lambda = 0.0;      // min over the scan of e.A~e
  double Lambda = 0.0;      // max over the scan of e.A~e
  double ratio = 0.0;       // max/min across v0 of the per-v0 minimum
  double b_max = 0.0;
  double c_scaled_max = 0.0;  // max |c~|(1 + |v0|)^2
  double c_scaled_ratio = 0.0;
};

// Uniform ellipticity of the transformed matrix over v in the grid (inside B_2) and all unit e.
inline LandauScan landau_ellipticity_scan(const VelocityDistribution& f, double gamma, const std::vector<Vec>& v0_list,
                                          const std::vector<Vec>& v_grid, const QuadratureBudget& budget,
                                          int jobs = 1) {
  require(gamma >= 0.0, "the Landau ellipticity scan assumes gamma >= 0");
  require(!v0_list.empty() && !v_grid.empty(), "Landau scan grids must be nonempty");
  for (auto& v : v_grid) require(v.norm() < 2.0 + 1e-12, "v grid must lie in B_2");
  LandauScan S;
  S.lambda = std::numeric_limits<double>::infinity();
  std::vector<double> mins, cs;
  for (auto& v0 : v0_list) {
    FrameTransform F(KineticPoint(0.0, Vec::Zero(v0.size()), v0), gamma, 0.0);
    auto Ls = parallel_map<LandauCoefficients>(v_grid.size(), jobs,
                                               [&](size_t i) { return transformed_landau(f, gamma, F, v_grid[i], budget); });
    LandauScanRow row{v0, std::numeric_limits<double>::infinity(), 0.0, 0.0, 0.0};
    for (auto& L : Ls) {
      Vec ev = symmetric_eigenvalues(L.A);
      row.min_eig = std::min(row.min_eig, ev(0));
      row.max_eig = std::max(row.max_eig, ev(ev.size() - 1));
      row.b_norm = std::max(row.b_norm, L.b.norm());
      row.c_value = std::max(row.c_value, std::abs(L.c));
    }
    S.lambda = std::min(S.lambda, row.min_eig);
    S.Lambda = std::max(S.Lambda, row.max_eig);
    S.b_max = std::max(S.b_max, row.b_norm);
    double cs_v = row.c_value * std::pow(1.0 + v0.norm(), 2.0);
    S.c_scaled_max = std::max(S.c_scaled_max, cs_v);
    mins.push_back(row.min_eig);
    cs.push_back(cs_v);
    S.rows.push_back(row);
  }
  S.ratio = max_over_min(mins);
  S.c_scaled_ratio = max_over_min(cs);
  return S;
}

struct DirectionSplit {
  double along = 0.0;    // e parallel to v
  double across = 0.0;   // e perpendicular to v
  double ratio = 0.0;    // across / along
  double predicted = 0.0;  // (1 + |v|)^2 / 4
};

inline DirectionSplit landau_direction_split(const VelocityDistribution& f, double gamma, const Vec& v,
                                             const QuadratureBudget& budget) {
  require(v.norm() > 0.0, "direction split needs v != 0");
  Mat A = landau_A(f, gamma, v, budget);
  Vec e = normalized(v);
  Vec p = complement_basis(e).col(0);
  DirectionSplit d;
  d.along = e.dot(A * e);
  d.across = p.dot(A * p);
  d.ratio = d.across / d.along;
  d.predicted = std::pow(1.0 + v.norm(), 2.0) / 4.0;
  return d;
}

inline std::string landau_scan_csv(const LandauScan& s) {
  std::ostringstream os;
  os.precision(12);
  os << "v0_norm,min_eig,max_eig,b_norm,c_value\n";
  for (auto& r : s.rows) os << r.v0.norm() << "," << r.min_eig << "," << r.max_eig << "," << r.b_norm << "," << r.c_value << "\n";
  return os.str();
}

}  // namespace kinver
