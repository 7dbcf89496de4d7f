#pragma once

#include "kinver/boltzmann_kernel.hpp"
#include "kinver/dist_model.hpp"
#include "kinver/frame_transform.hpp"
#include "kinver/kinetic_geometry.hpp"
#include "kinver/mass_geometry.hpp"
#include "kinver/observables.hpp"
#include "kinver/quadrature.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace kinver {

struct NamedIdentity {
  std::string name;
  int n = 2;
  bool ellipsoid = false;
  IdentityCheck check;
};

// Weighted change-of-variables identity on fixed integrands, plus its ellipsoid form.
inline std::vector<NamedIdentity> identity_suite(const QuadratureBudget& budget, int jobs = 1) {
  std::vector<NamedIdentity> out;
  auto plain = [&](const std::string& name, int n, auto g) {
    out.push_back({name, n, false, verify_weighted_trafo(g, n, budget, jobs)});
  };
  plain("gaussian_n3", 3, [](const Vec& z, const Vec&) { return std::exp(-z.squaredNorm()); });
  plain("gaussian_n2", 2, [](const Vec& z, const Vec&) { return std::exp(-z.squaredNorm()); });
  plain("shifted_angular_n2", 2, [](const Vec& z, const Vec& th) {
    return std::exp(-(z - make_vec({0.5, -0.3})).squaredNorm()) * (1.0 + th(0) * th(0));
  });
  plain("rational_n2", 2, [](const Vec& z, const Vec&) { return std::pow(1.0 + z.squaredNorm(), -3.0); });
  plain("angular_n3", 3, [](const Vec& z, const Vec& th) {
    return std::exp(-0.5 * z.squaredNorm()) * std::pow(th.dot(normalized(make_vec({1, 1, 0}))), 2);
  });
  plain("shifted_n3", 3, [](const Vec& z, const Vec& th) {
    return std::exp(-(z - make_vec({0.3, 0, 0.4})).squaredNorm()) * (1.5 + th(2));
  });
  auto ell = [&](const std::string& name, int n, const Ellipsoid& E, auto g) {
    out.push_back({name, n, true, verify_weighted_trafo_ellipsoid(g, E, n, budget, jobs)});
  };
  ell("ellipsoid_gaussian_n2", 2, Ellipsoid{unit_vector(2, 0), 0.5, 1.0},
      [](const Vec& w, const Vec&) { return std::exp(-w.squaredNorm()); });
  ell("ellipsoid_linear_n2", 2, Ellipsoid{normalized(make_vec({1, 1})), 1.0, 0.3},
      [](const Vec& w, const Vec& h) { return std::exp(-(w - make_vec({0.2, 0.1})).squaredNorm()) * (1.0 + h(0)); });
  ell("ellipsoid_radial_n2", 2, Ellipsoid{unit_vector(2, 1), 0.8, 0.4},
      [](const Vec& w, const Vec& h) { return std::exp(-w.squaredNorm()) * h.norm(); });
  return out;
}

struct CounterexampleRow {
  double R = 0.0;
  double mass = 0.0;
  double tube_mass = 0.0;
  double tube_bound = 0.0;  // 4 R^{-2}
  double M3 = 0.0;
};

struct CounterexampleSweep {
  std::vector<CounterexampleRow> rows;
  double slope = 0.0;  // least-squares slope of log M_3 against log R
  bool mass_in_range = true;
  bool tube_bounded = true;
  bool slope_ok = false;
  bool pass() const { return mass_in_range && tube_bounded && slope_ok; }
};

// Tube L = R e_2 of radius 0.5 over the whole plane; mass window [4, 8]; slope q - 2 = 1 within 10%.
inline CounterexampleSweep counterexample_sweep(const std::vector<double>& R_list, const QuadratureBudget& budget,
                                                double tube_tol = 0.05) {
  require(R_list.size() >= 2, "counterexample sweep needs at least two R values");
  CounterexampleSweep S;
  LineSpec L(Vec::Zero(2), unit_vector(2, 1));
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double R : R_list) {
    auto f = counterexample_family(R);
    CounterexampleRow row;
    row.R = R;
    row.mass = f.mass();
    row.tube_mass = tube_complement_mass(f, L, 0.5, std::numeric_limits<double>::infinity(), budget);
    row.tube_bound = 4.0 / (R * R);
    row.M3 = moment(f, 3.0, budget);
    S.mass_in_range = S.mass_in_range && row.mass >= 4.0 && row.mass <= 8.0;
    S.tube_bounded = S.tube_bounded && row.tube_mass <= row.tube_bound * (1.0 + tube_tol);
    double x = std::log(R), y = std::log(row.M3);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    S.rows.push_back(row);
  }
  const double m = static_cast<double>(R_list.size());
  S.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  S.slope_ok = std::abs(S.slope - 1.0) <= 0.1;
  return S;
}

struct CoercivityFit {
  std::vector<CoercivityEnergies> energies;
  std::vector<double> ratios;  // E_K / E_aniso per test function
  double lambda = 0.0;         // min ratio
  double spread = 0.0;         // max/min ratio
  bool pass() const { return lambda > 0.0 && spread <= 2.0; }
};

inline CoercivityFit coercivity_fit(const VelocityDistribution& f, const KernelParams& p, const CoercivityGrid& grid,
                                    const QuadratureBudget& budget, int jobs = 1) {
  AngularTable T(f, p, grid, budget, jobs);
  CoercivityFit fit;
  for (auto& g : coercivity_test_family()) {
    auto E = coercivity_energies(T, p, g);
    fit.energies.push_back(E);
    fit.ratios.push_back(E.E_aniso > 0.0 ? E.E_K / E.E_aniso : 0.0);
  }
  fit.lambda = *std::min_element(fit.ratios.begin(), fit.ratios.end());
  fit.spread = fit.lambda > 0.0 ? max_over_min(fit.ratios) : std::numeric_limits<double>::infinity();
  return fit;
}

struct GrazingBand {
  Condition condition = Condition::upper;
  std::vector<double> s_list;
  std::vector<double> lambda;
  std::vector<double> Lambda;
  double lambda_band = std::numeric_limits<double>::quiet_NaN();  // max/min across s
  double Lambda_band = std::numeric_limits<double>::quiet_NaN();
};

// lambda_meas and Lambda_meas of one condition across an s sweep.
inline GrazingBand grazing_band(const VelocityDistribution& f, KernelParams p, Condition c,
                                const std::vector<double>& s_list, const std::vector<double>& r_list,
                                const std::vector<Vec>& v_grid, const QuadratureBudget& budget, int jobs = 1) {
  GrazingBand B;
  B.condition = c;
  B.s_list = s_list;
  for (double s : s_list) {
    p.s = s;
    p.validate();
    EllipticityReport rep;
    if (c == Condition::upper) rep = condition_upper_bound(f, p, r_list, v_grid, budget, jobs);
    else if (c == Condition::nondeg) rep = condition_nondegeneracy(f, p, r_list, v_grid, budget, jobs);
    else if (c == Condition::cancel) rep = condition_cancellation(f, p, r_list, v_grid, budget, jobs);
    else throw DomainError("grazing bands cover conditions (i), (ii) and (iv)");
    B.lambda.push_back(rep.lambda_meas);
    B.Lambda.push_back(rep.Lambda_meas);
  }
  auto band = [](const std::vector<double>& xs) {
    std::vector<double> ok;
    for (double x : xs)
      if (!std::isnan(x)) ok.push_back(x);
    return ok.empty() ? std::numeric_limits<double>::quiet_NaN() : max_over_min(ok);
  };
  B.lambda_band = band(B.lambda);
  B.Lambda_band = band(B.Lambda);
  return B;
}

// Fields for the interpolation check: a bump in v, a weighted bump in (t,x), and a travelling Gaussian.
inline std::vector<std::pair<std::string, KineticField>> interpolation_test_fields(double p) {
  return {
      {"bump_v", [](const KineticPoint& z) { return bump(z.v.norm() / 2.0); }},
      {"weighted_bump",
       [p](const KineticPoint& z) {
         return std::pow(1.0 + z.v.norm(), -p) * bump((z.t - 2.0) / 1.5) * bump(z.x.norm() / 2.0);
       }},
      {"maxwellian_wave",
       [](const KineticPoint& z) { return std::exp(-0.5 * z.v.squaredNorm()) * (1.0 + 0.5 * std::sin(z.x(0) - z.t)); }},
  };
}

inline std::string counterexample_csv(const CounterexampleSweep& S) {
  std::ostringstream os;
  os.precision(12);
  os << "R,mass,tube_mass,tube_bound,M3\n";
  for (auto& r : S.rows) os << r.R << "," << r.mass << "," << r.tube_mass << "," << r.tube_bound << "," << r.M3 << "\n";
  return os.str();
}

inline std::string identities_csv(const std::vector<NamedIdentity>& ids) {
  std::ostringstream os;
  os.precision(12);
  os << "name,n,ellipsoid,lhs,rhs,rel_err\n";
  for (auto& i : ids)
    os << i.name << "," << i.n << "," << (i.ellipsoid ? 1 : 0) << "," << i.check.lhs << "," << i.check.rhs << ","
       << i.check.rel_err << "\n";
  return os.str();
}

}  // namespace kinver
