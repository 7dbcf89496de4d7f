#include <catch_amalgamated.hpp>

#include "kinver/boltzmann_kernel.hpp"

#include <random>

using namespace kinver;
using Catch::Approx;

namespace {

QuadratureBudget kb(double rel = 1e-10) {
  QuadratureBudget b;
  b.rel_tol = rel;
  b.truncation_radius = 12.0;
  b.max_evals = 4000000;
  return b;
}

KernelParams params(int n, double s, double gamma, Normalization norm = Normalization::plain) {
  KernelParams p;
  p.n = n;
  p.s = s;
  p.gamma = gamma;
  p.normalization = norm;
  return p;
}

const double a_max = 1.0 / std::sqrt(2.0 * pi);

}  // namespace

TEST_CASE("exact kernel against a line oracle") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0, Normalization::grazing);
  double got = kernel_exact(f, p, Vec::Zero(2), unit_vector(2, 0), kb());
  auto b = kb(1e-12);
  double line = integrate([](double t) { return std::exp(-0.5 * t * t) * (1.0 + t * t) / (2 * pi); }, -40.0, 40.0, b).value;
  CHECK(got == Approx(2.0 * 0.5 * line).epsilon(1e-8));
  CHECK(got == Approx(2.0 / std::sqrt(2 * pi)).epsilon(1e-8));
  CHECK_THROWS_AS(kernel_exact(f, p, Vec::Zero(2), Vec::Zero(2), kb()), DomainError);
}

TEST_CASE("exact kernel scales with the explicit weight when the hyperplane weight is flat") {
  // gamma + 2s + 1 = 0: the hyperplane integral does not depend on |h|.
  auto f = standard_maxwellian(3);
  auto p = params(3, 0.5, -2.0);
  Vec v = make_vec({0.2, -0.1, 0.3});
  Vec h = make_vec({0.3, 0.4, -0.2});
  double base = kernel_exact(f, p, v, Vec(v + h), kb(1e-9));
  for (double lam : {0.5, 3.0})
    CHECK(kernel_exact(f, p, v, Vec(v + lam * h), kb(1e-9)) == Approx(base * std::pow(lam, -4.0)).epsilon(1e-7));
}

TEST_CASE("kernel vanishes away from the support") {
  VelocityDistribution f(2);
  f.add(Component::box(make_vec({5, 5}), make_vec({0.5, 0.5}), 1.0));
  auto p = params(2, 0.5, 0.0);
  CHECK(kernel_exact(f, p, Vec::Zero(2), unit_vector(2, 0), kb()) == 0.0);
  CHECK(kernel_surrogate(f, p, Vec::Zero(2), unit_vector(2, 0), kb()) == 0.0);
}

TEST_CASE("surrogate density of the Maxwellian") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  for (double ang : {0.0, 0.7, 2.0, 4.1})
    CHECK(hyperplane_density(f, p, Vec::Zero(2), circle_point(ang), kb()) == Approx(a_max).epsilon(1e-10));
  CHECK(kernel_surrogate(f, p, Vec::Zero(2), make_vec({0, 2}), kb()) == Approx(a_max / 8).epsilon(1e-10));
  CHECK_THROWS_AS(kernel_surrogate(f, p, Vec::Zero(2), Vec::Zero(2), kb()), DomainError);
}

TEST_CASE("surrogate density is even in theta") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  VelocityDistribution f(3);
  f.add(Component::gaussian(make_vec({0.3, 0, 0}), Mat::Identity(3, 3) * 0.7, 1.0));
  f.add(Component::ball(make_vec({-0.5, 0.5, 0}), 0.6, 2.0));
  auto p = params(3, 0.4, 0.5);
  for (int t = 0; t < 4; ++t) {
    Vec v = make_vec({U(rng), U(rng), U(rng)});
    Vec th = normalized(make_vec({U(rng), U(rng), U(rng)}));
    CHECK(hyperplane_density(f, p, v, th, kb(1e-8)) == Approx(hyperplane_density(f, p, v, Vec(-th), kb(1e-8))).epsilon(1e-12));
  }
}

TEST_CASE("squeezed Gaussian hyperplane densities") {
  auto p = params(2, 0.5, 0.0);
  Vec ax = unit_vector(2, 0);
  Vec perp = unit_vector(2, 1);
  double prev_long = 0.0, prev_short = 1e300;
  for (double eps : {1.0, 0.3, 0.1, 0.03, 0.01}) {
    auto f = squeezed_gaussian(eps, ax);
    // Line along the long axis (theta perpendicular to it): density of order 1/eps.
    double along = hyperplane_density(f, p, Vec::Zero(2), perp, kb());
    // Line across the axis: of order eps^{gamma+2s+1}.
    double across = hyperplane_density(f, p, Vec::Zero(2), ax, kb());
    CHECK(along >= prev_long);
    CHECK(across <= prev_short);
    CHECK(along == Approx(a_max / eps).epsilon(1e-8));
    CHECK(across == Approx(a_max * eps * eps).epsilon(1e-8));
    prev_long = along, prev_short = across;
  }
}

TEST_CASE("exact and surrogate kernels are comparable") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  VelocityDistribution f(2);
  f.add(Component::gaussian(make_vec({0.2, 0.1}), Mat::Identity(2, 2), 1.0));
  f.add(Component::box(make_vec({-0.5, 0.3}), make_vec({0.4, 0.8}), 0.5));
  for (auto p : {params(2, 0.5, 0.0), params(2, 0.3, 1.0), params(2, 0.8, -0.5, Normalization::grazing)}) {
    for (int t = 0; t < 6; ++t) {
      Vec v = make_vec({U(rng), U(rng)});
      Vec h = make_vec({U(rng), U(rng)});
      auto e = evaluate_kernel(f, p, v, Vec(v + h), kb(1e-9));
      CHECK(e.exact_value >= 0.0);
      CHECK(e.surrogate_value >= 0.0);
      CHECK(e.exact_value >= std::pow(2.0, p.n - 1) * e.surrogate_value * (1 - 1e-9));
      double C = comparability_upper_constant(f, p, v, h, kb(1e-9));
      CHECK(e.exact_value <= C * e.surrogate_value * (1 + 1e-9));
    }
  }
}

TEST_CASE("upper bound condition for the Maxwellian") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0, Normalization::grazing);
  auto rep = condition_upper_bound(f, p, {0.25, 0.5, 1.0, 2.0}, {Vec::Zero(2)}, kb());
  // Outgoing part: kappa/(2s) times the circle integral of a(0; .) = 2 pi a_max.
  double out = 0.5 / 1.0 * 2 * pi * a_max;
  double Lmax = 0.0;
  double prev_inc = 1e300;
  for (auto& c : rep.cells) {
    if (c.method == "outgoing") CHECK(c.value == Approx(out).epsilon(1e-8));
    if (c.method == "incoming") {
      CHECK(c.value <= prev_inc);
      prev_inc = c.value;
    }
    if (c.method == "total") Lmax = std::max(Lmax, c.value);
    CHECK(rep.Lambda_meas >= c.value);
  }
  CHECK(rep.Lambda_meas == Approx(Lmax));
  // Incoming part at v = 0: a(rho theta; theta) = a_max exp(-rho^2/2).
  auto b = kb(1e-11);
  double r = 0.5;
  double oracle = 2 * pi * a_max * 0.5 * r *
                  integrate([](double x) { return std::exp(-0.5 * x * x) / (x * x); }, r, 12.0, b).value;
  for (auto& c : rep.cells)
    if (c.method == "incoming" && c.r == 0.5) CHECK(c.value == Approx(oracle).epsilon(1e-6));
  VelocityDistribution zero(2);
  auto z = condition_upper_bound(zero, p, {0.5}, {Vec::Zero(2)}, kb());
  CHECK(z.Lambda_meas == 0.0);
}

TEST_CASE("nondegeneracy by two independent paths") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  auto rep = condition_nondegeneracy(f, p, {0.25, 0.5, 1.0, 2.0}, {Vec::Zero(2), make_vec({1.5, 0})}, kb());
  CHECK_FALSE(rep.inconsistent);
  CHECK(rep.cross_method_gap < 0.01);
  CHECK(rep.lambda_meas > 0.0);
  for (auto& c : rep.cells) {
    if (c.method == "sphere" || c.method == "fullspace") CHECK(rep.lambda_meas <= c.value * (1 + 1e-12));
  }
  // r-independence and isotropy at v = 0: pi a_max, times 1/(2-2s) = 1.
  double at0 = 0.0, at15 = 0.0;
  for (auto& c : rep.cells) {
    if (c.method != "sphere") continue;
    if (c.v.norm() == 0.0) {
      CHECK(c.value == Approx(0.5 * pi * a_max).epsilon(1e-6));
      at0 = c.value;
    } else {
      at15 = c.value;
    }
  }
  // Lower-bound shape (1 + |v|)^{gamma + 2s - 2}.
  double q0 = at0, q1 = at15 / std::pow(2.5, -1.0);
  CHECK(std::max(q0, q1) / std::min(q0, q1) < 3.0);
}

TEST_CASE("half-to-full identity and the second moment cross-check") {
  VelocityDistribution f(2);
  f.add(Component::gaussian(make_vec({0.3, -0.2}), (Mat(2, 2) << 1.2, 0.4, 0.4, 0.5).finished(), 1.0));
  auto p = params(2, 0.7, 0.5);
  auto K = surrogate_kernel(f, p, kb());
  Vec v = make_vec({0.4, 0.9});
  auto S = sample_sphere([&](const Vec& t) { return K.A(v, t); }, 2, kb());
  for (double ang : {0.1, 1.3, 2.9}) {
    Vec e = circle_point(ang);
    double full = S.integral_weighted([&](const Vec& t) { return std::pow(t.dot(e), 2); });
    double half = S.integral_weighted([&](const Vec& t) { return std::pow(std::max(0.0, t.dot(e)), 2); });
    CHECK(full == Approx(2 * half).epsilon(1e-3));
  }
  auto c = nondeg_sphere_cell(K, v, kb());
  double lam = 0.5 * symmetric_eigenvalues(c.M_sphere)(0) * K.kappa / (2 - 2 * p.s);
  CHECK(c.lambda == Approx(lam).epsilon(1e-6));
  Mat M = nondeg_fullspace_matrix(f, p, v, kb(1e-8));
  CHECK((M - c.M_sphere).cwiseAbs().maxCoeff() < 1e-3 * c.M_sphere.cwiseAbs().maxCoeff());
}

TEST_CASE("nondegeneracy degenerates along the long axis of a squeezed Gaussian") {
  auto p = params(2, 0.5, 0.0);
  Vec ax = unit_vector(2, 0);
  auto cell = [&](double eps) {
    auto K = surrogate_kernel(squeezed_gaussian(eps, ax), p, kb());
    auto S = sample_sphere([&](const Vec& t) { return K.A(Vec::Zero(2), t); }, 2, kb(1e-6));
    return S.integral_weighted([&](const Vec& t) { return std::pow(std::max(0.0, t.dot(ax)), 2); });
  };
  CHECK(cell(0.01) / cell(1.0) < 1e-2);
}

TEST_CASE("cancellation condition") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  std::vector<double> rs{0.1, 0.3, 0.5, 0.7, 0.9};
  auto rep = condition_cancellation(f, p, rs, {Vec::Zero(2), make_vec({1.0, 0.5})}, kb());
  double smax = 0.0, smin = 1e300;
  for (auto& c : rep.cells) {
    CHECK(rep.Lambda_meas >= c.value);
    CHECK(std::isfinite(c.value));
    if (c.method == "scalar" && c.v.norm() > 0) smax = std::max(smax, c.value), smin = std::min(smin, c.value);
  }
  CHECK(rep.Lambda_meas < 10.0);
  // The scalar family at v = 0: a(rho theta; theta) = a_max exp(-rho^2/2), so
  // r^{2s} int_0^r rho^{-2} 2 a_max (1 - exp(-rho^2/2)) over the half circle.
  auto b = kb(1e-12);
  for (auto& c : rep.cells) {
    if (c.method != "scalar" || c.v.norm() != 0.0) continue;
    double o = c.r * pi * 2 * a_max *
               integrate([](double x) { return x < 1e-4 ? 0.5 : -std::expm1(-0.5 * x * x) / (x * x); }, 0.0, c.r, b).value;
    CHECK(c.value == Approx(o).epsilon(1e-5));
  }
  for (auto& c : rep.cells)
    if (c.method == "vector" && c.v.norm() == 0.0) CHECK(c.value == Approx(0.0).margin(1e-10));
  CHECK_THROWS_AS(condition_cancellation(f, p, {1.5}, {Vec::Zero(2)}, kb()), DomainError);
}

TEST_CASE("cancellation is small for a density that is constant on a large ball") {
  VelocityDistribution f(2);
  f.add(Component::ball(Vec::Zero(2), 30.0, 1.0));
  auto p = params(2, 0.5, 0.0);
  auto b = kb(1e-11);
  b.truncation_radius = 40.0;
  auto K = surrogate_kernel(f, p, b);
  double scale = 1.0 / (2 * p.s) * sphere_integral([&](const Vec& t) { return K.A(Vec::Zero(2), t); }, 2, b);
  CancellationOptions opt;
  auto rep = condition_cancellation(K, {0.1, 0.5, 0.9}, {Vec::Zero(2), make_vec({1, 1})}, b, 1, opt);
  CHECK(rep.Lambda_meas < 1e-2 * scale);
}

TEST_CASE("nonlocal operator") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  auto b = kb(1e-10);
  b.truncation_radius = 3.0;
  auto K = surrogate_kernel(f, p, b);
  Vec v0 = Vec::Zero(2);
  CHECK(apply_nonlocal_operator(K, [](const Vec&) { return 2.0; }, v0, b) == Approx(0.0).margin(1e-12));
  CHECK(apply_nonlocal_operator(K, [](const Vec& x) { return 1.0 + 3 * x(0) - x(1); }, v0, b) ==
        Approx(0.0).margin(1e-10));
  // g = |v|^2 equals the sum over i of the condition (ii) integrands on B_R.
  double R = b.truncation_radius;
  double got = apply_nonlocal_operator(K, [](const Vec& x) { return x.squaredNorm(); }, v0, b);
  CHECK(got == Approx(std::pow(R, 2 - 2 * p.s) / (2 - 2 * p.s) * 2 * pi * a_max).epsilon(1e-8));
  // Independent oracle: polar double integral of the symmetrized difference.
  auto g = [](const Vec& x) { return std::exp(-x.squaredNorm()) * (1 + x(0)); };
  Vec v = make_vec({0.3, -0.2});
  double op = apply_nonlocal_operator(K, g, v, b);
  QuadratureBudget ob = kb(1e-8);
  auto rad = [&](double rho) {
    auto ang = [&](double phi) {
      Vec t = circle_point(phi);
      return (g(Vec(v + rho * t)) + g(Vec(v - rho * t)) - 2 * g(v)) * K.value(v, Vec(rho * t));
    };
    return 0.5 * rho * integrate(ang, 0.0, 2 * pi, ob.inner()).value;
  };
  double oracle = integrate(rad, 0.0, R, ob).value;
  CHECK(op == Approx(oracle).epsilon(1e-5));
}

TEST_CASE("collision operator") {
  auto f = standard_maxwellian(2);
  auto b = kb(1e-10);
  b.truncation_radius = 3.0;
  auto p = params(2, 0.5, 0.0);
  CHECK(collision_operator(f, p, [](const Vec&) { return 0.0; }, Vec::Zero(2), b) == 0.0);
  auto g = [](const Vec&) { return 2.0; };
  CHECK(collision_operator(f, p, g, Vec::Zero(2), b) == Approx(2.0 * f.mass()).epsilon(1e-10));
  auto p1 = params(2, 0.5, 1.0);
  Vec v = make_vec({0.5, 0.0});
  // Convolution oracle in polar coordinates around v.
  auto ob = kb(1e-9);
  double conv = integrate([&](double rho) {
    return rho * rho * integrate([&](double phi) { return f.density(Vec(v + rho * circle_point(phi))); }, 0.0, 2 * pi, ob.inner()).value;
  }, 0.0, 15.0, ob).value;
  double got = collision_operator(f, p1, g, v, b);
  double nonlocal = apply_nonlocal_operator(f, p1, g, v, b);
  CHECK(nonlocal == Approx(0.0).margin(1e-12));
  CHECK(got == Approx(2.0 * conv).epsilon(1e-6));
}

TEST_CASE("anisotropic distance") {
  CHECK(gs_distance(make_vec({0.3, 1}), make_vec({0.3, 1})) == 0.0);
  CHECK(gs_distance(Vec::Zero(2), unit_vector(2, 0)) == Approx(std::sqrt(5.0) / 2).epsilon(1e-15));
}

TEST_CASE("coercivity energies") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  CoercivityGrid grid;
  AngularTable T(f, p, grid, kb(1e-8), 1);
  auto zero = coercivity_energies(T, p, [](const Vec&) { return 0.0; });
  CHECK(zero.E_K == 0.0);
  CHECK(zero.E_aniso == 0.0);
  CHECK(zero.E_Hs == 0.0);
  CHECK(zero.L2 == 0.0);
  std::vector<double> ratios;
  for (auto& g : coercivity_test_family()) {
    auto E = coercivity_energies(T, p, g);
    CHECK(E.E_K > 0.0);
    CHECK(E.E_aniso > 0.0);
    CHECK(E.L2 > 0.0);
    ratios.push_back(E.E_K / E.E_aniso);
  }
  double mx = *std::max_element(ratios.begin(), ratios.end());
  double mn = *std::min_element(ratios.begin(), ratios.end());
  CHECK(mn > 0.0);
  CHECK(mx / mn <= 2.0);
  CoercivityGrid coarse = grid;
  coarse.spacing = 0.2;
  CHECK_THROWS_AS(coarse.validate(), DomainError);
  CHECK_THROWS_AS(coercivity_energies(T, p, [](const Vec& x) { return bump(x.norm() / 3.0); }), DomainError);
}

TEST_CASE("reports serialize") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  auto rep = condition_nondegeneracy(f, p, {0.5}, {Vec::Zero(2)}, kb(1e-8));
  rep.params = p;
  auto j = to_json(rep);
  CHECK(j["condition"] == "nondeg");
  CHECK(j["pass"] == true);
  auto csv = cells_csv(rep);
  CHECK(csv.rfind("condition,v,r,e,value,method\n", 0) == 0);
  CHECK_THROWS_AS(condition_nondegeneracy(f, p, {0.5}, {make_vec({3, 0})}, kb()), DomainError);
}

TEST_CASE("Carleman energy identity") {
  auto f = standard_maxwellian(2);
  auto p = params(2, 0.5, 0.0);
  QuadratureBudget b = kb(1e-4);
  b.truncation_radius = 9.0;
  auto g = [](const Vec& x) { return bump(x.norm() / 1.5); };
  auto c = carleman_energy_check(f, p, g, 6, 3.0, b);
  CHECK(c.sigma_side > 0.0);
  CHECK(c.rel_err < 0.05);
}
