#include <catch_amalgamated.hpp>

#include "kinver/dist_model.hpp"
#include "kinver/quadrature.hpp"

using namespace kinver;
using Catch::Approx;

namespace {

QuadratureBudget budget(double rel = 1e-7) {
  QuadratureBudget b;
  b.rel_tol = rel;
  b.truncation_radius = 9.0;
  return b;
}

}  // namespace

TEST_CASE("adaptive rule on smooth and endpoint-singular integrands") {
  auto b = budget(1e-10);
  CHECK(integrate([](double x) { return std::exp(x); }, 0.0, 1.0, b).value == Approx(std::exp(1.0) - 1).epsilon(1e-12));
  CHECK(integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, b).value == Approx(2.0).epsilon(1e-7));
  auto r = integrate_power_weight([](double) { return 1.0; }, -0.8, 2.0, b);
  CHECK(r.value == Approx(std::pow(2.0, 0.2) / 0.2).epsilon(1e-10));
  QuadratureBudget tiny = b;
  tiny.max_evals = 40;
  CHECK_THROWS_AS(integrate([](double x) { return std::sin(200 * x); }, 0.0, 10.0, tiny), QuadratureFailure);
}

TEST_CASE("vector-valued adaptive integration") {
  using V2 = Eigen::Vector2d;
  auto r = integrate_adaptive<V2>([](double x) { return V2(x, x * x); }, {0.0, 1.0, 2.0}, budget());
  CHECK(r.value(0) == Approx(2.0));
  CHECK(r.value(1) == Approx(8.0 / 3.0));
}

TEST_CASE("hyperplane integrals") {
  auto b = budget();
  auto gauss = [](const Vec& w) { return std::exp(-w.squaredNorm()); };
  CHECK(hyperplane_integral(gauss, make_vec({0.3, -1, 2}), b).value == Approx(pi).epsilon(1e-6));
  CHECK(hyperplane_integral(gauss, make_vec({1, 1}), b).value == Approx(std::sqrt(pi)).epsilon(1e-6));
  auto ball = [](const Vec& w) { return w.squaredNorm() < 1.0 ? 1.0 : 0.0; };
  QuadratureBudget bb = budget(1e-5);
  bb.truncation_radius = 1.5;
  CHECK(hyperplane_integral(ball, make_vec({0, 0, 1}), bb).value == Approx(pi).epsilon(1e-3));
  CHECK_THROWS_AS(hyperplane_integral(gauss, Vec::Zero(3), b), DomainError);
}

TEST_CASE("hyperplane homogeneity under dilation") {
  auto b = budget();
  b.truncation_radius = 40.0;
  for (int n : {2, 3}) {
    Vec nrm = n == 2 ? make_vec({0.2, 1}) : make_vec({1, 2, -0.5});
    auto g = [](const Vec& w) { return std::exp(-w.squaredNorm()) * (1.0 + w(0) * w(0)); };
    double base = hyperplane_integral(g, nrm, b).value;
    for (double lam : {0.5, 2.0}) {
      double scaled = hyperplane_integral([&](const Vec& w) { return g(Vec(lam * w)); }, nrm, b).value;
      CHECK(scaled == Approx(base * std::pow(lam, -(n - 1))).epsilon(1e-6));
    }
  }
}

TEST_CASE("sphere integrals") {
  auto b = budget();
  CHECK(sphere_integral([](const Vec&) { return 1.0; }, 3, b) == Approx(4 * pi).epsilon(1e-10));
  CHECK(sphere_integral([](const Vec&) { return 1.0; }, 2, b) == Approx(2 * pi).epsilon(1e-12));
  Vec e = normalized(make_vec({1, 2, 2}));
  CHECK(sphere_integral([&](const Vec& t) { return std::pow(t.dot(e), 2); }, 3, b) == Approx(4 * pi / 3).epsilon(1e-9));
  auto s = sample_sphere([](const Vec& t) { return 1.0 + t(0) * t(0); }, 2, b);
  CHECK(s.integral() == Approx(3 * pi).epsilon(1e-10));
}

TEST_CASE("sphere sections") {
  auto b = budget();
  Vec e = unit_vector(3, 0);
  auto g = [&](const Vec& t) { return std::pow(t.dot(e), 2); };
  CHECK(sphere_section_integral(g, unit_vector(3, 2), b) == Approx(pi).epsilon(1e-8));
  CHECK(sphere_section_integral(g, e, b) == Approx(0.0).margin(1e-12));
  Vec e2 = unit_vector(2, 0);
  CHECK(sphere_section_integral([&](const Vec& t) { return std::pow(t.dot(e2), 2); }, unit_vector(2, 1), b) ==
        Approx(2.0).epsilon(1e-12));
}

TEST_CASE("weighted change of variables identity") {
  auto b = budget(1e-6);
  auto r = verify_weighted_trafo([](const Vec& z, const Vec&) { return std::exp(-z.squaredNorm()); }, 3, b);
  CHECK(r.lhs == Approx(4 * pi * pi).epsilon(1e-5));
  CHECK(r.rhs == Approx(4 * pi * pi).epsilon(1e-5));
  auto z = verify_weighted_trafo([](const Vec&, const Vec&) { return 0.0; }, 2, b);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.rel_err == 0.0);
}

TEST_CASE("ellipsoid sections") {
  auto b = budget(1e-8);
  Ellipsoid disc{unit_vector(2, 0), 0.7, 0.7};
  CHECK(ellipsoid_section_integral([](const Vec&) { return 1.0; }, disc, make_vec({0.3, 1}), b) ==
        Approx(1.4).epsilon(1e-10));
  // Singular radial weight on a ball section in dimension n-1.
  const double s = 0.4, rho = 0.8;
  for (int n : {2, 3}) {
    Ellipsoid ball{unit_vector(n, 0), rho, rho};
    double p = -(n - 1) - 2 * s + 2;
    double got = ellipsoid_section_integral([&](const Vec& h) { return std::pow(h.norm(), p); }, ball, unit_vector(n, 1), b, p);
    CHECK(got == Approx(sphere_area(n - 1) * std::pow(rho, 2 - 2 * s) / (2 - 2 * s)).epsilon(1e-8));
  }
  // The section's area dominates that of the ball of its smallest radius.
  Vec v0 = make_vec({10, 0, 0});
  const double r = 1.0;
  Ellipsoid E{unit_vector(3, 0), r / v0.norm(), r};
  Vec u = normalized(make_vec({1, 1, 0}));
  double c2 = std::pow(u.dot(unit_vector(3, 0)), 2);
  double rmin = r / std::sqrt(v0.squaredNorm() * (1 - c2) + c2);
  double area = ellipsoid_section_integral([](const Vec&) { return 1.0; }, E, u, b);
  CHECK(area >= pi * rmin * rmin);
}

TEST_CASE("radial factor is exact") {
  for (double s : {0.3, 0.5, 0.9}) {
    double got = integrate_power_weight([](double) { return 1.0; }, 1 - 2 * s, 0.7, budget(1e-12)).value * (1 - s);
    CHECK(got == Approx(grazing_radial_factor(s, 0.7)).epsilon(1e-10));
    CHECK(grazing_radial_factor(s, 0.7) == Approx(std::pow(0.7, 2 - 2 * s) / 2).epsilon(1e-14));
  }
}
