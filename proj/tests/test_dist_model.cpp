#include <catch_amalgamated.hpp>

#include "kinver/dist_model.hpp"

using namespace kinver;
using Catch::Approx;

TEST_CASE("density of standard primitives") {
  auto f = standard_maxwellian(2);
  CHECK(f.density(Vec::Zero(2)) == Approx(1.0 / (2.0 * pi)).epsilon(1e-14));

  VelocityDistribution b(2);
  b.add(Component::box(Vec::Zero(2), make_vec({1, 1}), 3.0));
  CHECK(b.density(make_vec({0.5, 0.5})) == 3.0);

  VelocityDistribution ball(2);
  ball.add(Component::ball(Vec::Zero(2), 1.0, 1.0));
  CHECK(ball.density(make_vec({2, 0})) == 0.0);
  CHECK(ball.mass() == Approx(pi));

  CHECK_THROWS_AS(f.density(Vec::Zero(3)), DomainError);
}

TEST_CASE("gaussian density matches the closed form with a full covariance") {
  Mat cov(3, 3);
  cov << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  VelocityDistribution f(3);
  Vec m = make_vec({0.2, -0.1, 0.4});
  f.add(Component::gaussian(m, cov, 1.7));
  Vec v = make_vec({1.0, 0.5, -0.3});
  Vec d = v - m;
  double expect = 1.7 * std::exp(-0.5 * d.dot(cov.inverse() * d)) / std::sqrt(std::pow(2 * pi, 3) * cov.determinant());
  CHECK(f.density(v) == Approx(expect).epsilon(1e-12));
  CHECK(f.mass() == Approx(1.7));
}

TEST_CASE("counterexample family matches its pointwise formula") {
  for (double R : {2.0, 5.0, 10.0}) {
    auto f = counterexample_family(R);
    double pts[][2] = {{0, 0}, {0.5 / R, 0.5 / R}, {0.5 * std::pow(R, -3), 0.9 * R}, {0.9 * R, 0},
                       {0.5 / R, 0.9 * R}, {2 * R, 0}, {0.3 / R, -0.7 / R}};
    for (auto& p : pts) {
      Vec v = make_vec({p[0], p[1]});
      CHECK(f.density(v) == Approx(counterexample_density(R, v)).margin(1e-9));
    }
    CHECK(f.mass() >= 4.0);
    CHECK(f.mass() <= 8.0);
  }
  CHECK_THROWS_AS(counterexample_family(1.0), DomainError);
}

TEST_CASE("negative weight boxes must keep the density nonnegative") {
  VelocityDistribution f(2);
  f.add(Component::box(Vec::Zero(2), make_vec({1, 1}), 1.0));
  CHECK_THROWS_AS(f.add(Component::box(make_vec({0.5, 0}), make_vec({1, 0.2}), -1.0)), DomainError);
  VelocityDistribution g(2);
  CHECK_THROWS_AS(g.add(Component::ball(Vec::Zero(2), 1.0, -1.0)), DomainError);
}

TEST_CASE("squeezed gaussian keeps unit mass") {
  for (double eps : {1.0, 0.1, 0.01}) {
    auto f = squeezed_gaussian(eps, unit_vector(2, 0));
    CHECK(f.mass() == Approx(1.0));
    Mat P = f.components()[0].covariance();
    CHECK(P(0, 0) == Approx(1.0));
    CHECK(P(1, 1) == Approx(eps * eps));
  }
  CHECK_THROWS_AS(squeezed_gaussian(0.0, unit_vector(2, 0)), DomainError);
}

TEST_CASE("density integrates to the closed-form mass") {
  QuadratureBudget b;
  b.rel_tol = 1e-6;
  VelocityDistribution f(2);
  Mat cov(2, 2);
  cov << 1.0, 0.4, 0.4, 0.5;
  f.add(Component::gaussian(make_vec({0.3, 0}), cov, 0.8));
  f.add(Component::box(make_vec({1, -1}), make_vec({0.5, 0.25}), 2.0));
  f.add(Component::ball(make_vec({-1, 1}), 0.7, 1.5));
  Vec lo, hi;
  f.bounding_box(lo, hi);
  auto inner = [&](double x) {
    return integrate([&](double y) { return f.density(make_vec({x, y})); },
                     breaks_within(lo(1), hi(1), f.axis_breaks(1)), b.inner())
        .value;
  };
  double m = integrate(inner, breaks_within(lo(0), hi(0), f.axis_breaks(0)), b).value;
  CHECK(m == Approx(f.mass()).epsilon(1e-3));
}

TEST_CASE("integrate_against reproduces second moments") {
  QuadratureBudget b;
  b.rel_tol = 1e-7;
  VelocityDistribution f(3);
  Mat cov = Mat::Identity(3, 3);
  cov(0, 1) = cov(1, 0) = 0.3;
  f.add(Component::gaussian(make_vec({0.1, 0.2, 0}), cov, 1.0));
  f.add(Component::ball(make_vec({0, 0, 1}), 0.5, 2.0));
  using M3 = Eigen::Matrix<double, 3, 3>;
  M3 got = f.integrate_against<M3>([](const Vec& v) -> M3 { return Eigen::Vector3d(v) * Eigen::Vector3d(v).transpose(); },
                                  Vec::Zero(3), b);
  Mat expect = Mat::Zero(3, 3);
  for (auto& c : f.components()) expect += c.second_moment();
  CHECK((Mat(got) - expect).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("line restrictions agree with pointwise density") {
  VelocityDistribution f(2);
  Mat cov(2, 2);
  cov << 1.0, 0.2, 0.2, 0.3;
  f.add(Component::gaussian(make_vec({0.5, 0}), cov, 1.0));
  f.add(Component::box(make_vec({0, 0.5}), make_vec({1, 1}), 1.0));
  f.add(Component::ball(make_vec({0.2, 0.2}), 1.0, 1.0));
  Vec x0 = make_vec({0.1, -0.3});
  Vec d = normalized(make_vec({0.6, 0.8}));
  auto rs = f.restrict_to_line(x0, d);
  for (double t : {-2.0, -0.7, 0.0, 0.33, 1.2}) {
    double s = 0.0;
    for (auto& r : rs) s += r(t);
    CHECK(s == Approx(f.density(Vec(x0 + t * d))).epsilon(1e-12));
  }
}

TEST_CASE("distribution JSON ingestion") {
  auto j = nlohmann::json::parse(R"({"dimension": 2, "components": [
      {"kind": "gaussian", "mean": [0, 0], "covariance": [[1, 0], [0, 1]], "weight": 1},
      {"kind": "box", "center": [0, 0], "half_widths": [1, 1], "weight": 3},
      {"kind": "ball", "center": [1, 1], "radius": 0.5}]})");
  auto f = distribution_from_json(j);
  CHECK(f.components().size() == 3);
  CHECK(f.mass() == Approx(1 + 12 + pi * 0.25));
  CHECK_THROWS_AS(distribution_from_json(nlohmann::json::parse(R"({"dimension": 2, "components": [{"kind": "cone"}]})")),
                  DomainError);
  auto g = distribution_from_json(nlohmann::json::parse(R"({"generator": "counterexample", "R": 10})"));
  CHECK(g.mass() == Approx(counterexample_family(10).mass()));
  auto k = kernel_params_from_json(nlohmann::json::parse(R"({"n": 3, "s": 0.7, "gamma": 1, "normalization": "plain"})"));
  CHECK(k.kappa() == 1.0);
  CHECK(k.hyperplane_power() == Approx(3.4));
  CHECK_THROWS_AS(kernel_params_from_json(nlohmann::json::parse(R"({"s": 1.2})")), DomainError);
}
