#include <catch_amalgamated.hpp>

#include "kinver/kinetic_geometry.hpp"

#include <random>

using namespace kinver;
using Catch::Approx;

namespace {

KineticPoint random_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Vec x(n), v(n);
  for (int i = 0; i < n; ++i) x(i) = U(rng);
  for (int i = 0; i < n; ++i) v(i) = 2.0 * U(rng);
  return {U(rng), x, v};
}

KineticPoint scaled(const KineticPoint& z, double lam, double s) {
  return {std::pow(lam, 2 * s) * z.t, Vec(std::pow(lam, 1 + 2 * s) * z.x), Vec(lam * z.v)};
}

QuadratureBudget qb() {
  QuadratureBudget b;
  b.rel_tol = 1e-6;
  b.abs_tol = 1e-12;
  return b;
}

double bump1(double t) { return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; }

}  // namespace

TEST_CASE("kinetic distance examples") {
  auto o = KineticPoint::origin(2);
  CHECK(kinetic_distance(o, o, 0.5) == 0.0);
  KineticPoint a(0.0, Vec::Zero(2), make_vec({2, 0}));
  CHECK(kinetic_distance(o, a, 0.5) == Approx(1.0));
  KineticPoint b(1.0, Vec::Zero(2), Vec::Zero(2));
  CHECK(kinetic_distance(b, o, 0.5) == Approx(1.0));
  CHECK(kinetic_distance_grid(b, o, 0.5) == Approx(1.0).margin(1e-6));
  CHECK(kinetic_distance_multistart(o, a, 0.5) == Approx(1.0).margin(1e-9));
  CHECK_THROWS_AS(kinetic_distance(o, a, 0.0), DomainError);
  CHECK_THROWS_AS(kinetic_distance(o, a, 1.5), DomainError);
}

TEST_CASE("kinetic distance against the w-grid oracle") {
  std::mt19937_64 rng(17);
  for (double s : {0.3, 0.7, 1.0}) {
    double worst = 0.0, worst_ms = 0.0;
    for (int k = 0; k < 100; ++k) {
      auto z1 = random_point(rng, 2), z2 = random_point(rng, 2);
      double d = kinetic_distance(z1, z2, s);
      double g = kinetic_distance_grid(z1, z2, s);
      worst = std::max(worst, std::abs(d - g));
      worst_ms = std::max(worst_ms, kinetic_distance_multistart(z1, z2, s) - g);
      CHECK(d <= g + 1e-12);
      CHECK(kinetic_distance(z2, z1, s) == Approx(d).epsilon(1e-12));
      KineticPoint sw(z1.t, z1.x, z2.v), sw2(z2.t, z2.x, z1.v);
      CHECK(kinetic_distance(sw, sw2, s) == Approx(kinetic_distance(KineticPoint(z1.t, z1.x, z1.v), KineticPoint(z2.t, z2.x, z2.v), s)).epsilon(1e-12));
    }
    CHECK(worst < 1e-3);
    CHECK(worst_ms < 1e-3);
  }
  std::mt19937_64 r3(3);
  for (int k = 0; k < 20; ++k) {
    auto z1 = random_point(r3, 3), z2 = random_point(r3, 3);
    CHECK(kinetic_distance(z1, z2, 0.5) == Approx(kinetic_distance_grid(z1, z2, 0.5)).margin(1e-3));
  }
}

TEST_CASE("kinetic scaling") {
  std::mt19937_64 rng(23);
  for (double s : {0.3, 0.7, 1.0})
    for (int k = 0; k < 100; ++k) {
      auto z1 = random_point(rng, 2), z2 = random_point(rng, 2);
      double d = kinetic_distance(z1, z2, s);
      for (double lam : {0.5, 2.0})
        CHECK(kinetic_distance(scaled(z1, lam, s), scaled(z2, lam, s), s) == Approx(lam * d).epsilon(1e-6));
    }
}

TEST_CASE("cylinder boundaries are strict") {
  KineticPoint z0(1.0, make_vec({0, 0}), make_vec({1, 0}));
  CHECK(cylinder_contains(z0, 0.5, 0.5, z0));
  CHECK_FALSE(cylinder_contains(z0, 0.5, 0.5, KineticPoint(0.5, Vec(-0.5 * make_vec({1, 0})), make_vec({1, 0}))));
  CHECK_FALSE(cylinder_contains(z0, 0.5, 0.5, KineticPoint(1.0, make_vec({0, 0}), make_vec({1.5, 0}))));
  CHECK_FALSE(cylinder_contains(z0, 0.5, 0.5, KineticPoint(1.1, make_vec({0, 0}), make_vec({1, 0}))));
}

TEST_CASE("sampled norms") {
  NormSpec spec;
  spec.alpha = 0.5;
  spec.p = 2.0;
  auto plan = make_sample_plan(spec, 2, 8, 1.0, 3.0, 5);
  auto c = sampled_holder_norm([](const KineticPoint&) { return 3.0; }, spec, plan, 0.5, qb());
  CHECK(c.seminorm == 0.0);
  CHECK(c.c0 == 3.0);
  CHECK(c.linf_l1 > 0.0);
  auto w = sampled_holder_norm([&](const KineticPoint& z) { return std::pow(1.0 + z.v.norm(), -spec.p); }, spec, plan,
                               0.5, qb());
  CHECK(w.c0_weighted == Approx(1.0).epsilon(1e-14));
  KineticPoint hat(2.0, make_vec({0.1, 0.2}), make_vec({0.5, -0.5}));
  auto dz = sampled_holder_norm([&](const KineticPoint& z) { return std::pow(kinetic_distance(z, hat, 0.5), 0.5); },
                                spec, plan, 0.5, qb());
  CHECK(dz.seminorm <= 1.0 + 1e-9);
  CHECK(dz.pairs > 0);
  SamplePlan empty;
  CHECK_THROWS_AS(sampled_holder_norm([](const KineticPoint&) { return 0.0; }, spec, empty, 0.5, qb()), DomainError);
}

TEST_CASE("interpolation inequality on the three-function suite") {
  NormSpec spec;
  spec.alpha = 0.5;
  spec.p = 2.0;
  spec.radii = {1.0, 0.3, 0.05};
  auto plan = make_sample_plan(spec, 2, 12, 1.0, 2.5, 11, 12);
  const std::vector<double> eps{0.5, 0.1, 0.02};
  auto zero = verify_interpolation([](const KineticPoint&) { return 0.0; }, spec, plan, 0.5, eps, qb());
  for (auto& r : zero.rows) CHECK(r.slack == 0.0);
  std::vector<KineticField> suite{
      [](const KineticPoint& z) { return bump1(z.v.norm() / 2.0); },
      [&](const KineticPoint& z) {
        return std::pow(1.0 + z.v.norm(), -spec.p) * bump1((z.t - 2.0) / 1.5) * bump1(z.x.norm() / 2.0);
      },
      [](const KineticPoint& z) { return std::exp(-0.5 * z.v.squaredNorm()) * (1.0 + 0.5 * std::sin(z.x(0) - z.t)); }};
  for (auto& F : suite) {
    auto tab = verify_interpolation(F, spec, plan, 0.5, eps, qb());
    CHECK(tab.constant == Approx(1.0 / pi));
    for (auto& r : tab.rows) {
      CHECK(r.lhs > 0.0);
      CHECK(r.slack > 0.0);
    }
  }
}

TEST_CASE("iteration lemma verifier") {
  CHECK(giusti_constant(1.0) == Approx(std::pow(1.0 - std::sqrt(0.5), -2.0)).epsilon(1e-14));
  CHECK(giusti_constant(1.0) == Approx(11.657).epsilon(1e-4));
  auto z = giusti_verify([](double) { return 0.0; }, 0.0, 1.0, 1.0, 0.0);
  CHECK(z.hypothesis_ok);
  CHECK(z.conclusion_ok);
  CHECK(z.sigma == Approx(std::sqrt(0.5)));
  // Constant F = K passes the hypothesis for A >= K (T2 - T1)^gamma / 2.
  for (double g : {0.5, 1.0, 2.0}) {
    auto r = giusti_verify([](double) { return 4.0; }, 0.0, 2.0, g, 2.0 * std::pow(2.0, g), 150);
    CHECK(r.hypothesis_ok);
    CHECK(r.conclusion_ok);
  }
  // A(T2 - t)^{-gamma} satisfies the hypothesis on [T1, T2); a large decreasing profile with small A does not.
  auto up = giusti_verify([](double t) { return 0.1 * std::pow(1.0 + 1e-3 - t, -1.0); }, 0.0, 1.0, 1.0, 0.1, 100);
  CHECK(up.hypothesis_ok);
  auto v = giusti_verify([](double t) { return 10.0 / (t + 0.01); }, 0.0, 1.0, 1.0, 0.1, 100);
  CHECK_FALSE(v.hypothesis_ok);
  CHECK(v.hypothesis_violations > 0);
  // Whenever the hypothesis holds on the dense sample, so does the conclusion.
  for (double B : {0.05, 0.2, 1.0})
    for (double g : {0.5, 1.0}) {
      auto r = giusti_verify([&](double t) { return B * std::pow(t + 0.1, -g); }, 0.0, 1.0, g, 0.3, 120);
      if (r.hypothesis_ok) CHECK(r.conclusion_ok);
    }
  CHECK_THROWS_AS(giusti_verify([](double) { return 0.0; }, 0.0, 1.0, 0.0, 1.0), DomainError);
}
