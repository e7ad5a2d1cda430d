#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "rta/constraints.hpp"
#include "rta/dynamics.hpp"
#include "rta/scenario.hpp"

using rta::Vector;

namespace {

// Stacked state for N deputies with deputy i at (p, v) and everyone else
// parked far away on distinct z offsets, outside every mutual interaction.
Vector stacked_state(int num, int i, const Eigen::Vector3d& p, const Eigen::Vector3d& v) {
  Vector x = Vector::Zero(6 * num);
  for (int k = 0; k < num; ++k) {
    x.segment<3>(6 * k) << -900.0, 0.0, 100.0 * (k + 1);
  }
  x.segment<3>(6 * i) = p;
  x.segment<3>(6 * i + 3) = v;
  return x;
}

}  // namespace

TEST_SUITE("constraints") {

TEST_CASE("strengthening function values and monotonicity") {
  const rta::StrengtheningFn a;  // exponents (-2, -2)
  CHECK(a(0.0) == 0.0);
  CHECK(a(0.2) == doctest::Approx(0.00208).epsilon(1e-12));
  CHECK(a(-0.01) == doctest::Approx(-0.00010001).epsilon(1e-12));
  CHECK(a.polynomial());
  CHECK(a.a() == -2.0);
  CHECK(a.b() == -2.0);

  const rta::StrengtheningFn steep(-1.0, -3.0);
  CHECK(steep(1.0) == doctest::Approx(0.1 + 0.001).epsilon(1e-12));

  double prev = -1e9;
  for (double z = -50.0; z <= 50.0; z += 0.5) {
    const double v = a(z);
    CHECK(v > prev);
    prev = v;
  }

  const auto ident = rta::StrengtheningFn::custom([](const auto& z) { return z; });
  CHECK_FALSE(ident.polynomial());
  CHECK(ident(3.25) == 3.25);
}

TEST_CASE("inspection constraint values at hand-computed states") {
  rta::InspectionConfig cfg = rta::default_config();
  REQUIRE(cfg.nu1 == doctest::Approx(0.004108).epsilon(1e-12));

  const auto cs = rta::make_constraints(cfg, 0);
  REQUIRE(cs.size() == 10);  // phi_1, 4x phi_2, phi_3..phi_7 at N=5
  CHECK(cs[0].name == "phi_1");
  CHECK(cs[1].name == "phi_2_vs_1");
  CHECK(cs[4].name == "phi_2_vs_4");
  CHECK(cs[5].name == "phi_3");
  CHECK(cs[6].name == "phi_4");
  CHECK(cs[9].name == "phi_7");

  SUBCASE("chief keep-out: zero on the 10 m sphere, distance beyond") {
    Vector x = stacked_state(5, 0, {0.0, 10.0, 0.0}, {0.0, 0.0, 0.0});
    CHECK(rta::evaluate(cs[0], x) == doctest::Approx(0.0).epsilon(1e-12));
    x = stacked_state(5, 0, {0.0, 0.0, 100.0}, {0.0, 0.0, 0.0});
    CHECK(rta::evaluate(cs[0], x) == doctest::Approx(90.0).epsilon(1e-12));
  }

  SUBCASE("deputy separation: distance minus two collision radii") {
    Vector x = stacked_state(5, 0, {0.0, 50.0, 0.0}, {0.0, 0.0, 0.0});
    x.segment<3>(6) << 0.0, 62.0, 0.0;  // deputy 1 at 12 m range
    CHECK(rta::evaluate(cs[1], x) == doctest::Approx(2.0).epsilon(1e-12));
    x.segment<3>(6) << 0.0, 60.0, 0.0;
    CHECK(rta::evaluate(cs[1], x) == doctest::Approx(0.0).epsilon(1e-10));
  }

  SUBCASE("dynamic speed limit: cap grows with range") {
    const double r = 100.0;
    const double cap = cfg.nu0 + cfg.nu1 * r;
    CHECK(cap == doctest::Approx(0.6108).epsilon(1e-12));
    Vector x = stacked_state(5, 0, {0.0, r, 0.0}, {cap, 0.0, 0.0});
    CHECK(rta::evaluate(cs[5], x) == doctest::Approx(0.0).epsilon(1e-12));
    x = stacked_state(5, 0, {0.0, r, 0.0}, {0.0, 0.3, 0.0});
    CHECK(rta::evaluate(cs[5], x) == doctest::Approx(cap - 0.3).epsilon(1e-12));
  }

  SUBCASE("sun exclusion: most negative along the sun axis, zero on the cone") {
    Vector x = stacked_state(5, 0, {200.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    CHECK(rta::evaluate(cs[6], x) ==
          doctest::Approx(-1.0 + std::cos(std::numbers::pi / 12.0)).epsilon(1e-12));
    const double half = cfg.theta_s / 2.0;
    x = stacked_state(5, 0, {300.0 * std::cos(half), 300.0 * std::sin(half), 0.0},
                      {0.0, 0.0, 0.0});
    CHECK(rta::evaluate(cs[6], x) == doctest::Approx(0.0).epsilon(1e-12));
    x = stacked_state(5, 0, {-400.0, 0.0, 0.0}, {0.0, 0.0, 0.0});  // anti-sun
    CHECK(rta::evaluate(cs[6], x) ==
          doctest::Approx(1.0 + std::cos(std::numbers::pi / 12.0)).epsilon(1e-12));
  }

  SUBCASE("per-axis velocity caps") {
    Vector x = stacked_state(5, 0, {0.0, 120.0, 0.0}, {2.0, 1.5, -2.5});
    CHECK(rta::evaluate(cs[7], x) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rta::evaluate(cs[8], x) == doctest::Approx(4.0 - 2.25).epsilon(1e-12));
    CHECK(rta::evaluate(cs[9], x) == doctest::Approx(4.0 - 6.25).epsilon(1e-12));
  }

  SUBCASE("membership report flags the violated entry") {
    Vector x = stacked_state(5, 0, {0.0, 120.0, 0.0}, {2.0, 1.5, -2.5});
    const auto m = rta::in_allowable_set(cs, x);
    CHECK_FALSE(m.inside);
    REQUIRE(m.values.size() == 10);
    CHECK(m.values[9] < 0.0);
    CHECK(m.values[8] > 0.0);
  }
}

TEST_CASE("constraint gradients match finite differences") {
  rta::InspectionConfig cfg = rta::default_config();
  cfg.deputies = 3;
  const auto cs = rta::make_constraints(cfg, 1);
  REQUIRE(cs.size() == 8);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    Vector x(18);
    for (int k = 0; k < 3; ++k) {
      x.segment<3>(6 * k) = oracles::uniform_vector(rng, 3, -400.0, 400.0);
      x.segment<3>(6 * k + 3) = oracles::uniform_vector(rng, 3, -1.5, 1.5);
    }
    // keep norms away from the kink at p = 0 and coincident deputies
    if (x.segment<3>(6).norm() < 20.0) continue;

    for (const auto& c : cs) {
      const Vector g = rta::gradient(c.h, x);
      const Vector g_fd = oracles::fd_gradient([&](const Vector& y) { return c.h(y); }, x);
      const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
      CHECK_MESSAGE((g - g_fd).lpNorm<Eigen::Infinity>() <= 1e-6 * scale,
                    "constraint ", c.name, " trial ", trial);
    }
  }
}

TEST_CASE("higher-order transform: identity at relative degree one") {
  rta::InspectionConfig cfg = rta::default_config();
  cfg.deputies = 1;
  const auto dyn = rta::make_dynamics(cfg, 0);
  const auto cs = rta::make_constraints(cfg, 0);

  const auto same = rta::hocbf_transform(cs[0], dyn, 1, {});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(6);
    x.head(3) = oracles::uniform_vector(rng, 3, -300.0, 300.0);
    x.tail(3) = oracles::uniform_vector(rng, 3, -1.0, 1.0);
    CHECK(same.h(x) == cs[0].h(x));  // exact: same field
  }
}

TEST_CASE("higher-order transform: double integrator with identity strengthening") {
  // x' = (x1, u): h = x0 has relative degree 2 and Psi_1 = x1 + alpha(x0).
  // With alpha = identity the transform must produce exactly x0 + x1.
  rta::VectorField f(2, 2, [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    rta::VectorX<S> dx(2);
    dx[0] = x[1];
    dx[1] = S(0.0);
    return dx;
  });
  rta::MatrixField g(2, 2, 1, [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    rta::MatrixX<S> G = rta::MatrixX<S>::Zero(2, 1);
    G(1, 0) = S(1.0);
    (void)x;
    return G;
  });
  const rta::ControlAffineDynamics dyn(std::move(f), std::move(g));

  rta::SafetyConstraint c;
  c.h = rta::ScalarField(2, [](const auto& x) { return x[0]; });
  c.alpha = rta::StrengtheningFn();
  c.name = "position_floor";

  const auto ident = rta::StrengtheningFn::custom([](const auto& z) { return z; });
  const auto psi = rta::hocbf_transform(c, dyn, 2, {ident});
  CHECK(psi.name == "position_floor");

  Vector x(2);
  x << 0.7, -0.2;
  CHECK(psi.h(x) == doctest::Approx(0.5).epsilon(1e-15));
  x << -3.0, 1.25;
  CHECK(psi.h(x) == doctest::Approx(-1.75).epsilon(1e-15));
}

TEST_CASE("higher-order transform of the keep-out sphere matches a hand derivation") {
  rta::InspectionConfig cfg = rta::default_config();
  cfg.deputies = 1;
  const auto dyn = rta::make_dynamics(cfg, 0);
  const auto cs = rta::make_constraints(cfg, 0);
  REQUIRE(cs[0].name == "phi_1");

  const rta::StrengtheningFn a1(-2.0, -2.0);
  const auto psi = rta::hocbf_transform(cs[0], dyn, 2, {a1});

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x(6);
    x.head(3) = oracles::uniform_vector(rng, 3, -300.0, 300.0);
    x.tail(3) = oracles::uniform_vector(rng, 3, -1.0, 1.0);
    if (x.head(3).norm() < 15.0) continue;

    // Psi_1 = d/dt(|p| - r) + alpha(|p| - r) = p.v/|p| + alpha(|p| - r_d - r_c)
    const double r = x.head(3).norm();
    const double want = x.head(3).dot(x.tail(3)) / r + a1(r - cfg.r_d - cfg.r_c);
    CHECK(psi.h(x) == doctest::Approx(want).epsilon(1e-12));

    // Its gradient must also agree with finite differences (the barrier rows
    // differentiate the transformed field once more).
    const Vector grad = rta::gradient(psi.h, x);
    const Vector grad_fd = oracles::fd_gradient([&](const Vector& y) { return psi.h(y); }, x);
    CHECK((grad - grad_fd).lpNorm<Eigen::Infinity>() <=
          1e-6 * std::max(1.0, grad.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("higher-order transform rejects malformed requests") {
  rta::InspectionConfig cfg = rta::default_config();
  cfg.deputies = 1;
  const auto dyn = rta::make_dynamics(cfg, 0);
  const auto cs = rta::make_constraints(cfg, 0);

  CHECK_THROWS_AS(rta::hocbf_transform(cs[0], dyn, 0, {}), std::invalid_argument);
  CHECK_THROWS_AS(rta::hocbf_transform(cs[0], dyn, 2, {}), std::invalid_argument);
  CHECK_THROWS_AS(
      rta::hocbf_transform(cs[0], dyn, 1, {rta::StrengtheningFn()}), std::invalid_argument);
  // depth budget: degree 4 exceeds the three nested differentiation levels
  CHECK_THROWS_AS(rta::hocbf_transform(cs[0], dyn, 4,
                                       {rta::StrengtheningFn(), rta::StrengtheningFn(),
                                        rta::StrengtheningFn()}),
                  std::invalid_argument);

  rta::SafetyConstraint wrong_dim;
  wrong_dim.h = rta::ScalarField(4, [](const auto& x) { return x[0]; });
  wrong_dim.name = "wrong_dim";
  CHECK_THROWS_AS(rta::hocbf_transform(wrong_dim, dyn, 2, {rta::StrengtheningFn()}),
                  std::invalid_argument);

  Vector bad = Vector::Zero(5);
  CHECK_THROWS_AS(rta::evaluate(cs[0], bad), std::invalid_argument);
}

}  // TEST_SUITE
