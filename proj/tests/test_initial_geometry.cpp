#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "frontlab/error.hpp"
#include "frontlab/initial_geometry.hpp"
#include "oracles.hpp"

using namespace frontlab;

namespace {

const std::vector<Point> kOrigin{{0.0, 0.0}};

InitCondition disc_init(double r0, int n = 201) {
  return star_shaped_u0(kOrigin, r0, GridSpec(n, 1.5));
}

}  // namespace

TEST_SUITE("initial_geometry") {

TEST_CASE("disc initial data") {
  const InitCondition init = disc_init(0.6);
  const double h = init.u0.spec().spacing();
  // Zero set is the circle of radius 0.6.
  CHECK(extract_contour(init.u0, 0.0).perimeter == doctest::Approx(2 * oracle::pi * 0.6).epsilon(0.005));
  CHECK(verify_I1(init.u0, init.R0));
  CHECK(verify_I2(init, 8).pass);
  CHECK(init.nu.kind() == DirectionKind::radial);
  // Radial identity u0((1 - l) x) - u0(x) = l |x| >= l (R - delta0) on the band.
  CHECK(init.eta0 >= (0.6 - init.delta0) * (1.0 - 2 * h));
  CHECK(init.lambda0 * init.nu.sup_norm() < 1.0);
  CHECK(init.lambda0 * init.nu.lip_norm() < 1.0);
}

TEST_CASE("certified rate grows with the ball radius") {
  double prev = 0.0;
  for (double r0 : {0.3, 0.45, 0.6}) {
    const InitCondition init = disc_init(r0);
    CHECK(init.eta0 > prev);
    prev = init.eta0;
  }
}

TEST_CASE("peanut-shaped union is certified") {
  const std::vector<Point> pts{{0.4, 0.0}, {-0.4, 0.0}};
  const InitCondition init = star_shaped_u0(pts, 0.3, GridSpec(201, 1.5));
  CHECK(verify_I1(init.u0, init.R0));
  CHECK(verify_I2(init, 8).pass);
  // The tips sit at x = +-0.4 and the waist half-height is r0.
  const GridSpec& g = init.u0.spec();
  CHECK(std::abs(interpolate(init.u0, {0.4, 0.0})) <= 2 * g.spacing());
  CHECK(std::abs(interpolate(init.u0, {-0.4, 0.0})) <= 2 * g.spacing());
  CHECK(interpolate(init.u0, {0.35, 0.0}) > 0.0);
  CHECK(interpolate(init.u0, {0.45, 0.0}) < 0.0);
  CHECK(interpolate(init.u0, {0.0, 0.3}) == doctest::Approx(0.0).epsilon(2 * g.spacing()));
}

TEST_CASE("oversized or invalid geometry is rejected") {
  CHECK_THROWS_AS(disc_init(3.0), DomainError);
  CHECK_THROWS_AS(disc_init(-0.1), ParameterError);
  const std::vector<Point> far{{1.48, 0.0}};
  CHECK_THROWS_AS(star_shaped_u0(far, 0.2, GridSpec(101, 1.5)), DomainError);
}

TEST_CASE("support and bound conditions") {
  GridSpec g(65, 1.0);
  CHECK_FALSE(verify_I1(ScalarField(g, 0.0), 0.5));
  auto sd = ScalarField::sample(g, [](Point p) { return std::clamp(2 * (0.3 - norm(p)), -1.5, 1.5); });
  CHECK_FALSE(verify_I1(sd, 2.0));
  auto ok = ScalarField::sample(g, [](Point p) { return std::clamp(0.3 - norm(p), -1.0, 1.0); });
  CHECK_FALSE(verify_I1(ok, 0.5));
}

TEST_CASE("interior displacement check detects an overstated rate") {
  InitCondition init = disc_init(0.5, 129);
  I2Verdict good = verify_I2(init, 8);
  CHECK(good.pass);
  CHECK(good.worst_margin >= -gradient_sup(init.u0) * init.u0.spec().spacing());
  init.eta0 = 1.0;  // twice the radius
  I2Verdict bad = verify_I2(init, 8);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_margin < 0.0);
  init.lambda0 = 0.0;
  I2Verdict vac = verify_I2(init, 8);
  CHECK(vac.pass);
  CHECK(std::isinf(vac.worst_margin));
  CHECK_THROWS_AS(verify_I2(init, 3), ParameterError);
}

TEST_CASE("truncation function") {
  const double d = 0.2;
  CHECK(psi_truncation(0.0, d) == 0.0);
  CHECK(psi_truncation(-1.0, d) == -1.0);
  CHECK(psi_truncation(1.0, d) == doctest::Approx(d / 2));
  CHECK_THROWS_AS(psi_truncation(0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(psi_truncation(0.0, 0.0), ParameterError);
}

TEST_CASE("truncation is monotone, continuous and Lipschitz") {
  oracle::Lcg rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const double d = rng.uniform(0.01, 0.99);
    const double slope = 2 * (2 - d) / d;
    for (int k = 0; k < 200; ++k) {
      const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
      const double lo = std::min(a, b), hi = std::max(a, b);
      const double fa = psi_truncation(lo, d), fb = psi_truncation(hi, d);
      REQUIRE(fa <= fb);
      REQUIRE(fb - fa <= slope * (hi - lo) + 1e-12);
      const bool outside = hi <= -0.75 * d || lo >= -0.5 * d;
      if (outside) REQUIRE(fb - fa <= (hi - lo) + 1e-12);
    }
    for (double r : {-0.5 * d, 0.0, 0.5 * d}) CHECK(psi_truncation(r, d) == doctest::Approx(r));
  }
}

TEST_CASE("push sample") {
  GridSpec g(101, 1.0);
  auto u = ScalarField::sample(g, [](Point p) { return p.x; });
  auto nu = DirectionField::custom(ScalarField(g, 1.0), ScalarField(g, 0.0));
  CHECK(push_sample(u, nu, 0.0) == u);
  auto pushed = push_sample(u, nu, 0.1);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i)
      if (g.node(i, j).x < 0.85) REQUIRE(pushed(i, j) == doctest::Approx(u(i, j) + 0.1).epsilon(1e-12));

  GridSpec g2(201, 1.5);
  auto circle = ScalarField::sample(g2, [](Point p) { return 0.7 - norm(p); });
  auto radial = DirectionField::radial(g2);
  auto pc = push_sample(circle, radial, 0.2);
  const double h = g2.spacing();
  for (double ang : {0.0, 0.7, 2.1, 4.0}) {
    const Point x{0.7 * std::cos(ang), 0.7 * std::sin(ang)};
    CHECK(std::abs(interpolate(pc, x) - 0.14) <= 2 * h);
  }
}

TEST_CASE("radial push maps superlevel sets into superlevel sets") {
  const InitCondition init = disc_init(0.5, 129);
  const ScalarField pushed = push_sample(init.u0, init.nu, 0.5 * init.lambda0);
  for (double r : {-0.05, 0.0, 0.05}) {
    const auto a = init.u0.values();
    const auto b = pushed.values();
    for (std::size_t k = 0; k < a.size(); ++k)
      if (a[k] >= r) REQUIRE(b[k] >= r);
  }
}

TEST_CASE("direction field norms") {
  GridSpec g(65, 1.0);
  auto radial = DirectionField::radial(g);
  CHECK(radial.sup_norm() == doctest::Approx(std::sqrt(2.0)));
  CHECK(radial.lip_norm() == doctest::Approx(1.0));
  CHECK(radial.at({0.3, -0.2}).x == -0.3);
  auto custom = DirectionField::custom(ScalarField::sample(g, [](Point p) { return 2 * p.x; }),
                                       ScalarField(g, 0.0));
  CHECK(custom.sup_norm() == doctest::Approx(2.0));
  CHECK(custom.lip_norm() == doctest::Approx(2.0).epsilon(0.05));
  CHECK(custom.at({5.0, 0.0}).x == 0.0);
  const ScalarField u = ScalarField::sample(g, [](Point p) { return 0.4 - norm(p); });
  auto grad = DirectionField::from_gradient(u);
  CHECK(grad.kind() == DirectionKind::gradient);
  CHECK(direction_kind_from_string(to_string(DirectionKind::gradient)) == DirectionKind::gradient);
}

TEST_CASE("initial condition round trip") {
  const InitCondition init = disc_init(0.4, 65);
  const auto dir = std::filesystem::temp_directory_path() / "frontlab_init_rt";
  std::filesystem::remove_all(dir);
  save_init(dir.string(), init);
  const InitCondition back = load_init(dir.string());
  CHECK(back.u0 == init.u0);
  CHECK(back.R0 == init.R0);
  CHECK(back.delta0 == init.delta0);
  CHECK(back.eta0 == init.eta0);
  CHECK(back.lambda0 == init.lambda0);
  CHECK(back.nu.kind() == DirectionKind::radial);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
