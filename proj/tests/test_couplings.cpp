#include <doctest.h>

#include <cmath>
#include <vector>

#include "frontlab/couplings.hpp"
#include "frontlab/error.hpp"
#include "frontlab/weak_solution.hpp"
#include "oracles.hpp"

using namespace frontlab;

namespace {

ScalarField ring_kernel(const GridSpec& g, double rho, double mass, double rho_out, double ring_mass) {
  const double core = mass / (oracle::pi * rho * rho);
  const double ring = ring_mass / (oracle::pi * (rho_out * rho_out - rho * rho));
  return ScalarField::sample(g, [&](Point p) {
    const double r = norm(p);
    return r <= rho ? core : r <= rho_out ? ring : 0.0;
  });
}

double max_rel_diff(const ScalarField& a, const ScalarField& b) {
  double scale = 0.0, diff = 0.0;
  const auto av = a.values(), bv = b.values();
  for (std::size_t k = 0; k < av.size(); ++k) {
    scale = std::max(scale, std::abs(bv[k]));
    diff = std::max(diff, std::abs(av[k] - bv[k]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

TEST_SUITE("couplings") {

TEST_CASE("scalar maps") {
  auto a = ScalarMap::parse("affine(1, -1)");
  CHECK(a(0.25) == 0.75);
  CHECK(a.lipschitz() == 1.0);
  CHECK_FALSE(a.nondecreasing());
  auto c = ScalarMap::parse("clamp_affine(0, 2, -1, 1)");
  CHECK(c(3.0) == 1.0);
  CHECK(c(-3.0) == -1.0);
  CHECK(c.global_range().has_value());
  CHECK(ScalarMap::parse("constant(0.5)")(100.0) == 0.5);
  CHECK_THROWS_AS(ScalarMap::parse("cubic(1)"), ConfigError);
  CHECK_THROWS_AS(ScalarMap::parse("affine(1)"), ConfigError);
  CHECK_THROWS_AS(ScalarMap::parse("affine(1, x)"), ConfigError);
}

TEST_CASE("convolution matches the plain double sum exactly") {
  GridSpec g(33, 1.0);
  oracle::Lcg rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    auto c0 = ScalarField::sample(g, [&](Point p) { return norm(p) < 0.5 ? rng.uniform(-2, 2) : 0.0; });
    auto chi = ScalarField::sample(g, [&](Point) { return rng.uniform() < 0.4 ? 1.0 : 0.0; });
    CHECK(convolve_kernel(c0, chi) == oracle::brute_convolve(c0, chi));
  }
}

TEST_CASE("disc kernel against a disc") {
  GridSpec g(401, 1.5);
  const double rho = 0.2;
  auto c0 = ScalarField::sample(g, [&](Point p) { return norm(p) <= rho ? 1.0 / (oracle::pi * rho * rho) : 0.0; });
  auto out = convolve_kernel(c0, oracle::disc(g, 0.6));
  CHECK(out(g.center(), g.center()) == doctest::Approx(1.0).epsilon(0.01));
  CHECK(convolve_kernel(c0, ScalarField(g, 0.0)).max_abs() == 0.0);
}

TEST_CASE("single-node spike reproduces the indicator") {
  GridSpec g(65, 1.0);
  const double h = g.spacing();
  ScalarField c0(g, 0.0);
  c0(g.center(), g.center()) = 1.0 / (h * h);
  auto chi = oracle::disc(g, 0.4, {0.1, -0.05});
  auto out = convolve_kernel(c0, chi);
  auto ref = oracle::brute_convolve(c0, chi);
  CHECK(out == ref);
  CHECK(max_rel_diff(out, chi) < 1e-12);
}

TEST_CASE("dislocation speed") {
  GridSpec g(161, 1.5);
  CouplingSpec cs;
  cs.kind = CouplingKind::dislocation;
  cs.dislocation.c0 = ScalarField(g, 0.0);
  cs.dislocation.c1 = 1.0;
  auto s = dislocation_speed(cs, oracle::disc(g, 0.5), 0.0);
  CHECK(s.min() == 1.0);
  CHECK(s.max() == 1.0);

  // Zero-mass sign-changing kernel on chi = 1 gives about c1 away from the edge.
  cs.dislocation.c0 = ring_kernel(g, 0.15, 1.0, 0.3, -1.0);
  cs.dislocation.c1 = 0.2;
  auto full = dislocation_speed(cs, ScalarField(g, 1.0), 0.0);
  const double mass = kernel_l1(cs.dislocation.c0);
  CHECK(mass == doctest::Approx(2.0).epsilon(0.05));
  CHECK(full(g.center(), g.center()) == doctest::Approx(0.2).epsilon(0.05 * mass));
  auto disc_speed = dislocation_speed(cs, oracle::disc(g, 0.6), 0.0);
  auto conv = convolve_kernel(cs.dislocation.c0, oracle::disc(g, 0.6));
  CHECK(disc_speed(g.center(), g.center()) == conv(g.center(), g.center()) + 0.2);
}

TEST_CASE("FitzHugh-Nagumo evolution") {
  GridSpec g(65, 1.0);
  CouplingSpec cs;
  cs.kind = CouplingKind::fitzhugh_nagumo;
  cs.fn.alpha = ScalarMap::affine(0.0, 2.0);
  cs.fn.g_plus = ScalarMap::constant(0.0);
  cs.fn.g_minus = ScalarMap::constant(0.0);
  cs.fn.g_lower = 0.0;
  cs.fn.g_upper = 1.0;
  cs.fn.v0 = ScalarField(g, 0.3);

  SUBCASE("no source keeps a constant state") {
    auto ev = fn_evolve(cs, constant_history(oracle::disc(g, 0.4)), 0.1);
    for (const auto& v : ev.v) CHECK(v.max() == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(ev.speed.at(0.05)->max() == doctest::Approx(0.6));
  }
  SUBCASE("uniform source on chi = 1") {
    cs.fn.g_plus = ScalarMap::constant(1.0);
    cs.fn.v0 = ScalarField(g, 0.0);
    auto ev = fn_evolve(cs, constant_history(ScalarField(g, 1.0)), 0.1);
    for (std::size_t k = 0; k < ev.times.size(); ++k) {
      REQUIRE(ev.v[k].max() == doctest::Approx(ev.times[k]).epsilon(1e-8));
      REQUIRE(ev.v[k].min() == doctest::Approx(ev.times[k]).epsilon(1e-8));
    }
  }
  SUBCASE("heat decay of a bump") {
    cs.fn.v0 = ScalarField::sample(g, [](Point p) { return std::exp(-30 * (p.x * p.x + p.y * p.y)); });
    auto ev = fn_evolve(cs, constant_history(ScalarField(g, 0.0)), 0.05);
    for (std::size_t k = 1; k < ev.v.size(); ++k) REQUIRE(ev.v[k].max() <= ev.v[k - 1].max());
  }
}

TEST_CASE("FitzHugh-Nagumo state is monotone in chi") {
  GridSpec g(65, 1.0);
  CouplingSpec cs;
  cs.kind = CouplingKind::fitzhugh_nagumo;
  cs.fn.alpha = ScalarMap::affine(0.5, 1.0);
  cs.fn.g_plus = ScalarMap::clamp_affine(0.5, -1.0, -1.0, 1.0);
  cs.fn.g_minus = ScalarMap::clamp_affine(-0.5, -1.0, -1.0, 1.0);
  cs.fn.g_lower = -1.0;
  cs.fn.g_upper = 1.0;
  cs.fn.v0 = ScalarField::sample(g, [](Point p) { return 0.2 * p.x; });
  auto big = fn_evolve(cs, constant_history(oracle::disc(g, 0.5)), 0.05);
  auto small = fn_evolve(cs, constant_history(oracle::disc(g, 0.3)), 0.05);
  for (std::size_t k = 0; k < big.v.size(); ++k) {
    const auto a = big.v[k].values(), b = small.v[k].values();
    for (std::size_t m = 0; m < a.size(); ++m) REQUIRE(a[m] >= b[m]);
  }
}

TEST_CASE("volume speed") {
  GridSpec g(401, 1.5);
  CouplingSpec cs;
  cs.kind = CouplingKind::volume;
  cs.volume.beta = ScalarMap::affine(1.0, -1.0);
  CHECK(volume_speed(cs, oracle::disc(g, 0.5)) == doctest::Approx(1.0 - oracle::pi / 4).epsilon(0.005));
  cs.volume.beta = ScalarMap::affine(0.3, 2.0);
  CHECK(volume_speed(cs, ScalarField(g, 0.0)) == 0.3);
  cs.volume.beta = ScalarMap::constant(0.0);
  CHECK(volume_speed(cs, oracle::disc(g, 0.5)) == 0.0);
}

TEST_CASE("volume speed is monotone along growing sets iff beta is") {
  GridSpec g(129, 1.5);
  CouplingSpec up, down;
  up.kind = down.kind = CouplingKind::volume;
  up.volume.beta = ScalarMap::affine(0.0, 1.0);
  down.volume.beta = ScalarMap::affine(0.0, -1.0);
  double pu = -1e9, pd = 1e9;
  for (double r = 0.1; r < 1.0; r += 0.1) {
    const auto chi = oracle::disc(g, r);
    const double su = volume_speed(up, chi), sd = volume_speed(down, chi);
    CHECK(su >= pu);
    CHECK(sd <= pd);
    pu = su;
    pd = sd;
  }
}

TEST_CASE("kappa distances") {
  GridSpec g(401, 1.5);
  CHECK(kappa(oracle::disc(g, 0.5), oracle::disc(g, 0.5)) == 0.0);
  CHECK(kappa(oracle::disc(g, 0.5), oracle::disc(g, 0.6)) ==
        doctest::Approx(oracle::pi * (0.36 - 0.25)).epsilon(0.01));
  CHECK(kappa(oracle::disc(g, 0.3, {-0.5, 0}), oracle::disc(g, 0.3, {0.5, 0})) ==
        doctest::Approx(2 * oracle::pi * 0.09).epsilon(0.01));
}

TEST_CASE("heat-kernel weighted distance") {
  GridSpec g(65, 1.5);
  OccupationHistory a, b;
  for (int k = 0; k <= 4; ++k) {
    a.times.push_back(0.025 * k);
    b.times.push_back(0.025 * k);
    a.chi.push_back(ScalarField(g, 0.0));
    b.chi.push_back(ScalarField(g, 1.0));
  }
  auto same = kappa_bar(a, a, {0.1, 0.0}, 0.1);
  CHECK(same.value == 0.0);
  auto full = kappa_bar(a, b, {0.0, 0.0}, 0.1);
  CHECK(full.value == doctest::Approx(0.1).epsilon(0.02));
  CHECK(full.value <= 0.1 * (1 + 1e-9));
  auto sym = kappa_bar(b, a, {0.0, 0.0}, 0.1);
  CHECK(sym.value == full.value);

  OccupationHistory c = a;
  for (auto& f : c.chi) f = oracle::disc(g, 0.1, {1.2, 1.2});
  auto far = kappa_bar(a, c, {-1.0, -1.0}, 0.01);
  CHECK(far.value <= 1e-6);
  CHECK(far.value <= far.bound + 1e-15);
}

TEST_CASE("occupation history validation") {
  GridSpec g(33, 1.0);
  OccupationHistory h;
  h.times = {0.0, 0.1};
  h.chi = {ScalarField(g, 0.0), ScalarField(g, 0.5)};
  CHECK_THROWS_AS(h.validate(), ParameterError);
  h.chi[1] = ScalarField(g, 1.0);
  CHECK_NOTHROW(h.validate());
  CHECK(h.index_at(0.05) == 0);
  CHECK(h.index_at(0.1) == 1);
  h.times = {0.1, 0.0};
  CHECK_THROWS_AS(h.validate(), ParameterError);
}

}  // TEST_SUITE
