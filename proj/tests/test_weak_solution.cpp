#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "frontlab/error.hpp"
#include "frontlab/scenario.hpp"
#include "frontlab/weak_solution.hpp"
#include "oracles.hpp"

using namespace frontlab;

namespace {

const std::vector<Point> kOrigin{{0.0, 0.0}};

CouplingSpec volume(const ScalarMap& beta) {
  CouplingSpec c;
  c.kind = CouplingKind::volume;
  c.volume.beta = beta;
  return c;
}

SolveOptions coarse(double T, int steps = 10) {
  SolveOptions o;
  o.output_times = uniform_times(T, steps);
  return o;
}

}  // namespace

TEST_SUITE("weak_solution") {

TEST_CASE("occupation from the level-set function") {
  GridSpec g(65, 1.0);
  auto u = ScalarField::sample(g, [](Point p) { return 0.4 - norm(p); });
  auto chi = chi_from_u(u);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) REQUIRE(chi(i, j) == (u(i, j) >= 0.0 ? 1.0 : 0.0));
  CHECK(chi_from_u(ScalarField(g, -1.0)).max() == 0.0);
  ScalarField tie(g, -1.0);
  tie(5, 7) = 0.0;
  CHECK(chi_from_u(tie)(5, 7) == 1.0);
}

TEST_CASE("uncoupled volume flow converges at once") {
  GridSpec g(101, 1.5);
  const auto init = star_shaped_u0(kOrigin, 0.6, g);
  const double h = g.spacing();
  auto sol = fixed_point_solve(init, volume(ScalarMap::constant(0.0)), 0.5, 0.05,
                               standard_seeds(init)[0], 4 * h * h, 12, coarse(0.05));
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
  CHECK(sol.residual_history.back() <= 4 * h * h);
}

TEST_CASE("speed independent of chi converges in at most two solves") {
  GridSpec g(101, 1.5);
  const auto init = star_shaped_u0(kOrigin, 0.4, g);
  const double h = g.spacing();
  CouplingSpec d;
  d.kind = CouplingKind::dislocation;
  d.dislocation.c0 = ScalarField(g, 0.0);
  d.dislocation.c1 = 1.0;
  auto sol = fixed_point_solve(init, d, 0.0, 0.2, constant_history(ScalarField(g, 0.0)),
                               4 * h * h, 12, coarse(0.2));
  CHECK(sol.converged);
  CHECK(sol.iterations <= 2);
  CHECK(mean_front_radius(sol.u_traj.snapshots.back()) == doctest::Approx(0.6).epsilon(0.03));

  CouplingSpec fn;
  fn.kind = CouplingKind::fitzhugh_nagumo;
  fn.fn.alpha = ScalarMap::constant(0.5);
  fn.fn.g_plus = ScalarMap::constant(1.0);
  fn.fn.g_minus = ScalarMap::constant(-1.0);
  fn.fn.g_lower = -1.0;
  fn.fn.g_upper = 1.0;
  fn.fn.v0 = ScalarField(g, 0.0);
  auto sf = fixed_point_solve(init, fn, 0.0, 0.2, standard_seeds(init)[0], 4 * h * h, 12,
                              coarse(0.2));
  CHECK(sf.converged);
  CHECK(sf.iterations <= 2);
  CHECK(mean_front_radius(sf.u_traj.snapshots.back()) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("argument checks") {
  GridSpec g(65, 1.0);
  const auto init = star_shaped_u0(kOrigin, 0.3, g);
  const double h = g.spacing();
  const auto seed = standard_seeds(init)[0];
  CHECK_THROWS_AS(fixed_point_solve(init, volume(ScalarMap::constant(0.0)), 0.1, 0.05, seed,
                                    4 * h * h, 0),
                  ParameterError);
  CHECK_THROWS_AS(fixed_point_solve(init, volume(ScalarMap::constant(0.0)), 0.1, 0.05, seed,
                                    0.5 * h * h, 4),
                  ParameterError);
  CHECK_THROWS_AS(uniqueness_probe(init, volume(ScalarMap::constant(0.0)), 0.1, 0.05, {seed},
                                   4 * h * h, 4),
                  ParameterError);
}

TEST_CASE("bracket and self-consistency of a coupled solution") {
  GridSpec g(101, 1.5);
  const auto init = star_shaped_u0(kOrigin, 0.5, g);
  const double h = g.spacing();
  const auto coupling = volume(ScalarMap::affine(1.0, -1.0));
  const auto opts = coarse(0.1);
  auto sol = fixed_point_solve(init, coupling, 0.05, 0.1, standard_seeds(init)[0], 4 * h * h,
                               12, opts);
  REQUIRE(sol.converged);
  CHECK(sol.residual_history.back() <= 4 * h * h);
  for (std::size_t k = 0; k < sol.u_traj.size(); ++k) {
    const auto u = sol.u_traj.snapshots[k].values();
    const auto chi = sol.chi_hist.chi[k].values();
    for (std::size_t m = 0; m < u.size(); ++m) {
      REQUIRE((u[m] > 0.0 ? 1.0 : 0.0) <= chi[m]);
      REQUIRE(chi[m] <= (u[m] >= 0.0 ? 1.0 : 0.0));
    }
  }
  LocalProblem p = make_local_problem(init, coupling, 0.05, 0.1, opts);
  p.speed = make_speed_provider(coupling, sol.speed_chi, 0.1);
  const Trajectory again = solve(p, init.u0, opts.output_times);
  for (std::size_t k = 0; k < again.size(); ++k) CHECK(again.snapshots[k] == sol.u_traj.snapshots[k]);
}

TEST_CASE("probe on identical and decoupled seeds") {
  GridSpec g(81, 1.5);
  const auto init = star_shaped_u0(kOrigin, 0.5, g);
  const double h = g.spacing();
  const auto seed = standard_seeds(init)[0];
  auto same = uniqueness_probe(init, volume(ScalarMap::affine(1.0, -1.0)), 0.05, 0.1,
                               {seed, seed}, 4 * h * h, 12, coarse(0.1));
  for (double d : same.max_delta) CHECK(d == 0.0);

  CouplingSpec d;
  d.kind = CouplingKind::dislocation;
  d.dislocation.c0 = ScalarField(g, 0.0);
  d.dislocation.c1 = 0.5;
  auto dec = uniqueness_probe(init, d, 0.05, 0.1, standard_seeds(init), 4 * h * h, 12, coarse(0.1));
  for (double x : dec.max_delta) CHECK(x == 0.0);
  CHECK(dec.unique_short_time);
  CHECK(dec.max_delta[0] <= dec.max_delta[1]);
  CHECK(dec.max_delta[1] <= dec.max_delta[2]);
  std::ostringstream csv;
  write_probe_csv(csv, dec);
  CHECK(csv.str().rfind("seed_i,seed_j,tau,delta_tau,kappa_sup\n", 0) == 0);
  std::ostringstream sum;
  write_probe_summary(sum, dec);
  CHECK(sum.str().find("verdict=pass") != std::string::npos);
}

TEST_CASE("classicality measure of a unit-gradient field") {
  GridSpec g(401, 1.5);
  Trajectory traj;
  traj.times = {0.0};
  traj.snapshots = {ScalarField::sample(g, [](Point p) { return 0.7 - norm(p); })};
  const double a1 = classicality_measure(traj, 0.1)[0];
  CHECK(a1 == doctest::Approx(2 * oracle::pi * 0.7 * 0.2).epsilon(0.05));
  const double a2 = classicality_measure(traj, 0.05)[0];
  CHECK(a1 / a2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(classicality_measure(traj, 0.0)[0] == 0.0);
  const auto fit = fit_non_fattening(traj.snapshots[0], {0.02, 0.04, 0.08});
  CHECK(fit.pass);
  CHECK(fit.slope == doctest::Approx(2 * 2 * oracle::pi * 0.7).epsilon(0.05));
}

TEST_CASE("prefix residuals settle after the second iteration") {
  GridSpec g(101, 1.5);
  const auto init = star_shaped_u0(kOrigin, 0.5, g);
  const double h = g.spacing();
  CouplingSpec d;
  d.kind = CouplingKind::dislocation;
  d.dislocation.c0 = ScalarField::sample(g, [](Point p) {
    const double r = norm(p);
    return r <= 0.15 ? 1.3 / (oracle::pi * 0.0225) : r <= 0.3 ? -0.3 / (oracle::pi * 0.0675) : 0.0;
  });
  d.dislocation.c1 = 0.2;
  for (const auto& seed : standard_seeds(init)) {
    auto sol = fixed_point_solve(init, d, 0.1, 0.2, seed, 4 * h * h, 12, coarse(0.2, 20));
    CHECK(sol.converged);
    const auto& r = sol.prefix_residual_history;
    for (std::size_t k = 2; k < r.size(); ++k) CHECK(r[k] <= r[k - 1]);
  }
}

}  // TEST_SUITE
