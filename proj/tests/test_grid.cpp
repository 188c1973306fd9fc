#include <doctest.h>

#include <cmath>
#include <sstream>

#include "frontlab/error.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/simd/kernels.hpp"
#include "oracles.hpp"

using namespace frontlab;

TEST_SUITE("grid") {

TEST_CASE("grid spec rejects even or small node counts") {
  CHECK_THROWS_AS(GridSpec(32, 1.0), ParameterError);
  CHECK_THROWS_AS(GridSpec(34, 1.0), ParameterError);
  CHECK_THROWS_AS(GridSpec(33, 0.0), ParameterError);
  GridSpec g(33, 1.0);
  CHECK(g.spacing() == doctest::Approx(2.0 / 32));
  CHECK(g.node(g.center(), g.center()).x == 0.0);
}

TEST_CASE("upwind gradient of an affine field") {
  GridSpec g(65, 1.0);
  auto u = ScalarField::sample(g, [](Point p) { return p.x; });
  auto out = upwind_gradient_norm(u, ScalarField(g, 1.0));
  for (int j = 1; j < g.n() - 1; ++j)
    for (int i = 1; i < g.n() - 1; ++i) REQUIRE(out(i, j) == doctest::Approx(1.0).epsilon(1e-12));
  auto flat = upwind_gradient_norm(ScalarField(g, 0.3), ScalarField(g, -1.0));
  CHECK(flat.max_abs() == 0.0);
}

TEST_CASE("upwind gradient of |x| on the axis") {
  GridSpec g(101, 1.0);
  auto u = ScalarField::sample(g, [](Point p) { return norm(p); });
  auto out = upwind_gradient_norm(u, ScalarField(g, 1.0));
  // Node (0.5, 0) with c > 0: max(D+x, 0) = 1 and max(D+y, 0) = (sqrt(0.25 + h^2) - 0.5) / h.
  const int i = g.center() + 25, j = g.center();
  const double h = g.spacing();
  REQUIRE(g.node(i, j).x == doctest::Approx(0.5));
  const double dy = (std::sqrt(0.25 + h * h) - 0.5) / h;
  CHECK(out(i, j) == doctest::Approx(std::sqrt(1.0 + dy * dy)).epsilon(1e-12));
  // For -|x| only the backward x difference survives.
  auto neg = upwind_gradient_norm(ScalarField::sample(g, [](Point p) { return -norm(p); }),
                                  ScalarField(g, 1.0));
  CHECK(neg(i, j) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("upwind gradient refuses mismatched grids") {
  CHECK_THROWS_AS(upwind_gradient_norm(ScalarField(GridSpec(33, 1.0)),
                                       ScalarField(GridSpec(35, 1.0))),
                  ShapeError);
}

TEST_CASE("curvature of flat and circular level sets") {
  GridSpec g(201, 1.5);
  const double h = g.spacing();
  auto flat = curvature_term(ScalarField::sample(g, [](Point p) { return p.x; }), h);
  for (int j = 1; j < g.n() - 1; ++j)
    for (int i = 1; i < g.n() - 1; ++i) REQUIRE(std::abs(flat(i, j)) < 1e-10);
  auto cone = curvature_term(ScalarField::sample(g, [](Point p) { return 1.0 - norm(p); }), h);
  const int c = g.center();
  for (double x : {1.0, 0.5}) {
    const int i = c + static_cast<int>(std::lround(x / h));
    CHECK(cone(i, c) == doctest::Approx(-1.0 / g.node(i, c).x).epsilon(0.05));
    CHECK(cone(i, c) == doctest::Approx(-1.0 / x).epsilon(0.05));
  }
  CHECK_THROWS_AS(curvature_term(flat, 0.0), ParameterError);
}

TEST_CASE("normalized curvature is invariant under positive rescaling") {
  GridSpec g(129, 1.5);
  const double h = g.spacing();
  auto u = ScalarField::sample(g, [](Point p) { return 0.7 - std::hypot(p.x, 1.3 * p.y); });
  auto v = ScalarField::sample(g, [](Point p) { return 2.0 * (0.7 - std::hypot(p.x, 1.3 * p.y)); });
  auto ku = curvature_term(u, 1e-8), kv = curvature_term(v, 1e-8);
  auto gu = central_gradient_norm(u), gv = central_gradient_norm(v);
  double worst = 0.0;
  for (int j = 2; j < g.n() - 2; ++j)
    for (int i = 2; i < g.n() - 2; ++i) {
      if (norm(g.node(i, j)) < 0.3 || norm(g.node(i, j)) > 1.2) continue;
      worst = std::max(worst, std::abs(ku(i, j) / gu(i, j) - kv(i, j) / gv(i, j)));
    }
  CHECK(worst < 10 * h);
}

TEST_CASE("lebesgue measure of a disc and of constants") {
  GridSpec g(201, 1.5);
  auto u = ScalarField::sample(g, [](Point p) { return 1.0 - norm(p) / 0.5; });
  CHECK(lebesgue_measure(u, 0.0) == doctest::Approx(oracle::pi * 0.25).epsilon(0.005));
  CHECK(lebesgue_measure(ScalarField(g, -1.0), 0.0) == 0.0);
  CHECK(lebesgue_measure(ScalarField(g, 1.0), 0.0) == 9.0);
}

TEST_CASE("lebesgue measure is monotone in the threshold") {
  GridSpec g(65, 1.0);
  oracle::Lcg rng(7);
  auto u = ScalarField::sample(g, [&](Point) { return rng.uniform(-1.0, 1.0); });
  double prev = lebesgue_measure(u, -1.0);
  for (int k = -9; k <= 10; ++k) {
    const double m = lebesgue_measure(u, 0.1 * k);
    REQUIRE(m <= prev + 1e-12);
    prev = m;
  }
}

TEST_CASE("band measure of an annulus and a strip") {
  GridSpec g(201, 1.5);
  auto u = ScalarField::sample(g, [](Point p) { return 1.0 - norm(p); });
  CHECK(band_measure(u, -0.1, 0.0) == doctest::Approx(oracle::pi * (1.21 - 1.0)).epsilon(0.01));
  CHECK(band_measure(ScalarField(g, 1.0), -0.5, -0.4) == 0.0);
  GridSpec g1(201, 1.0);
  auto strip = ScalarField::sample(g1, [](Point p) { return p.x; });
  CHECK(band_measure(strip, -0.2, 0.2) == doctest::Approx(0.8).epsilon(0.01));
  CHECK(band_measure(u, -0.3, 0.1) ==
        doctest::Approx(lebesgue_measure(u, -0.3) - lebesgue_measure(u, 0.1)));
}

TEST_CASE("contour of a circle and of two discs") {
  GridSpec g(401, 1.5);
  auto u = ScalarField::sample(g, [](Point p) { return 0.7 - norm(p); });
  auto c = extract_contour(u, 0.0);
  CHECK(c.perimeter == doctest::Approx(2 * oracle::pi * 0.7).epsilon(0.005));
  for (const auto& pl : c.polylines)
    for (Point p : pl) REQUIRE(std::abs(interpolate(u, p)) < 1e-9);

  CHECK(extract_contour(ScalarField(g, -1.0), 0.0).empty());
  CHECK(extract_contour(ScalarField(g, -1.0), 0.0).perimeter == 0.0);

  auto two = ScalarField::sample(g, [](Point p) {
    return std::max(0.3 - std::hypot(p.x - 0.5, p.y), 0.3 - std::hypot(p.x + 0.5, p.y));
  });
  auto c2 = extract_contour(two, 0.0);
  CHECK(c2.polylines.size() == 2);
  CHECK(c2.perimeter == doctest::Approx(4 * oracle::pi * 0.3).epsilon(0.01));
  CHECK_THROWS_AS(extract_contour(u, 1.0), ParameterError);
  CHECK_THROWS_AS(extract_contour(u, -1.0), ParameterError);
}

TEST_CASE("disc perimeter converges at order >= 1.5") {
  // Off-centre disc so the error is not masked by symmetry.
  std::vector<double> err;
  for (int n : {41, 81, 161}) {
    GridSpec g(n, 1.0);
    auto u = ScalarField::sample(g, [](Point p) { return 0.61 - std::hypot(p.x - 0.03, p.y + 0.02); });
    err.push_back(std::abs(extract_contour(u, 0.0).perimeter - 2 * oracle::pi * 0.61));
  }
  const double order = std::log2(err[0] / err[2]) / 2.0;
  CHECK(order >= 1.5);
}

TEST_CASE("bilinear interpolation") {
  GridSpec g(65, 1.0);
  auto u = ScalarField::sample(g, [](Point p) { return p.x + 2 * p.y; });
  CHECK(interpolate(u, {0.25, 0.1}) == doctest::Approx(0.45).epsilon(1e-14));
  CHECK(interpolate(u, g.node(7, 11)) == u(7, 11));
  CHECK(interpolate(u, {1.5, 0.0}) == -1.0);
}

TEST_CASE("field and contour text formats") {
  GridSpec g(33, 1.25);
  auto u = ScalarField::sample(g, [](Point p) { return std::sin(3 * p.x) * p.y / 3.0; });
  std::stringstream ss;
  write_field(ss, u);
  std::string first;
  std::getline(ss, first);
  CHECK(first == "33 1.25");
  ss.seekg(0);
  CHECK(read_field(ss) == u);
  std::stringstream cs;
  write_contour_csv(cs, extract_contour(u, 0.05));
  std::string header;
  std::getline(cs, header);
  CHECK(header == "polyline_id,vertex_index,x,y");
}

TEST_CASE("vector kernels agree with the scalar reference bit for bit") {
  const simd::KernelTable* wide = simd::avx2_kernels();
  if (wide == nullptr || !simd::cpu_has_avx2()) {
    MESSAGE("AVX2 unavailable; equivalence test skipped");
    return;
  }
  const simd::KernelTable& ref = simd::scalar_kernels();
  oracle::Lcg rng(11);
  for (int n : {33, 37, 70}) {
    std::vector<double> dn(n), mid(n), up(n), speed(n), src(n);
    for (int trial = 0; trial < 20; ++trial) {
      for (int i = 0; i < n; ++i) {
        dn[i] = rng.uniform(-1, 1);
        mid[i] = rng.uniform(-1, 1);
        up[i] = rng.uniform(-1, 1);
        speed[i] = rng.uniform(-2, 2);
        src[i] = rng.uniform(-1, 1);
      }
      if (trial % 5 == 0) speed[n / 2] = 0.0;
      simd::RowArgs a{dn.data(), mid.data(), up.data(), n, 1.0 / 0.03};
      std::vector<double> r1(n, 0.0), r2(n, 0.0);
      ref.upwind(a, speed.data(), r1.data());
      wide->upwind(a, speed.data(), r2.data());
      REQUIRE(r1 == r2);
      ref.curvature(a, 1e-4, r1.data());
      wide->curvature(a, 1e-4, r2.data());
      REQUIRE(r1 == r2);
      ref.advance(a, speed.data(), 1e-4, 1e-3, 0.5, r1.data());
      wide->advance(a, speed.data(), 1e-4, 1e-3, 0.5, r2.data());
      REQUIRE(r1 == r2);
      ref.advance(a, speed.data(), 1e-4, 1e-3, 0.0, r1.data());
      wide->advance(a, speed.data(), 1e-4, 1e-3, 0.0, r2.data());
      REQUIRE(r1 == r2);
      ref.heat(a, src.data(), 1e-4, r1.data());
      wide->heat(a, src.data(), 1e-4, r2.data());
      REQUIRE(r1 == r2);
    }
  }
}

TEST_CASE("field operations match across the active kernel choice") {
  if (simd::avx2_kernels() == nullptr || !simd::cpu_has_avx2()) return;
  GridSpec g(129, 1.5);
  auto u = ScalarField::sample(g, [](Point p) { return std::tanh(3 * (0.6 - norm(p))); });
  auto c = ScalarField::sample(g, [](Point p) { return std::sin(4 * p.x) + 0.2; });
  simd::set_active(simd::Isa::scalar);
  auto g1 = upwind_gradient_norm(u, c);
  auto k1 = curvature_term(u, g.spacing());
  simd::set_active(simd::Isa::avx2);
  auto g2 = upwind_gradient_norm(u, c);
  auto k2 = curvature_term(u, g.spacing());
  CHECK(g1 == g2);
  CHECK(k1 == k2);
}

}  // TEST_SUITE
