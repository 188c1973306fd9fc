#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "frontlab/error.hpp"
#include "frontlab/scenario.hpp"
#include "oracles.hpp"

using namespace frontlab;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("minimal config") {
  const auto cfg = parse_config("# empty scenario\ninit.r0 = 0.4\n\nhorizon = 0.05\n");
  CHECK(cfg.grid_n == 129);
  CHECK(cfg.r0 == 0.4);
  CHECK(cfg.horizon == 0.05);
  CHECK(cfg.coupling_kind == CouplingKind::volume);
  const double h = cfg.grid().spacing();
  CHECK(cfg.tolerance() == 4 * h * h);
  CHECK(cfg.times().size() == static_cast<std::size_t>(cfg.output_steps));
}

TEST_CASE("config values") {
  const auto cfg = parse_config(
      "grid.n = 65\ninit.kind = star_shaped\ninit.kernel_points = 0.2, 0; -0.2, 0\n"
      "coupling.kind = dislocation\ncoupling.kernel = disc(0.1, 1)\ncoupling.c1 = 0.3\n"
      "output_times = 0.01, 0.02\nchecks = init, cone\n");
  CHECK(cfg.kernel_points.size() == 2);
  CHECK(cfg.kernel_points[1].x == -0.2);
  CHECK(cfg.kernel.kind == "disc");
  CHECK(cfg.times() == std::vector<double>{0.01, 0.02});
  CHECK(cfg.checks == std::vector<std::string>{"init", "cone"});
  const auto kern = build_kernel(cfg, cfg.grid());
  const double h = cfg.grid().spacing();
  double mass = 0.0;
  for (double v : kern.values()) mass += v * h * h;
  CHECK(mass == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("config errors name the key and line") {
  CHECK(error_of("gamma = -1") == "line 1: gamma: gamma must be >= 0");
  const std::string kind = error_of("grid.n = 65\ncoupling.kind = magnetic\n");
  CHECK(kind.find("line 2") != std::string::npos);
  CHECK(kind.find("coupling.kind") != std::string::npos);
  CHECK(error_of("colour = red").find("colour") != std::string::npos);
  CHECK(error_of("gamma = 1\ngamma = 2").find("line 2") != std::string::npos);
  CHECK_FALSE(error_of("gamma").empty());
  CHECK_FALSE(error_of("grid.n = 64").empty());
  CHECK_FALSE(error_of("checks = init, telepathy").empty());
  CHECK_FALSE(error_of("horizon = abc").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/frontlab.cfg"), Error);
}

TEST_CASE("presets") {
  CHECK(preset_names().size() == 7);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto cfg = parse_config(preset_text(name));
    CHECK_FALSE(cfg.checks.empty());
    CHECK_NOTHROW(build_coupling(cfg, cfg.grid()));
  }
  CHECK_THROWS_AS(preset_text("nope"), ConfigError);
}

TEST_CASE("radial oracle") {
  CHECK(radial_oracle(ScalarMap::constant(1.0), 0.0, 0.5, 0.4) == doctest::Approx(0.9).epsilon(1e-9));
  const double mcf = radial_oracle(ScalarMap::constant(0.0), 1.0, 1.0, 0.18);
  CHECK(mcf == doctest::Approx(std::sqrt(1.0 - 2 * 0.18)).epsilon(1e-7));
  const double vol = radial_oracle(ScalarMap::affine(1.0, -1.0), 0.05, 0.5, 0.3);
  CHECK(vol == doctest::Approx(oracle::radius_ode(1.0, -1.0, 0.05, 0.5, 0.3)).epsilon(1e-7));
}

TEST_CASE("digests and manifest") {
  const fs::path dir = scratch("frontlab_manifest");
  { std::ofstream(dir / "abc.txt") << "abc"; }
  { std::ofstream(dir / "empty.txt"); }
  fs::create_directories(dir / "sub");
  { std::ofstream(dir / "sub" / "x.txt") << "abc"; }
  CHECK(sha256_file((dir / "abc.txt").string()) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_file((dir / "empty.txt").string()) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  write_manifest(dir.string());
  const std::string m = slurp(dir / "MANIFEST.sha256");
  CHECK(m.find("  abc.txt\n") < m.find("  empty.txt\n"));
  CHECK(m.find("  sub/x.txt\n") != std::string::npos);
  CHECK(m.find("MANIFEST") == std::string::npos);
  write_manifest(dir.string());
  CHECK(slurp(dir / "MANIFEST.sha256") == m);
  fs::remove_all(dir);
}

TEST_CASE("small run writes its artifacts and verifies again") {
  const fs::path dir = scratch("frontlab_small_run");
  auto cfg = parse_config(
      "grid.n = 65\ninit.r0 = 0.5\ncoupling.beta = affine(1, -1)\ngamma = 0.05\n"
      "horizon = 0.05\noutput_times = uniform(5)\n"
      "checks = init, radius, key_estimate, lower_gradient, perimeter\n"
      "check.radius_tol = 0.05\n",
      dir.string());
  const RunResult res = run_scenario(cfg);
  CHECK(res.converged);
  for (const char* f : {"config.txt", "weak.csv", "radius.csv", "summary.txt", "MANIFEST.sha256",
                        "init/init.txt", "checks/key_estimate.csv", "checks/init.verdict",
                        "contours/contour_0.csv"})
    CHECK_MESSAGE(fs::exists(dir / "out" / f), f);
  CHECK_FALSE(fs::exists(dir / "out" / "FAILED"));
  const RunResult again = verify_trajectory((dir / "out" / "trajectory").string(),
                                            (dir / "verify").string());
  CHECK(fs::exists(dir / "verify" / "summary.txt"));
  const std::string first = slurp(dir / "out" / "checks" / "key_estimate.verdict");
  CHECK(slurp(dir / "verify" / "checks" / "key_estimate.verdict") == first);
  (void)again;
  fs::remove_all(dir);
}

TEST_CASE("escaping front leaves a failure marker") {
  const fs::path dir = scratch("frontlab_escape");
  auto cfg = parse_config(
      "grid.n = 65\ninit.r0 = 0.5\ncoupling.beta = constant(3)\nhorizon = 1\n"
      "output_times = uniform(4)\n",
      dir.string());
  CHECK_THROWS_AS(run_scenario(cfg), FrontEscapeError);
  CHECK(fs::exists(dir / "out" / "FAILED"));
  fs::remove_all(dir);
}

}  // TEST_SUITE
