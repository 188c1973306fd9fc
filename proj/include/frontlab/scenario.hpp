#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "frontlab/couplings.hpp"
#include "frontlab/grid.hpp"
#include "frontlab/initial_geometry.hpp"
#include "frontlab/weak_solution.hpp"

namespace frontlab {

/// Built-in kernel shapes for the dislocation coupling.
struct KernelShape {
  std::string kind = "none";        ///< none | disc | core_ring | file
  std::vector<double> params;
  std::string path;                 ///< kind == file
};

struct ScenarioConfig {
  int grid_n = 129;
  double grid_L = 1.5;

  std::string init_kind = "circle";  ///< circle | star_shaped
  double r0 = 0.5;
  std::vector<Point> kernel_points{{0.0, 0.0}};

  CouplingKind coupling_kind = CouplingKind::volume;
  ScalarMap beta = ScalarMap::constant(0.0);
  KernelShape kernel;
  double c1 = 0.0;
  ScalarMap alpha = ScalarMap::constant(0.0);
  ScalarMap g_plus = ScalarMap::constant(0.0);
  ScalarMap g_minus = ScalarMap::constant(0.0);
  double v0 = 0.0;
  double g_lower = 0.0;
  double g_upper = 0.0;
  double heat_safety = 0.5;
  int speed_samples = 40;

  double gamma = 0.0;
  double horizon = 0.1;
  int output_steps = 40;
  std::vector<double> output_times;  ///< explicit list; overrides output_steps

  double cfl_safety = 0.5;
  double eps_reg = 0.0;              ///< 0: h
  double far_radius = 0.0;

  double weak_tol = 0.0;             ///< 0: 4 h^2
  int weak_max_iter = 12;
  int probe_seeds = 3;

  std::vector<std::string> checks;
  double radius_tol = 0.02;
  std::vector<double> gamma_sweep;
  double cd_radius = 0.5;

  std::string output_dir = "out";
  std::string base_dir = ".";        ///< relative paths resolve against this

  GridSpec grid() const { return GridSpec(grid_n, grid_L); }
  std::vector<double> times() const;
  double tolerance() const;
};

/// Names accepted by the `checks` key.
const std::vector<std::string>& known_checks();

/// Parses the line-based key = value format. Throws ConfigError naming the
/// key and line of the first problem.
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);

InitCondition build_init(const ScenarioConfig& cfg);
ScalarField build_kernel(const ScenarioConfig& cfg, const GridSpec& spec);
CouplingSpec build_coupling(const ScenarioConfig& cfg, const GridSpec& spec);

/// RK4 solution of R' = beta(pi R^2) - gamma / R for the volume coupling.
double radial_oracle(const ScalarMap& beta, double gamma, double R0, double t);

/// Mean distance to the origin of the zero-contour vertices.
double mean_front_radius(const ScalarField& u);

struct CheckOutcome {
  std::string name;
  bool pass = false;
};

struct RunResult {
  std::vector<CheckOutcome> checks;
  bool converged = false;
  bool pass = false;
};

/// Solves the scenario, runs the requested checks and writes every artifact
/// plus MANIFEST.sha256 into cfg.output_dir. On error a FAILED marker holds
/// the message and the exception propagates.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Runs the uniqueness probe alone.
RunResult run_probe(const ScenarioConfig& cfg);

/// Reruns the trajectory verifiers on a stored trajectory directory. The
/// initial condition is read from <dir>/init or <dir>/../init.
RunResult verify_trajectory(const std::string& traj_dir, const std::string& out_dir);

const std::vector<std::string>& preset_names();
/// Config text of a preset; throws ConfigError for unknown names.
std::string preset_text(const std::string& name);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);
/// Writes "<digest>  <relative path>" for every file under dir, sorted.
void write_manifest(const std::string& dir);

}  // namespace frontlab
