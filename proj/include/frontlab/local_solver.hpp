#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "frontlab/grid.hpp"

namespace frontlab {

/// Time-dependent speed c(., t), constant on each interval [b_k, b_{k+1})
/// between consecutive breakpoints.
class SpeedProvider {
 public:
  using Source = std::function<std::shared_ptr<const ScalarField>(double t)>;

  SpeedProvider() = default;
  SpeedProvider(std::vector<double> breakpoints, Source source);

  static SpeedProvider constant(ScalarField c);

  /// Field in effect at time t.
  std::shared_ptr<const ScalarField> at(double t) const { return source_(t); }
  /// Ascending times in (0, inf) where the field may change.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  explicit operator bool() const { return static_cast<bool>(source_); }

 private:
  std::vector<double> breakpoints_;
  Source source_;
};

struct LocalProblem {
  SpeedProvider speed;
  double gamma = 0.0;
  double eps_reg = 1e-6;
  double far_radius = 0.0;
  double horizon = 0.0;
  double cfl_safety = 0.5;
};

/// min(c_sup T + R0 + sqrt 2, L - 3h).
double default_far_radius(double c_sup, double horizon, double R0,
                          const GridSpec& spec);

struct Trajectory {
  std::vector<double> times;
  std::vector<ScalarField> snapshots;
  /// Largest step taken on the interval ending at each snapshot (0 first).
  std::vector<double> dt_used;
  /// max |Du| over {|u| <= 1/4} inside B(0, far_radius - 4h).
  std::vector<double> lipschitz_log;
  double far_radius = 0.0;

  std::size_t size() const { return times.size(); }
};

/// safety * min(h / (c_max + 1e-12), h^2 / (4 gamma + 1e-12)).
double cfl_timestep(double c_max, double gamma, double h, double safety);

/// Largest step for which the explicit update is monotone:
/// dt (sqrt(2) c_max / h + 4 gamma / h^2) <= 1.
double stable_timestep(double c_max, double gamma, double h);

/// One explicit Euler step followed by the clamp to [-1, 1] and the far-field
/// overwrite u = -1 outside B(0, far_radius). Throws StabilityError when dt
/// exceeds stable_timestep.
ScalarField advance(const ScalarField& u, const ScalarField& c, double gamma,
                    double eps_reg, double dt, double far_radius);

/// Marches u0 to every output time (0 and the horizon are always included).
/// Throws FrontEscapeError once a node with u >= 0 lies within 4h of the
/// far-field radius.
Trajectory solve(const LocalProblem& problem, const ScalarField& u0,
                 const std::vector<double>& output_times);

/// Lipschitz measurement used by the trajectory log.
double band_lipschitz(const ScalarField& u, double far_radius);

struct RegularityReport {
  double K_fit = 0.0;
  bool seminorm_decays = false;
  double holder_const = 0.0;
};

/// Fits ||Du(t)|| <= ||Du(0)|| e^{K t} and the time-Hoelder constant of
/// |u(x,t) - u(x,s)| / |t - s|^{1/2} over the measured band.
RegularityReport regularity_report(const Trajectory& traj);

/// Directory with t_<index>.txt dumps, manifest.csv and meta.txt.
void save_trajectory(const std::string& dir, const Trajectory& traj);
Trajectory load_trajectory(const std::string& dir);

}  // namespace frontlab
