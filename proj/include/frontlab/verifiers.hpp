#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "frontlab/initial_geometry.hpp"
#include "frontlab/local_solver.hpp"

namespace frontlab {

/// eta(t) = eta0 - M2 sqrt(t), positive before t_bar = (eta0 / M2)^2.
struct EtaSchedule {
  double eta0 = 0.0;
  double M2 = 0.0;
  double t_bar = 0.0;

  static EtaSchedule make(double eta0, double M2);
  double eta(double t) const;
};

struct ReportRow {
  double time = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};

struct VerificationReport {
  std::string name;
  std::vector<ReportRow> rows;
  std::map<std::string, double> constants;
  std::map<std::string, double> tolerances;
  std::vector<std::string> notes;
  bool pass = false;
};

/// CSV with header time,measured,bound,margin.
void write_report_csv(std::ostream& os, const VerificationReport& rep);
/// key=value lines: name, verdict, constants, tolerances, notes.
void write_report_verdict(std::ostream& os, const VerificationReport& rep);

/// Default lambda_bar = min(lambda0 / 2, delta0 / (4 eta0)).
double default_lambda_bar(const InitCondition& init);

struct KeyEstimate {
  EtaSchedule schedule;
  std::vector<double> times;
  std::vector<double> eta_emp;      ///< NaN where the band is empty
  double eta_floor = 0.0;           ///< h ||Du0||
  double t_bar_emp = 0.0;           ///< first time eta_emp <= eta_floor, else last time
  bool floor_reached = false;
  bool has_decay = false;           ///< >= 2 points with eta below eta_emp(0)
  double decay_exponent = 0.0;      ///< log-log slope of eta_emp(0) - eta_emp(t)
  double lambda_bar = 0.0;
  VerificationReport report;

  /// eta_emp(t) at a stored time index, or the schedule value if missing.
  double eta_at(std::size_t k) const;
  /// min eta_emp over stored times <= t_max.
  double eta_min(double t_max) const;
};

/// eta_emp(t) = min over {|u(., t)| <= delta0/4} and lambda in
/// {k lambda_bar / 8} of [u(x + lambda nu(x), t) - u(x, t)] / lambda. The
/// schedule is fitted to the running minimum of eta_emp.
KeyEstimate key_estimate_report(const Trajectory& traj, const InitCondition& init,
                                double lambda_bar);

/// min |Du| on {|u| < delta0/4} against eta_emp(t) / sup_band |nu|.
VerificationReport lower_gradient_report(const Trajectory& traj, const InitCondition& init,
                                         const KeyEstimate& key);

struct ConeOptions {
  double K = 0.0;
  bool flip_axis = false;        ///< adversarial check
  int max_vertices = 160;        ///< per contour
};

/// Samples cones z + lambda nu(z) + (lambda rho / lambda_bar) xi and checks
/// u >= r - ||Du0|| h. Passes when at most 1% of the points fail.
VerificationReport cone_report(const Trajectory& traj, const InitCondition& init,
                               const KeyEstimate& key, const ConeOptions& opts);

/// Perimeters of {u = r} for t <= t_bar_emp / 2 against the co-area bound
/// 2 ||Du0|| e^{Kt} area(Omega_t^r) / eta_bar and twice the initial perimeter.
VerificationReport perimeter_report(const Trajectory& traj, const InitCondition& init,
                                    const KeyEstimate& key, double K);

/// Band areas {-delta <= u < 0} and their heat-kernel-weighted integrals
/// against M delta / eta_bar, with linearity in delta.
VerificationReport band_measure_report(const Trajectory& traj, const InitCondition& init,
                                       const KeyEstimate& key);

/// Smallest M1 with sup(u1 - u2)(t) <= sup(u1 - u2)(0) + M1 (k1 t + sqrt(k2 t)).
VerificationReport continuous_dependence_report(const Trajectory& a, const Trajectory& b,
                                                double kappa1, double kappa2);

/// M1 changes by less than 50% between the two reports.
bool m1_stable(const VerificationReport& full, const VerificationReport& half);

/// min over the band of [u((1 - lambda) x, t) - u(x, t)] at lambda = lambda_bar/2,
/// tested against lambda eta0 / 2 - ||Du0|| h at every stored time.
VerificationReport star_shape_report(const Trajectory& traj, const InitCondition& init,
                                     double lambda_bar);

struct GammaSweep {
  std::vector<double> gammas;
  std::vector<bool> passed;
  double gamma_bar = 0.0;       ///< largest gamma with every smaller one passing
};

GammaSweep star_shape_gamma_sweep(const std::vector<double>& gammas,
                                  const std::function<Trajectory(double)>& run,
                                  const InitCondition& init, double lambda_bar);

/// Area of {|u| <= eps} for eps in {2h, 4h, 8h}, linear with intercept at
/// most 2 h perimeter, for t <= t_bar_emp.
VerificationReport non_fattening_report(const Trajectory& traj, const KeyEstimate& key);

}  // namespace frontlab
