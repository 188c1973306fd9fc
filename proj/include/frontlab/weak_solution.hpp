#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "frontlab/couplings.hpp"
#include "frontlab/initial_geometry.hpp"
#include "frontlab/local_solver.hpp"

namespace frontlab {

/// 1 where u >= 0, else 0.
ScalarField chi_from_u(const ScalarField& u);

/// chi_from_u applied to every snapshot.
OccupationHistory chi_history(const Trajectory& traj);

/// Constant-in-time history holding one field.
OccupationHistory constant_history(ScalarField chi);

struct SolveOptions {
  std::vector<double> output_times;  ///< empty: 40 uniform steps
  double cfl_safety = 0.5;
  double eps_reg = 0.0;              ///< 0: one grid spacing
  double far_radius = 0.0;           ///< 0: default_far_radius
};

/// Times used when SolveOptions::output_times is empty.
std::vector<double> uniform_times(double horizon, int steps);

struct WeakSolution {
  Trajectory u_traj;
  OccupationHistory chi_hist;    ///< chi_from_u of every stored snapshot
  OccupationHistory speed_chi;   ///< the chi that produced u_traj
  int iterations = 0;
  std::vector<double> residual_history;
  /// Residuals restricted to t <= T/4.
  std::vector<double> prefix_residual_history;
  bool converged = false;
};

LocalProblem make_local_problem(const InitCondition& init, const CouplingSpec& coupling,
                                double gamma, double horizon, const SolveOptions& opts);

/// Picard iteration on chi over the full horizon: u^k solves the frozen
/// equation for c[chi^{k-1}], chi^k = chi_from_u(u^k). Stops once
/// sup_t kappa(chi^k, chi^{k-1}) <= tol, or when c[chi^k] equals
/// c[chi^{k-1}] so that every later iterate repeats this one.
WeakSolution fixed_point_solve(const InitCondition& init, const CouplingSpec& coupling,
                               double gamma, double horizon,
                               const OccupationHistory& chi_init, double tol,
                               int max_iter, const SolveOptions& opts = {});

struct ProbePair {
  std::size_t seed_i = 0;
  std::size_t seed_j = 0;
  double tau = 0.0;
  double delta_tau = 0.0;
  double kappa_sup = 0.0;
};

struct ProbeReport {
  std::vector<ProbePair> pairs;
  std::vector<double> taus;          ///< T/4, T/2, T
  std::vector<double> max_delta;     ///< per tau, max over pairs
  std::vector<double> max_kappa;
  std::vector<int> iterations;       ///< per seed
  std::vector<double> final_residual;
  std::vector<bool> converged;
  double uniq_tol = 0.0;
  bool unique_short_time = false;
  std::vector<WeakSolution> solutions;
};

/// Standard seeds: 1{u0 >= 0}, 0 and the indicator of B(0, R0), each
/// constant in time.
std::vector<OccupationHistory> standard_seeds(const InitCondition& init);

ProbeReport uniqueness_probe(const InitCondition& init, const CouplingSpec& coupling,
                             double gamma, double horizon,
                             const std::vector<OccupationHistory>& seeds, double tol,
                             int max_iter, const SolveOptions& opts = {});

void write_probe_csv(std::ostream& os, const ProbeReport& rep);
void write_probe_summary(std::ostream& os, const ProbeReport& rep);

/// Area h^2 #{nodes : |u| <= eps_band} at every stored time.
std::vector<double> classicality_measure(const Trajectory& traj, double eps_band);

struct NonFatteningFit {
  double slope = 0.0;
  double intercept = 0.0;
  double intercept_bound = 0.0;   ///< 2 h perimeter
  bool pass = true;
};

/// Least-squares line through area(eps) over the given eps values; passes
/// when the intercept is at most 2 h times the zero-contour perimeter.
NonFatteningFit fit_non_fattening(const ScalarField& u, const std::vector<double>& eps);

}  // namespace frontlab
