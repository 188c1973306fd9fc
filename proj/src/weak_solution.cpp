#include "frontlab/weak_solution.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace frontlab {

ScalarField chi_from_u(const ScalarField& u) {
  ScalarField out(u.spec());
  const auto src = u.values();
  auto dst = out.values();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k] = src[k] >= 0.0 ? 1.0 : 0.0;
  return out;
}

OccupationHistory chi_history(const Trajectory& traj) {
  OccupationHistory hist;
  hist.times = traj.times;
  for (const ScalarField& u : traj.snapshots) hist.chi.push_back(chi_from_u(u));
  return hist;
}

OccupationHistory constant_history(ScalarField chi) {
  OccupationHistory hist;
  hist.times.push_back(0.0);
  hist.chi.push_back(std::move(chi));
  return hist;
}

std::vector<double> uniform_times(double horizon, int steps) {
  std::vector<double> times;
  if (!(horizon > 0.0)) return times;
  for (int k = 1; k <= steps; ++k) times.push_back(horizon * k / steps);
  return times;
}

LocalProblem make_local_problem(const InitCondition& init, const CouplingSpec& coupling,
                                double gamma, double horizon, const SolveOptions& opts) {
  const GridSpec& spec = init.u0.spec();
  LocalProblem p;
  p.gamma = gamma;
  p.eps_reg = opts.eps_reg > 0.0 ? opts.eps_reg : spec.spacing();
  p.horizon = horizon;
  p.cfl_safety = opts.cfl_safety;
  const double L = spec.half_extent();
  p.far_radius = opts.far_radius > 0.0
                     ? opts.far_radius
                     : default_far_radius(coupling.speed_bound(horizon, 4.0 * L * L),
                                          horizon, init.R0, spec);
  return p;
}

namespace {

double sup_kappa(const OccupationHistory& a, const OccupationHistory& b, double t_max) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a.times[k] > t_max) break;
    worst = std::max(worst, kappa(a.chi[k], b.at(a.times[k])));
  }
  return worst;
}

bool same_speeds(const SpeedProvider& a, const SpeedProvider& b, double horizon) {
  std::vector<double> times{0.0};
  for (const auto* p : {&a, &b})
    for (double t : p->breakpoints())
      if (t < horizon) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (double t : times) {
    const auto fa = a.at(t);
    const auto fb = b.at(t);
    if (fa != fb && !(*fa == *fb)) return false;
  }
  return true;
}

}  // namespace

WeakSolution fixed_point_solve(const InitCondition& init, const CouplingSpec& coupling,
                               double gamma, double horizon,
                               const OccupationHistory& chi_init, double tol,
                               int max_iter, const SolveOptions& opts) {
  if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
  const double h = init.u0.spec().spacing();
  if (!(tol >= h * h * (1.0 - 1e-12))) throw ParameterError("tol must be >= h^2");
  coupling.validate();
  chi_init.validate();
  require_same_grid(init.u0, chi_init.chi[0], "fixed_point_solve seed");

  LocalProblem problem = make_local_problem(init, coupling, gamma, horizon, opts);
  const std::vector<double> out_times =
      opts.output_times.empty() ? uniform_times(horizon, 40) : opts.output_times;

  WeakSolution sol;
  OccupationHistory chi_prev = chi_init;
  SpeedProvider speed_prev = make_speed_provider(coupling, chi_prev, horizon);
  for (int it = 1; it <= max_iter; ++it) {
    problem.speed = speed_prev;
    Trajectory traj = solve(problem, init.u0, out_times);
    OccupationHistory chi_next = chi_history(traj);
    const double residual = sup_kappa(chi_next, chi_prev, horizon);
    sol.residual_history.push_back(residual);
    sol.prefix_residual_history.push_back(sup_kappa(chi_next, chi_prev, 0.25 * horizon));
    sol.iterations = it;
    sol.u_traj = std::move(traj);
    sol.speed_chi = chi_prev;
    sol.chi_hist = chi_next;
    if (residual <= tol) {
      sol.converged = true;
      break;
    }
    SpeedProvider speed_next = make_speed_provider(coupling, chi_next, horizon);
    if (same_speeds(speed_next, speed_prev, horizon)) {
      // The next solve would repeat this one, so its residual is zero.
      sol.residual_history.push_back(0.0);
      sol.prefix_residual_history.push_back(0.0);
      sol.converged = true;
      break;
    }
    chi_prev = std::move(chi_next);
    speed_prev = std::move(speed_next);
  }
  return sol;
}

std::vector<OccupationHistory> standard_seeds(const InitCondition& init) {
  const GridSpec& spec = init.u0.spec();
  std::vector<OccupationHistory> seeds;
  seeds.push_back(constant_history(chi_from_u(init.u0)));
  seeds.push_back(constant_history(ScalarField(spec, 0.0)));
  seeds.push_back(constant_history(ScalarField::sample(
      spec, [&](Point p) { return norm(p) <= init.R0 ? 1.0 : 0.0; })));
  return seeds;
}

ProbeReport uniqueness_probe(const InitCondition& init, const CouplingSpec& coupling,
                             double gamma, double horizon,
                             const std::vector<OccupationHistory>& seeds, double tol,
                             int max_iter, const SolveOptions& opts) {
  if (seeds.size() < 2) throw ParameterError("uniqueness_probe needs >= 2 seeds");
  ProbeReport rep;
  for (const OccupationHistory& seed : seeds) {
    rep.solutions.push_back(
        fixed_point_solve(init, coupling, gamma, horizon, seed, tol, max_iter, opts));
    const WeakSolution& s = rep.solutions.back();
    rep.iterations.push_back(s.iterations);
    rep.final_residual.push_back(s.residual_history.back());
    rep.converged.push_back(s.converged);
  }
  rep.taus = {0.25 * horizon, 0.5 * horizon, horizon};
  rep.max_delta.assign(rep.taus.size(), 0.0);
  rep.max_kappa.assign(rep.taus.size(), 0.0);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    for (std::size_t j = i + 1; j < seeds.size(); ++j) {
      const Trajectory& a = rep.solutions[i].u_traj;
      const Trajectory& b = rep.solutions[j].u_traj;
      if (a.times != b.times) throw ParameterError("probe trajectories differ in times");
      for (std::size_t q = 0; q < rep.taus.size(); ++q) {
        ProbePair pair{i, j, rep.taus[q], 0.0, 0.0};
        for (std::size_t k = 0; k < a.size() && a.times[k] <= rep.taus[q]; ++k) {
          const auto av = a.snapshots[k].values();
          const auto bv = b.snapshots[k].values();
          for (std::size_t m = 0; m < av.size(); ++m)
            pair.delta_tau = std::max(pair.delta_tau, std::abs(av[m] - bv[m]));
          pair.kappa_sup = std::max(pair.kappa_sup,
                                    kappa(chi_from_u(a.snapshots[k]), chi_from_u(b.snapshots[k])));
        }
        rep.max_delta[q] = std::max(rep.max_delta[q], pair.delta_tau);
        rep.max_kappa[q] = std::max(rep.max_kappa[q], pair.kappa_sup);
        rep.pairs.push_back(pair);
      }
    }
  }
  rep.uniq_tol = 4.0 * gradient_sup(init.u0) * init.u0.spec().spacing();
  rep.unique_short_time = rep.max_delta[0] <= rep.uniq_tol;
  return rep;
}

void write_probe_csv(std::ostream& os, const ProbeReport& rep) {
  os.precision(17);
  os << "seed_i,seed_j,tau,delta_tau,kappa_sup\n";
  for (const ProbePair& p : rep.pairs)
    os << p.seed_i << ',' << p.seed_j << ',' << p.tau << ',' << p.delta_tau << ','
       << p.kappa_sup << '\n';
}

void write_probe_summary(std::ostream& os, const ProbeReport& rep) {
  os.precision(17);
  for (std::size_t q = 0; q < rep.taus.size(); ++q)
    os << "delta_tau[" << q << "]=" << rep.max_delta[q] << "\n";
  for (std::size_t s = 0; s < rep.iterations.size(); ++s)
    os << "seed[" << s << "].iterations=" << rep.iterations[s] << "\n"
       << "seed[" << s << "].final_residual=" << rep.final_residual[s] << "\n"
       << "seed[" << s << "].converged=" << (rep.converged[s] ? "true" : "false") << "\n";
  os << "uniq_tol=" << rep.uniq_tol << "\n"
     << "verdict=" << (rep.unique_short_time ? "pass" : "fail") << "\n";
}

std::vector<double> classicality_measure(const Trajectory& traj, double eps_band) {
  std::vector<double> areas;
  for (const ScalarField& u : traj.snapshots) {
    std::size_t count = 0;
    for (double v : u.values())
      if (std::abs(v) <= eps_band) ++count;
    const double h = u.spec().spacing();
    areas.push_back(static_cast<double>(count) * h * h);
  }
  return areas;
}

NonFatteningFit fit_non_fattening(const ScalarField& u, const std::vector<double>& eps) {
  NonFatteningFit fit;
  const double h = u.spec().spacing();
  std::vector<double> area;
  for (double e : eps) {
    std::size_t count = 0;
    for (double v : u.values())
      if (std::abs(v) <= e) ++count;
    area.push_back(static_cast<double>(count) * h * h);
  }
  const double m = static_cast<double>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    sx += eps[k];
    sy += area[k];
    sxx += eps[k] * eps[k];
    sxy += eps[k] * area[k];
  }
  const double den = m * sxx - sx * sx;
  fit.slope = den > 0.0 ? (m * sxy - sx * sy) / den : 0.0;
  fit.intercept = (sy - fit.slope * sx) / m;
  fit.intercept_bound = 2.0 * h * extract_contour(u, 0.0).perimeter;
  fit.pass = fit.intercept <= fit.intercept_bound;
  return fit;
}

}  // namespace frontlab
