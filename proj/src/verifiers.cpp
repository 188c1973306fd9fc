#include "frontlab/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "frontlab/couplings.hpp"
#include "frontlab/parallel.hpp"
#include "frontlab/weak_solution.hpp"
#include "stencil.hpp"

namespace frontlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kLambdaSamples = 8;

double inner_radius(const Trajectory& traj) {
  return traj.far_radius - 4.0 * traj.snapshots.at(0).spec().spacing();
}

bool in_region(const GridSpec& spec, int i, int j, double inner) {
  const Point p = spec.node(i, j);
  return p.x * p.x + p.y * p.y <= inner * inner;
}

// Applies f to every node of {|u| <= band} (strict when `strict`) inside the
// measurement disc and returns the sequential min of the per-row minima.
template <class F>
double band_min(const ScalarField& u, double band, bool strict, double inner, F&& f) {
  const GridSpec& spec = u.spec();
  const int n = spec.n();
  std::vector<double> rows(n, kInf);
  parallel_for(0, n, [&](int j) {
    for (int i = 0; i < n; ++i) {
      const double a = std::abs(u(i, j));
      if (strict ? !(a < band) : !(a <= band)) continue;
      if (!in_region(spec, i, j, inner)) continue;
      rows[j] = std::min(rows[j], f(i, j));
    }
  });
  double best = kInf;
  for (double v : rows) best = std::min(best, v);
  return best;
}

double du0_sup(const InitCondition& init) { return gradient_sup(init.u0); }

std::vector<Point> sample_vertices(const FrontContour& c, int max_vertices) {
  std::vector<Point> all;
  for (const auto& pl : c.polylines) {
    std::size_t count = pl.size();
    if (count > 1 && pl.front().x == pl.back().x && pl.front().y == pl.back().y) --count;
    all.insert(all.end(), pl.begin(), pl.begin() + static_cast<std::ptrdiff_t>(count));
  }
  if (all.empty() || max_vertices <= 0) return all;
  const std::size_t stride =
      (all.size() + static_cast<std::size_t>(max_vertices) - 1) / static_cast<std::size_t>(max_vertices);
  std::vector<Point> out;
  for (std::size_t k = 0; k < all.size(); k += stride) out.push_back(all[k]);
  return out;
}

std::vector<double> levels(const InitCondition& init) {
  return {-0.25 * init.delta0, 0.0, 0.25 * init.delta0};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

EtaSchedule EtaSchedule::make(double eta0, double M2) {
  EtaSchedule s;
  s.eta0 = eta0;
  s.M2 = M2;
  s.t_bar = M2 > 0.0 ? (eta0 / M2) * (eta0 / M2) : kInf;
  return s;
}

double EtaSchedule::eta(double t) const { return eta0 - M2 * std::sqrt(std::max(t, 0.0)); }

void write_report_csv(std::ostream& os, const VerificationReport& rep) {
  os.precision(17);
  os << "time,measured,bound,margin\n";
  for (const ReportRow& r : rep.rows)
    os << r.time << ',' << r.measured << ',' << r.bound << ',' << r.margin << '\n';
}

void write_report_verdict(std::ostream& os, const VerificationReport& rep) {
  os.precision(17);
  os << "name=" << rep.name << "\n"
     << "verdict=" << (rep.pass ? "pass" : "fail") << "\n";
  for (const auto& [k, v] : rep.constants) os << "constant." << k << "=" << v << "\n";
  for (const auto& [k, v] : rep.tolerances) os << "tolerance." << k << "=" << v << "\n";
  for (std::size_t k = 0; k < rep.notes.size(); ++k)
    os << "note." << k << "=" << rep.notes[k] << "\n";
}

double default_lambda_bar(const InitCondition& init) {
  double lb = 0.5 * init.lambda0;
  if (init.eta0 > 0.0) lb = std::min(lb, init.delta0 / (4.0 * init.eta0));
  return lb;
}

double KeyEstimate::eta_at(std::size_t k) const {
  return std::isnan(eta_emp[k]) ? schedule.eta(times[k]) : eta_emp[k];
}

double KeyEstimate::eta_min(double t_max) const {
  double best = kInf;
  for (std::size_t k = 0; k < times.size() && times[k] <= t_max; ++k)
    if (!std::isnan(eta_emp[k])) best = std::min(best, eta_emp[k]);
  return best;
}

KeyEstimate key_estimate_report(const Trajectory& traj, const InitCondition& init,
                                double lambda_bar) {
  if (traj.size() == 0) throw ParameterError("empty trajectory");
  if (!(lambda_bar > 0.0 && lambda_bar <= init.lambda0 * (1.0 + 1e-12)))
    throw ParameterError("lambda_bar must lie in (0, lambda0]");
  KeyEstimate key;
  key.lambda_bar = lambda_bar;
  key.times = traj.times;
  const GridSpec& spec = init.u0.spec();
  const double h = spec.spacing();
  const double inner = inner_radius(traj);
  key.eta_floor = h * du0_sup(init);

  for (const ScalarField& u : traj.snapshots) {
    const double eta = band_min(u, 0.25 * init.delta0, false, inner, [&](int i, int j) {
      const Point x = spec.node(i, j);
      const Point nu = init.nu.at(x);
      double q = kInf;
      for (int k = 1; k <= kLambdaSamples; ++k) {
        const double lambda = lambda_bar * k / kLambdaSamples;
        q = std::min(q, (interpolate(u, x + lambda * nu) - u(i, j)) / lambda);
      }
      return q;
    });
    key.eta_emp.push_back(std::isinf(eta) ? kNaN : eta);
  }

  // The rate is non-increasing, so the fit uses the running minimum of eta_emp.
  std::vector<double> eta_run(key.eta_emp.size(), kNaN);
  double run_min = kInf;
  for (std::size_t k = 0; k < key.eta_emp.size(); ++k) {
    if (std::isnan(key.eta_emp[k])) continue;
    run_min = std::min(run_min, key.eta_emp[k]);
    eta_run[k] = run_min;
  }

  // eta_run ~ a - M2 sqrt(t) by least squares.
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < key.times.size(); ++k) {
    if (std::isnan(eta_run[k])) continue;
    const double s = std::sqrt(key.times[k]);
    n += 1;
    sx += s;
    sy += eta_run[k];
    sxx += s * s;
    sxy += s * eta_run[k];
  }
  double a = n > 0 ? sy / n : 0.0;
  double slope = 0.0;
  if (n >= 2 && n * sxx - sx * sx > 0.0) {
    slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    a = (sy - slope * sx) / n;
  }
  key.schedule = EtaSchedule::make(a, -slope);
  double resid = 0.0;
  for (std::size_t k = 0; k < key.times.size(); ++k)
    if (!std::isnan(eta_run[k]))
      resid = std::max(resid, std::abs(eta_run[k] - key.schedule.eta(key.times[k])));
  const double resid_rel = a > 0.0 ? resid / a : kInf;

  key.t_bar_emp = key.times.back();
  for (std::size_t k = 0; k < key.times.size(); ++k) {
    if (std::isnan(key.eta_emp[k]) || key.eta_emp[k] <= key.eta_floor) {
      key.t_bar_emp = key.times[k];
      key.floor_reached = true;
      break;
    }
  }

  // Decay exponent on the portion where eta_emp has dropped below eta_emp(0).
  const double e0 = key.eta_emp[0];
  std::vector<double> lx, ly;
  for (std::size_t k = 1; k < key.times.size(); ++k) {
    if (key.times[k] > key.t_bar_emp || std::isnan(eta_run[k])) continue;
    const double drop = e0 - eta_run[k];
    if (drop > 0.0) {
      lx.push_back(std::log(key.times[k]));
      ly.push_back(std::log(drop));
    }
  }
  if (lx.size() >= 2) {
    const double m = static_cast<double>(lx.size());
    double ax = 0, ay = 0, axx = 0, axy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      ax += lx[k];
      ay += ly[k];
      axx += lx[k] * lx[k];
      axy += lx[k] * ly[k];
    }
    const double den = m * axx - ax * ax;
    if (den > 0.0) {
      key.has_decay = true;
      key.decay_exponent = (m * axy - ax * ay) / den;
    }
  }

  VerificationReport& rep = key.report;
  rep.name = "key_estimate";
  for (std::size_t k = 0; k < key.times.size(); ++k) {
    const double e = key.eta_emp[k];
    rep.rows.push_back({key.times[k], e, key.schedule.eta(key.times[k]),
                        std::isnan(e) ? kNaN : e - key.eta_floor});
  }
  rep.constants["eta0_fit"] = key.schedule.eta0;
  rep.constants["M2_fit"] = key.schedule.M2;
  rep.constants["t_bar"] = key.schedule.t_bar;
  rep.constants["t_bar_emp"] = key.t_bar_emp;
  rep.constants["fit_residual_rel"] = resid_rel;
  rep.constants["lambda_bar"] = lambda_bar;
  if (key.has_decay) rep.constants["decay_exponent"] = key.decay_exponent;
  rep.tolerances["eta_floor"] = key.eta_floor;
  rep.tolerances["fit_residual_rel_max"] = 0.2;
  if (!key.has_decay) rep.notes.push_back("eta_emp never drops below its initial value");
  if (!key.floor_reached) rep.notes.push_back("eta_emp stays above the floor on the whole horizon");
  rep.pass = !std::isnan(e0) && e0 > key.eta_floor && resid_rel < 0.2;
  return key;
}

VerificationReport lower_gradient_report(const Trajectory& traj, const InitCondition& init,
                                         const KeyEstimate& key) {
  VerificationReport rep;
  rep.name = "lower_gradient";
  const GridSpec& spec = init.u0.spec();
  const double h = spec.spacing();
  const double inner = inner_radius(traj);
  const double slack = 3.0 * h * du0_sup(init);
  rep.tolerances["slack"] = slack;
  rep.tolerances["slack_coefficient_h"] = 3.0;
  rep.pass = true;
  std::size_t tested = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] > key.t_bar_emp) break;
    const ScalarField& u = traj.snapshots[k];
    const double band = 0.25 * init.delta0;
    const double gmin = band_min(u, band, true, inner, [&](int i, int j) {
      return std::hypot(detail::first_derivative(u, i, j, 0),
                        detail::first_derivative(u, i, j, 1));
    });
    if (std::isinf(gmin) || std::isnan(key.eta_emp[k])) continue;
    const double nu_sup = -band_min(u, band, true, inner, [&](int i, int j) {
      return -norm(init.nu.at(spec.node(i, j)));
    });
    const double bound = nu_sup > 0.0 ? key.eta_emp[k] / nu_sup : kInf;
    const double margin = gmin - bound;
    rep.rows.push_back({traj.times[k], gmin, bound, margin});
    if (margin < -slack) rep.pass = false;
    ++tested;
  }
  if (tested == 0) rep.notes.push_back("band empty at every tested time");
  return rep;
}

VerificationReport cone_report(const Trajectory& traj, const InitCondition& init,
                               const KeyEstimate& key, const ConeOptions& opts) {
  VerificationReport rep;
  rep.name = opts.flip_axis ? "cone_flipped" : "cone";
  const double h = init.u0.spec().spacing();
  const double du0 = du0_sup(init);
  const double slack = du0 * h;
  const double lb = key.lambda_bar;
  std::size_t total = 0, failed = 0, skipped = 0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    if (t > key.t_bar_emp) break;
    if (std::isnan(key.eta_emp[k])) continue;
    const ScalarField& u = traj.snapshots[k];
    const double rho = key.eta_emp[k] * lb / (du0 * std::exp(opts.K * t));
    for (double r : levels(init)) {
      const auto verts = sample_vertices(extract_contour(u, r), opts.max_vertices);
      std::size_t lt = 0, lf = 0;
      for (const Point& z : verts) {
        const Point nu = init.nu.at(z);
        const double nn = norm(nu);
        if (nn < 1e-12) {
          ++skipped;
          continue;
        }
        const Point e = (opts.flip_axis ? -1.0 : 1.0) / nn * nu;
        const double theta = lb * nn;
        for (int q = 1; q <= 4; ++q) {
          const double a = theta * q / 4.0;
          const Point c = z + a * e;
          const double radius = a * rho / theta;
          for (int s = -1; s < 8; ++s) {
            Point p = c;
            if (s >= 0) {
              const double ang = 2.0 * 3.14159265358979323846 * s / 8.0;
              p = c + radius * Point{std::cos(ang), std::sin(ang)};
            }
            ++lt;
            if (interpolate(u, p) < r - slack) ++lf;
          }
        }
      }
      total += lt;
      failed += lf;
      const double frac = lt > 0 ? static_cast<double>(lf) / lt : 0.0;
      rep.rows.push_back({t, frac, 0.01, 0.01 - frac});
    }
  }
  const double frac = total > 0 ? static_cast<double>(failed) / total : 0.0;
  rep.constants["failure_fraction"] = frac;
  rep.constants["points"] = static_cast<double>(total);
  rep.constants["skipped_vertices"] = static_cast<double>(skipped);
  rep.constants["K"] = opts.K;
  rep.tolerances["point_slack"] = slack;
  rep.tolerances["max_failure_fraction"] = 0.01;
  if (skipped > 0) rep.notes.push_back(std::to_string(skipped) + " vertices with nu = 0 skipped");
  rep.pass = frac <= 0.01;
  return rep;
}

VerificationReport perimeter_report(const Trajectory& traj, const InitCondition& init,
                                    const KeyEstimate& key, double K) {
  VerificationReport rep;
  rep.name = "perimeter";
  const double du0 = du0_sup(init);
  const double t_max = 0.5 * key.t_bar_emp;
  const double eta_bar = key.eta_min(t_max);
  const double p0 = extract_contour(traj.snapshots[0], 0.0).perimeter;
  rep.pass = true;
  double sup_p = 0.0;
  for (std::size_t k = 0; k < traj.size() && traj.times[k] <= t_max; ++k) {
    const double t = traj.times[k];
    for (double r : levels(init)) {
      const ScalarField& u = traj.snapshots[k];
      const double p = extract_contour(u, r).perimeter;
      const double area = lebesgue_measure(u, r);
      const double coarea = std::isinf(eta_bar) ? kInf : 2.0 * du0 * std::exp(K * t) * area / eta_bar;
      const double bound = std::min(coarea, 2.0 * p0);
      rep.rows.push_back({t, p, bound, bound - p});
      sup_p = std::max(sup_p, p);
      if (p > bound) rep.pass = false;
    }
  }
  rep.constants["sup_perimeter"] = sup_p;
  rep.constants["initial_perimeter"] = p0;
  rep.constants["eta_bar"] = eta_bar;
  rep.constants["K"] = K;
  rep.tolerances["coarea_N"] = 2.0;
  rep.tolerances["initial_perimeter_factor"] = 2.0;
  return rep;
}

VerificationReport band_measure_report(const Trajectory& traj, const InitCondition& init,
                                       const KeyEstimate& key) {
  VerificationReport rep;
  rep.name = "band_measure";
  const GridSpec& spec = init.u0.spec();
  const double h = spec.spacing();
  const double eta_bar = key.eta_min(key.t_bar_emp);
  std::vector<double> deltas;
  for (double d : {2.0 * h, 4.0 * h, init.delta0 / 8.0, init.delta0 / 4.0})
    if (d > h) deltas.push_back(d);
  std::sort(deltas.begin(), deltas.end());
  deltas.erase(std::unique(deltas.begin(), deltas.end()), deltas.end());
  // The linearity check uses {4h, delta0/8, delta0/4}.
  auto in_linearity = [&](double d) {
    for (double e : {4.0 * h, init.delta0 / 8.0, init.delta0 / 4.0})
      if (d == e) return true;
    return false;
  };

  double M4 = 0.0, M5 = 0.0;
  double spread4 = 1.0, spread5 = 1.0;
  std::size_t last = 0;
  for (std::size_t k = 0; k < traj.size() && traj.times[k] <= key.t_bar_emp; ++k) {
    last = k;
    const ScalarField& u = traj.snapshots[k];
    double lo = kInf, hi = 0.0;
    for (double d : deltas) {
      const double m = band_measure(u, -d, 0.0);
      M4 = std::max(M4, m * eta_bar / d);
      rep.rows.push_back({traj.times[k], m, d / eta_bar, d / eta_bar - m});
      if (in_linearity(d) && m > 0.0) {
        lo = std::min(lo, m / d);
        hi = std::max(hi, m / d);
      }
    }
    if (hi > 0.0) spread4 = std::max(spread4, hi / lo);
  }

  // Heat-kernel-weighted band integrals at front points of two tested times.
  std::vector<std::size_t> probe_times;
  if (last > 0) {
    probe_times.push_back(last / 2 > 0 ? last / 2 : last);
    if (last != probe_times.back()) probe_times.push_back(last);
  }
  std::vector<std::vector<ScalarField>> indicators(deltas.size());
  for (std::size_t q = 0; q < deltas.size(); ++q)
    for (std::size_t k = 0; k <= last; ++k)
      indicators[q].push_back(ScalarField::sample(spec, [](Point) { return 0.0; }));
  for (std::size_t q = 0; q < deltas.size(); ++q)
    for (std::size_t k = 0; k <= last; ++k) {
      const auto uv = traj.snapshots[k].values();
      auto iv = indicators[q][k].values();
      for (std::size_t m = 0; m < uv.size(); ++m)
        iv[m] = (uv[m] >= -deltas[q] && uv[m] < 0.0) ? 1.0 : 0.0;
    }
  for (std::size_t pk : probe_times) {
    const double t = traj.times[pk];
    auto verts = sample_vertices(extract_contour(traj.snapshots[pk], 0.0), 4);
    if (verts.empty()) continue;
    double lo = kInf, hi = 0.0;
    for (std::size_t q = 0; q < deltas.size(); ++q) {
      double best = 0.0;
      for (const Point& x : verts) {
        double acc = 0.0;
        for (std::size_t k = 0; k < pk; ++k) {
          const double s0 = traj.times[k], s1 = traj.times[k + 1];
          acc += (s1 - s0) * heat_kernel_average(indicators[q][k], x, t - 0.5 * (s0 + s1));
        }
        best = std::max(best, acc);
      }
      M5 = std::max(M5, best * eta_bar / deltas[q]);
      if (in_linearity(deltas[q]) && best > 0.0) {
        lo = std::min(lo, best / deltas[q]);
        hi = std::max(hi, best / deltas[q]);
      }
    }
    if (hi > 0.0) spread5 = std::max(spread5, hi / lo);
  }

  // Fill the bound column with the fitted constant.
  for (ReportRow& r : rep.rows) {
    r.bound *= M4;
    r.margin = r.bound - r.measured;
  }
  rep.constants["M4_emp"] = M4;
  rep.constants["M5_emp"] = M5;
  rep.constants["eta_bar"] = eta_bar;
  rep.constants["linearity_spread_M4"] = spread4;
  rep.constants["linearity_spread_M5"] = spread5;
  rep.tolerances["max_linearity_spread"] = 2.0;
  std::string ds;
  for (double d : deltas) ds += fmt(d) + " ";
  rep.notes.push_back("deltas " + ds);
  rep.pass = std::isfinite(M4) && std::isfinite(M5) && spread4 < 2.0 && spread5 < 2.0;
  return rep;
}

VerificationReport continuous_dependence_report(const Trajectory& a, const Trajectory& b,
                                                double kappa1, double kappa2) {
  if (a.times != b.times) throw ParameterError("trajectories differ in times");
  VerificationReport rep;
  rep.name = "continuous_dependence";
  std::vector<double> sup_diff;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto av = a.snapshots[k].values();
    const auto bv = b.snapshots[k].values();
    double d = -kInf;
    for (std::size_t m = 0; m < av.size(); ++m) d = std::max(d, av[m] - bv[m]);
    sup_diff.push_back(d);
  }
  double M1 = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    const double t = a.times[k];
    const double rise = sup_diff[k] - sup_diff[0];
    const double scale = kappa1 * t + std::sqrt(kappa2 * t);
    if (rise <= 0.0) continue;
    M1 = scale > 0.0 ? std::max(M1, rise / scale) : kInf;
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a.times[k];
    const double bound = sup_diff[0] + M1 * (kappa1 * t + std::sqrt(kappa2 * t));
    rep.rows.push_back({t, sup_diff[k], bound, bound - sup_diff[k]});
  }
  rep.constants["M1_fit"] = M1;
  rep.constants["kappa1"] = kappa1;
  rep.constants["kappa2"] = kappa2;
  rep.pass = std::isfinite(M1);
  return rep;
}

bool m1_stable(const VerificationReport& full, const VerificationReport& half) {
  const double a = full.constants.at("M1_fit");
  const double b = half.constants.at("M1_fit");
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  const double big = std::max(a, b);
  if (big == 0.0) return true;
  return std::abs(a - b) / big < 0.5;
}

VerificationReport star_shape_report(const Trajectory& traj, const InitCondition& init,
                                     double lambda_bar) {
  VerificationReport rep;
  rep.name = "star_shape";
  if (init.nu.kind() != DirectionKind::radial)
    throw ParameterError("star_shape_report needs the radial direction field");
  const GridSpec& spec = init.u0.spec();
  const double h = spec.spacing();
  const double inner = inner_radius(traj);
  const double lambda = 0.5 * lambda_bar;
  const double tol = du0_sup(init) * h;
  const double target = 0.5 * init.eta0;
  rep.pass = true;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const ScalarField& u = traj.snapshots[k];
    const double q = band_min(u, 0.25 * init.delta0, false, inner, [&](int i, int j) {
      const Point x = spec.node(i, j);
      return (interpolate(u, (1.0 - lambda) * x) - u(i, j)) / lambda;
    });
    if (std::isinf(q)) continue;
    const double bound = target - tol / lambda;
    rep.rows.push_back({traj.times[k], q, bound, q - bound});
    if (q < bound) rep.pass = false;
  }
  rep.constants["lambda"] = lambda;
  rep.constants["eta0_half"] = target;
  rep.tolerances["slack"] = tol;
  return rep;
}

GammaSweep star_shape_gamma_sweep(const std::vector<double>& gammas,
                                  const std::function<Trajectory(double)>& run,
                                  const InitCondition& init, double lambda_bar) {
  GammaSweep sweep;
  sweep.gammas = gammas;
  std::sort(sweep.gammas.begin(), sweep.gammas.end());
  bool prefix = true;
  for (double g : sweep.gammas) {
    bool ok = false;
    try {
      ok = star_shape_report(run(g), init, lambda_bar).pass;
    } catch (const FrontEscapeError&) {
      ok = false;
    }
    sweep.passed.push_back(ok);
    if (prefix && ok) sweep.gamma_bar = g;
    prefix = prefix && ok;
  }
  return sweep;
}

VerificationReport non_fattening_report(const Trajectory& traj, const KeyEstimate& key) {
  VerificationReport rep;
  rep.name = "non_fattening";
  const double h = traj.snapshots.at(0).spec().spacing();
  const std::vector<double> eps{2.0 * h, 4.0 * h, 8.0 * h};
  rep.pass = true;
  for (std::size_t k = 0; k < traj.size() && traj.times[k] <= key.t_bar_emp; ++k) {
    const NonFatteningFit fit = fit_non_fattening(traj.snapshots[k], eps);
    rep.rows.push_back({traj.times[k], fit.intercept, fit.intercept_bound,
                        fit.intercept_bound - fit.intercept});
    if (!fit.pass) rep.pass = false;
  }
  rep.tolerances["intercept_factor_h"] = 2.0;
  return rep;
}

}  // namespace frontlab
