#include "frontlab/local_solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "frontlab/parallel.hpp"
#include "frontlab/simd/kernels.hpp"
#include "simd/kernel_math.hpp"
#include "stencil.hpp"

namespace frontlab {
namespace {

constexpr double kEps0 = 1e-12;
constexpr double kMeasureBand = 0.25;

simd::RowArgs row_args(const ScalarField& u, int j) {
  const int n = u.n();
  const double* base = u.values().data();
  return {base + static_cast<std::size_t>(j - 1) * n,
          base + static_cast<std::size_t>(j) * n,
          base + static_cast<std::size_t>(j + 1) * n, n,
          1.0 / u.spec().spacing()};
}

double boundary_update(const ScalarField& u, const ScalarField& c, int i, int j,
                       double gamma, double eps2, double dt) {
  const double g = detail::upwind_boundary(u, i, j, c(i, j) >= 0.0);
  double rate = c(i, j) * g;
  if (gamma != 0.0) rate = rate + gamma * detail::curvature_boundary(u, i, j, eps2);
  return simd::detail::clamp_unit(u(i, j) + dt * rate);
}

bool outside(Point p, double radius) { return p.x * p.x + p.y * p.y > radius * radius; }

void apply_far_field(ScalarField& u, double far_radius) {
  const GridSpec& spec = u.spec();
  parallel_for(0, spec.n(), [&](int j) {
    for (int i = 0; i < spec.n(); ++i)
      if (outside(spec.node(i, j), far_radius)) u(i, j) = -1.0;
  });
}

std::vector<std::size_t> escape_annulus(const GridSpec& spec, double far_radius) {
  std::vector<std::size_t> nodes;
  const double inner = far_radius - 4.0 * spec.spacing();
  for (int j = 0; j < spec.n(); ++j)
    for (int i = 0; i < spec.n(); ++i) {
      const double r = norm(spec.node(i, j));
      if (r > inner && r <= far_radius) nodes.push_back(spec.index(i, j));
    }
  return nodes;
}

void check_escape(const ScalarField& u, const std::vector<std::size_t>& annulus,
                  double t) {
  const auto values = u.values();
  for (std::size_t k : annulus) {
    if (values[k] >= 0.0) {
      std::ostringstream msg;
      msg << "front reached the far-field guard ring at t = " << t;
      throw FrontEscapeError(msg.str());
    }
  }
}

}  // namespace

SpeedProvider::SpeedProvider(std::vector<double> breakpoints, Source source)
    : breakpoints_(std::move(breakpoints)), source_(std::move(source)) {
  if (!std::is_sorted(breakpoints_.begin(), breakpoints_.end()))
    throw ParameterError("speed breakpoints must be ascending");
}

SpeedProvider SpeedProvider::constant(ScalarField c) {
  auto field = std::make_shared<const ScalarField>(std::move(c));
  return SpeedProvider({}, [field](double) { return field; });
}

double default_far_radius(double c_sup, double horizon, double R0,
                          const GridSpec& spec) {
  return std::min(c_sup * horizon + R0 + std::sqrt(2.0),
                  spec.half_extent() - 3.0 * spec.spacing());
}

double cfl_timestep(double c_max, double gamma, double h, double safety) {
  if (!(h > 0.0)) throw ParameterError("grid spacing must be > 0");
  if (!(safety > 0.0 && safety <= 1.0))
    throw ParameterError("cfl safety factor must lie in (0, 1]");
  return safety * std::min(h / (std::abs(c_max) + kEps0), h * h / (4.0 * gamma + kEps0));
}

double stable_timestep(double c_max, double gamma, double h) {
  const double rate = std::sqrt(2.0) * std::abs(c_max) / h + 4.0 * gamma / (h * h);
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / rate;
}

ScalarField advance(const ScalarField& u, const ScalarField& c, double gamma,
                    double eps_reg, double dt, double far_radius) {
  require_same_grid(u, c, "advance");
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
  if (!(dt >= 0.0)) throw ParameterError("time step must be >= 0");
  if (gamma > 0.0 && !(eps_reg > 0.0))
    throw ParameterError("curvature regularization eps_reg must be > 0");
  const GridSpec& spec = u.spec();
  const double limit = stable_timestep(c.max_abs(), gamma, spec.spacing());
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time step " << dt << " exceeds the monotone stability bound " << limit;
    throw StabilityError(msg.str());
  }
  const double eps2 = eps_reg * eps_reg;
  const int n = spec.n();
  ScalarField out(spec);
  const auto& k = simd::active();
  parallel_for(0, n, [&](int j) {
    if (j == 0 || j == n - 1) {
      for (int i = 0; i < n; ++i) out(i, j) = boundary_update(u, c, i, j, gamma, eps2, dt);
    } else {
      k.advance(row_args(u, j), c.row(j).data(), eps2, dt, gamma, out.row(j).data());
      out(0, j) = boundary_update(u, c, 0, j, gamma, eps2, dt);
      out(n - 1, j) = boundary_update(u, c, n - 1, j, gamma, eps2, dt);
    }
    for (int i = 0; i < n; ++i)
      if (outside(spec.node(i, j), far_radius)) out(i, j) = -1.0;
  });
  return out;
}

double band_lipschitz(const ScalarField& u, double far_radius) {
  const GridSpec& spec = u.spec();
  const double inner = far_radius - 4.0 * spec.spacing();
  double best = 0.0;
  for (int j = 0; j < spec.n(); ++j)
    for (int i = 0; i < spec.n(); ++i) {
      if (std::abs(u(i, j)) > kMeasureBand || norm(spec.node(i, j)) > inner) continue;
      best = std::max(best, std::hypot(detail::first_derivative(u, i, j, 0),
                                       detail::first_derivative(u, i, j, 1)));
    }
  return best;
}

Trajectory solve(const LocalProblem& problem, const ScalarField& u0,
                 const std::vector<double>& output_times) {
  const GridSpec& spec = u0.spec();
  const double h = spec.spacing();
  const double T = problem.horizon;
  if (!(T >= 0.0)) throw ParameterError("horizon must be >= 0");
  if (!(problem.gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
  if (!(problem.cfl_safety > 0.0 && problem.cfl_safety <= 1.0))
    throw ParameterError("cfl_safety must lie in (0, 1]");
  if (!(problem.far_radius > 0.0 && problem.far_radius < spec.half_extent() - 2.0 * h))
    throw ParameterError("far_radius must lie in (0, L - 2h)");
  if (!problem.speed) throw ParameterError("speed provider is not set");
  for (std::size_t k = 0; k < output_times.size(); ++k) {
    if (!(output_times[k] >= 0.0 && output_times[k] <= T))
      throw ParameterError("output times must lie in [0, horizon]");
    if (k > 0 && !(output_times[k] > output_times[k - 1]))
      throw ParameterError("output times must be strictly increasing");
  }

  std::vector<double> targets{0.0};
  for (double t : output_times)
    if (t > 0.0 && t < T) targets.push_back(t);
  if (T > 0.0) targets.push_back(T);

  std::vector<double> events = targets;
  for (double b : problem.speed.breakpoints())
    if (b > 0.0 && b < T) events.push_back(b);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  Trajectory traj;
  traj.far_radius = problem.far_radius;
  ScalarField u = u0;
  apply_far_field(u, problem.far_radius);
  const auto annulus = escape_annulus(spec, problem.far_radius);
  check_escape(u, annulus, 0.0);

  auto record = [&](double t, double dt_max) {
    traj.times.push_back(t);
    traj.snapshots.push_back(u);
    traj.dt_used.push_back(dt_max);
    traj.lipschitz_log.push_back(band_lipschitz(u, problem.far_radius));
  };
  record(0.0, 0.0);

  double t = 0.0;
  std::size_t next_target = 1;
  std::size_t next_event = 1;
  std::shared_ptr<const ScalarField> c;
  double dt_base = 0.0;
  auto refresh_speed = [&] {
    c = problem.speed.at(t);
    require_same_grid(u, *c, "speed field");
    const double c_max = c->max_abs();
    dt_base = std::min(cfl_timestep(c_max, problem.gamma, h, problem.cfl_safety),
                       stable_timestep(c_max, problem.gamma, h));
  };
  refresh_speed();
  double dt_max = 0.0;
  const auto& breaks = problem.speed.breakpoints();

  while (next_event < events.size()) {
    const double goal = events[next_event];
    double step = std::min(dt_base, goal - t);
    double t_new = t + step;
    const bool lands = goal - t_new <= 1e-12 * (1.0 + std::abs(goal));
    if (lands) {
      step = goal - t;
      t_new = goal;
    }
    u = advance(u, *c, problem.gamma, problem.eps_reg, step, problem.far_radius);
    dt_max = std::max(dt_max, step);
    t = t_new;
    check_escape(u, annulus, t);
    if (!lands) continue;
    ++next_event;
    if (next_target < targets.size() && targets[next_target] == t) {
      record(t, dt_max);
      dt_max = 0.0;
      ++next_target;
    }
    if (std::binary_search(breaks.begin(), breaks.end(), t)) refresh_speed();
  }
  return traj;
}

RegularityReport regularity_report(const Trajectory& traj) {
  if (traj.size() < 3) throw ParameterError("regularity_report needs >= 3 snapshots");
  RegularityReport rep;
  const double L0 = traj.lipschitz_log[0];
  if (L0 > 0.0) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 1; k < traj.size(); ++k) {
      const double Lk = traj.lipschitz_log[k];
      if (!(Lk > 0.0)) continue;
      num += traj.times[k] * std::log(Lk / L0);
      den += traj.times[k] * traj.times[k];
    }
    const double K = den > 0.0 ? num / den : 0.0;
    rep.seminorm_decays = K < 0.0;
    rep.K_fit = std::max(K, 0.0);
  }

  const GridSpec& spec = traj.snapshots[0].spec();
  const double inner = traj.far_radius - 4.0 * spec.spacing();
  std::vector<char> region(spec.size());
  for (int j = 0; j < spec.n(); ++j)
    for (int i = 0; i < spec.n(); ++i)
      region[spec.index(i, j)] = norm(spec.node(i, j)) <= inner;

  double holder = 0.0;
  for (std::size_t a = 0; a < traj.size(); ++a) {
    for (std::size_t b = a + 1; b < traj.size(); ++b) {
      const double gap = traj.times[b] - traj.times[a];
      if (!(gap > 0.0)) continue;
      const double inv_root = 1.0 / std::sqrt(gap);
      const auto ua = traj.snapshots[a].values();
      const auto ub = traj.snapshots[b].values();
      for (std::size_t k = 0; k < ua.size(); ++k) {
        if (!region[k]) continue;
        if (std::abs(ua[k]) > kMeasureBand && std::abs(ub[k]) > kMeasureBand) continue;
        holder = std::max(holder, std::abs(ub[k] - ua[k]) * inv_root);
      }
    }
  }
  rep.holder_const = holder;
  return rep;
}

void save_trajectory(const std::string& dir, const Trajectory& traj) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw IoError("cannot write " + dir + "/manifest.csv");
  manifest.precision(17);
  manifest << "index,time,dt_used,lipschitz_seminorm\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    save_field((fs::path(dir) / ("t_" + std::to_string(k) + ".txt")).string(),
               traj.snapshots[k]);
    manifest << k << ',' << traj.times[k] << ',' << traj.dt_used[k] << ','
             << traj.lipschitz_log[k] << '\n';
  }
  std::ofstream meta(fs::path(dir) / "meta.txt");
  meta.precision(17);
  meta << "far_radius=" << traj.far_radius << "\n";
}

Trajectory load_trajectory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.csv");
  if (!manifest) throw IoError("cannot read " + dir + "/manifest.csv");
  Trajectory traj;
  std::string line;
  std::getline(manifest, line);
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cols;
    while (std::getline(row, cell, ',')) cols.push_back(std::stod(cell));
    if (cols.size() != 4) throw IoError("malformed manifest row: " + line);
    const auto index = static_cast<std::size_t>(cols[0]);
    traj.times.push_back(cols[1]);
    traj.dt_used.push_back(cols[2]);
    traj.lipschitz_log.push_back(cols[3]);
    traj.snapshots.push_back(
        load_field((fs::path(dir) / ("t_" + std::to_string(index) + ".txt")).string()));
  }
  std::ifstream meta(fs::path(dir) / "meta.txt");
  while (std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos && line.substr(0, eq) == "far_radius")
      traj.far_radius = std::stod(line.substr(eq + 1));
  }
  return traj;
}

}  // namespace frontlab
