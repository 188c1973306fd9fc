#include "frontlab/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

#include "frontlab/verifiers.hpp"

namespace frontlab {
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v))
    throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& item : split(s, ','))
    if (!item.empty()) out.push_back(to_double(item));
  return out;
}

std::vector<Point> to_points(const std::string& s) {
  std::vector<Point> out;
  for (const std::string& item : split(s, ';')) {
    if (item.empty()) continue;
    const auto xy = to_list(item);
    if (xy.size() != 2) throw ConfigError("points are written 'x, y; x, y'");
    out.push_back({xy[0], xy[1]});
  }
  if (out.empty()) throw ConfigError("at least one kernel point is required");
  return out;
}

KernelShape to_kernel(const std::string& s) {
  KernelShape k;
  if (s == "none") return k;
  static const std::regex call(R"(\s*([a-z_]+)\s*\(([^)]*)\)\s*)");
  std::smatch m;
  if (!std::regex_match(s, m, call)) throw ConfigError("cannot parse kernel '" + s + "'");
  k.kind = m[1];
  k.params = to_list(m[2]);
  const std::size_t want = k.kind == "disc" ? 2 : k.kind == "core_ring" ? 4 : 0;
  if (want == 0) throw ConfigError("unknown kernel '" + k.kind + "'");
  if (k.params.size() != want)
    throw ConfigError("kernel " + k.kind + " takes " + std::to_string(want) + " arguments");
  if (!(k.params[0] > 0.0)) throw ConfigError("kernel radius must be > 0");
  if (k.kind == "core_ring" && !(k.params[2] > k.params[0]))
    throw ConfigError("core_ring outer radius must exceed the core radius");
  return k;
}

CouplingKind to_coupling_kind(const std::string& s) {
  if (s == "volume") return CouplingKind::volume;
  if (s == "dislocation") return CouplingKind::dislocation;
  if (s == "fitzhugh_nagumo") return CouplingKind::fitzhugh_nagumo;
  throw ConfigError("unknown coupling kind '" + s + "'");
}

bool to_bool_like_list_contains(const std::vector<std::string>& list, const std::string& name) {
  return std::find(list.begin(), list.end(), name) != list.end();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw IoError("cannot write " + p.string());
  os.precision(17);
  return os;
}

}  // namespace

std::vector<double> ScenarioConfig::times() const {
  return output_times.empty() ? uniform_times(horizon, output_steps) : output_times;
}

double ScenarioConfig::tolerance() const {
  const double h = grid().spacing();
  return weak_tol > 0.0 ? weak_tol : 4.0 * h * h;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{
      "init",         "radius",        "key_estimate",          "lower_gradient",
      "cone",         "perimeter",     "band_measure",          "non_fattening",
      "star_shape",   "uniqueness",    "continuous_dependence"};
  return names;
}

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir) {
  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  std::map<std::string, int> seen;

  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"grid.n", [&](const std::string& v) { cfg.grid_n = to_int(v); }},
      {"grid.L", [&](const std::string& v) { cfg.grid_L = to_double(v); }},
      {"init.kind",
       [&](const std::string& v) {
         if (v != "circle" && v != "star_shaped")
           throw ConfigError("unknown init kind '" + v + "'");
         cfg.init_kind = v;
       }},
      {"init.r0", [&](const std::string& v) { cfg.r0 = to_double(v); }},
      {"init.kernel_points", [&](const std::string& v) { cfg.kernel_points = to_points(v); }},
      {"coupling.kind", [&](const std::string& v) { cfg.coupling_kind = to_coupling_kind(v); }},
      {"coupling.beta", [&](const std::string& v) { cfg.beta = ScalarMap::parse(v); }},
      {"coupling.kernel", [&](const std::string& v) { cfg.kernel = to_kernel(v); }},
      {"coupling.kernel_file",
       [&](const std::string& v) {
         cfg.kernel.kind = "file";
         cfg.kernel.params.clear();
         cfg.kernel.path = v;
       }},
      {"coupling.c1", [&](const std::string& v) { cfg.c1 = to_double(v); }},
      {"coupling.alpha", [&](const std::string& v) { cfg.alpha = ScalarMap::parse(v); }},
      {"coupling.g_plus", [&](const std::string& v) { cfg.g_plus = ScalarMap::parse(v); }},
      {"coupling.g_minus", [&](const std::string& v) { cfg.g_minus = ScalarMap::parse(v); }},
      {"coupling.v0", [&](const std::string& v) { cfg.v0 = to_double(v); }},
      {"coupling.g_lower", [&](const std::string& v) { cfg.g_lower = to_double(v); }},
      {"coupling.g_upper", [&](const std::string& v) { cfg.g_upper = to_double(v); }},
      {"coupling.heat_safety", [&](const std::string& v) { cfg.heat_safety = to_double(v); }},
      {"coupling.speed_samples", [&](const std::string& v) { cfg.speed_samples = to_int(v); }},
      {"gamma",
       [&](const std::string& v) {
         cfg.gamma = to_double(v);
         if (cfg.gamma < 0.0) throw ConfigError("gamma must be >= 0");
       }},
      {"horizon",
       [&](const std::string& v) {
         cfg.horizon = to_double(v);
         if (!(cfg.horizon > 0.0)) throw ConfigError("horizon must be > 0");
       }},
      {"output_times",
       [&](const std::string& v) {
         static const std::regex uni(R"(\s*uniform\s*\(\s*(\d+)\s*\)\s*)");
         std::smatch m;
         if (std::regex_match(v, m, uni)) {
           cfg.output_steps = to_int(m[1]);
           cfg.output_times.clear();
           if (cfg.output_steps < 1) throw ConfigError("uniform(N) needs N >= 1");
         } else {
           cfg.output_times = to_list(v);
           if (cfg.output_times.empty()) throw ConfigError("output_times is empty");
           for (std::size_t k = 1; k < cfg.output_times.size(); ++k)
             if (!(cfg.output_times[k] > cfg.output_times[k - 1]))
               throw ConfigError("output_times must increase strictly");
         }
       }},
      {"solver.cfl_safety",
       [&](const std::string& v) {
         cfg.cfl_safety = to_double(v);
         if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0))
           throw ConfigError("cfl_safety must lie in (0, 1]");
       }},
      {"solver.eps_reg",
       [&](const std::string& v) {
         cfg.eps_reg = to_double(v);
         if (!(cfg.eps_reg > 0.0)) throw ConfigError("eps_reg must be > 0");
       }},
      {"solver.far_radius", [&](const std::string& v) { cfg.far_radius = to_double(v); }},
      {"weak.tol", [&](const std::string& v) { cfg.weak_tol = to_double(v); }},
      {"weak.max_iter",
       [&](const std::string& v) {
         cfg.weak_max_iter = to_int(v);
         if (cfg.weak_max_iter < 1) throw ConfigError("max_iter must be >= 1");
       }},
      {"probe.seeds",
       [&](const std::string& v) {
         cfg.probe_seeds = to_int(v);
         if (cfg.probe_seeds < 2 || cfg.probe_seeds > 3)
           throw ConfigError("probe.seeds must be 2 or 3");
       }},
      {"checks",
       [&](const std::string& v) {
         cfg.checks.clear();
         for (const std::string& name : split(v, ',')) {
           if (name.empty()) continue;
           if (!to_bool_like_list_contains(known_checks(), name))
             throw ConfigError("unknown check '" + name + "'");
           if (!to_bool_like_list_contains(cfg.checks, name)) cfg.checks.push_back(name);
         }
       }},
      {"check.radius_tol", [&](const std::string& v) { cfg.radius_tol = to_double(v); }},
      {"check.gamma_sweep",
       [&](const std::string& v) {
         cfg.gamma_sweep = to_list(v);
         for (double g : cfg.gamma_sweep)
           if (g < 0.0) throw ConfigError("gamma must be >= 0");
       }},
      {"check.cd_radius", [&](const std::string& v) { cfg.cd_radius = to_double(v); }},
      {"output_dir", [&](const std::string& v) { cfg.output_dir = v; }},
  };

  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string where = "line " + std::to_string(line_no) + ": " + key + ": ";
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (seen.count(key))
      throw ConfigError(where + "duplicate key (first set on line " +
                        std::to_string(seen[key]) + ")");
    seen[key] = line_no;
    try {
      it->second(value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }

  auto fail = [&](const std::string& key, const std::string& msg) {
    const auto it = seen.find(key);
    const std::string where =
        it == seen.end() ? key + ": " : "line " + std::to_string(it->second) + ": " + key + ": ";
    throw ConfigError(where + msg);
  };
  if (cfg.grid_n < 33 || cfg.grid_n % 2 == 0)
    fail("grid.n", "grid.n must be an odd integer >= 33");
  if (!(cfg.grid_L > 0.0)) fail("grid.L", "grid.L must be > 0");
  if (!(cfg.r0 > 0.0)) fail("init.r0", "r0 must be > 0");
  if (cfg.init_kind == "circle" && seen.count("init.kernel_points"))
    fail("init.kernel_points", "circle init takes no kernel points");
  for (double t : cfg.output_times)
    if (t < 0.0 || t > cfg.horizon) fail("output_times", "times must lie in [0, horizon]");
  const double h = cfg.grid().spacing();
  if (cfg.weak_tol != 0.0 && cfg.weak_tol < h * h) fail("weak.tol", "tol must be >= h^2");
  if (cfg.coupling_kind == CouplingKind::dislocation && cfg.kernel.kind == "none" &&
      !seen.count("coupling.kernel"))
    fail("coupling.kernel", "dislocation coupling needs coupling.kernel or coupling.kernel_file");
  if (cfg.coupling_kind == CouplingKind::fitzhugh_nagumo) {
    if (!(cfg.heat_safety > 0.0 && cfg.heat_safety <= 1.0))
      fail("coupling.heat_safety", "heat_safety must lie in (0, 1]");
    if (cfg.speed_samples < 1) fail("coupling.speed_samples", "speed_samples must be >= 1");
  }
  const bool has_radius = to_bool_like_list_contains(cfg.checks, "radius");
  if (has_radius && (cfg.coupling_kind != CouplingKind::volume || cfg.init_kind != "circle"))
    fail("checks", "the radius check needs a circle init and the volume coupling");
  if (!(cfg.cd_radius > 0.0)) fail("check.cd_radius", "cd_radius must be > 0");
  if (!(cfg.radius_tol > 0.0)) fail("check.radius_tol", "radius_tol must be > 0");
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  const fs::path parent = fs::path(path).parent_path();
  return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

InitCondition build_init(const ScenarioConfig& cfg) {
  const GridSpec spec = cfg.grid();
  const std::vector<Point> origin{{0.0, 0.0}};
  const std::vector<Point>& pts = cfg.init_kind == "circle" ? origin : cfg.kernel_points;
  return star_shaped_u0(pts, cfg.r0, spec);
}

ScalarField build_kernel(const ScenarioConfig& cfg, const GridSpec& spec) {
  const KernelShape& k = cfg.kernel;
  if (k.kind == "file") {
    fs::path p(k.path);
    if (p.is_relative()) p = fs::path(cfg.base_dir) / p;
    ScalarField f = load_field(p.string());
    if (!(f.spec() == spec)) throw ConfigError("kernel file grid does not match grid.n / grid.L");
    return f;
  }
  if (k.kind == "disc") {
    const double rho = k.params[0], value = k.params[1] / (kPi * rho * rho);
    return ScalarField::sample(spec, [&](Point p) { return norm(p) <= rho ? value : 0.0; });
  }
  if (k.kind == "core_ring") {
    const double rho = k.params[0], rho_out = k.params[2];
    const double core = k.params[1] / (kPi * rho * rho);
    const double ring = k.params[3] / (kPi * (rho_out * rho_out - rho * rho));
    return ScalarField::sample(spec, [&](Point p) {
      const double r = norm(p);
      return r <= rho ? core : r <= rho_out ? ring : 0.0;
    });
  }
  return ScalarField(spec, 0.0);
}

CouplingSpec build_coupling(const ScenarioConfig& cfg, const GridSpec& spec) {
  CouplingSpec c;
  c.kind = cfg.coupling_kind;
  switch (c.kind) {
    case CouplingKind::volume:
      c.volume.beta = cfg.beta;
      break;
    case CouplingKind::dislocation:
      c.dislocation.c0 = build_kernel(cfg, spec);
      c.dislocation.c1 = cfg.c1;
      break;
    case CouplingKind::fitzhugh_nagumo:
      c.fn.alpha = cfg.alpha;
      c.fn.g_plus = cfg.g_plus;
      c.fn.g_minus = cfg.g_minus;
      c.fn.v0 = ScalarField(spec, cfg.v0);
      c.fn.g_lower = cfg.g_lower;
      c.fn.g_upper = cfg.g_upper;
      c.fn.heat_safety = cfg.heat_safety;
      c.fn.speed_samples = cfg.speed_samples;
      break;
  }
  c.validate();
  return c;
}

double radial_oracle(const ScalarMap& beta, double gamma, double R0, double t) {
  auto f = [&](double R) { return beta(kPi * R * R) - gamma / R; };
  const int steps = std::max(1, static_cast<int>(std::ceil(t / 1e-5)));
  const double dt = t / steps;
  double R = R0;
  for (int k = 0; k < steps && R > 0.0; ++k) {
    const double k1 = f(R);
    const double k2 = f(R + 0.5 * dt * k1);
    const double k3 = f(R + 0.5 * dt * k2);
    const double k4 = f(R + dt * k3);
    R += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return std::max(R, 0.0);
}

double mean_front_radius(const ScalarField& u) {
  const FrontContour c = extract_contour(u, 0.0);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& pl : c.polylines) {
    std::size_t m = pl.size();
    if (m > 1 && pl.front().x == pl.back().x && pl.front().y == pl.back().y) --m;
    for (std::size_t k = 0; k < m; ++k) {
      sum += norm(pl[k]);
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

// ---------------------------------------------------------------------------

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[k]);
  return os.str();
}

void write_manifest(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "MANIFEST.sha256" || rel == "FAILED") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());
  std::ofstream os(fs::path(dir) / "MANIFEST.sha256");
  if (!os) throw IoError("cannot write manifest in " + dir);
  for (const std::string& rel : files)
    os << sha256_file((fs::path(dir) / rel).string()) << "  " << rel << "\n";
}

namespace {

const std::vector<std::string> kArtifacts{
    "init",       "trajectory", "contours",        "checks",   "probe",
    "summary.txt", "weak.csv",  "radius.csv",      "regularity.txt", "config.txt",
    "FAILED",     "MANIFEST.sha256"};

void clear_artifacts(const fs::path& out) {
  for (const std::string& name : kArtifacts) fs::remove_all(out / name);
}

void write_check(const fs::path& out, const VerificationReport& rep) {
  auto csv = open_out(out / "checks" / (rep.name + ".csv"));
  write_report_csv(csv, rep);
  auto ver = open_out(out / "checks" / (rep.name + ".verdict"));
  write_report_verdict(ver, rep);
}

void write_weak(const fs::path& out, const WeakSolution& sol) {
  auto os = open_out(out / "weak.csv");
  os << "iteration,residual,prefix_residual\n";
  for (std::size_t k = 0; k < sol.residual_history.size(); ++k)
    os << k + 1 << ',' << sol.residual_history[k] << ',' << sol.prefix_residual_history[k]
       << '\n';
}

void write_contours(const fs::path& out, const Trajectory& traj) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    auto os = open_out(out / "contours" / ("contour_" + std::to_string(k) + ".csv"));
    write_contour_csv(os, extract_contour(traj.snapshots[k], 0.0));
  }
}

void write_probe(const fs::path& out, const ProbeReport& rep) {
  auto csv = open_out(out / "probe" / "probe.csv");
  write_probe_csv(csv, rep);
  auto sum = open_out(out / "probe" / "probe_summary.txt");
  write_probe_summary(sum, rep);
}

bool probe_pass(const ProbeReport& rep, double tol) {
  bool ok = rep.unique_short_time;
  for (std::size_t s = 0; s < rep.converged.size(); ++s)
    ok = ok && rep.converged[s] && rep.final_residual[s] <= tol;
  return ok;
}

std::vector<OccupationHistory> seeds_for(const ScenarioConfig& cfg, const InitCondition& init) {
  auto seeds = standard_seeds(init);
  seeds.resize(static_cast<std::size_t>(cfg.probe_seeds));
  return seeds;
}

SolveOptions solve_options(const ScenarioConfig& cfg) {
  SolveOptions o;
  o.output_times = cfg.times();
  o.cfl_safety = cfg.cfl_safety;
  o.eps_reg = cfg.eps_reg;
  o.far_radius = cfg.far_radius;
  return o;
}

// Trajectory verifiers shared by `run` and `verify`.
void trajectory_checks(const fs::path& out, const Trajectory& traj, const InitCondition& init,
                       const std::vector<std::string>& names, RunResult& res) {
  auto wants = [&](const char* n) { return to_bool_like_list_contains(names, n); };
  const double lb = default_lambda_bar(init);
  const RegularityReport reg = regularity_report(traj);
  {
    auto os = open_out(out / "regularity.txt");
    os << "K_fit=" << reg.K_fit << "\nseminorm_decays=" << (reg.seminorm_decays ? 1 : 0)
       << "\nholder_const=" << reg.holder_const << "\n";
  }
  const bool need_key = wants("key_estimate") || wants("lower_gradient") || wants("cone") ||
                        wants("perimeter") || wants("band_measure") || wants("non_fattening");
  if (!need_key && !wants("star_shape")) return;
  KeyEstimate key;
  if (need_key) key = key_estimate_report(traj, init, lb);
  auto record = [&](const VerificationReport& rep, bool pass) {
    write_check(out, rep);
    res.checks.push_back({rep.name, pass});
  };
  if (wants("key_estimate")) record(key.report, key.report.pass);
  if (wants("lower_gradient")) {
    const auto rep = lower_gradient_report(traj, init, key);
    record(rep, rep.pass);
  }
  if (wants("cone")) {
    auto rep = cone_report(traj, init, key, {reg.K_fit, false, 160});
    const auto doubled = cone_report(traj, init, key, {2.0 * reg.K_fit, false, 160});
    const auto flipped = cone_report(traj, init, key, {reg.K_fit, true, 160});
    rep.constants["failure_fraction_2K"] = doubled.constants.at("failure_fraction");
    rep.constants["failure_fraction_flipped"] = flipped.constants.at("failure_fraction");
    if (doubled.pass != rep.pass) rep.notes.push_back("verdict changes under K -> 2K");
    if (flipped.pass) rep.notes.push_back("flipped-axis detector did not fail");
    write_check(out, flipped);
    const bool pass = rep.pass && !flipped.pass;
    rep.pass = pass;
    record(rep, pass);
  }
  if (wants("perimeter")) {
    const auto rep = perimeter_report(traj, init, key, reg.K_fit);
    record(rep, rep.pass);
  }
  if (wants("band_measure")) {
    const auto rep = band_measure_report(traj, init, key);
    record(rep, rep.pass);
  }
  if (wants("non_fattening")) {
    const auto rep = non_fattening_report(traj, key);
    record(rep, rep.pass);
  }
  if (wants("star_shape") && init.nu.kind() == DirectionKind::radial) {
    const auto rep = star_shape_report(traj, init, lb);
    record(rep, rep.pass);
  }
}

void finish(const fs::path& out, RunResult& res, bool require_converged) {
  res.pass = !require_converged || res.converged;
  for (const CheckOutcome& c : res.checks) res.pass = res.pass && c.pass;
  auto os = open_out(out / "summary.txt");
  if (require_converged) os << "converged=" << (res.converged ? "true" : "false") << "\n";
  for (const CheckOutcome& c : res.checks) os << c.name << "=" << (c.pass ? "pass" : "fail") << "\n";
  os << "verdict=" << (res.pass ? "pass" : "fail") << "\n";
  os.close();
  write_manifest(out.string());
}

template <class F>
RunResult guarded(const fs::path& out, F&& body) {
  fs::create_directories(out);
  clear_artifacts(out);
  try {
    return body();
  } catch (const std::exception& e) {
    std::ofstream marker(out / "FAILED");
    marker << e.what() << "\n";
    throw;
  }
}

fs::path output_path(const ScenarioConfig& cfg) {
  fs::path p(cfg.output_dir);
  return p.is_relative() ? fs::path(cfg.base_dir) / p : p;
}

void write_config_echo(const fs::path& out, const ScenarioConfig& cfg) {
  auto os = open_out(out / "config.txt");
  os << "grid.n=" << cfg.grid_n << "\ngrid.L=" << cfg.grid_L << "\ninit.kind=" << cfg.init_kind
     << "\ninit.r0=" << cfg.r0 << "\ncoupling.kind=" << to_string(cfg.coupling_kind)
     << "\ngamma=" << cfg.gamma << "\nhorizon=" << cfg.horizon
     << "\nweak.tol=" << cfg.tolerance() << "\nweak.max_iter=" << cfg.weak_max_iter << "\n";
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
  const fs::path out = output_path(cfg);
  return guarded(out, [&] {
    RunResult res;
    write_config_echo(out, cfg);
    const GridSpec spec = cfg.grid();
    const InitCondition init = build_init(cfg);
    save_init((out / "init").string(), init);
    const CouplingSpec coupling = build_coupling(cfg, spec);
    const SolveOptions opts = solve_options(cfg);
    const double tol = cfg.tolerance();
    auto wants = [&](const char* n) { return to_bool_like_list_contains(cfg.checks, n); };

    WeakSolution sol;
    if (wants("uniqueness")) {
      ProbeReport probe = uniqueness_probe(init, coupling, cfg.gamma, cfg.horizon,
                                           seeds_for(cfg, init), tol, cfg.weak_max_iter, opts);
      write_probe(out, probe);
      res.checks.push_back({"uniqueness", probe_pass(probe, tol)});
      sol = std::move(probe.solutions[0]);
    } else {
      sol = fixed_point_solve(init, coupling, cfg.gamma, cfg.horizon, standard_seeds(init)[0],
                              tol, cfg.weak_max_iter, opts);
    }
    res.converged = sol.converged;
    write_weak(out, sol);
    const Trajectory& traj = sol.u_traj;
    save_trajectory((out / "trajectory").string(), traj);
    write_contours(out, traj);

    if (wants("init")) {
      VerificationReport rep;
      rep.name = "init";
      const I2Verdict v2 = verify_I2(init, 8);
      rep.rows.push_back({0.0, v2.worst_margin, 0.0, v2.worst_margin});
      rep.constants["delta0"] = init.delta0;
      rep.constants["eta0"] = init.eta0;
      rep.constants["lambda0"] = init.lambda0;
      rep.constants["R0"] = init.R0;
      rep.pass = verify_I1(init.u0, init.R0) && v2.pass;
      write_check(out, rep);
      res.checks.push_back({"init", rep.pass});
    }
    if (wants("radius")) {
      VerificationReport rep;
      rep.name = "radius";
      const double R0 = mean_front_radius(traj.snapshots[0]);
      double worst = 0.0;
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const double oracle = radial_oracle(cfg.beta, cfg.gamma, cfg.r0, traj.times[k]);
        const double r = mean_front_radius(traj.snapshots[k]);
        const double rel = oracle > 0.0 ? std::abs(r - oracle) / oracle : r;
        worst = std::max(worst, rel);
        rep.rows.push_back({traj.times[k], r, oracle, cfg.radius_tol - rel});
      }
      const double final_rel = cfg.radius_tol - rep.rows.back().margin;
      rep.constants["initial_radius"] = R0;
      rep.constants["final_relative_error"] = final_rel;
      rep.constants["max_relative_error"] = worst;
      rep.tolerances["relative"] = cfg.radius_tol;
      rep.pass = final_rel <= cfg.radius_tol;
      auto os = open_out(out / "radius.csv");
      os << "time,mean_radius,oracle\n";
      for (const ReportRow& r : rep.rows) os << r.time << ',' << r.measured << ',' << r.bound << '\n';
      write_check(out, rep);
      res.checks.push_back({"radius", rep.pass});
    }

    trajectory_checks(out, traj, init, cfg.checks, res);

    if (wants("star_shape") && !cfg.gamma_sweep.empty()) {
      const double lb = default_lambda_bar(init);
      const GammaSweep sweep = star_shape_gamma_sweep(
          cfg.gamma_sweep,
          [&](double g) {
            return fixed_point_solve(init, coupling, g, cfg.horizon, standard_seeds(init)[0], tol,
                                     cfg.weak_max_iter, opts)
                .u_traj;
          },
          init, lb);
      auto os = open_out(out / "checks" / "star_shape_sweep.csv");
      os << "gamma,pass\n";
      for (std::size_t k = 0; k < sweep.gammas.size(); ++k)
        os << sweep.gammas[k] << ',' << (sweep.passed[k] ? 1 : 0) << '\n';
      os << "# gamma_bar=" << fmt(sweep.gamma_bar) << "\n";
      const bool ok = !sweep.passed.empty() && sweep.passed.front() && sweep.gamma_bar > 0.0;
      res.checks.push_back({"star_shape_sweep", ok});
    }

    if (wants("continuous_dependence")) {
      const double h = spec.spacing();
      const double a = cfg.cd_radius;
      auto disc = [&](double r) {
        return constant_history(
            ScalarField::sample(spec, [&](Point p) { return norm(p) <= r ? 1.0 : 0.0; }));
      };
      LocalProblem problem = make_local_problem(init, coupling, cfg.gamma, cfg.horizon, opts);
      auto frozen = [&](const OccupationHistory& chi) {
        problem.speed = make_speed_provider(coupling, chi, cfg.horizon);
        return solve(problem, init.u0, opts.output_times);
      };
      const OccupationHistory base = disc(a);
      const Trajectory ta = frozen(base);
      auto report = [&](double r) {
        const OccupationHistory other = disc(r);
        const double k1 = kappa(base.chi[0], other.chi[0]);
        return continuous_dependence_report(ta, frozen(other), k1, k1 * k1);
      };
      VerificationReport full = report(a + 2.0 * h);
      const VerificationReport half = report(a + h);
      const bool stable = m1_stable(full, half);
      full.constants["M1_fit_half"] = half.constants.at("M1_fit");
      full.pass = full.pass && half.pass && stable;
      if (!stable) full.notes.push_back("M1 changes by 50% or more when the perturbation is halved");
      write_check(out, full);
      res.checks.push_back({"continuous_dependence", full.pass});
    }

    finish(out, res, true);
    return res;
  });
}

RunResult run_probe(const ScenarioConfig& cfg) {
  const fs::path out = output_path(cfg);
  return guarded(out, [&] {
    RunResult res;
    write_config_echo(out, cfg);
    const InitCondition init = build_init(cfg);
    const CouplingSpec coupling = build_coupling(cfg, cfg.grid());
    const double tol = cfg.tolerance();
    const ProbeReport probe = uniqueness_probe(init, coupling, cfg.gamma, cfg.horizon,
                                               seeds_for(cfg, init), tol, cfg.weak_max_iter,
                                               solve_options(cfg));
    write_probe(out, probe);
    res.checks.push_back({"uniqueness", probe_pass(probe, tol)});
    res.converged = std::all_of(probe.converged.begin(), probe.converged.end(),
                                [](bool b) { return b; });
    finish(out, res, true);
    return res;
  });
}

RunResult verify_trajectory(const std::string& traj_dir, const std::string& out_dir) {
  fs::path dir = fs::path(traj_dir).lexically_normal();
  if (dir.filename().empty()) dir = dir.parent_path();
  fs::path init_dir = dir / "init";
  if (!fs::exists(init_dir / "init.txt")) init_dir = dir.parent_path() / "init";
  if (!fs::exists(init_dir / "init.txt"))
    throw IoError("no init/ directory next to " + traj_dir);
  const Trajectory traj = load_trajectory(traj_dir);
  const InitCondition init = load_init(init_dir.string());
  const fs::path out(out_dir);
  fs::create_directories(out);
  for (const char* name : {"checks", "regularity.txt", "summary.txt", "MANIFEST.sha256"})
    fs::remove_all(out / name);
  RunResult res;
  res.converged = true;
  trajectory_checks(out, traj, init,
                    {"key_estimate", "lower_gradient", "cone", "perimeter", "band_measure",
                     "non_fattening", "star_shape"},
                    res);
  finish(out, res, false);
  return res;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"mcf-circle",      "constant-speed",
                                              "volume-flow",     "dislocation",
                                              "fitzhugh-nagumo", "uniqueness-probe",
                                              "verify-all"};
  return names;
}

namespace {

const char* kTrajectoryChecks =
    "key_estimate, lower_gradient, cone, perimeter, band_measure, non_fattening";

const char* kDislocationBody = R"(coupling.kind = dislocation
# positive core of mass 1.3, negative ring of mass -0.3
coupling.kernel = core_ring(0.15, 1.3, 0.3, -0.3)
coupling.c1 = 0.2
gamma = 0.1
horizon = 0.2
output_times = uniform(40)
)";

}  // namespace

std::string preset_text(const std::string& name) {
  std::ostringstream os;
  os << "# preset " << name << "\n";
  if (name == "mcf-circle") {
    os << "grid.n = 201\ngrid.L = 1.5\ninit.kind = circle\ninit.r0 = 1.0\n"
          "coupling.kind = volume\ncoupling.beta = constant(0)\n"
          "gamma = 1\nhorizon = 0.18\noutput_times = uniform(36)\n"
       << "checks = init, radius, " << kTrajectoryChecks << ", star_shape\n";
  } else if (name == "constant-speed") {
    os << "grid.n = 201\ngrid.L = 1.5\ninit.kind = circle\ninit.r0 = 0.5\n"
          "coupling.kind = volume\ncoupling.beta = constant(1)\n"
          "gamma = 0\nhorizon = 0.4\noutput_times = uniform(40)\n"
       << "checks = init, radius, " << kTrajectoryChecks << ", star_shape\n";
  } else if (name == "volume-flow") {
    os << "grid.n = 161\ngrid.L = 1.5\ninit.kind = circle\ninit.r0 = 0.5\n"
          "coupling.kind = volume\ncoupling.beta = affine(1, -1)\n"
          "gamma = 0.05\nhorizon = 0.3\noutput_times = uniform(30)\n"
          "check.radius_tol = 0.03\ncheck.gamma_sweep = 0, 0.02, 0.05, 0.1\n"
       << "checks = init, radius, " << kTrajectoryChecks << ", star_shape\n";
  } else if (name == "dislocation") {
    os << "grid.n = 161\ngrid.L = 1.5\ninit.kind = circle\ninit.r0 = 0.5\n"
       << kDislocationBody << "checks = init, " << kTrajectoryChecks
       << ", continuous_dependence\n";
  } else if (name == "fitzhugh-nagumo") {
    os << "grid.n = 129\ngrid.L = 1.5\ninit.kind = star_shaped\ninit.r0 = 0.3\n"
          "init.kernel_points = 0.3, 0; -0.3, 0\n"
          "coupling.kind = fitzhugh_nagumo\ncoupling.alpha = affine(0.5, 1)\n"
          "coupling.g_plus = constant(1)\ncoupling.g_minus = constant(-1)\n"
          "coupling.g_lower = -1\ncoupling.g_upper = 1\ncoupling.v0 = 0\n"
          "gamma = 0.1\nhorizon = 0.15\noutput_times = uniform(30)\n"
       << "checks = init, " << kTrajectoryChecks << "\n";
  } else if (name == "uniqueness-probe") {
    os << "grid.n = 161\ngrid.L = 1.5\ninit.kind = circle\ninit.r0 = 0.5\n"
       << kDislocationBody << "probe.seeds = 3\nchecks = uniqueness\n";
  } else if (name == "verify-all") {
    os << "grid.n = 129\ngrid.L = 1.5\ninit.kind = circle\ninit.r0 = 0.5\n"
          "coupling.kind = volume\ncoupling.beta = affine(1, -1)\n"
          "gamma = 0.05\nhorizon = 0.3\noutput_times = uniform(30)\n"
          "check.radius_tol = 0.03\ncheck.gamma_sweep = 0, 0.02, 0.05\n"
          "probe.seeds = 3\n"
       << "checks = init, radius, " << kTrajectoryChecks
       << ", star_shape, uniqueness, continuous_dependence\n";
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return os.str();
}

}  // namespace frontlab
