#include "frontlab/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>
#include <sstream>

#include "frontlab/parallel.hpp"
#include "frontlab/simd/kernels.hpp"

namespace frontlab {

// ---------------------------------------------------------------------------
// Scalar maps

ScalarMap ScalarMap::constant(double a) {
  ScalarMap m;
  m.kind_ = Kind::constant;
  m.a_ = a;
  return m;
}

ScalarMap ScalarMap::affine(double a, double b) {
  ScalarMap m;
  m.kind_ = Kind::affine;
  m.a_ = a;
  m.b_ = b;
  return m;
}

ScalarMap ScalarMap::clamp_affine(double a, double b, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("clamp_affine needs lo <= hi");
  ScalarMap m;
  m.kind_ = Kind::clamp_affine;
  m.a_ = a;
  m.b_ = b;
  m.lo_ = lo;
  m.hi_ = hi;
  return m;
}

ScalarMap ScalarMap::parse(const std::string& text) {
  static const std::regex call(R"(\s*([a-z_]+)\s*\(([^)]*)\)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, call))
    throw ConfigError("cannot parse scalar map '" + text + "'");
  std::vector<double> args;
  std::stringstream ss(m[2].str());
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      args.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("scalar map '" + text + "' has a non-numeric argument");
    }
  }
  const std::string name = m[1].str();
  auto want = [&](std::size_t count) {
    if (args.size() != count)
      throw ConfigError("scalar map " + name + " takes " + std::to_string(count) +
                        " arguments");
  };
  if (name == "constant") {
    want(1);
    return constant(args[0]);
  }
  if (name == "affine") {
    want(2);
    return affine(args[0], args[1]);
  }
  if (name == "clamp_affine") {
    want(4);
    return clamp_affine(args[0], args[1], args[2], args[3]);
  }
  throw ConfigError("unknown scalar map '" + name + "'");
}

double ScalarMap::operator()(double r) const {
  switch (kind_) {
    case Kind::constant:
      return a_;
    case Kind::affine:
      return a_ + b_ * r;
    case Kind::clamp_affine:
      return std::clamp(a_ + b_ * r, lo_, hi_);
  }
  return a_;
}

double ScalarMap::lipschitz() const { return kind_ == Kind::constant ? 0.0 : std::abs(b_); }

double ScalarMap::sup_abs(double lo, double hi) const {
  return std::max(std::abs((*this)(lo)), std::abs((*this)(hi)));
}

std::optional<std::pair<double, double>> ScalarMap::global_range() const {
  switch (kind_) {
    case Kind::constant:
      return std::make_pair(a_, a_);
    case Kind::affine:
      if (b_ == 0.0) return std::make_pair(a_, a_);
      return std::nullopt;
    case Kind::clamp_affine:
      if (b_ == 0.0) {
        const double v = std::clamp(a_, lo_, hi_);
        return std::make_pair(v, v);
      }
      return std::make_pair(lo_, hi_);
  }
  return std::nullopt;
}

bool ScalarMap::nondecreasing() const { return kind_ == Kind::constant || b_ >= 0.0; }

std::string ScalarMap::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::constant:
      os << "constant(" << a_ << ")";
      break;
    case Kind::affine:
      os << "affine(" << a_ << "," << b_ << ")";
      break;
    case Kind::clamp_affine:
      os << "clamp_affine(" << a_ << "," << b_ << "," << lo_ << "," << hi_ << ")";
      break;
  }
  return os.str();
}

std::string to_string(CouplingKind kind) {
  switch (kind) {
    case CouplingKind::dislocation:
      return "dislocation";
    case CouplingKind::fitzhugh_nagumo:
      return "fitzhugh_nagumo";
    case CouplingKind::volume:
      return "volume";
  }
  return "volume";
}

// ---------------------------------------------------------------------------
// Coupling spec

namespace {

std::pair<double, double> fn_v_range(const FnParams& fn, double horizon) {
  return {fn.v0.min() + horizon * std::min(fn.g_lower, 0.0),
          fn.v0.max() + horizon * std::max(fn.g_upper, 0.0)};
}

}  // namespace

void CouplingSpec::validate() const {
  switch (kind) {
    case CouplingKind::dislocation: {
      const auto& d = dislocation;
      if (d.c0.n() == 0) throw ConfigError("dislocation kernel is not set");
      if (!d.c0.all_finite()) throw ConfigError("dislocation kernel has non-finite values");
      if (d.c1_field) {
        require_same_grid(d.c0, *d.c1_field, "dislocation c1 field");
        if (!d.c1_field->all_finite()) throw ConfigError("c1 field has non-finite values");
      } else if (!std::isfinite(d.c1)) {
        throw ConfigError("c1 must be finite");
      }
      break;
    }
    case CouplingKind::fitzhugh_nagumo: {
      const auto& f = fn;
      if (f.v0.n() == 0) throw ConfigError("fitzhugh_nagumo v0 is not set");
      if (!(f.g_lower <= f.g_upper)) throw ConfigError("fn g_lower must be <= g_upper");
      if (!(f.heat_safety > 0.0 && f.heat_safety <= 1.0))
        throw ConfigError("fn heat_safety must lie in (0, 1]");
      if (f.speed_samples < 1) throw ConfigError("fn speed_samples must be >= 1");
      // g- <= g+ and g_lower <= g+- <= g_upper on a wide v range; both maps
      // are piecewise affine, so sampling breakpoints and far ends suffices.
      const double span = 1e3 + f.v0.max_abs();
      for (int k = 0; k <= 2000; ++k) {
        const double v = -span + 2.0 * span * k / 2000.0;
        const double gp = f.g_plus(v);
        const double gm = f.g_minus(v);
        if (gm > gp) throw ConfigError("fn requires g_minus <= g_plus");
        if (gm < f.g_lower - 1e-12 || gp > f.g_upper + 1e-12)
          throw ConfigError("fn maps leave [g_lower, g_upper]");
      }
      break;
    }
    case CouplingKind::volume:
      break;
  }
}

double CouplingSpec::speed_bound(double horizon, double max_area) const {
  switch (kind) {
    case CouplingKind::dislocation: {
      const double c1 = dislocation.c1_field ? dislocation.c1_field->max_abs()
                                             : std::abs(dislocation.c1);
      return kernel_l1(dislocation.c0) + c1;
    }
    case CouplingKind::fitzhugh_nagumo: {
      const auto [lo, hi] = fn_v_range(fn, horizon);
      return fn.alpha.sup_abs(lo, hi);
    }
    case CouplingKind::volume: {
      return volume.beta.sup_abs(0.0, max_area);
    }
  }
  return 0.0;
}

double CouplingSpec::lipschitz() const {
  switch (kind) {
    case CouplingKind::dislocation:
      return kernel_l1(dislocation.c0);
    case CouplingKind::fitzhugh_nagumo:
      return fn.alpha.lipschitz();
    case CouplingKind::volume:
      return volume.beta.lipschitz();
  }
  return 0.0;
}

std::size_t OccupationHistory::index_at(double t) const {
  if (times.empty()) throw ParameterError("occupation history is empty");
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  return static_cast<std::size_t>(it - times.begin()) - 1;
}

void OccupationHistory::validate() const {
  if (times.empty() || times.size() != chi.size())
    throw ParameterError("occupation history needs matching, nonempty times and fields");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1]))
      throw ParameterError("occupation history times must ascend");
    if (k > 0) require_same_grid(chi[0], chi[k], "occupation history");
    for (double v : chi[k].values())
      if (v != 0.0 && v != 1.0) throw ParameterError("occupation fields must be binary");
  }
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

struct KernelTap {
  int di;
  int dj;
  double value;
};

// Nonzero kernel entries ordered by descending offset (dj, then di), which is
// the order in which a row-major sweep over y meets them for a fixed x.
std::vector<KernelTap> kernel_taps(const ScalarField& c0) {
  const int n = c0.n();
  const int ctr = c0.spec().center();
  std::vector<KernelTap> taps;
  for (int j = n - 1; j >= 0; --j)
    for (int i = n - 1; i >= 0; --i)
      if (c0(i, j) != 0.0) taps.push_back({i - ctr, j - ctr, c0(i, j)});
  return taps;
}

ScalarField convolve_taps(const std::vector<KernelTap>& taps, const ScalarField& chi) {
  const GridSpec& spec = chi.spec();
  const int n = spec.n();
  const double h2 = spec.spacing() * spec.spacing();
  ScalarField out(spec);
  parallel_for(0, n, [&](int j) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (const KernelTap& t : taps) {
        const int iy = i - t.di;
        const int jy = j - t.dj;
        if (iy < 0 || iy >= n || jy < 0 || jy >= n) continue;
        acc += t.value * chi(iy, jy);
      }
      out(i, j) = acc * h2;
    }
  });
  return out;
}

// conv += h^2 sum over changed y of c0(x - y) (next - prev)(y).
void convolve_update(const std::vector<KernelTap>& taps, const ScalarField& prev,
                     const ScalarField& next, ScalarField& conv) {
  const GridSpec& spec = conv.spec();
  const int n = spec.n();
  const double h2 = spec.spacing() * spec.spacing();
  struct Change {
    int i;
    int j;
    double delta;
  };
  std::vector<Change> changes;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (next(i, j) != prev(i, j)) changes.push_back({i, j, next(i, j) - prev(i, j)});
  if (changes.empty()) return;
  if (changes.size() * 8 > spec.size()) {
    conv = convolve_taps(taps, next);
    return;
  }
  for (const Change& c : changes) {
    for (const KernelTap& t : taps) {
      const int i = c.i + t.di;
      const int j = c.j + t.dj;
      if (i < 0 || i >= n || j < 0 || j >= n) continue;
      conv(i, j) += h2 * (t.value * c.delta);
    }
  }
}

}  // namespace

ScalarField convolve_kernel(const ScalarField& c0, const ScalarField& chi) {
  require_same_grid(c0, chi, "convolve_kernel");
  return convolve_taps(kernel_taps(c0), chi);
}

double kernel_l1(const ScalarField& c0) {
  double acc = 0.0;
  for (double v : c0.values()) acc += std::abs(v);
  return acc * c0.spec().spacing() * c0.spec().spacing();
}

namespace {

ScalarField add_c1(const CouplingSpec& spec, ScalarField conv) {
  const auto& d = spec.dislocation;
  if (d.c1_field) {
    auto c1 = d.c1_field->values();
    auto out = conv.values();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = out[k] + c1[k];
  } else {
    for (double& v : conv.values()) v = v + d.c1;
  }
  return conv;
}

}  // namespace

ScalarField dislocation_speed(const CouplingSpec& spec, const ScalarField& chi_t,
                              double /*t*/) {
  if (spec.kind != CouplingKind::dislocation)
    throw ParameterError("dislocation_speed needs a dislocation coupling");
  return add_c1(spec, convolve_kernel(spec.dislocation.c0, chi_t));
}

// ---------------------------------------------------------------------------
// FitzHugh-Nagumo diffusion

namespace {

double neumann_laplacian(const ScalarField& v, int i, int j, double inv_h2) {
  const int n = v.n();
  auto at = [&](int a, int b) {
    a = a < 0 ? 1 : (a >= n ? n - 2 : a);
    b = b < 0 ? 1 : (b >= n ? n - 2 : b);
    return v(a, b);
  };
  const double c = v(i, j);
  return (((at(i + 1, j) + at(i - 1, j)) + (at(i, j + 1) + at(i, j - 1))) - 4.0 * c) *
         inv_h2;
}

ScalarField heat_step(const ScalarField& v, const ScalarField& source, double dt) {
  const GridSpec& spec = v.spec();
  const int n = spec.n();
  const double h = spec.spacing();
  if (dt > 0.25 * h * h * (1.0 + 1e-12))
    throw StabilityError("heat step exceeds h^2/4");
  const double inv_h2 = 1.0 / (h * h);
  ScalarField out(spec);
  const auto& k = simd::active();
  parallel_for(0, n, [&](int j) {
    if (j > 0 && j < n - 1) {
      const double* base = v.values().data();
      const simd::RowArgs args{base + static_cast<std::size_t>(j - 1) * n,
                               base + static_cast<std::size_t>(j) * n,
                               base + static_cast<std::size_t>(j + 1) * n, n, 1.0 / h};
      k.heat(args, source.row(j).data(), dt, out.row(j).data());
      for (int i : {0, n - 1})
        out(i, j) = v(i, j) + dt * (neumann_laplacian(v, i, j, inv_h2) + source(i, j));
    } else {
      for (int i = 0; i < n; ++i)
        out(i, j) = v(i, j) + dt * (neumann_laplacian(v, i, j, inv_h2) + source(i, j));
    }
  });
  return out;
}

std::vector<double> fn_sample_times(const OccupationHistory& chi, double horizon,
                                    int samples) {
  std::vector<double> times;
  for (int k = 0; k <= samples; ++k) times.push_back(horizon * k / samples);
  for (double t : chi.times)
    if (t > 0.0 && t < horizon) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

}  // namespace

FnEvolution fn_evolve(const CouplingSpec& spec, const OccupationHistory& chi,
                      double horizon) {
  if (spec.kind != CouplingKind::fitzhugh_nagumo)
    throw ParameterError("fn_evolve needs a fitzhugh_nagumo coupling");
  if (!(horizon >= 0.0)) throw ParameterError("horizon must be >= 0");
  chi.validate();
  const FnParams& fn = spec.fn;
  require_same_grid(fn.v0, chi.chi[0], "fn_evolve");
  const GridSpec& grid = fn.v0.spec();
  const double h = grid.spacing();
  const double dt_max = fn.heat_safety * 0.25 * h * h;

  FnEvolution out;
  const auto samples = horizon > 0.0 ? fn_sample_times(chi, horizon, fn.speed_samples)
                                     : std::vector<double>{0.0};
  ScalarField v = fn.v0;
  ScalarField source(grid);
  out.times.push_back(0.0);
  out.v.push_back(v);
  double t = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double goal = samples[k];
    while (t < goal) {
      double step = std::min(dt_max, goal - t);
      double t_new = t + step;
      if (goal - t_new <= 1e-12 * (1.0 + goal)) {
        step = goal - t;
        t_new = goal;
      }
      const ScalarField& c = chi.at(t);
      const auto vv = v.values();
      const auto cv = c.values();
      auto sv = source.values();
      for (std::size_t q = 0; q < vv.size(); ++q)
        sv[q] = fn.g_plus(vv[q]) * cv[q] + fn.g_minus(vv[q]) * (1.0 - cv[q]);
      v = heat_step(v, source, step);
      t = t_new;
    }
    out.times.push_back(goal);
    out.v.push_back(v);
  }

  std::vector<std::shared_ptr<const ScalarField>> speeds;
  for (const ScalarField& vk : out.v) {
    ScalarField c(grid);
    const auto src = vk.values();
    auto dst = c.values();
    for (std::size_t q = 0; q < src.size(); ++q) dst[q] = fn.alpha(src[q]);
    speeds.push_back(std::make_shared<const ScalarField>(std::move(c)));
  }
  std::vector<double> breaks(out.times.begin() + 1, out.times.end());
  const std::vector<double> times = out.times;
  out.speed = SpeedProvider(breaks, [times, speeds](double s) {
    const auto it = std::upper_bound(times.begin(), times.end(), s);
    const std::size_t idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return speeds[idx];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Volume coupling

double volume_speed(const CouplingSpec& spec, const ScalarField& chi_t) {
  if (spec.kind != CouplingKind::volume)
    throw ParameterError("volume_speed needs a volume coupling");
  return spec.volume.beta(lebesgue_measure(chi_t, 0.5));
}

SpeedProvider make_speed_provider(const CouplingSpec& spec,
                                  const OccupationHistory& chi, double horizon) {
  chi.validate();
  if (spec.kind == CouplingKind::fitzhugh_nagumo) return fn_evolve(spec, chi, horizon).speed;

  std::vector<std::shared_ptr<const ScalarField>> fields;
  if (spec.kind == CouplingKind::dislocation) {
    require_same_grid(spec.dislocation.c0, chi.chi[0], "dislocation speed");
    const auto taps = kernel_taps(spec.dislocation.c0);
    ScalarField conv = convolve_taps(taps, chi.chi[0]);
    for (std::size_t k = 0; k < chi.size(); ++k) {
      if (k > 0) convolve_update(taps, chi.chi[k - 1], chi.chi[k], conv);
      fields.push_back(std::make_shared<const ScalarField>(add_c1(spec, conv)));
    }
  } else {
    for (const ScalarField& c : chi.chi)
      fields.push_back(
          std::make_shared<const ScalarField>(c.spec(), volume_speed(spec, c)));
  }
  std::vector<double> breaks(chi.times.begin() + 1, chi.times.end());
  const std::vector<double> times = chi.times;
  return SpeedProvider(breaks, [times, fields](double s) {
    const auto it = std::upper_bound(times.begin(), times.end(), s);
    const std::size_t idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return fields[idx];
  });
}

// ---------------------------------------------------------------------------
// Distances

double kappa(const ScalarField& chi1, const ScalarField& chi2) {
  require_same_grid(chi1, chi2, "kappa");
  const auto a = chi1.values();
  const auto b = chi2.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
  return acc * chi1.spec().spacing() * chi1.spec().spacing();
}

namespace {

// Heat-kernel weights along one axis for the grid nodes, plus the sum over
// the infinite lattice that extends the grid. Both share the same shift of
// the exponent, so their ratio is the normalized discrete Gaussian.
struct AxisWeights {
  std::vector<double> w;
  double lattice = 0.0;
};

AxisWeights axis_weights(const GridSpec& spec, double x, double tau) {
  const double h = spec.spacing();
  const int n = spec.n();
  const double rel = (x - spec.coord(0)) / h;
  const long nearest = std::lround(rel);
  const double dmin = (rel - static_cast<double>(nearest)) * h;
  const double scale = 4.0 * tau;
  AxisWeights out;
  out.w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double d = x - spec.coord(i);
    out.w[i] = std::exp(-(d * d - dmin * dmin) / scale);
  }
  const double reach = 12.0 * std::sqrt(2.0 * tau) + 2.0 * h;
  const long span = static_cast<long>(std::ceil(reach / h));
  for (long k = nearest - span; k <= nearest + span; ++k) {
    const double d = (rel - static_cast<double>(k)) * h;
    out.lattice += std::exp(-(d * d - dmin * dmin) / scale);
  }
  return out;
}

}  // namespace

double heat_kernel_average(const ScalarField& diff, Point x, double tau) {
  const GridSpec& spec = diff.spec();
  const int n = spec.n();
  if (tau <= 0.0) {
    const double h = spec.spacing();
    const int i = std::clamp(static_cast<int>(std::lround((x.x - spec.coord(0)) / h)), 0, n - 1);
    const int j = std::clamp(static_cast<int>(std::lround((x.y - spec.coord(0)) / h)), 0, n - 1);
    return diff(i, j);
  }
  const AxisWeights wx = axis_weights(spec, x.x, tau);
  const AxisWeights wy = axis_weights(spec, x.y, tau);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    double row = 0.0;
    for (int i = 0; i < n; ++i) row += wx.w[i] * diff(i, j);
    acc += wy.w[j] * row;
  }
  return acc / (wx.lattice * wy.lattice);
}

namespace {

ScalarField abs_diff(const ScalarField& a, const ScalarField& b) {
  ScalarField out(a.spec());
  const auto av = a.values();
  const auto bv = b.values();
  auto ov = out.values();
  for (std::size_t k = 0; k < ov.size(); ++k) ov[k] = std::abs(av[k] - bv[k]);
  return out;
}

}  // namespace

KappaBar kappa_bar(const OccupationHistory& h1, const OccupationHistory& h2, Point x,
                   double t) {
  h1.validate();
  h2.validate();
  if (h1.times != h2.times) throw ParameterError("kappa_bar histories must share times");
  require_same_grid(h1.chi[0], h2.chi[0], "kappa_bar");
  KappaBar out;
  if (!(t > 0.0)) return out;

  std::vector<double> nodes;
  for (double s : h1.times)
    if (s < t) nodes.push_back(s);
  if (nodes.empty() || nodes.front() > 0.0) nodes.insert(nodes.begin(), 0.0);
  nodes.push_back(t);

  std::vector<double> f(nodes.size());
  std::vector<double> g(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t idx = h1.index_at(nodes[k]);
    const ScalarField diff = abs_diff(h1.chi[idx], h2.chi[idx]);
    const double tau = t - nodes[k];
    f[k] = heat_kernel_average(diff, x, tau);
    const double kap = kappa(h1.chi[idx], h2.chi[idx]);
    if (kap == 0.0) {
      g[k] = 0.0;
    } else {
      g[k] = tau > 0.0 ? std::min(1.0, kap / (4.0 * std::numbers::pi * tau)) : 1.0;
    }
  }
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double ds = nodes[k] - nodes[k - 1];
    out.value += 0.5 * ds * (f[k] + f[k - 1]);
    out.bound += 0.5 * ds * (g[k] + g[k - 1]);
  }
  return out;
}

}  // namespace frontlab
