#include "frontlab/initial_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "frontlab/parallel.hpp"

namespace frontlab {
namespace {

double jacobian_operator_norm(double a, double b, double c, double d) {
  // Largest singular value of [[a, b], [c, d]].
  const double s = a * a + b * b + c * c + d * d;
  const double det = a * d - b * c;
  const double disc = std::max(s * s - 4.0 * det * det, 0.0);
  return std::sqrt(0.5 * (s + std::sqrt(disc)));
}

std::vector<double> gaussian_taps(double sigma_nodes) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma_nodes));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) {
    taps[k + r] = std::exp(-0.5 * k * k / (sigma_nodes * sigma_nodes));
    sum += taps[k + r];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ScalarField blur(const ScalarField& f, const std::vector<double>& taps) {
  const int n = f.n();
  const int r = static_cast<int>(taps.size() / 2);
  ScalarField tmp(f.spec());
  ScalarField out(f.spec());
  parallel_for(0, n, [&](int j) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k)
        acc += taps[k + r] * f(std::clamp(i + k, 0, n - 1), j);
      tmp(i, j) = acc;
    }
  });
  parallel_for(0, n, [&](int j) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k)
        acc += taps[k + r] * tmp(i, std::clamp(j + k, 0, n - 1));
      out(i, j) = acc;
    }
  });
  return out;
}

// min over alpha in [0, 1] of |y - alpha p| - (1 - alpha) r0; negative iff y
// lies strictly inside the hull of B(0, r0) and {p}.
double hull_gap(Point y, Point p, double r0) {
  if (norm(p) <= r0) return norm(y) - r0;
  auto g = [&](double a) { return norm(y - a * p) - (1.0 - a) * r0; };
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0;
  double hi = 1.0;
  double a1 = hi - kInvPhi * (hi - lo);
  double a2 = lo + kInvPhi * (hi - lo);
  double g1 = g(a1);
  double g2 = g(a2);
  for (int it = 0; it < 80; ++it) {
    if (g1 < g2) {
      hi = a2;
      a2 = a1;
      g2 = g1;
      a1 = hi - kInvPhi * (hi - lo);
      g1 = g(a1);
    } else {
      lo = a1;
      a1 = a2;
      g1 = g2;
      a2 = lo + kInvPhi * (hi - lo);
      g2 = g(a2);
    }
  }
  return std::min({g(0.0), g(1.0), g1, g2});
}

struct Segment {
  Point a;
  Point b;
};

double segment_distance(Point y, const Segment& s) {
  const Point d = s.b - s.a;
  const double len2 = d.x * d.x + d.y * d.y;
  double t = 0.0;
  if (len2 > 0.0) {
    const Point w = y - s.a;
    t = std::clamp((w.x * d.x + w.y * d.y) / len2, 0.0, 1.0);
  }
  return norm(y - (s.a + t * d));
}

// Closed boundary polygon of the hull of B(0, r0) and {p}, spacing <= step.
std::vector<Point> hull_outline(Point p, double r0, double step) {
  std::vector<Point> pts;
  const double rp = norm(p);
  auto arc = [&](double from, double to) {
    const int m = std::max(1, static_cast<int>(std::ceil(r0 * (to - from) / step)));
    for (int k = 0; k < m; ++k) {
      const double a = from + (to - from) * k / m;
      pts.push_back({r0 * std::cos(a), r0 * std::sin(a)});
    }
  };
  if (rp <= r0) {
    arc(0.0, 2.0 * std::numbers::pi);
    return pts;
  }
  const double phi = std::atan2(p.y, p.x);
  const double beta = std::acos(r0 / rp);
  arc(phi + beta, phi - beta + 2.0 * std::numbers::pi);
  const Point t2{r0 * std::cos(phi - beta), r0 * std::sin(phi - beta)};
  const Point t1{r0 * std::cos(phi + beta), r0 * std::sin(phi + beta)};
  auto line = [&](Point a, Point b) {
    const int m = std::max(1, static_cast<int>(std::ceil(norm(b - a) / step)));
    for (int k = 0; k < m; ++k) pts.push_back(a + (static_cast<double>(k) / m) * (b - a));
  };
  line(t2, p);
  line(p, t1);
  return pts;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

DirectionField DirectionField::radial(const GridSpec& spec) {
  DirectionField f;
  f.kind_ = DirectionKind::radial;
  f.vx_ = ScalarField::sample(spec, [](Point p) { return -p.x; });
  f.vy_ = ScalarField::sample(spec, [](Point p) { return -p.y; });
  f.refresh_norms();
  return f;
}

DirectionField DirectionField::from_gradient(const ScalarField& u0) {
  const GridSpec& spec = u0.spec();
  ScalarField gx(spec);
  ScalarField gy(spec);
  const double h = spec.spacing();
  const int n = spec.n();
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int il = std::max(i - 1, 0), ir = std::min(i + 1, n - 1);
      const int jl = std::max(j - 1, 0), jr = std::min(j + 1, n - 1);
      gx(i, j) = (u0(ir, j) - u0(il, j)) / (h * (ir - il));
      gy(i, j) = (u0(i, jr) - u0(i, jl)) / (h * (jr - jl));
    }
  }
  const auto taps = gaussian_taps(2.0);
  DirectionField f;
  f.kind_ = DirectionKind::gradient;
  f.vx_ = blur(gx, taps);
  f.vy_ = blur(gy, taps);
  f.refresh_norms();
  return f;
}

DirectionField DirectionField::custom(ScalarField vx, ScalarField vy,
                                     DirectionKind kind) {
  require_same_grid(vx, vy, "direction field components");
  if (!vx.all_finite() || !vy.all_finite())
    throw ParameterError("direction field has non-finite components");
  DirectionField f;
  f.kind_ = kind;
  f.vx_ = std::move(vx);
  f.vy_ = std::move(vy);
  f.refresh_norms();
  return f;
}

Point DirectionField::at(Point p) const {
  if (kind_ == DirectionKind::radial) return {-p.x, -p.y};
  if (!vx_.spec().contains(p)) return {0.0, 0.0};
  return {interpolate(vx_, p), interpolate(vy_, p)};
}

void DirectionField::refresh_norms() {
  const int n = vx_.n();
  if (n == 0) {
    sup_norm_ = lip_norm_ = 0.0;
    return;
  }
  const double h = vx_.spec().spacing();
  double sup = 0.0;
  double lip = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      sup = std::max(sup, std::hypot(vx_(i, j), vy_(i, j)));
      const int il = std::max(i - 1, 0), ir = std::min(i + 1, n - 1);
      const int jl = std::max(j - 1, 0), jr = std::min(j + 1, n - 1);
      const double dx = h * (ir - il);
      const double dy = h * (jr - jl);
      lip = std::max(lip, jacobian_operator_norm(
                              (vx_(ir, j) - vx_(il, j)) / dx,
                              (vx_(i, jr) - vx_(i, jl)) / dy,
                              (vy_(ir, j) - vy_(il, j)) / dx,
                              (vy_(i, jr) - vy_(i, jl)) / dy));
    }
  }
  sup_norm_ = sup;
  lip_norm_ = lip;
}

std::string to_string(DirectionKind kind) {
  switch (kind) {
    case DirectionKind::radial:
      return "radial";
    case DirectionKind::gradient:
      return "gradient";
    case DirectionKind::custom:
      return "custom";
  }
  return "custom";
}

DirectionKind direction_kind_from_string(const std::string& s) {
  if (s == "radial") return DirectionKind::radial;
  if (s == "gradient") return DirectionKind::gradient;
  if (s == "custom") return DirectionKind::custom;
  throw ParameterError("unknown direction kind '" + s + "'");
}

double gradient_sup(const ScalarField& u) { return central_gradient_norm(u).max(); }

ScalarField star_shaped_signed_distance(std::span<const Point> kernel_points,
                                        double r0, const GridSpec& spec) {
  if (kernel_points.empty()) throw ParameterError("kernel point set is empty");
  const bool disc = std::all_of(kernel_points.begin(), kernel_points.end(),
                                [&](Point p) { return norm(p) <= r0; });
  if (disc) return ScalarField::sample(spec, [&](Point y) { return r0 - norm(y); });

  const std::size_t m = kernel_points.size();
  std::vector<Segment> segments;
  const double step = 0.5 * spec.spacing();
  for (std::size_t k = 0; k < m; ++k) {
    const auto outline = hull_outline(kernel_points[k], r0, step);
    std::vector<char> keep(outline.size(), 1);
    for (std::size_t s = 0; s < outline.size(); ++s)
      for (std::size_t o = 0; o < m && keep[s]; ++o)
        if (o != k && hull_gap(outline[s], kernel_points[o], r0) < -1e-12) keep[s] = 0;
    for (std::size_t s = 0; s < outline.size(); ++s) {
      const std::size_t t = (s + 1) % outline.size();
      if (keep[s] && keep[t]) segments.push_back({outline[s], outline[t]});
    }
  }

  ScalarField out(spec);
  parallel_for(0, spec.n(), [&](int j) {
    for (int i = 0; i < spec.n(); ++i) {
      const Point y = spec.node(i, j);
      double gap = std::numeric_limits<double>::infinity();
      for (const Point& p : kernel_points) gap = std::min(gap, hull_gap(y, p, r0));
      if (gap > 0.0) {
        out(i, j) = -gap;
        continue;
      }
      double d = std::numeric_limits<double>::infinity();
      for (const Segment& s : segments) d = std::min(d, segment_distance(y, s));
      out(i, j) = d;
    }
  });
  return out;
}

InitCondition star_shaped_u0(std::span<const Point> kernel_points, double r0,
                             const GridSpec& spec) {
  if (!(r0 > 0.0)) throw ParameterError("r0 must be > 0");
  if (kernel_points.empty()) throw ParameterError("kernel point set is empty");
  const double L = spec.half_extent();
  const double h = spec.spacing();
  double r_max = r0;
  for (const Point& p : kernel_points) {
    if (!(norm(p) <= L - 3.0 * h))
      throw DomainError("kernel point (" + std::to_string(p.x) + ", " +
                        std::to_string(p.y) + ") lies outside B(0, L - 3h)");
    r_max = std::max(r_max, norm(p));
  }
  if (r_max > L - 2.0 * h)
    throw DomainError("initial set of radius " + std::to_string(r_max) +
                      " exceeds B(0, L - 2h)");

  InitCondition init;
  init.u0 = star_shaped_signed_distance(kernel_points, r0, spec);
  for (double& v : init.u0.values()) v = std::clamp(v, -1.0, 1.0);
  init.R0 = r_max + 1.0;
  init.nu = DirectionField::radial(spec);
  init.lambda0 = std::min({0.5, 0.9 / init.nu.sup_norm(), 0.9 / init.nu.lip_norm()});

  constexpr int kSamples = 8;
  I2Verdict last;
  for (double delta : {0.2, 0.1, 0.05}) {
    init.delta0 = delta;
    init.eta0 = certify_eta(init.u0, init.nu, delta, init.lambda0, kSamples);
    last = verify_I2(init, kSamples);
    if (last.pass && init.eta0 >= 0.5 * r0) return init;
  }
  std::ostringstream msg;
  msg << "interior displacement condition not certified: eta0 = " << init.eta0
      << " < r0/2 = " << 0.5 * r0 << " at delta0 = " << init.delta0
      << ", worst node (" << last.worst_node.x << ", " << last.worst_node.y
      << ") margin " << last.worst_margin;
  throw ConstructionError(msg.str());
}

bool verify_I1(const ScalarField& u0, double R0) {
  const GridSpec& spec = u0.spec();
  for (int j = 0; j < spec.n(); ++j) {
    for (int i = 0; i < spec.n(); ++i) {
      const double v = u0(i, j);
      if (!(std::abs(v) <= 1.0 + 1e-12)) return false;
      if (norm(spec.node(i, j)) > R0 && v != -1.0) return false;
    }
  }
  return true;
}

namespace {

// Applies f(node, i, j, lambda) over band nodes and lambda = k lambda_max / m,
// k = 1..m, returning the minimum together with its node.
template <class F>
std::pair<double, Point> band_min(const ScalarField& u0, double band,
                                  double lambda_max, int m, F&& f) {
  const GridSpec& spec = u0.spec();
  const int n = spec.n();
  std::vector<double> row_min(n, std::numeric_limits<double>::infinity());
  std::vector<Point> row_arg(n);
  parallel_for(0, n, [&](int j) {
    for (int i = 0; i < n; ++i) {
      if (!(std::abs(u0(i, j)) <= band)) continue;
      for (int k = 1; k <= m; ++k) {
        const double lambda = lambda_max * k / m;
        const double v = f(spec.node(i, j), i, j, lambda);
        if (v < row_min[j]) {
          row_min[j] = v;
          row_arg[j] = spec.node(i, j);
        }
      }
    }
  });
  std::pair<double, Point> best{std::numeric_limits<double>::infinity(), Point{}};
  for (int j = 0; j < n; ++j)
    if (row_min[j] < best.first) best = {row_min[j], row_arg[j]};
  return best;
}

}  // namespace

double certify_eta(const ScalarField& u0, const DirectionField& nu, double band,
                   double lambda_max, int lambda_samples) {
  if (lambda_samples < 1) throw ParameterError("lambda_samples must be >= 1");
  if (!(lambda_max > 0.0)) return std::numeric_limits<double>::infinity();
  return band_min(u0, band, lambda_max, lambda_samples,
                  [&](Point x, int i, int j, double lambda) {
                    return (interpolate(u0, x + lambda * nu.at(x)) - u0(i, j)) / lambda;
                  })
      .first;
}

I2Verdict verify_I2(const InitCondition& init, int lambda_samples) {
  if (lambda_samples < 4) throw ParameterError("lambda_samples must be >= 4");
  I2Verdict verdict;
  if (!(init.lambda0 > 0.0)) return verdict;
  const ScalarField& u0 = init.u0;
  const double tol = gradient_sup(u0) * u0.spec().spacing();
  const auto [worst, node] =
      band_min(u0, init.delta0, init.lambda0, lambda_samples,
               [&](Point x, int i, int j, double lambda) {
                 return interpolate(u0, x + lambda * init.nu.at(x)) - u0(i, j) -
                        lambda * init.eta0;
               });
  verdict.worst_margin = worst;
  verdict.worst_node = node;
  verdict.pass = worst >= -tol;
  return verdict;
}

double psi_truncation(double r, double delta0) {
  if (!(delta0 > 0.0 && delta0 < 1.0)) throw ParameterError("delta0 must lie in (0, 1)");
  if (r <= -0.75 * delta0) return -1.0;
  if (r <= -0.5 * delta0)
    return 2.0 * (2.0 - delta0) / delta0 * (r + 0.5 * delta0) - 0.5 * delta0;
  if (r <= 0.5 * delta0) return r;
  return 0.5 * delta0;
}

ScalarField push_sample(const ScalarField& u, const DirectionField& nu, double lambda) {
  if (lambda == 0.0) return u;
  const GridSpec& spec = u.spec();
  ScalarField out(spec);
  parallel_for(0, spec.n(), [&](int j) {
    for (int i = 0; i < spec.n(); ++i) {
      const Point x = spec.node(i, j);
      out(i, j) = interpolate(u, x + lambda * nu.at(x));
    }
  });
  return out;
}

void save_init(const std::string& dir, const InitCondition& init) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_field((fs::path(dir) / "u0.txt").string(), init.u0);
  std::ofstream os(fs::path(dir) / "init.txt");
  if (!os) throw IoError("cannot write " + dir + "/init.txt");
  os.precision(17);
  os << "R0=" << init.R0 << "\n"
     << "delta0=" << init.delta0 << "\n"
     << "eta0=" << init.eta0 << "\n"
     << "lambda0=" << init.lambda0 << "\n"
     << "nu.kind=" << to_string(init.nu.kind()) << "\n"
     << "nu.sup_norm=" << init.nu.sup_norm() << "\n"
     << "nu.lip_norm=" << init.nu.lip_norm() << "\n";
  if (init.nu.kind() != DirectionKind::radial) {
    save_field((fs::path(dir) / "nu_x.txt").string(), init.nu.x_component());
    save_field((fs::path(dir) / "nu_y.txt").string(), init.nu.y_component());
  }
}

InitCondition load_init(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "init.txt");
  if (!is) throw IoError("cannot read " + dir + "/init.txt");
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(is, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto num = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("init.txt lacks ") + key);
    return std::stod(it->second);
  };
  InitCondition init;
  init.u0 = load_field((fs::path(dir) / "u0.txt").string());
  init.R0 = num("R0");
  init.delta0 = num("delta0");
  init.eta0 = num("eta0");
  init.lambda0 = num("lambda0");
  const auto kind = direction_kind_from_string(kv.count("nu.kind") ? kv["nu.kind"] : "radial");
  if (kind == DirectionKind::radial) {
    init.nu = DirectionField::radial(init.u0.spec());
  } else {
    init.nu = DirectionField::custom(load_field((fs::path(dir) / "nu_x.txt").string()),
                                     load_field((fs::path(dir) / "nu_y.txt").string()),
                                     kind);
  }
  return init;
}

}  // namespace frontlab
