#include "frontlab/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "frontlab/parallel.hpp"
#include "frontlab/simd/kernels.hpp"
#include "simd/kernel_math.hpp"
#include "stencil.hpp"

namespace frontlab {

double norm(Point p) { return std::hypot(p.x, p.y); }

GridSpec::GridSpec(int n, double half_extent)
    : n_(n), half_extent_(half_extent) {
  if (n < 33 || n % 2 == 0)
    throw ParameterError("grid n must be an odd integer >= 33, got " +
                         std::to_string(n));
  if (!(half_extent > 0.0) || !std::isfinite(half_extent))
    throw ParameterError("grid half extent must be positive");
  spacing_ = 2.0 * half_extent / (n - 1);
}

bool GridSpec::contains(Point p) const {
  const double lim = half_extent_ * (1.0 + 1e-12);
  return p.x >= -lim && p.x <= lim && p.y >= -lim && p.y <= lim;
}

ScalarField::ScalarField(const GridSpec& spec, double fill)
    : spec_(spec), values_(spec.size(), fill) {}

ScalarField::ScalarField(const GridSpec& spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  if (values_.size() != spec_.size())
    throw ShapeError("field value count does not match grid");
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double ScalarField::min() const {
  return *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const {
  return *std::max_element(values_.begin(), values_.end());
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_grid(const ScalarField& a, const ScalarField& b,
                       const char* what) {
  if (!(a.spec() == b.spec()))
    throw ShapeError(std::string(what) + ": fields live on different grids");
}

std::size_t FrontContour::vertex_count() const {
  std::size_t count = 0;
  for (const auto& p : polylines) count += p.size();
  return count;
}

// ---------------------------------------------------------------------------
// Stencils

namespace {

using simd::detail::curvature_from_derivs;
using simd::detail::godunov_norm;

simd::RowArgs row_args(const ScalarField& u, int j) {
  const int n = u.n();
  const double* base = u.values().data();
  return {base + static_cast<std::size_t>(j - 1) * n,
          base + static_cast<std::size_t>(j) * n,
          base + static_cast<std::size_t>(j + 1) * n, n,
          1.0 / u.spec().spacing()};
}

}  // namespace

namespace detail {

// One-sided differences where a neighbour is missing reuse the other side.
double upwind_boundary(const ScalarField& u, int i, int j, bool expanding) {
  const int n = u.n();
  const double inv_h = 1.0 / u.spec().spacing();
  const double c = u(i, j);
  double dmx = i > 0 ? (c - u(i - 1, j)) * inv_h : 0.0;
  double dpx = i < n - 1 ? (u(i + 1, j) - c) * inv_h : 0.0;
  double dmy = j > 0 ? (c - u(i, j - 1)) * inv_h : 0.0;
  double dpy = j < n - 1 ? (u(i, j + 1) - c) * inv_h : 0.0;
  if (i == 0) dmx = dpx;
  if (i == n - 1) dpx = dmx;
  if (j == 0) dmy = dpy;
  if (j == n - 1) dpy = dmy;
  return godunov_norm(dmx, dpx, dmy, dpy, expanding);
}

// Second-order one-sided first derivative along x (axis 0) or y (axis 1).
double first_derivative(const ScalarField& u, int i, int j, int axis) {
  const int n = u.n();
  const double h = u.spec().spacing();
  auto at = [&](int k) { return axis == 0 ? u(k, j) : u(i, k); };
  const int k = axis == 0 ? i : j;
  if (k == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (k == n - 1)
    return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(k + 1) - at(k - 1)) / (2.0 * h);
}

double curvature_boundary(const ScalarField& u, int i, int j, double eps2) {
  const int n = u.n();
  const double h = u.spec().spacing();
  const double inv_h2 = 1.0 / (h * h);
  const int ic = std::clamp(i, 1, n - 2);
  const int jc = std::clamp(j, 1, n - 2);
  const double ux = first_derivative(u, i, j, 0);
  const double uy = first_derivative(u, i, j, 1);
  const double uxx = ((u(ic + 1, j) + u(ic - 1, j)) - 2.0 * u(ic, j)) * inv_h2;
  const double uyy = ((u(i, jc + 1) + u(i, jc - 1)) - 2.0 * u(i, jc)) * inv_h2;
  const double uxy = ((u(ic + 1, jc + 1) - u(ic + 1, jc - 1)) -
                      (u(ic - 1, jc + 1) - u(ic - 1, jc - 1))) *
                     (0.25 * inv_h2);
  return curvature_from_derivs(ux, uy, uxx, uyy, uxy, eps2);
}

}  // namespace detail

namespace {

using detail::curvature_boundary;
using detail::first_derivative;
using detail::upwind_boundary;

template <class F>
void for_ring(int n, F&& f) {
  for (int i = 0; i < n; ++i) {
    f(i, 0);
    f(i, n - 1);
  }
  for (int j = 1; j < n - 1; ++j) {
    f(0, j);
    f(n - 1, j);
  }
}

}  // namespace

ScalarField upwind_gradient_norm(const ScalarField& u,
                                 const ScalarField& speed) {
  require_same_grid(u, speed, "upwind_gradient_norm");
  const int n = u.n();
  ScalarField out(u.spec());
  const auto& k = simd::active();
  parallel_for(1, n - 1, [&](int j) {
    k.upwind(row_args(u, j), speed.row(j).data(), out.row(j).data());
  });
  for_ring(n, [&](int i, int j) {
    out(i, j) = upwind_boundary(u, i, j, speed(i, j) >= 0.0);
  });
  return out;
}

ScalarField curvature_term(const ScalarField& u, double eps_reg) {
  if (!(eps_reg > 0.0))
    throw ParameterError("curvature regularization eps_reg must be > 0");
  const double eps2 = eps_reg * eps_reg;
  const int n = u.n();
  ScalarField out(u.spec());
  const auto& k = simd::active();
  parallel_for(1, n - 1, [&](int j) {
    k.curvature(row_args(u, j), eps2, out.row(j).data());
  });
  for_ring(n, [&](int i, int j) { out(i, j) = curvature_boundary(u, i, j, eps2); });
  return out;
}

ScalarField central_gradient_norm(const ScalarField& u) {
  const int n = u.n();
  ScalarField out(u.spec());
  parallel_for(0, n, [&](int j) {
    for (int i = 0; i < n; ++i)
      out(i, j) = std::hypot(first_derivative(u, i, j, 0),
                             first_derivative(u, i, j, 1));
  });
  return out;
}


// ---------------------------------------------------------------------------
// Marching squares

namespace {

struct Cell {
  std::array<Point, 4> p;     // counter-clockwise from (i, j)
  std::array<double, 4> v;
  std::array<bool, 4> in;
};

Cell make_cell(const ScalarField& u, int i, int j, double level) {
  const GridSpec& g = u.spec();
  Cell c;
  c.p = {g.node(i, j), g.node(i + 1, j), g.node(i + 1, j + 1), g.node(i, j + 1)};
  c.v = {u(i, j), u(i + 1, j), u(i + 1, j + 1), u(i, j + 1)};
  for (int k = 0; k < 4; ++k) c.in[k] = c.v[k] >= level;
  return c;
}

Point crossing(Point pa, double va, Point pb, double vb, double level) {
  const double t = (level - va) / (vb - va);
  return {pa.x + t * (pb.x - pa.x), pa.y + t * (pb.y - pa.y)};
}

// Crossing on cell edge k (corner k -> corner k+1), evaluated from the
// endpoint with the lower grid index so neighbouring cells agree exactly.
Point edge_crossing(const Cell& c, int k, double level) {
  static constexpr int kLo[4] = {0, 1, 3, 0};
  static constexpr int kHi[4] = {1, 2, 2, 3};
  const int lo = kLo[k];
  const int hi = kHi[k];
  return crossing(c.p[lo], c.v[lo], c.p[hi], c.v[hi], level);
}

double shoelace(const Point* pts, int count) {
  double s = 0.0;
  for (int k = 0; k < count; ++k) {
    const Point a = pts[k];
    const Point b = pts[(k + 1) % count];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(s);
}

bool is_saddle(const Cell& c) {
  return c.in[0] == c.in[2] && c.in[1] == c.in[3] && c.in[0] != c.in[1];
}

bool saddle_connected_inside(const Cell& c, double level) {
  return 0.25 * (((c.v[0] + c.v[1]) + c.v[2]) + c.v[3]) >= level;
}

double cell_area(const Cell& c, double level) {
  std::array<Point, 8> poly;
  int count = 0;
  if (is_saddle(c) && !saddle_connected_inside(c, level)) {
    double area = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (!c.in[k]) continue;
      const int prev = (k + 3) % 4;
      const Point tri[3] = {edge_crossing(c, prev, level), c.p[k],
                            edge_crossing(c, k, level)};
      area += shoelace(tri, 3);
    }
    return area;
  }
  for (int k = 0; k < 4; ++k) {
    if (c.in[k]) poly[count++] = c.p[k];
    if (c.in[k] != c.in[(k + 1) % 4]) poly[count++] = edge_crossing(c, k, level);
  }
  return count >= 3 ? shoelace(poly.data(), count) : 0.0;
}

}  // namespace

double lebesgue_measure(const ScalarField& u, double threshold) {
  const int n = u.n();
  const double h = u.spec().spacing();
  std::vector<double> partial(n - 1, 0.0);
  std::vector<long long> full(n - 1, 0);
  parallel_for(0, n - 1, [&](int j) {
    double s = 0.0;
    long long f = 0;
    for (int i = 0; i < n - 1; ++i) {
      const bool a = u(i, j) >= threshold;
      const bool b = u(i + 1, j) >= threshold;
      const bool c = u(i + 1, j + 1) >= threshold;
      const bool d = u(i, j + 1) >= threshold;
      if (a && b && c && d) {
        ++f;
      } else if (a || b || c || d) {
        s += cell_area(make_cell(u, i, j, threshold), threshold);
      }
    }
    partial[j] = s;
    full[j] = f;
  });
  double area = 0.0;
  long long full_cells = 0;
  for (int j = 0; j < n - 1; ++j) {
    area += partial[j];
    full_cells += full[j];
  }
  return static_cast<double>(full_cells) * h * h + area;
}

double band_measure(const ScalarField& u, double a, double b) {
  if (!(a < b)) throw ParameterError("band_measure requires a < b");
  return std::max(0.0, lebesgue_measure(u, a) - lebesgue_measure(u, b));
}

FrontContour extract_contour(const ScalarField& u, double level) {
  if (!(level > -1.0 && level < 1.0))
    throw ParameterError("contour level must lie in (-1, 1)");
  const int n = u.n();
  const GridSpec& g = u.spec();

  // Edge ids: 2*index(i,j) for the x-edge starting at node (i,j), +1 for
  // the y-edge.
  auto edge_id = [&](int i, int j, int k) -> std::size_t {
    switch (k) {
      case 0: return 2 * g.index(i, j);
      case 1: return 2 * g.index(i + 1, j) + 1;
      case 2: return 2 * g.index(i, j + 1);
      default: return 2 * g.index(i, j) + 1;
    }
  };

  struct Segment {
    std::size_t a, b;
  };
  std::vector<Segment> segs;
  std::vector<Point> edge_point(2 * g.size());

  for (int j = 0; j < n - 1; ++j) {
    for (int i = 0; i < n - 1; ++i) {
      const Cell c = make_cell(u, i, j, level);
      int crossings[4];
      int count = 0;
      for (int k = 0; k < 4; ++k) {
        if (c.in[k] != c.in[(k + 1) % 4]) {
          crossings[count++] = k;
          edge_point[edge_id(i, j, k)] = edge_crossing(c, k, level);
        }
      }
      if (count == 2) {
        segs.push_back({edge_id(i, j, crossings[0]), edge_id(i, j, crossings[1])});
      } else if (count == 4) {
        // Separate the corners that end up isolated.
        const bool inside_connected = saddle_connected_inside(c, level);
        for (int k = 0; k < 4; ++k) {
          if (c.in[k] == inside_connected) continue;
          segs.push_back({edge_id(i, j, (k + 3) % 4), edge_id(i, j, k)});
        }
      }
    }
  }

  // Link segments sharing an edge crossing.
  constexpr int kNone = -1;
  std::vector<std::array<int, 2>> adj(2 * g.size(), {kNone, kNone});
  for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
    for (std::size_t e : {segs[s].a, segs[s].b}) {
      auto& slot = adj[e];
      if (slot[0] == kNone) slot[0] = s;
      else slot[1] = s;
    }
  }
  auto degree = [&](std::size_t e) {
    return (adj[e][0] != kNone) + (adj[e][1] != kNone);
  };

  FrontContour out;
  out.level = level;
  std::vector<char> used(segs.size(), 0);

  auto walk = [&](std::size_t start_edge, int seg) {
    std::vector<Point> chain{edge_point[start_edge]};
    std::size_t cur = start_edge;
    while (true) {
      used[seg] = 1;
      const std::size_t next = segs[seg].a == cur ? segs[seg].b : segs[seg].a;
      chain.push_back(edge_point[next]);
      if (next == start_edge) break;
      int nseg = kNone;
      for (int cand : adj[next])
        if (cand != kNone && cand != seg && !used[cand]) nseg = cand;
      if (nseg == kNone) break;
      cur = next;
      seg = nseg;
    }
    out.polylines.push_back(std::move(chain));
  };

  for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
    if (used[s]) continue;
    if (degree(segs[s].a) == 1) walk(segs[s].a, s);
    else if (degree(segs[s].b) == 1) walk(segs[s].b, s);
  }
  for (int s = 0; s < static_cast<int>(segs.size()); ++s)
    if (!used[s]) walk(segs[s].a, s);

  double perimeter = 0.0;
  for (const auto& chain : out.polylines)
    for (std::size_t k = 1; k < chain.size(); ++k)
      perimeter += norm(chain[k] - chain[k - 1]);
  out.perimeter = perimeter;
  return out;
}

double interpolate(const ScalarField& u, Point p) {
  const GridSpec& g = u.spec();
  if (!g.contains(p)) return -1.0;
  const double h = g.spacing();
  const int n = g.n();
  const int i0 = std::clamp(static_cast<int>(std::floor((p.x + g.half_extent()) / h)), 0, n - 2);
  const int j0 = std::clamp(static_cast<int>(std::floor((p.y + g.half_extent()) / h)), 0, n - 2);
  const double fx = (p.x - g.coord(i0)) / h;
  const double fy = (p.y - g.coord(j0)) / h;
  const double bottom = (1.0 - fx) * u(i0, j0) + fx * u(i0 + 1, j0);
  const double top = (1.0 - fx) * u(i0, j0 + 1) + fx * u(i0 + 1, j0 + 1);
  return (1.0 - fy) * bottom + fy * top;
}

// ---------------------------------------------------------------------------
// Text formats

void write_field(std::ostream& os, const ScalarField& u) {
  const int n = u.n();
  os << n << ' ' << std::setprecision(17) << u.spec().half_extent() << '\n';
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i) os << ' ';
      os << u(i, j);
    }
    os << '\n';
  }
}

ScalarField read_field(std::istream& is) {
  int n = 0;
  double L = 0.0;
  if (!(is >> n >> L)) throw IoError("field dump: missing 'n L' header");
  GridSpec spec(n, L);
  std::vector<double> values(spec.size());
  for (double& v : values)
    if (!(is >> v)) throw IoError("field dump: truncated value list");
  return ScalarField(spec, std::move(values));
}

void save_field(const std::string& path, const ScalarField& u) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  write_field(os, u);
}

ScalarField load_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  return read_field(is);
}

void write_contour_csv(std::ostream& os, const FrontContour& c) {
  os << "polyline_id,vertex_index,x,y\n" << std::setprecision(17);
  for (std::size_t p = 0; p < c.polylines.size(); ++p)
    for (std::size_t k = 0; k < c.polylines[p].size(); ++k)
      os << p << ',' << k << ',' << c.polylines[p][k].x << ','
         << c.polylines[p][k].y << '\n';
}

}  // namespace frontlab
