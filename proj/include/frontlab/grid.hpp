#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "frontlab/error.hpp"

namespace frontlab {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double norm(Point p);

/// Uniform node-centred grid on [-L, L]^2 with an odd node count per axis so
/// the origin is a node.
class GridSpec {
 public:
  GridSpec() = default;
  /// Throws ParameterError unless n is odd and >= 33 and L > 0.
  GridSpec(int n, double half_extent);

  int n() const { return n_; }
  double half_extent() const { return half_extent_; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  double coord(int i) const { return -half_extent_ + spacing_ * i; }
  Point node(int i, int j) const { return {coord(i), coord(j)}; }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * n_ + i;
  }
  int center() const { return n_ / 2; }
  bool contains(Point p) const;

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.n_ == b.n_ && a.half_extent_ == b.half_extent_;
  }

 private:
  int n_ = 0;
  double half_extent_ = 0.0;
  double spacing_ = 0.0;
};

/// Node values on a GridSpec, stored row-major with rows along y (index
/// j * n + i, i along x).
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const GridSpec& spec, double fill = 0.0);
  ScalarField(const GridSpec& spec, std::vector<double> values);

  template <class F>
  static ScalarField sample(const GridSpec& spec, F&& f) {
    ScalarField out(spec);
    for (int j = 0; j < spec.n(); ++j)
      for (int i = 0; i < spec.n(); ++i) out(i, j) = f(spec.node(i, j));
    return out;
  }

  const GridSpec& spec() const { return spec_; }
  int n() const { return spec_.n(); }

  double& operator()(int i, int j) { return values_[spec_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[spec_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(int j) {
    return std::span<double>(values_).subspan(spec_.index(0, j), spec_.n());
  }
  std::span<const double> row(int j) const {
    return std::span<const double>(values_).subspan(spec_.index(0, j),
                                                    spec_.n());
  }

  double max_abs() const;
  double min() const;
  double max() const;
  bool all_finite() const;

  friend bool operator==(const ScalarField& a, const ScalarField& b) {
    return a.spec_ == b.spec_ && a.values_ == b.values_;
  }

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

void require_same_grid(const ScalarField& a, const ScalarField& b,
                       const char* what);

/// Level-crossing polylines of one level. Closed chains repeat their first
/// vertex at the end.
struct FrontContour {
  double level = 0.0;
  std::vector<std::vector<Point>> polylines;
  double perimeter = 0.0;

  std::size_t vertex_count() const;
  bool empty() const { return polylines.empty(); }
};

/// Godunov upwind approximation of |Du| for u_t = c |Du|; the one-sided
/// differences are chosen from the sign of `speed` at each node.
ScalarField upwind_gradient_norm(const ScalarField& u, const ScalarField& speed);

/// tr((I - p p^T / (|p|^2 + eps^2)) D^2 u) from central differences. This is
/// |Du| div(Du/|Du|) with the p = 0 singularity regularized by eps_reg.
ScalarField curvature_term(const ScalarField& u, double eps_reg);

/// |Du| by central differences (one-sided on the outer ring).
ScalarField central_gradient_norm(const ScalarField& u);

/// Area of {u >= threshold} from marching-squares polygons of the bilinear
/// interpolant.
double lebesgue_measure(const ScalarField& u, double threshold);

/// Area of {a <= u < b}.
double band_measure(const ScalarField& u, double a, double b);

/// Marching squares with linear edge interpolation. Saddle cells are split by
/// the average of the four corners.
FrontContour extract_contour(const ScalarField& u, double level);

/// Bilinear interpolation; -1 outside the domain (far field).
double interpolate(const ScalarField& u, Point p);

/// Plain-text dump: "n L" then n rows of n values.
void write_field(std::ostream& os, const ScalarField& u);
ScalarField read_field(std::istream& is);
void save_field(const std::string& path, const ScalarField& u);
ScalarField load_field(const std::string& path);

/// CSV with header polyline_id,vertex_index,x,y.
void write_contour_csv(std::ostream& os, const FrontContour& c);

}  // namespace frontlab
