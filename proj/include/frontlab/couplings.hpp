#pragma once

#include <optional>
#include <string>
#include <vector>

#include "frontlab/grid.hpp"
#include "frontlab/local_solver.hpp"

namespace frontlab {

/// Built-in monotone scalar maps: affine(a,b) = a + b r,
/// clamp_affine(a,b,lo,hi) = clamp(a + b r, lo, hi), constant(a).
class ScalarMap {
 public:
  enum class Kind { constant, affine, clamp_affine };

  ScalarMap() = default;
  static ScalarMap constant(double a);
  static ScalarMap affine(double a, double b);
  static ScalarMap clamp_affine(double a, double b, double lo, double hi);
  /// Parses the config syntax; throws ConfigError.
  static ScalarMap parse(const std::string& text);

  double operator()(double r) const;
  double lipschitz() const;
  /// max |f| on [lo, hi] (attained at an endpoint since f is monotone).
  double sup_abs(double lo, double hi) const;
  /// Range bounds when f is bounded on the whole line.
  std::optional<std::pair<double, double>> global_range() const;
  bool nondecreasing() const;
  std::string to_string() const;

 private:
  Kind kind_ = Kind::constant;
  double a_ = 0.0;
  double b_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

enum class CouplingKind { dislocation, fitzhugh_nagumo, volume };
std::string to_string(CouplingKind kind);

struct DislocationParams {
  ScalarField c0;                  ///< kernel sampled on the simulation grid
  double c1 = 0.0;                 ///< constant part, used when c1_field is empty
  std::optional<ScalarField> c1_field;
};

struct FnParams {
  ScalarMap alpha;
  ScalarMap g_plus;
  ScalarMap g_minus;
  ScalarField v0;
  double g_lower = 0.0;
  double g_upper = 0.0;
  double heat_safety = 0.5;
  int speed_samples = 40;          ///< uniform v samples feeding the speed
};

struct VolumeParams {
  ScalarMap beta;
};

struct CouplingSpec {
  CouplingKind kind = CouplingKind::volume;
  DislocationParams dislocation;
  FnParams fn;
  VolumeParams volume;

  /// Throws ConfigError on violated structural assumptions.
  void validate() const;
  /// Bound M_c on |c[chi]| over [0, horizon] for sets of area <= max_area.
  double speed_bound(double horizon, double max_area) const;
  /// Lipschitz constant recorded for the coupling map (L_alpha, L_beta or
  /// the kernel L1 norm).
  double lipschitz() const;
};

/// chi(., t) for t in [0, T], piecewise constant from the latest time <= t.
struct OccupationHistory {
  std::vector<double> times;
  std::vector<ScalarField> chi;

  std::size_t size() const { return times.size(); }
  std::size_t index_at(double t) const;
  const ScalarField& at(double t) const { return chi[index_at(t)]; }
  /// Throws ParameterError unless times ascend and every value is 0 or 1.
  void validate() const;
};

/// h^2 sum_y c0(x - y) chi(y), with c0 centred on the grid origin and
/// truncated at the grid edge. Kernel entries are visited in the same order
/// as the plain double sum over y, so the result matches it exactly.
ScalarField convolve_kernel(const ScalarField& c0, const ScalarField& chi);

/// L1 norm h^2 sum |c0|.
double kernel_l1(const ScalarField& c0);

ScalarField dislocation_speed(const CouplingSpec& spec, const ScalarField& chi_t,
                              double t);

struct FnEvolution {
  std::vector<double> times;
  std::vector<ScalarField> v;
  SpeedProvider speed;
};

/// Explicit heat stepping of v_t - Lap v = g+(v) chi + g-(v)(1 - chi) with
/// Neumann edges; the returned speed is alpha(v) frozen between samples.
FnEvolution fn_evolve(const CouplingSpec& spec, const OccupationHistory& chi,
                      double horizon);

/// beta(area of {chi = 1}).
double volume_speed(const CouplingSpec& spec, const ScalarField& chi_t);

/// Speed provider c[chi] for any coupling kind.
SpeedProvider make_speed_provider(const CouplingSpec& spec,
                                  const OccupationHistory& chi, double horizon);

/// L1 distance h^2 sum |chi1 - chi2|.
double kappa(const ScalarField& chi1, const ScalarField& chi2);

/// sum_y G(x - y, tau) f(y) h^2 normalized by the discrete Gaussian mass of
/// the infinite lattice; tau = 0 gives f at the node nearest to x.
double heat_kernel_average(const ScalarField& f, Point x, double tau);

struct KappaBar {
  double value = 0.0;
  /// int_0^t min(1, kappa(s) / (4 pi (t - s))) ds with the same quadrature.
  double bound = 0.0;
};

/// int_0^t int G(x - y, t - s) |chi1 - chi2|(y, s) dy ds, trapezoid in s.
KappaBar kappa_bar(const OccupationHistory& h1, const OccupationHistory& h2,
                   Point x, double t);

}  // namespace frontlab
