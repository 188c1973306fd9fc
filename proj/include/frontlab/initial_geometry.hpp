#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "frontlab/grid.hpp"

namespace frontlab {

enum class DirectionKind { radial, gradient, custom };

/// Direction field nu used by the push maps x -> x + lambda nu(x).
class DirectionField {
 public:
  /// nu(x) = -x.
  static DirectionField radial(const GridSpec& spec);
  /// Du0 blurred with a Gaussian of width 2h.
  static DirectionField from_gradient(const ScalarField& u0);
  /// Sampled components; `kind` is kept for reloading a stored gradient field.
  static DirectionField custom(ScalarField vx, ScalarField vy,
                               DirectionKind kind = DirectionKind::custom);

  DirectionKind kind() const { return kind_; }
  Point at(Point p) const;
  const ScalarField& x_component() const { return vx_; }
  const ScalarField& y_component() const { return vy_; }

  /// max |nu| over the grid nodes.
  double sup_norm() const { return sup_norm_; }
  /// max operator norm of the finite-difference Jacobian.
  double lip_norm() const { return lip_norm_; }
  /// Recomputes sup_norm and lip_norm from the sampled components.
  void refresh_norms();

 private:
  DirectionKind kind_ = DirectionKind::radial;
  ScalarField vx_;
  ScalarField vy_;
  double sup_norm_ = 0.0;
  double lip_norm_ = 0.0;
};

std::string to_string(DirectionKind kind);
DirectionKind direction_kind_from_string(const std::string& s);

/// Initial level-set function together with the constants that certify the
/// support and interior-displacement conditions.
struct InitCondition {
  ScalarField u0;
  double R0 = 0.0;       ///< u0 == -1 outside B(0, R0)
  double delta0 = 0.0;   ///< half-width of the certified band {|u0| <= delta0}
  double eta0 = 0.0;     ///< certified displacement rate
  double lambda0 = 0.0;  ///< step bound, lambda0 * |nu|, lambda0 * |Dnu| < 1
  DirectionField nu;
};

struct I2Verdict {
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  Point worst_node{};
};

/// Max central-difference gradient norm; the grid estimate of ||Du||_inf.
double gradient_sup(const ScalarField& u);

/// Signed distance (positive inside) to the union over kernel points p of
/// the convex hulls of B(0, r0) and {p}.
ScalarField star_shaped_signed_distance(std::span<const Point> kernel_points,
                                        double r0, const GridSpec& spec);

/// Builds u0 = clamp(signed distance, -1, 1) with nu(x) = -x and certifies
/// delta0, eta0, lambda0 on the grid.
InitCondition star_shaped_u0(std::span<const Point> kernel_points, double r0,
                             const GridSpec& spec);

/// True iff |u0| <= 1 everywhere and u0 == -1 at every node with |x| > R0.
bool verify_I1(const ScalarField& u0, double R0);

/// Checks u0(x + lambda nu(x)) - u0(x) - lambda eta0 >= -||Du0|| h on the
/// band {|u0| <= delta0} for lambda = k lambda0 / lambda_samples.
I2Verdict verify_I2(const InitCondition& init, int lambda_samples);

/// min over band nodes and sampled lambda of [u0(x + lambda nu) - u0(x)] / lambda.
double certify_eta(const ScalarField& u0, const DirectionField& nu,
                   double band, double lambda_max, int lambda_samples);

/// Piecewise truncation: -1 below -3d/4, identity on [-d/2, d/2], d/2 above,
/// affine in between.
double psi_truncation(double r, double delta0);

/// x -> u(x + lambda nu(x)) by bilinear interpolation, -1 off the domain.
ScalarField push_sample(const ScalarField& u, const DirectionField& nu,
                        double lambda);

/// u0.txt plus init.txt (key=value header); nu_x.txt / nu_y.txt for
/// non-radial fields.
void save_init(const std::string& dir, const InitCondition& init);
InitCondition load_init(const std::string& dir);

}  // namespace frontlab
