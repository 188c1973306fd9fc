#pragma once

// Scalar building blocks shared by the reference kernels and by the boundary
// handling in grid.cpp. max/min follow the maxpd/minpd operand rules so the
// scalar and vector paths resolve ties identically.

#include <cmath>

namespace frontlab::simd::detail {

inline double vmax(double a, double b) { return a > b ? a : b; }
inline double vmin(double a, double b) { return a < b ? a : b; }

/// Per-axis Godunov term for a sup-type (c >= 0) or inf-type (c < 0) flux.
inline double godunov_axis(double dminus, double dplus, bool expanding) {
  if (expanding) return vmax(vmax(dplus, 0.0), -vmin(dminus, 0.0));
  return vmax(vmax(dminus, 0.0), -vmin(dplus, 0.0));
}

inline double godunov_norm(double dmx, double dpx, double dmy, double dpy,
                           bool expanding) {
  const double gx = godunov_axis(dmx, dpx, expanding);
  const double gy = godunov_axis(dmy, dpy, expanding);
  return std::sqrt(gx * gx + gy * gy);
}

inline double curvature_from_derivs(double ux, double uy, double uxx,
                                    double uyy, double uxy, double eps2) {
  const double px2 = ux * ux;
  const double py2 = uy * uy;
  const double a = uxx * (py2 + eps2);
  const double b = uyy * (px2 + eps2);
  const double c = ((ux * uy) * uxy) * 2.0;
  const double num = (a + b) - c;
  const double den = (px2 + py2) + eps2;
  return num / den;
}

inline double clamp_unit(double v) { return vmin(vmax(v, -1.0), 1.0); }

}  // namespace frontlab::simd::detail
