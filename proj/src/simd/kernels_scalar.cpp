#include "frontlab/simd/kernels.hpp"
#include "kernel_math.hpp"

namespace frontlab::simd {
namespace {

using detail::clamp_unit;
using detail::curvature_from_derivs;
using detail::godunov_norm;

inline double upwind_at(const RowArgs& a, int i, bool expanding) {
  const double c = a.mid[i];
  const double dmx = (c - a.mid[i - 1]) * a.inv_h;
  const double dpx = (a.mid[i + 1] - c) * a.inv_h;
  const double dmy = (c - a.dn[i]) * a.inv_h;
  const double dpy = (a.up[i] - c) * a.inv_h;
  return godunov_norm(dmx, dpx, dmy, dpy, expanding);
}

inline double curvature_at(const RowArgs& a, int i, double eps2) {
  const double half_inv_h = 0.5 * a.inv_h;
  const double inv_h2 = a.inv_h * a.inv_h;
  const double quarter_inv_h2 = 0.25 * inv_h2;
  const double c = a.mid[i];
  const double e = a.mid[i + 1];
  const double w = a.mid[i - 1];
  const double nn = a.up[i];
  const double s = a.dn[i];
  const double ux = (e - w) * half_inv_h;
  const double uy = (nn - s) * half_inv_h;
  const double uxx = ((e + w) - 2.0 * c) * inv_h2;
  const double uyy = ((nn + s) - 2.0 * c) * inv_h2;
  const double uxy =
      ((a.up[i + 1] - a.dn[i + 1]) - (a.up[i - 1] - a.dn[i - 1])) *
      quarter_inv_h2;
  return curvature_from_derivs(ux, uy, uxx, uyy, uxy, eps2);
}

void upwind_row(const RowArgs& a, const double* speed, double* out) {
  for (int i = 1; i < a.n - 1; ++i) out[i] = upwind_at(a, i, speed[i] >= 0.0);
}

void curvature_row(const RowArgs& a, double eps2, double* out) {
  for (int i = 1; i < a.n - 1; ++i) out[i] = curvature_at(a, i, eps2);
}

void advance_row(const RowArgs& a, const double* speed, double eps2, double dt,
                 double gamma, double* out) {
  if (gamma == 0.0) {
    for (int i = 1; i < a.n - 1; ++i) {
      const double g = upwind_at(a, i, speed[i] >= 0.0);
      out[i] = clamp_unit(a.mid[i] + dt * (speed[i] * g));
    }
    return;
  }
  for (int i = 1; i < a.n - 1; ++i) {
    const double g = upwind_at(a, i, speed[i] >= 0.0);
    const double k = curvature_at(a, i, eps2);
    out[i] = clamp_unit(a.mid[i] + dt * (speed[i] * g + gamma * k));
  }
}

void heat_row(const RowArgs& a, const double* source, double dt, double* out) {
  const double inv_h2 = a.inv_h * a.inv_h;
  for (int i = 1; i < a.n - 1; ++i) {
    const double c = a.mid[i];
    const double lap =
        (((a.mid[i + 1] + a.mid[i - 1]) + (a.up[i] + a.dn[i])) - 4.0 * c) *
        inv_h2;
    out[i] = c + dt * (lap + source[i]);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, &upwind_row, &curvature_row,
                                 &advance_row, &heat_row};
  return table;
}

}  // namespace frontlab::simd
