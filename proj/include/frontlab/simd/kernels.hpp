#pragma once

// Row kernels for the five-point / nine-point stencils used by the level-set
// and heat updates. Each kernel fills the interior columns [1, n-2] of one
// interior row from the rows below (`dn`), at (`mid`) and above (`up`); the
// caller owns the boundary ring.
//
// Every ISA variant evaluates the same expression tree in the same order, so
// with floating-point contraction disabled the variants agree bit for bit.

#include <string_view>

namespace frontlab::simd {

enum class Isa { scalar, avx2 };

struct RowArgs {
  const double* dn;
  const double* mid;
  const double* up;
  int n;
  double inv_h;
};

struct KernelTable {
  Isa isa;
  /// Godunov |Du| for u_t = c|Du|, branch picked per node from sign(speed).
  void (*upwind)(const RowArgs&, const double* speed, double* out);
  /// Regularized trace-form curvature with eps2 = eps_reg^2.
  void (*curvature)(const RowArgs&, double eps2, double* out);
  /// out = clamp(u + dt (c G + gamma K), -1, 1); K skipped when gamma == 0.
  void (*advance)(const RowArgs&, const double* speed, double eps2, double dt,
                  double gamma, double* out);
  /// out = v + dt (Laplacian(v) + source).
  void (*heat)(const RowArgs&, const double* source, double dt, double* out);
};

const KernelTable& scalar_kernels();
/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_has_avx2();

/// Kernels used by the library. Defaults to the widest ISA the CPU supports;
/// FRONTLAB_SIMD=scalar forces the reference path.
const KernelTable& active();
void set_active(Isa isa);
std::string_view isa_name(Isa isa);

}  // namespace frontlab::simd
