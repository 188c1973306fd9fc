#include "frontlab/simd/kernels.hpp"
#include "kernel_math.hpp"

#if defined(FRONTLAB_HAVE_AVX2)
#include <immintrin.h>

namespace frontlab::simd {
namespace {

using detail::clamp_unit;
using detail::curvature_from_derivs;
using detail::godunov_norm;

struct Stencil {
  __m256d c, e, w, n, s;
};

inline Stencil load_stencil(const RowArgs& a, int i) {
  return {_mm256_loadu_pd(a.mid + i), _mm256_loadu_pd(a.mid + i + 1),
          _mm256_loadu_pd(a.mid + i - 1), _mm256_loadu_pd(a.up + i),
          _mm256_loadu_pd(a.dn + i)};
}

inline __m256d neg(__m256d x) {
  return _mm256_xor_pd(x, _mm256_set1_pd(-0.0));
}

inline __m256d godunov_axis(__m256d dminus, __m256d dplus, __m256d expanding) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d out_sup = _mm256_max_pd(_mm256_max_pd(dplus, zero),
                                        neg(_mm256_min_pd(dminus, zero)));
  const __m256d out_inf = _mm256_max_pd(_mm256_max_pd(dminus, zero),
                                        neg(_mm256_min_pd(dplus, zero)));
  return _mm256_blendv_pd(out_inf, out_sup, expanding);
}

inline __m256d upwind4(const Stencil& st, __m256d inv_h, __m256d speed) {
  const __m256d expanding =
      _mm256_cmp_pd(speed, _mm256_setzero_pd(), _CMP_GE_OQ);
  const __m256d dmx = _mm256_mul_pd(_mm256_sub_pd(st.c, st.w), inv_h);
  const __m256d dpx = _mm256_mul_pd(_mm256_sub_pd(st.e, st.c), inv_h);
  const __m256d dmy = _mm256_mul_pd(_mm256_sub_pd(st.c, st.s), inv_h);
  const __m256d dpy = _mm256_mul_pd(_mm256_sub_pd(st.n, st.c), inv_h);
  const __m256d gx = godunov_axis(dmx, dpx, expanding);
  const __m256d gy = godunov_axis(dmy, dpy, expanding);
  return _mm256_sqrt_pd(
      _mm256_add_pd(_mm256_mul_pd(gx, gx), _mm256_mul_pd(gy, gy)));
}

inline __m256d curvature4(const RowArgs& a, int i, const Stencil& st,
                          __m256d eps2) {
  const __m256d half_inv_h = _mm256_set1_pd(0.5 * a.inv_h);
  const double inv_h2_s = a.inv_h * a.inv_h;
  const __m256d inv_h2 = _mm256_set1_pd(inv_h2_s);
  const __m256d quarter_inv_h2 = _mm256_set1_pd(0.25 * inv_h2_s);
  const __m256d two = _mm256_set1_pd(2.0);

  const __m256d ux = _mm256_mul_pd(_mm256_sub_pd(st.e, st.w), half_inv_h);
  const __m256d uy = _mm256_mul_pd(_mm256_sub_pd(st.n, st.s), half_inv_h);
  const __m256d uxx = _mm256_mul_pd(
      _mm256_sub_pd(_mm256_add_pd(st.e, st.w), _mm256_mul_pd(two, st.c)),
      inv_h2);
  const __m256d uyy = _mm256_mul_pd(
      _mm256_sub_pd(_mm256_add_pd(st.n, st.s), _mm256_mul_pd(two, st.c)),
      inv_h2);
  const __m256d ne = _mm256_loadu_pd(a.up + i + 1);
  const __m256d nw = _mm256_loadu_pd(a.up + i - 1);
  const __m256d se = _mm256_loadu_pd(a.dn + i + 1);
  const __m256d sw = _mm256_loadu_pd(a.dn + i - 1);
  const __m256d uxy = _mm256_mul_pd(
      _mm256_sub_pd(_mm256_sub_pd(ne, se), _mm256_sub_pd(nw, sw)),
      quarter_inv_h2);

  const __m256d px2 = _mm256_mul_pd(ux, ux);
  const __m256d py2 = _mm256_mul_pd(uy, uy);
  const __m256d ta = _mm256_mul_pd(uxx, _mm256_add_pd(py2, eps2));
  const __m256d tb = _mm256_mul_pd(uyy, _mm256_add_pd(px2, eps2));
  const __m256d tc = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(ux, uy), uxy), two);
  const __m256d num = _mm256_sub_pd(_mm256_add_pd(ta, tb), tc);
  const __m256d den = _mm256_add_pd(_mm256_add_pd(px2, py2), eps2);
  return _mm256_div_pd(num, den);
}

inline __m256d clamp4(__m256d v) {
  return _mm256_min_pd(_mm256_max_pd(v, _mm256_set1_pd(-1.0)),
                       _mm256_set1_pd(1.0));
}

// Scalar tails mirror kernels_scalar.cpp exactly.
inline double upwind_tail(const RowArgs& a, int i, bool expanding) {
  const double c = a.mid[i];
  return godunov_norm((c - a.mid[i - 1]) * a.inv_h, (a.mid[i + 1] - c) * a.inv_h,
                      (c - a.dn[i]) * a.inv_h, (a.up[i] - c) * a.inv_h,
                      expanding);
}

inline double curvature_tail(const RowArgs& a, int i, double eps2) {
  const double half_inv_h = 0.5 * a.inv_h;
  const double inv_h2 = a.inv_h * a.inv_h;
  const double c = a.mid[i];
  const double e = a.mid[i + 1];
  const double w = a.mid[i - 1];
  const double nn = a.up[i];
  const double s = a.dn[i];
  const double uxy =
      ((a.up[i + 1] - a.dn[i + 1]) - (a.up[i - 1] - a.dn[i - 1])) *
      (0.25 * inv_h2);
  return curvature_from_derivs((e - w) * half_inv_h, (nn - s) * half_inv_h,
                               ((e + w) - 2.0 * c) * inv_h2,
                               ((nn + s) - 2.0 * c) * inv_h2, uxy, eps2);
}

void upwind_row(const RowArgs& a, const double* speed, double* out) {
  const __m256d inv_h = _mm256_set1_pd(a.inv_h);
  int i = 1;
  for (; i + 4 <= a.n - 1; i += 4) {
    const Stencil st = load_stencil(a, i);
    _mm256_storeu_pd(out + i, upwind4(st, inv_h, _mm256_loadu_pd(speed + i)));
  }
  for (; i < a.n - 1; ++i) out[i] = upwind_tail(a, i, speed[i] >= 0.0);
}

void curvature_row(const RowArgs& a, double eps2, double* out) {
  const __m256d e2 = _mm256_set1_pd(eps2);
  int i = 1;
  for (; i + 4 <= a.n - 1; i += 4) {
    const Stencil st = load_stencil(a, i);
    _mm256_storeu_pd(out + i, curvature4(a, i, st, e2));
  }
  for (; i < a.n - 1; ++i) out[i] = curvature_tail(a, i, eps2);
}

void advance_row(const RowArgs& a, const double* speed, double eps2, double dt,
                 double gamma, double* out) {
  const __m256d inv_h = _mm256_set1_pd(a.inv_h);
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vgamma = _mm256_set1_pd(gamma);
  const __m256d e2 = _mm256_set1_pd(eps2);
  const bool with_curvature = gamma != 0.0;
  int i = 1;
  for (; i + 4 <= a.n - 1; i += 4) {
    const Stencil st = load_stencil(a, i);
    const __m256d c = _mm256_loadu_pd(speed + i);
    const __m256d g = upwind4(st, inv_h, c);
    __m256d rate = _mm256_mul_pd(c, g);
    if (with_curvature)
      rate = _mm256_add_pd(rate, _mm256_mul_pd(vgamma, curvature4(a, i, st, e2)));
    _mm256_storeu_pd(out + i,
                     clamp4(_mm256_add_pd(st.c, _mm256_mul_pd(vdt, rate))));
  }
  for (; i < a.n - 1; ++i) {
    const double g = upwind_tail(a, i, speed[i] >= 0.0);
    if (with_curvature) {
      const double k = curvature_tail(a, i, eps2);
      out[i] = clamp_unit(a.mid[i] + dt * (speed[i] * g + gamma * k));
    } else {
      out[i] = clamp_unit(a.mid[i] + dt * (speed[i] * g));
    }
  }
}

void heat_row(const RowArgs& a, const double* source, double dt, double* out) {
  const double inv_h2_s = a.inv_h * a.inv_h;
  const __m256d inv_h2 = _mm256_set1_pd(inv_h2_s);
  const __m256d four = _mm256_set1_pd(4.0);
  const __m256d vdt = _mm256_set1_pd(dt);
  int i = 1;
  for (; i + 4 <= a.n - 1; i += 4) {
    const Stencil st = load_stencil(a, i);
    const __m256d lap = _mm256_mul_pd(
        _mm256_sub_pd(_mm256_add_pd(_mm256_add_pd(st.e, st.w),
                                    _mm256_add_pd(st.n, st.s)),
                      _mm256_mul_pd(four, st.c)),
        inv_h2);
    const __m256d src = _mm256_loadu_pd(source + i);
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(st.c, _mm256_mul_pd(vdt, _mm256_add_pd(lap, src))));
  }
  for (; i < a.n - 1; ++i) {
    const double c = a.mid[i];
    const double lap =
        (((a.mid[i + 1] + a.mid[i - 1]) + (a.up[i] + a.dn[i])) - 4.0 * c) *
        inv_h2_s;
    out[i] = c + dt * (lap + source[i]);
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::avx2, &upwind_row, &curvature_row,
                                 &advance_row, &heat_row};
  return &table;
}

}  // namespace frontlab::simd

#else

namespace frontlab::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace frontlab::simd

#endif
