/* Vectorized reductions behind the profile-likelihood kernels.
 *
 * The loops are marked for OpenMP SIMD so glibc's libmvec supplies the
 * vector log1p. An AVX2 clone is selected at run time when the CPU has it.
 * Reduction order depends only on the code path, never on threading.
 */
#ifndef GPDNORM_SIMD_H
#define GPDNORM_SIMD_H

#include <stddef.h>
#include <math.h>

#pragma omp declare simd notinbranch
double log1p(double);

#define GPD_SUMLOG_BODY                                  \
    double s = 0.0;                                      \
    _Pragma("omp simd reduction(+:s)")                   \
    for (ptrdiff_t i = 0; i < n; i++) s += log1p(-b * x[i]); \
    return s;

#define GPD_SUMLOG_RATIO_BODY                            \
    double s = 0.0, d = 0.0;                             \
    _Pragma("omp simd reduction(+:s,d)")                 \
    for (ptrdiff_t i = 0; i < n; i++) {                  \
        s += log1p(-b * x[i]);                           \
        d += x[i] / (1.0 - b * x[i]);                    \
    }                                                    \
    *ds = d;                                             \
    return s;

#if defined(__x86_64__) && defined(__GNUC__)
__attribute__((target("avx2,fma")))
static double gpd_sumlog_avx2(const double *x, ptrdiff_t n, double b) { GPD_SUMLOG_BODY }
__attribute__((target("avx2,fma")))
static double gpd_sumlog_ratio_avx2(const double *x, ptrdiff_t n, double b, double *ds) { GPD_SUMLOG_RATIO_BODY }
#endif

static double gpd_sumlog_base(const double *x, ptrdiff_t n, double b) { GPD_SUMLOG_BODY }
static double gpd_sumlog_ratio_base(const double *x, ptrdiff_t n, double b, double *ds) { GPD_SUMLOG_RATIO_BODY }

static int gpd_use_avx2 = -1;

static inline int gpd_have_avx2(void) {
#if defined(__x86_64__) && defined(__GNUC__)
    if (gpd_use_avx2 < 0) {
        __builtin_cpu_init();
        gpd_use_avx2 = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }
    return gpd_use_avx2;
#else
    return 0;
#endif
}

/* sum_i log(1 - b * x_i) */
static inline double gpd_sumlog(const double *x, ptrdiff_t n, double b) {
#if defined(__x86_64__) && defined(__GNUC__)
    if (gpd_have_avx2()) return gpd_sumlog_avx2(x, n, b);
#endif
    return gpd_sumlog_base(x, n, b);
}

/* sum_i log(1 - b * x_i), with sum_i x_i / (1 - b * x_i) stored in *ds */
static inline double gpd_sumlog_ratio(const double *x, ptrdiff_t n, double b, double *ds) {
#if defined(__x86_64__) && defined(__GNUC__)
    if (gpd_have_avx2()) return gpd_sumlog_ratio_avx2(x, n, b, ds);
#endif
    return gpd_sumlog_ratio_base(x, n, b, ds);
}

#endif
