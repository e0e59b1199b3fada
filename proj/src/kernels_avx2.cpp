// AVX2/FMA variants of the vector kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; callers reach it through the dispatch table
// after a runtime CPU check.

#include "hrgrad/kernels.hpp"

#if defined(HRGRAD_HAVE_AVX2)

#include <immintrin.h>

namespace hrgrad::kernels {

namespace {

inline double hsum256(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d h = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, h));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double s = hsum256(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double nrm2sq_avx2(const double* a, std::size_t n) { return dot_avx2(a, a, n); }

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scal_avx2(double alpha, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void combine_avx2(double ca, const double* a, double cb, const double* b, double* out,
                  std::size_t n) {
    const __m256d vca = _mm256_set1_pd(ca);
    const __m256d vcb = _mm256_set1_pd(cb);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_mul_pd(vca, _mm256_loadu_pd(a + i));
        v = _mm256_fmadd_pd(vcb, _mm256_loadu_pd(b + i), v);
        _mm256_storeu_pd(out + i, v);
    }
    for (; i < n; ++i) out[i] = ca * a[i] + cb * b[i];
}

} // namespace

const Ops* avx2_ops() {
    static const Ops ops{"avx2", dot_avx2, nrm2sq_avx2, axpy_avx2, scal_avx2, combine_avx2};
#if defined(__GNUC__) || defined(__clang__)
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    static const bool supported = false;
#endif
    return supported ? &ops : nullptr;
}

} // namespace hrgrad::kernels

#else

namespace hrgrad::kernels {
const Ops* avx2_ops() { return nullptr; }
} // namespace hrgrad::kernels

#endif
