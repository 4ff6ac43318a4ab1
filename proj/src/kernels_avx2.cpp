#include "gsa/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define GSA_HAVE_AVX2_BUILD 1
#include <immintrin.h>
#else
#define GSA_HAVE_AVX2_BUILD 0
#endif

namespace gsa::kernels {

#if GSA_HAVE_AVX2_BUILD
namespace {

inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sw = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sw));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double weighted_sumsq_avx2(const double* v, const double* w, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vv = _mm256_loadu_pd(v + i);
        acc = _mm256_fmadd_pd(_mm256_mul_pd(vv, vv), _mm256_loadu_pd(w + i), acc);
    }
    double s = hsum4(acc);
    for (; i < n; ++i) s += w[i] * v[i] * v[i];
    return s;
}

void matvec_avx2(const double* a, std::size_t rows, std::size_t cols,
                 const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_avx2(a + r * cols, x, cols);
    }
}

void rotate_pairs_avx2(double* v, std::size_t pairs, double c, double s) {
    const __m256d vc = _mm256_set1_pd(c);
    // re' = c*re - s*im ; im' = c*im + s*re  ->  c*v + (-s, +s, -s, +s) * swapped(v)
    const __m256d vs = _mm256_setr_pd(-s, s, -s, s);
    std::size_t p = 0;
    for (; p + 2 <= pairs; p += 2) {
        double* ptr = v + 2 * p;
        const __m256d val = _mm256_loadu_pd(ptr);
        const __m256d sw = _mm256_permute_pd(val, 0x5); // swap within each 128-bit lane
        _mm256_storeu_pd(ptr, _mm256_fmadd_pd(vc, val, _mm256_mul_pd(vs, sw)));
    }
    for (; p < pairs; ++p) {
        const double re = v[2 * p];
        const double im = v[2 * p + 1];
        v[2 * p] = c * re - s * im;
        v[2 * p + 1] = s * re + c * im;
    }
}

const Ops kAvx2Ops{
    "avx2",
    dot_avx2,
    weighted_sumsq_avx2,
    matvec_avx2,
    rotate_pairs_avx2,
};

} // namespace

const Ops* avx2_ops() { return &kAvx2Ops; }

#else

const Ops* avx2_ops() { return nullptr; }

#endif

} // namespace gsa::kernels
