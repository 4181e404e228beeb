// AVX2 + FMA variants of the dense kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; nothing here runs unless the
// dispatcher has confirmed CPU support.

#include "clmrc/kernels.hpp"

#if defined(CLMRC_HAVE_AVX2)

#include <immintrin.h>

namespace clmrc::kernels {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

// Shared body of gemm_nn and gemm_tn: C row i accumulates
// sum_p coef(i, p) * B row p, with the coefficient stride chosen by caller.
// Columns are processed 16 at a time held in four registers across the p loop.
template <bool TransA>
void gemm_rows(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        auto coef = [&](std::size_t p) { return TransA ? a[p * m + i] : a[i * k + p]; };
        std::size_t j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256d c0 = _mm256_loadu_pd(crow + j);
            __m256d c1 = _mm256_loadu_pd(crow + j + 4);
            __m256d c2 = _mm256_loadu_pd(crow + j + 8);
            __m256d c3 = _mm256_loadu_pd(crow + j + 12);
            for (std::size_t p = 0; p < k; ++p) {
                const __m256d av = _mm256_set1_pd(coef(p));
                const double* brow = b + p * n + j;
                c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
                c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
                c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
                c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
            }
            _mm256_storeu_pd(crow + j, c0);
            _mm256_storeu_pd(crow + j + 4, c1);
            _mm256_storeu_pd(crow + j + 8, c2);
            _mm256_storeu_pd(crow + j + 12, c3);
        }
        for (; j + 4 <= n; j += 4) {
            __m256d c0 = _mm256_loadu_pd(crow + j);
            for (std::size_t p = 0; p < k; ++p)
                c0 = _mm256_fmadd_pd(_mm256_set1_pd(coef(p)), _mm256_loadu_pd(b + p * n + j), c0);
            _mm256_storeu_pd(crow + j, c0);
        }
        for (; j < n; ++j) {
            double acc = crow[j];
            for (std::size_t p = 0; p < k; ++p) acc += coef(p) * b[p * n + j];
            crow[j] = acc;
        }
    }
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    gemm_rows<false>(a, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    gemm_rows<true>(a, b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
}

}  // namespace

const KernelTable* avx2_table() {
    static const KernelTable table{"avx2", dot, axpy, gemm_nn, gemm_nt, gemm_tn};
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &table;
    return nullptr;
}

}  // namespace clmrc::kernels

#else

namespace clmrc::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace clmrc::kernels

#endif
