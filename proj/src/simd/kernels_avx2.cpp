// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "kernels_internal.hpp"

#include <immintrin.h>

namespace gvqa::simd::detail {
namespace {

inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) noexcept {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double sum = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_norm_avx2(const double* a, std::size_t n) noexcept {
    return dot_avx2(a, a, n);
}

void dot_rows_avx2(const double* rows, std::size_t count, std::size_t dim, const double* query,
                   double* out) noexcept {
    for (std::size_t r = 0; r < count; ++r) {
        out[r] = dot_avx2(rows + r * dim, query, dim);
    }
}

// No FMA here: the elementwise kernels must round exactly like the scalar path.
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) noexcept {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), t));
    }
    for (; i < n; ++i) {
        const double t = alpha * x[i];
        y[i] = y[i] + t;
    }
}

void scale_avx2(double alpha, double* y, std::size_t n) noexcept {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] *= alpha;
    }
}

}  // namespace

const KernelTable& avx2_table() noexcept {
    static const KernelTable table{dot_avx2, squared_norm_avx2, dot_rows_avx2, axpy_avx2, scale_avx2};
    return table;
}

}  // namespace gvqa::simd::detail
