// SPDX-License-Identifier: Apache-2.0
#include "kernels_internal.hpp"

#include <arm_neon.h>

namespace gvqa::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) noexcept {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_norm_neon(const double* a, std::size_t n) noexcept {
    return dot_neon(a, a, n);
}

void dot_rows_neon(const double* rows, std::size_t count, std::size_t dim, const double* query,
                   double* out) noexcept {
    for (std::size_t r = 0; r < count; ++r) {
        out[r] = dot_neon(rows + r * dim, query, dim);
    }
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) noexcept {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) {
        const double t = alpha * x[i];
        y[i] = y[i] + t;
    }
}

void scale_neon(double alpha, double* y, std::size_t n) noexcept {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vmulq_f64(va, vld1q_f64(y + i)));
    }
    for (; i < n; ++i) {
        y[i] *= alpha;
    }
}

}  // namespace

const KernelTable& neon_table() noexcept {
    static const KernelTable table{dot_neon, squared_norm_neon, dot_rows_neon, axpy_neon, scale_neon};
    return table;
}

}  // namespace gvqa::simd::detail
