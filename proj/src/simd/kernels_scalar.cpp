// SPDX-License-Identifier: Apache-2.0
#include "kernels_internal.hpp"

namespace gvqa::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_norm_scalar(const double* a, std::size_t n) noexcept {
    return dot_scalar(a, a, n);
}

void dot_rows_scalar(const double* rows, std::size_t count, std::size_t dim, const double* query,
                     double* out) noexcept {
    for (std::size_t r = 0; r < count; ++r) {
        out[r] = dot_scalar(rows + r * dim, query, dim);
    }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        const double t = alpha * x[i];
        y[i] = y[i] + t;
    }
}

void scale_scalar(double alpha, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] *= alpha;
    }
}

}  // namespace

const KernelTable& scalar_table() noexcept {
    static const KernelTable table{dot_scalar, squared_norm_scalar, dot_rows_scalar, axpy_scalar, scale_scalar};
    return table;
}

}  // namespace gvqa::simd::detail
