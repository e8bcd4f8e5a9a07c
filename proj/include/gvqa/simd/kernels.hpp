// SPDX-License-Identifier: Apache-2.0
#pragma once

// Double-precision vector kernels behind every embedding computation.
// Each kernel has a scalar reference and, where the target allows, AVX2+FMA
// and NEON variants. The variant is picked once at first use from runtime CPU
// detection; GVQA_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace gvqa::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

/// Variant currently used by the dispatching entry points.
Isa active_isa() noexcept;

/// True if `isa` can run on this machine and was compiled in.
bool isa_available(Isa isa) noexcept;

/// Test hook: pin the dispatch to `isa`. Returns false (and changes nothing)
/// if the variant is unavailable.
bool force_isa(Isa isa) noexcept;

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_norm(std::span<const double> a) noexcept;

/// out[r] = dot(rows[r*dim .. r*dim+dim), query) for every row.
void dot_rows(std::span<const double> rows, std::span<const double> query, std::span<double> out) noexcept;

/// y += alpha * x, elementwise (no reduction, bit-identical across variants).
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;

/// y *= alpha, elementwise.
void scale(double alpha, std::span<double> y) noexcept;

// Per-variant entry points. Exposed for the equivalence tests; callers should
// use the dispatching functions above.
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t) noexcept;
    double (*squared_norm)(const double*, std::size_t) noexcept;
    void (*dot_rows)(const double*, std::size_t rows, std::size_t dim, const double* query, double* out) noexcept;
    void (*axpy)(double, const double*, double*, std::size_t) noexcept;
    void (*scale)(double, double*, std::size_t) noexcept;
};

const KernelTable& kernels_for(Isa isa) noexcept;

}  // namespace gvqa::simd
