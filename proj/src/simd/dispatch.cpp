// SPDX-License-Identifier: Apache-2.0
// Runtime selection only; no intrinsics in this file.
#include "kernels_internal.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace gvqa::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(GVQA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa detect() noexcept {
    if (const char* env = std::getenv("GVQA_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
        return Isa::scalar;
    }
#if defined(GVQA_HAVE_AVX2)
    if (cpu_has_avx2()) {
        return Isa::avx2;
    }
#endif
#if defined(GVQA_HAVE_NEON)
    return Isa::neon;
#else
    return Isa::scalar;
#endif
}

std::atomic<const KernelTable*>& current() noexcept {
    static std::atomic<const KernelTable*> table{&kernels_for(detect())};
    return table;
}

std::atomic<Isa>& current_isa() noexcept {
    static std::atomic<Isa> isa{detect()};
    return isa;
}

const KernelTable& table() noexcept {
    return *current().load(std::memory_order_relaxed);
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
        case Isa::scalar:
            break;
    }
    return "scalar";
}

bool isa_available(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
            return cpu_has_avx2();
        case Isa::neon:
#if defined(GVQA_HAVE_NEON)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa) noexcept {
    switch (isa) {
#if defined(GVQA_HAVE_AVX2)
        case Isa::avx2:
            if (cpu_has_avx2()) {
                return detail::avx2_table();
            }
            break;
#endif
#if defined(GVQA_HAVE_NEON)
        case Isa::neon:
            return detail::neon_table();
#endif
        default:
            break;
    }
    return detail::scalar_table();
}

Isa active_isa() noexcept {
    return current_isa().load(std::memory_order_relaxed);
}

bool force_isa(Isa isa) noexcept {
    if (!isa_available(isa)) {
        return false;
    }
    current().store(&kernels_for(isa), std::memory_order_relaxed);
    current_isa().store(isa, std::memory_order_relaxed);
    return true;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    return table().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

double squared_norm(std::span<const double> a) noexcept {
    return table().squared_norm(a.data(), a.size());
}

void dot_rows(std::span<const double> rows, std::span<const double> query, std::span<double> out) noexcept {
    if (query.empty()) {
        for (double& v : out) {
            v = 0.0;
        }
        return;
    }
    const std::size_t count = rows.size() / query.size();
    table().dot_rows(rows.data(), count < out.size() ? count : out.size(), query.size(), query.data(), out.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
    table().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

void scale(double alpha, std::span<double> y) noexcept {
    table().scale(alpha, y.data(), y.size());
}

}  // namespace gvqa::simd
