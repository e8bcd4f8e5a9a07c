// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "gvqa/simd/kernels.hpp"
#include "support.hpp"

#include <cmath>
#include <cstring>

using namespace gvqa;
using gvqa::testing::random_vector;

namespace {

std::vector<simd::Isa> available_variants() {
    std::vector<simd::Isa> out;
    for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2, simd::Isa::neon}) {
        if (simd::isa_available(isa)) {
            out.push_back(isa);
        }
    }
    return out;
}

double naive_dot(const std::vector<double>& a, const std::vector<double>& b) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<long double>(a[i]) * b[i];
    }
    return static_cast<double>(acc);
}

}  // namespace

TEST_CASE("scalar variant is always available") {
    CHECK(simd::isa_available(simd::Isa::scalar));
    CHECK(simd::isa_name(simd::Isa::scalar) == "scalar");
}

TEST_CASE("every variant agrees with the long-double reference on reductions") {
    std::mt19937_64 rng(11);
    for (simd::Isa isa : available_variants()) {
        CAPTURE(simd::isa_name(isa));
        const auto& k = simd::kernels_for(isa);
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 63u, 384u, 1001u}) {
            const auto a = random_vector(rng, n);
            const auto b = random_vector(rng, n);
            const double ref = naive_dot(a, b);
            CHECK(k.dot(a.data(), b.data(), n) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
            CHECK(k.squared_norm(a.data(), n) == doctest::Approx(naive_dot(a, a)).epsilon(1e-12).scale(1.0));
        }
    }
}

TEST_CASE("dot_rows matches per-row dot on every variant") {
    std::mt19937_64 rng(12);
    const std::size_t rows = 9;
    for (simd::Isa isa : available_variants()) {
        const auto& k = simd::kernels_for(isa);
        for (std::size_t dim : {1u, 5u, 32u, 384u}) {
            const auto m = random_vector(rng, rows * dim);
            const auto q = random_vector(rng, dim);
            std::vector<double> out(rows);
            k.dot_rows(m.data(), rows, dim, q.data(), out.data());
            for (std::size_t r = 0; r < rows; ++r) {
                const std::vector<double> row(m.begin() + static_cast<long>(r * dim),
                                              m.begin() + static_cast<long>((r + 1) * dim));
                CHECK(out[r] == doctest::Approx(naive_dot(row, q)).epsilon(1e-12).scale(1.0));
            }
        }
    }
}

TEST_CASE("elementwise kernels are bit-identical across variants") {
    std::mt19937_64 rng(13);
    const auto& ref = simd::kernels_for(simd::Isa::scalar);
    for (simd::Isa isa : available_variants()) {
        const auto& k = simd::kernels_for(isa);
        for (std::size_t n : {0u, 1u, 5u, 16u, 37u, 384u}) {
            const auto x = random_vector(rng, n);
            auto y1 = random_vector(rng, n);
            auto y2 = y1;
            ref.axpy(0.37, x.data(), y1.data(), n);
            k.axpy(0.37, x.data(), y2.data(), n);
            CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);
            ref.scale(-1.7, y1.data(), n);
            k.scale(-1.7, y2.data(), n);
            CHECK(std::memcmp(y1.data(), y2.data(), n * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("force_isa pins the dispatcher and rejects unavailable variants") {
    const simd::Isa before = simd::active_isa();
    REQUIRE(simd::force_isa(simd::Isa::scalar));
    CHECK(simd::active_isa() == simd::Isa::scalar);
    const std::vector<double> a{1.0, 2.0, 3.0};
    const std::vector<double> b{4.0, 5.0, 6.0};
    CHECK(simd::dot(a, b) == 32.0);
    CHECK(simd::squared_norm(a) == 14.0);
    for (simd::Isa isa : {simd::Isa::avx2, simd::Isa::neon}) {
        if (!simd::isa_available(isa)) {
            CHECK_FALSE(simd::force_isa(isa));
            CHECK(simd::active_isa() == simd::Isa::scalar);
        }
    }
    simd::force_isa(before);
}
