// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "gvqa/simd/kernels.hpp"

namespace gvqa::simd::detail {

const KernelTable& scalar_table() noexcept;
#if defined(GVQA_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(GVQA_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

}  // namespace gvqa::simd::detail
