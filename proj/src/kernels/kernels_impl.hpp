#pragma once

#include "pension/kernels.hpp"

namespace pension::simd::detail {

inline constexpr std::size_t kStripes = 4;
// Paths at or below this level are absorbed; drift round-off alone can leave ~1e-13.
inline constexpr double kAbsorbLevel = 1e-12;

const KernelTable& scalar_table();

#if defined(PENSION_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif

}  // namespace pension::simd::detail
