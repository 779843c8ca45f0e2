#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace pension::simd {

namespace {

bool cpu_has_avx2() {
#if defined(PENSION_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("PENSION_SIMD"); env && std::string_view(env) == "scalar")
        return &detail::scalar_table();
    if (const KernelTable* t = avx2_kernels()) return t;
    return &detail::scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

const KernelTable& scalar_kernels() { return detail::scalar_table(); }

const KernelTable* avx2_kernels() {
#if defined(PENSION_HAVE_AVX2_TU)
    static const bool ok = cpu_has_avx2();
    return ok ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active_kernels() { return *current().load(std::memory_order_acquire); }

void force_isa(Isa isa) {
    const KernelTable* t = &detail::scalar_table();
    if (isa == Isa::avx2 && avx2_kernels()) t = avx2_kernels();
    current().store(t, std::memory_order_release);
}

}  // namespace pension::simd
