#pragma once

// Data-parallel inner loops shared by the Monte Carlo engine and the
// Fokker-Planck solvers. Every kernel has a scalar reference implementation
// and, where the CPU supports it, an AVX2 variant selected at runtime.
//
// The variants are required to be bit-identical: no FMA contraction, the same
// operation order per element, and reductions accumulate into four striped
// partial sums (element i goes to lane i % 4) combined as (s0 + s1) + (s2 + s3)
// before the tail is added in order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace pension::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// One Euler step of dx = (a1 x + a2 + c u) dt + (b1 x + b2) dW, with
/// dW = sqrt_dt * z. `c` multiplies an optional per-element coupling term u.
struct StepCoeffs {
    double a1 = 0.0;
    double a2 = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double c = 0.0;
    double dt = 0.0;
    double sqrt_dt = 0.0;
};

struct KernelTable {
    Isa isa;

    void (*linear_step)(std::span<double> x, std::span<const double> z, const StepCoeffs& k);

    void (*coupled_step)(std::span<double> x, std::span<const double> u,
                         std::span<const double> z, const StepCoeffs& k);

    // Like linear_step, but elements already at 0 stay there and elements that
    // step to <= 1e-12 are set to 0 and flagged with hit[i] = 1 (others 0).
    void (*absorbing_step)(std::span<double> x, std::span<const double> z,
                           const StepCoeffs& k, std::span<std::uint8_t> hit);

    // Replaces values <= 0 by `floor_value`; returns how many were replaced.
    std::size_t (*positivity_floor)(std::span<double> x, double floor_value);

    double (*striped_sum)(std::span<const double> x);

    double (*striped_dot)(std::span<const double> x, std::span<const double> y);

    // Solves `lanes` independent tridiagonal systems of size n sharing one
    // matrix. rhs is row-major [row * lanes + lane] and is overwritten with the
    // solution. sub[0] and sup[n-1] are ignored. scratch needs n doubles.
    void (*tridiag_shared)(std::size_t n, std::size_t lanes, const double* sub,
                           const double* diag, const double* sup, double* rhs,
                           double* scratch);

    // As above but each lane has its own matrix, laid out like rhs.
    // scratch needs n * lanes doubles.
    void (*tridiag_batched)(std::size_t n, std::size_t lanes, const double* sub,
                            const double* diag, const double* sup, double* rhs,
                            double* scratch);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table used by the library. Picks AVX2 when available unless the
/// PENSION_SIMD environment variable is set to "scalar".
const KernelTable& active_kernels();

/// Overrides the runtime choice (tests, benchmarks). Passing an ISA the
/// machine cannot run falls back to scalar.
void force_isa(Isa isa);

}  // namespace pension::simd
