#include "kernels_impl.hpp"

namespace pension::simd::detail {

namespace {

inline double step_one(double x, double z, const StepCoeffs& k) {
    double drift = k.a1 * x;
    drift = drift + k.a2;
    drift = drift * k.dt;
    double noise = k.b1 * x;
    noise = noise + k.b2;
    noise = noise * k.sqrt_dt;
    noise = noise * z;
    x = x + drift;
    return x + noise;
}

void linear_step(std::span<double> x, std::span<const double> z, const StepCoeffs& k) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = step_one(x[i], z[i], k);
}

void coupled_step(std::span<double> x, std::span<const double> u,
                  std::span<const double> z, const StepCoeffs& k) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        double drift = k.a1 * x[i];
        drift = drift + k.a2;
        double coupling = k.c * u[i];
        drift = drift + coupling;
        drift = drift * k.dt;
        double noise = k.b1 * x[i];
        noise = noise + k.b2;
        noise = noise * k.sqrt_dt;
        noise = noise * z[i];
        double v = x[i] + drift;
        x[i] = v + noise;
    }
}

void absorbing_step(std::span<double> x, std::span<const double> z, const StepCoeffs& k,
                    std::span<std::uint8_t> hit) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool alive = x[i] > 0.0;
        const double next = step_one(x[i], z[i], k);
        const bool crossed = alive && !(next > kAbsorbLevel);
        hit[i] = crossed ? 1 : 0;
        x[i] = (alive && next > kAbsorbLevel) ? next : 0.0;
    }
}

std::size_t positivity_floor(std::span<double> x, double floor_value) {
    std::size_t count = 0;
    for (double& v : x) {
        if (!(v > 0.0)) {
            v = floor_value;
            ++count;
        }
    }
    return count;
}

double striped_sum(std::span<const double> x) {
    double acc[kStripes] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t body = x.size() - x.size() % kStripes;
    for (std::size_t i = 0; i < body; i += kStripes)
        for (std::size_t l = 0; l < kStripes; ++l) acc[l] = acc[l] + x[i + l];
    double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t i = body; i < x.size(); ++i) total = total + x[i];
    return total;
}

double striped_dot(std::span<const double> x, std::span<const double> y) {
    double acc[kStripes] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t body = x.size() - x.size() % kStripes;
    for (std::size_t i = 0; i < body; i += kStripes)
        for (std::size_t l = 0; l < kStripes; ++l) {
            const double p = x[i + l] * y[i + l];
            acc[l] = acc[l] + p;
        }
    double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (std::size_t i = body; i < x.size(); ++i) {
        const double p = x[i] * y[i];
        total = total + p;
    }
    return total;
}

void tridiag_shared(std::size_t n, std::size_t lanes, const double* sub, const double* diag,
                    const double* sup, double* rhs, double* scratch) {
    // scratch holds the modified super-diagonal c'; rhs becomes d' then x.
    double inv = 1.0 / diag[0];
    scratch[0] = sup[0] * inv;
    for (std::size_t l = 0; l < lanes; ++l) rhs[l] = rhs[l] * inv;
    for (std::size_t r = 1; r < n; ++r) {
        const double t = sub[r] * scratch[r - 1];
        const double m = diag[r] - t;
        inv = 1.0 / m;
        scratch[r] = sup[r] * inv;
        double* row = rhs + r * lanes;
        const double* prev = rhs + (r - 1) * lanes;
        for (std::size_t l = 0; l < lanes; ++l) {
            const double s = sub[r] * prev[l];
            const double d = row[l] - s;
            row[l] = d * inv;
        }
    }
    for (std::size_t r = n - 1; r-- > 0;) {
        double* row = rhs + r * lanes;
        const double* next = rhs + (r + 1) * lanes;
        for (std::size_t l = 0; l < lanes; ++l) {
            const double s = scratch[r] * next[l];
            row[l] = row[l] - s;
        }
    }
}

void tridiag_batched(std::size_t n, std::size_t lanes, const double* sub, const double* diag,
                     const double* sup, double* rhs, double* scratch) {
    for (std::size_t l = 0; l < lanes; ++l) {
        const double inv = 1.0 / diag[l];
        scratch[l] = sup[l] * inv;
        rhs[l] = rhs[l] * inv;
    }
    for (std::size_t r = 1; r < n; ++r) {
        const std::size_t o = r * lanes;
        const std::size_t p = o - lanes;
        for (std::size_t l = 0; l < lanes; ++l) {
            const double t = sub[o + l] * scratch[p + l];
            const double m = diag[o + l] - t;
            const double inv = 1.0 / m;
            scratch[o + l] = sup[o + l] * inv;
            const double s = sub[o + l] * rhs[p + l];
            const double d = rhs[o + l] - s;
            rhs[o + l] = d * inv;
        }
    }
    for (std::size_t r = n - 1; r-- > 0;) {
        const std::size_t o = r * lanes;
        const std::size_t q = o + lanes;
        for (std::size_t l = 0; l < lanes; ++l) {
            const double s = scratch[o + l] * rhs[q + l];
            rhs[o + l] = rhs[o + l] - s;
        }
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        Isa::scalar,   linear_step,  coupled_step,    absorbing_step, positivity_floor,
        striped_sum,   striped_dot,  tridiag_shared,  tridiag_batched,
    };
    return table;
}

}  // namespace pension::simd::detail
