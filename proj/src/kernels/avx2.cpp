// Compiled with -mavx2 and only reached after a runtime CPU check.

#include <immintrin.h>

#include "kernels_impl.hpp"

namespace pension::simd::detail {

namespace {

constexpr std::size_t W = 4;

struct StepVec {
    __m256d a1, a2, b1, b2, c, dt, sqrt_dt;
    explicit StepVec(const StepCoeffs& k)
        : a1(_mm256_set1_pd(k.a1)),
          a2(_mm256_set1_pd(k.a2)),
          b1(_mm256_set1_pd(k.b1)),
          b2(_mm256_set1_pd(k.b2)),
          c(_mm256_set1_pd(k.c)),
          dt(_mm256_set1_pd(k.dt)),
          sqrt_dt(_mm256_set1_pd(k.sqrt_dt)) {}
};

inline __m256d step_vec(__m256d x, __m256d z, const StepVec& k) {
    __m256d drift = _mm256_mul_pd(k.a1, x);
    drift = _mm256_add_pd(drift, k.a2);
    drift = _mm256_mul_pd(drift, k.dt);
    __m256d noise = _mm256_mul_pd(k.b1, x);
    noise = _mm256_add_pd(noise, k.b2);
    noise = _mm256_mul_pd(noise, k.sqrt_dt);
    noise = _mm256_mul_pd(noise, z);
    x = _mm256_add_pd(x, drift);
    return _mm256_add_pd(x, noise);
}

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
    const StepVec kv(k);
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        const __m256d zv = _mm256_loadu_pd(z.data() + i);
        _mm256_storeu_pd(x.data() + i, step_vec(xv, zv, kv));
    }
    for (; i < n; ++i) x[i] = step_one(x[i], z[i], k);
}

void coupled_step(std::span<double> x, std::span<const double> u, std::span<const double> z,
                  const StepCoeffs& k) {
    const StepVec kv(k);
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        const __m256d uv = _mm256_loadu_pd(u.data() + i);
        const __m256d zv = _mm256_loadu_pd(z.data() + i);
        __m256d drift = _mm256_mul_pd(kv.a1, xv);
        drift = _mm256_add_pd(drift, kv.a2);
        drift = _mm256_add_pd(drift, _mm256_mul_pd(kv.c, uv));
        drift = _mm256_mul_pd(drift, kv.dt);
        __m256d noise = _mm256_mul_pd(kv.b1, xv);
        noise = _mm256_add_pd(noise, kv.b2);
        noise = _mm256_mul_pd(noise, kv.sqrt_dt);
        noise = _mm256_mul_pd(noise, zv);
        _mm256_storeu_pd(x.data() + i, _mm256_add_pd(_mm256_add_pd(xv, drift), noise));
    }
    for (; i < n; ++i) {
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
    const StepVec kv(k);
    const __m256d zero = _mm256_setzero_pd();
    const __m256d level = _mm256_set1_pd(kAbsorbLevel);
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        const __m256d zv = _mm256_loadu_pd(z.data() + i);
        const __m256d alive = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        const __m256d next = step_vec(xv, zv, kv);
        const __m256d positive = _mm256_cmp_pd(next, level, _CMP_GT_OQ);
        const __m256d keep = _mm256_and_pd(alive, positive);
        const __m256d crossed = _mm256_andnot_pd(positive, alive);
        _mm256_storeu_pd(x.data() + i, _mm256_and_pd(keep, next));
        const int bits = _mm256_movemask_pd(crossed);
        for (std::size_t l = 0; l < W; ++l) hit[i + l] = static_cast<std::uint8_t>((bits >> l) & 1);
    }
    for (; i < n; ++i) {
        const bool alive = x[i] > 0.0;
        const double next = step_one(x[i], z[i], k);
        hit[i] = (alive && !(next > kAbsorbLevel)) ? 1 : 0;
        x[i] = (alive && next > kAbsorbLevel) ? next : 0.0;
    }
}

std::size_t positivity_floor(std::span<double> x, double floor_value) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d fl = _mm256_set1_pd(floor_value);
    std::size_t count = 0;
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + W <= n; i += W) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        const __m256d ok = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
        const int bits = _mm256_movemask_pd(ok);
        if (bits != 0xF) {
            count += static_cast<std::size_t>(4 - __builtin_popcount(static_cast<unsigned>(bits)));
            _mm256_storeu_pd(x.data() + i, _mm256_blendv_pd(fl, xv, ok));
        }
    }
    for (; i < n; ++i) {
        if (!(x[i] > 0.0)) {
            x[i] = floor_value;
            ++count;
        }
    }
    return count;
}

inline double combine(__m256d acc) {
    alignas(32) double lanes[W];
    _mm256_store_pd(lanes, acc);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double striped_sum(std::span<const double> x) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t body = x.size() - x.size() % W;
    for (std::size_t i = 0; i < body; i += W) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x.data() + i));
    double total = combine(acc);
    for (std::size_t i = body; i < x.size(); ++i) total = total + x[i];
    return total;
}

double striped_dot(std::span<const double> x, std::span<const double> y) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t body = x.size() - x.size() % W;
    for (std::size_t i = 0; i < body; i += W)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x.data() + i),
                                               _mm256_loadu_pd(y.data() + i)));
    double total = combine(acc);
    for (std::size_t i = body; i < x.size(); ++i) {
        const double p = x[i] * y[i];
        total = total + p;
    }
    return total;
}

void tridiag_shared(std::size_t n, std::size_t lanes, const double* sub, const double* diag,
                    const double* sup, double* rhs, double* scratch) {
    double inv = 1.0 / diag[0];
    scratch[0] = sup[0] * inv;
    {
        const __m256d iv = _mm256_set1_pd(inv);
        std::size_t l = 0;
        for (; l + W <= lanes; l += W) _mm256_storeu_pd(rhs + l, _mm256_mul_pd(_mm256_loadu_pd(rhs + l), iv));
        for (; l < lanes; ++l) rhs[l] = rhs[l] * inv;
    }
    for (std::size_t r = 1; r < n; ++r) {
        const double t = sub[r] * scratch[r - 1];
        const double m = diag[r] - t;
        inv = 1.0 / m;
        scratch[r] = sup[r] * inv;
        double* row = rhs + r * lanes;
        const double* prev = rhs + (r - 1) * lanes;
        const __m256d sv = _mm256_set1_pd(sub[r]);
        const __m256d iv = _mm256_set1_pd(inv);
        std::size_t l = 0;
        for (; l + W <= lanes; l += W) {
            const __m256d s = _mm256_mul_pd(sv, _mm256_loadu_pd(prev + l));
            const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(row + l), s);
            _mm256_storeu_pd(row + l, _mm256_mul_pd(d, iv));
        }
        for (; l < lanes; ++l) {
            const double s = sub[r] * prev[l];
            const double d = row[l] - s;
            row[l] = d * inv;
        }
    }
    for (std::size_t r = n - 1; r-- > 0;) {
        double* row = rhs + r * lanes;
        const double* next = rhs + (r + 1) * lanes;
        const __m256d cv = _mm256_set1_pd(scratch[r]);
        std::size_t l = 0;
        for (; l + W <= lanes; l += W) {
            const __m256d s = _mm256_mul_pd(cv, _mm256_loadu_pd(next + l));
            _mm256_storeu_pd(row + l, _mm256_sub_pd(_mm256_loadu_pd(row + l), s));
        }
        for (; l < lanes; ++l) {
            const double s = scratch[r] * next[l];
            row[l] = row[l] - s;
        }
    }
}

void tridiag_batched(std::size_t n, std::size_t lanes, const double* sub, const double* diag,
                     const double* sup, double* rhs, double* scratch) {
    const __m256d one = _mm256_set1_pd(1.0);
    {
        std::size_t l = 0;
        for (; l + W <= lanes; l += W) {
            const __m256d iv = _mm256_div_pd(one, _mm256_loadu_pd(diag + l));
            _mm256_storeu_pd(scratch + l, _mm256_mul_pd(_mm256_loadu_pd(sup + l), iv));
            _mm256_storeu_pd(rhs + l, _mm256_mul_pd(_mm256_loadu_pd(rhs + l), iv));
        }
        for (; l < lanes; ++l) {
            const double inv = 1.0 / diag[l];
            scratch[l] = sup[l] * inv;
            rhs[l] = rhs[l] * inv;
        }
    }
    for (std::size_t r = 1; r < n; ++r) {
        const std::size_t o = r * lanes;
        const std::size_t p = o - lanes;
        std::size_t l = 0;
        for (; l + W <= lanes; l += W) {
            const __m256d sb = _mm256_loadu_pd(sub + o + l);
            const __m256d t = _mm256_mul_pd(sb, _mm256_loadu_pd(scratch + p + l));
            const __m256d m = _mm256_sub_pd(_mm256_loadu_pd(diag + o + l), t);
            const __m256d iv = _mm256_div_pd(one, m);
            _mm256_storeu_pd(scratch + o + l, _mm256_mul_pd(_mm256_loadu_pd(sup + o + l), iv));
            const __m256d s = _mm256_mul_pd(sb, _mm256_loadu_pd(rhs + p + l));
            const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(rhs + o + l), s);
            _mm256_storeu_pd(rhs + o + l, _mm256_mul_pd(d, iv));
        }
        for (; l < lanes; ++l) {
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
        std::size_t l = 0;
        for (; l + W <= lanes; l += W) {
            const __m256d s = _mm256_mul_pd(_mm256_loadu_pd(scratch + o + l), _mm256_loadu_pd(rhs + q + l));
            _mm256_storeu_pd(rhs + o + l, _mm256_sub_pd(_mm256_loadu_pd(rhs + o + l), s));
        }
        for (; l < lanes; ++l) {
            const double s = scratch[o + l] * rhs[q + l];
            rhs[o + l] = rhs[o + l] - s;
        }
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        Isa::avx2,   linear_step, coupled_step,   absorbing_step,  positivity_floor,
        striped_sum, striped_dot, tridiag_shared, tridiag_batched,
    };
    return table;
}

}  // namespace pension::simd::detail
