#include "pension/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <stdexcept>
#include <thread>

#include "pension/kernels.hpp"
#include "pension/rng.hpp"

namespace pension {

namespace {

constexpr std::size_t kBlock = 256;
constexpr std::uint64_t kStartStream = 16;

struct TimeGrid {
    std::size_t steps;
    double dt;
    std::vector<std::size_t> record_steps;  // sorted, unique, always contains `steps`
};

TimeGrid make_grid(const EulerConfig& cfg) {
    TimeGrid g;
    g.steps = cfg.steps();
    g.dt = cfg.horizon / static_cast<double>(g.steps);
    for (double t : cfg.record_times) {
        if (t < 0.0 || t > cfg.horizon * (1.0 + 1e-12))
            throw std::invalid_argument("record time outside [0, horizon]");
        g.record_steps.push_back(static_cast<std::size_t>(std::llround(t / g.dt)));
    }
    g.record_steps.push_back(g.steps);
    std::sort(g.record_steps.begin(), g.record_steps.end());
    g.record_steps.erase(std::unique(g.record_steps.begin(), g.record_steps.end()),
                         g.record_steps.end());
    return g;
}

PathEnsemble make_ensemble(const EulerConfig& cfg, const TimeGrid& g, bool two_d) {
    PathEnsemble e;
    e.config = cfg;
    e.n_paths = cfg.n_paths;
    e.horizon = cfg.horizon;
    for (std::size_t s : g.record_steps) e.times.push_back(static_cast<double>(s) * g.dt);
    e.values.assign(e.times.size() * e.n_paths, 0.0);
    if (two_d) e.aux.assign(e.times.size() * e.n_paths, 0.0);
    return e;
}

/// Runs fn(begin, end) over fixed path blocks, possibly on several threads.
/// Returns the sum of the per-block counters fn reports.
template <class Fn>
std::size_t for_each_block(std::size_t n_paths, unsigned threads, Fn&& fn) {
    const std::size_t n_blocks = (n_paths + kBlock - 1) / kBlock;
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n_blocks, 1)));
    std::vector<std::size_t> counts(n_blocks, 0);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t b = next++; b < n_blocks; b = next++) {
            const std::size_t begin = b * kBlock;
            counts[b] = fn(begin, std::min(n_paths, begin + kBlock));
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    return total;
}

/// Gaussian draws for a block, honouring antithetic pairing (path 2k+1 uses
/// the negated draws of path 2k; blocks start at even paths). Draws are made
/// kChunk steps at a time per path so only one generator is hot at once;
/// each path still consumes its own stream in time order.
class BlockNoise {
public:
    static constexpr std::size_t kChunk = 64;

    BlockNoise(const EulerConfig& cfg, std::size_t begin, std::size_t end, std::uint64_t stream)
        : antithetic_(cfg.antithetic), begin_(begin), n_(end - begin), buffer_(kChunk * (end - begin)) {
        for (std::size_t p = begin; p < end; ++p) {
            if (antithetic_ && (p % 2 == 1)) continue;
            const std::uint64_t key = antithetic_ ? p / 2 : p;
            rngs_.emplace_back(cfg.seed, key, stream);
        }
    }

    /// Draws of the next step, one per path of the block.
    std::span<const double> next() {
        if (pos_ == kChunk) refill();
        return {buffer_.data() + (pos_++) * n_, n_};
    }

    void fill(std::span<double> z) {
        const auto row = next();
        std::copy(row.begin(), row.end(), z.begin());
    }

private:
    void refill() {
        std::size_t g = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (antithetic_ && ((begin_ + i) % 2 == 1)) {
                for (std::size_t k = 0; k < kChunk; ++k) buffer_[k * n_ + i] = -buffer_[k * n_ + i - 1];
            } else {
                auto& rng = rngs_[g++];
                for (std::size_t k = 0; k < kChunk; ++k) buffer_[k * n_ + i] = rng.normal();
            }
        }
        pos_ = 0;
    }

    bool antithetic_;
    std::size_t begin_;
    std::size_t n_;
    std::vector<PathRng> rngs_;
    std::vector<double> buffer_;
    std::size_t pos_ = kChunk;
};

/// Starting values x0 + sigma z with z from a stream reserved for initial
/// conditions; antithetic partners mirror the offset.
void spread_start(std::span<double> x, double x0, const EulerConfig& cfg, std::size_t begin, std::uint64_t stream) {
    if (cfg.initial_sigma <= 0.0) return;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t p = begin + i;
        const bool mirror = cfg.antithetic && (p % 2 == 1);
        PathRng rng(cfg.seed, cfg.antithetic ? p / 2 : p, stream);
        const double z = rng.normal();
        x[i] = x0 + cfg.initial_sigma * (mirror ? -z : z);
    }
}

void store(PathEnsemble& e, std::vector<double>& target, std::size_t rec, std::size_t begin,
           std::span<const double> x) {
    std::copy(x.begin(), x.end(), target.begin() + static_cast<std::ptrdiff_t>(rec * e.n_paths + begin));
}

}  // namespace

void EulerConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("Euler dt must be positive");
    if (!(horizon >= dt)) throw std::invalid_argument("Euler horizon must be >= dt");
    if (n_paths < 1) throw std::invalid_argument("Euler run needs at least one path");
    if (!(initial_sigma >= 0.0)) throw std::invalid_argument("initial spread must be non-negative");
}

std::size_t EulerConfig::steps() const {
    return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
}

std::span<const double> PathEnsemble::at(std::size_t k) const {
    return {values.data() + k * n_paths, n_paths};
}

std::span<const double> PathEnsemble::aux_at(std::size_t k) const {
    if (aux.empty()) throw std::invalid_argument("ensemble has no second component");
    return {aux.data() + k * n_paths, n_paths};
}

std::size_t PathEnsemble::time_index(double t) const {
    const double tol = 0.5 * config.horizon / static_cast<double>(config.steps());
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= tol) return k;
    throw std::invalid_argument("time " + std::to_string(t) + " was not recorded");
}

PathEnsemble euler_paths(const LinearSdeCoefficients& coeffs, double x0, const EulerConfig& config) {
    config.validate();
    const TimeGrid grid = make_grid(config);
    PathEnsemble e = make_ensemble(config, grid, false);
    const bool guard = coeffs.homogeneous() && !coeffs.b1.is_zero();
    const auto& kern = simd::active_kernels();
    const double sdt = std::sqrt(grid.dt);

    e.floored_steps = for_each_block(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
        const std::size_t n = end - begin;
        std::vector<double> x(n, x0), z(n);
        BlockNoise noise(config, begin, end, 0);
        std::size_t rec = 0, floored = 0;
        if (grid.record_steps[rec] == 0) store(e, e.values, rec++, begin, x);
        for (std::size_t k = 0; k < grid.steps; ++k) {
            const double t = static_cast<double>(k) * grid.dt;
            noise.fill(z);
            simd::StepCoeffs c{coeffs.a1(t), coeffs.a2(t), coeffs.b1(t), coeffs.b2(t), 0.0, grid.dt, sdt};
            kern.linear_step(x, z, c);
            if (guard) floored += kern.positivity_floor(x, config.positivity_floor);
            if (rec < grid.record_steps.size() && grid.record_steps[rec] == k + 1)
                store(e, e.values, rec++, begin, x);
        }
        return floored;
    });
    return e;
}

PathEnsemble simulate_index_average(int n_constituents, const CalibratedConstants& constants,
                                    const EulerConfig& config) {
    config.validate();
    if (n_constituents < 1) throw std::invalid_argument("index average needs >= 1 constituent");
    const TimeGrid grid = make_grid(config);
    PathEnsemble e = make_ensemble(config, grid, false);
    const auto& kern = simd::active_kernels();
    const double sdt = std::sqrt(grid.dt);
    const std::size_t m = static_cast<std::size_t>(n_constituents);
    const simd::StepCoeffs c{constants.psi, 0.0, constants.phi, 0.0, 0.0, grid.dt, sdt};
    const bool guard = constants.phi != 0.0;

    // One stream per output path; constituents draw from it in index order.
    e.floored_steps = for_each_block(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> x(m), z(m), out(end - begin);
        std::size_t floored = 0;
        std::vector<std::vector<double>> recorded(grid.record_steps.size(), std::vector<double>(end - begin));
        for (std::size_t p = begin; p < end; ++p) {
            const bool mirror = config.antithetic && (p % 2 == 1);
            PathRng rng(config.seed, config.antithetic ? p / 2 : p, 0);
            std::fill(x.begin(), x.end(), 1.0);
            std::size_t rec = 0;
            if (grid.record_steps[rec] == 0) recorded[rec++][p - begin] = 1.0;
            for (std::size_t k = 0; k < grid.steps; ++k) {
                for (double& zi : z) zi = mirror ? -rng.normal() : rng.normal();
                kern.linear_step(x, z, c);
                if (guard) floored += kern.positivity_floor(x, config.positivity_floor);
                if (rec < grid.record_steps.size() && grid.record_steps[rec] == k + 1)
                    recorded[rec++][p - begin] = kern.striped_sum(x) / static_cast<double>(m);
            }
        }
        for (std::size_t r = 0; r < recorded.size(); ++r) store(e, e.values, r, begin, recorded[r]);
        return floored;
    });
    return e;
}

PathEnsemble simulate_fund(const CalibratedConstants& constants, const EulerConfig& config,
                           std::optional<KillBox> kill, double v0, double s0) {
    config.validate();
    const TimeGrid grid = make_grid(config);
    PathEnsemble e = make_ensemble(config, grid, true);
    const FwApproximation fw(constants);
    const auto& kern = simd::active_kernels();
    const double sdt = std::sqrt(grid.dt);
    if (kill) {
        e.absorbing = true;
        e.first_passage.assign(config.n_paths, std::numeric_limits<double>::infinity());
    }
    const simd::StepCoeffs salary{constants.xi, 0.0, constants.eta, 0.0, 0.0, grid.dt, sdt};

    e.floored_steps = for_each_block(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
        const std::size_t n = end - begin;
        std::vector<double> v(n, v0), s(n, s0), zv(n), zs(n);
        std::vector<double> frozen_v(n), frozen_s(n);
        std::vector<std::uint8_t> alive(n, 1);
        spread_start(v, v0, config, begin, kStartStream);
        spread_start(s, s0, config, begin, kStartStream + 1);
        BlockNoise noise_v(config, begin, end, 0);
        BlockNoise noise_s(config, begin, end, 1);
        std::size_t rec = 0, floored = 0;
        if (grid.record_steps[rec] == 0) {
            store(e, e.values, rec, begin, v);
            store(e, e.aux, rec++, begin, s);
        }
        for (std::size_t k = 0; k < grid.steps; ++k) {
            const double t = static_cast<double>(k) * grid.dt;
            noise_v.fill(zv);
            noise_s.fill(zs);
            const simd::StepCoeffs fund{constants.psi, 0.0, std::sqrt(fw.phi_squared(t)), 0.0,
                                        constants.lambda_contrib, grid.dt, sdt};
            kern.coupled_step(v, s, zv, fund);  // uses s(t) before it moves
            kern.linear_step(s, zs, salary);
            floored += kern.positivity_floor(v, config.positivity_floor);
            floored += kern.positivity_floor(s, config.positivity_floor);
            if (kill) {
                const double t_next = static_cast<double>(k + 1) * grid.dt;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!alive[i]) {
                        v[i] = frozen_v[i];
                        s[i] = frozen_s[i];
                    } else if (v[i] >= kill->v_max || s[i] >= kill->s_max) {
                        alive[i] = 0;
                        e.first_passage[begin + i] = t_next;
                        frozen_v[i] = v[i];
                        frozen_s[i] = s[i];
                    }
                }
            }
            if (rec < grid.record_steps.size() && grid.record_steps[rec] == k + 1) {
                store(e, e.values, rec, begin, v);
                store(e, e.aux, rec++, begin, s);
            }
        }
        return floored;
    });
    return e;
}

PathEnsemble simulate_consumption(const CalibratedConstants& constants, double ratio,
                                  const EulerConfig& config) {
    config.validate();
    if (!(ratio > 0.0)) throw std::invalid_argument("consumption ratio must be positive");
    const TimeGrid grid = make_grid(config);
    PathEnsemble e = make_ensemble(config, grid, false);
    e.absorbing = true;
    e.first_passage.assign(config.n_paths, std::numeric_limits<double>::infinity());
    const FwApproximation fw(constants);
    const auto& kern = simd::active_kernels();
    const double sdt = std::sqrt(grid.dt);
    const double drain = std::isinf(ratio) ? 0.0 : 1.0 / ratio;

    for_each_block(config.n_paths, config.threads, [&](std::size_t begin, std::size_t end) {
        const std::size_t n = end - begin;
        // Alive paths are kept compacted at the front; idx maps back to the block.
        std::vector<double> x(n, 1.0), z(n);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::vector<std::uint8_t> hit(n);
        spread_start(x, 1.0, config, begin, kStartStream);
        BlockNoise noise(config, begin, end, 0);
        std::size_t rec = 0, alive = n;
        auto record = [&] {
            double* row = e.values.data() + rec * e.n_paths + begin;
            for (std::size_t i = 0; i < alive; ++i) row[idx[i]] = x[i];
            ++rec;
        };
        if (grid.record_steps[rec] == 0) record();
        for (std::size_t k = 0; k < grid.steps && alive > 0; ++k) {
            const double t = static_cast<double>(k) * grid.dt;
            const auto draws = noise.next();
            for (std::size_t i = 0; i < alive; ++i) z[i] = draws[idx[i]];
            const simd::StepCoeffs c{constants.psi, -drain, std::sqrt(fw.phi_squared(t)), 0.0,
                                     0.0, grid.dt, sdt};
            const std::span<double> xs(x.data(), alive);
            kern.absorbing_step(xs, std::span<const double>(z.data(), alive), c,
                                std::span<std::uint8_t>(hit.data(), alive));
            const double t_next = static_cast<double>(k + 1) * grid.dt;
            std::size_t kept = 0;
            for (std::size_t i = 0; i < alive; ++i) {
                if (hit[i]) {
                    e.first_passage[begin + idx[i]] = t_next;
                    continue;
                }
                x[kept] = x[i];
                idx[kept] = idx[i];
                ++kept;
            }
            alive = kept;
            if (rec < grid.record_steps.size() && grid.record_steps[rec] == k + 1) record();
        }
        // Every path absorbed: later records stay 0 from initialisation.
        return std::size_t{0};
    });
    return e;
}

namespace {

Estimate binomial(std::size_t hits, std::size_t n) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, 0.0};
}

bool alive_at(const PathEnsemble& e, std::size_t path, double t) {
    return e.first_passage.empty() || e.first_passage[path] > t;
}

}  // namespace

std::vector<Estimate> mc_estimate(const PathEnsemble& e, const Functional& f) {
    if (e.n_paths == 0) throw std::invalid_argument("mc_estimate: empty ensemble");
    return std::visit(
        [&](const auto& fn) -> std::vector<Estimate> {
            using T = std::decay_t<decltype(fn)>;
            if constexpr (std::is_same_v<T, functional::Exceedance>) {
                const auto x = e.at(e.time_index(fn.t));
                std::size_t hits = 0;
                for (std::size_t p = 0; p < e.n_paths; ++p)
                    if (alive_at(e, p, fn.t) && x[p] > fn.y) ++hits;
                return {binomial(hits, e.n_paths)};
            } else if constexpr (std::is_same_v<T, functional::Survival>) {
                if (!e.absorbing) throw std::invalid_argument("survival needs an absorbing ensemble");
                if (fn.t > e.horizon * (1.0 + 1e-12))
                    throw std::invalid_argument("survival requested beyond the simulated horizon");
                std::size_t hits = 0;
                for (double tau : e.first_passage)
                    if (tau > fn.t) ++hits;
                return {binomial(hits, e.n_paths)};
            } else if constexpr (std::is_same_v<T, functional::Mfpt>) {
                if (!e.absorbing) throw std::invalid_argument("MFPT needs an absorbing ensemble");
                double sum = 0.0, sum_sq = 0.0;
                std::size_t censored = 0;
                for (double tau : e.first_passage) {
                    const double v = std::isinf(tau) ? e.horizon : tau;
                    if (std::isinf(tau)) ++censored;
                    sum += v;
                    sum_sq += v * v;
                }
                const double n = static_cast<double>(e.n_paths);
                const double mean = sum / n;
                const double var = e.n_paths > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
                return {{mean, std::sqrt(var / n), e.n_paths, static_cast<double>(censored) / n}};
            } else {
                const auto x = e.at(e.time_index(fn.t));
                std::vector<Estimate> out;
                out.reserve(fn.grid.size());
                for (double y : fn.grid) {
                    std::size_t hits = 0;
                    for (std::size_t p = 0; p < e.n_paths; ++p)
                        if (alive_at(e, p, fn.t) && x[p] <= y) ++hits;
                    out.push_back(binomial(hits, e.n_paths));
                }
                return out;
            }
        },
        f);
}

SampleMoments sample_moments(const PathEnsemble& e, double t) {
    const auto x = e.at(e.time_index(t));
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double var = m2 / (n - 1.0);
    m4 /= n;
    const double var_pop = m2 / n;
    return {mean, std::sqrt(var / n), var, std::sqrt(std::max(0.0, m4 - var_pop * var_pop) / n)};
}

}  // namespace pension
