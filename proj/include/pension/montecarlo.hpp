#pragma once

// Euler-Maruyama engine. Serves both as a simulator and as the independent
// oracle for every probability the Fokker-Planck solvers produce.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "pension/index_approx.hpp"
#include "pension/model_core.hpp"

namespace pension {

struct EulerConfig {
    double dt = 1.0 / 100.0;
    double horizon = 1.0;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 0;
    bool antithetic = false;
    /// Times at which path values are stored; the horizon is always stored.
    std::vector<double> record_times;
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Multiplicative-noise paths that step to <= 0 are reset to this value.
    double positivity_floor = 1e-12;
    /// Standard deviation of a Gaussian spread of the starting point (fund and
    /// consumption runs), so that the ensemble starts from the same smoothed
    /// initial density as the Fokker-Planck solvers. 0 starts every path at x0.
    double initial_sigma = 0.0;

    void validate() const;
    std::size_t steps() const;
};

/// Paths are stored only at the recorded times: values[time_index * n_paths + path].
struct PathEnsemble {
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::vector<double> values;
    /// Second component for two-dimensional runs (salary in the fund model).
    std::vector<double> aux;
    /// First-passage time per path (+inf when the path survived the horizon).
    /// Empty for ensembles without an absorbing boundary.
    std::vector<double> first_passage;
    bool absorbing = false;
    double horizon = 0.0;
    std::size_t floored_steps = 0;
    EulerConfig config;

    std::span<const double> at(std::size_t time_index) const;
    std::span<const double> aux_at(std::size_t time_index) const;
    std::size_t time_index(double t) const;
};

PathEnsemble euler_paths(const LinearSdeCoefficients& coeffs, double x0, const EulerConfig& config);

/// Equal-weight average of `n_constituents` independent GBM(psi, phi) paths.
PathEnsemble simulate_index_average(int n_constituents, const CalibratedConstants& constants,
                                    const EulerConfig& config);

/// Rectangle outside of which fund paths are killed, mirroring zero Dirichlet
/// edges of the two-dimensional solver.
struct KillBox {
    double v_max = std::numeric_limits<double>::infinity();
    double s_max = std::numeric_limits<double>::infinity();
};

/// Joint (v, s) paths of dv = (psi v + Lambda s) dt + Phi(t) v dW,
/// ds = xi s dt + eta s dw, started at (v0, s0) plus the configured spread.
/// Killed paths are frozen and carry their kill time in first_passage.
PathEnsemble simulate_fund(const CalibratedConstants& constants, const EulerConfig& config,
                           std::optional<KillBox> kill = std::nullopt, double v0 = 1.0,
                           double s0 = 1.0);

/// Scaled consumption x = V / V_r: dx = (psi x - 1/ratio) dt + Phi(t) x dW,
/// x(0) = 1 plus the configured spread, absorbed at 0 (x <= 1e-12). `ratio` = V_r / beta
/// in years; ratio = +inf means no consumption.
PathEnsemble simulate_consumption(const CalibratedConstants& constants, double ratio,
                                  const EulerConfig& config);

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
    /// Fraction of paths whose first passage lies beyond the horizon (MFPT only).
    double censored_fraction = 0.0;
};

namespace functional {
struct Exceedance {
    double y;
    double t;
};
struct Survival {
    double t;
};
struct Mfpt {};
struct CdfGrid {
    std::vector<double> grid;
    double t;
};
}  // namespace functional

using Functional = std::variant<functional::Exceedance, functional::Survival, functional::Mfpt,
                                functional::CdfGrid>;

/// Plug-in estimators with binomial / CLT standard errors. CdfGrid returns one
/// estimate per grid point; the other functionals return a single element.
/// Throws std::invalid_argument when the functional needs data the ensemble
/// lacks (survival or MFPT on a non-absorbing ensemble, unrecorded times).
std::vector<Estimate> mc_estimate(const PathEnsemble& ensemble, const Functional& functional);

/// Sample mean and variance (with standard errors) of the values at a recorded time.
struct SampleMoments {
    double mean;
    double mean_se;
    double variance;
    double variance_se;
};
SampleMoments sample_moments(const PathEnsemble& ensemble, double t);

}  // namespace pension
