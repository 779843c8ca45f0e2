#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "pension/index_approx.hpp"
#include "pension/montecarlo.hpp"
#include "pension/rng.hpp"

using namespace pension;

namespace {

EulerConfig config(double dt, double horizon, std::size_t n, std::uint64_t seed = 1) {
    EulerConfig c;
    c.dt = dt;
    c.horizon = horizon;
    c.n_paths = n;
    c.seed = seed;
    return c;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST(PathRng, StreamsDependOnlyOnTheirKey) {
    PathRng a(7, 3, 1), b(7, 3, 1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.bits(), b.bits());
    std::set<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 4; ++s)
        for (std::uint64_t p = 0; p < 64; ++p)
            for (std::uint64_t k = 0; k < 4; ++k) seeds.insert(PathRng::derive_seed(s, p, k));
    EXPECT_EQ(seeds.size(), 4u * 64u * 4u);
}

TEST(PathRng, NormalMoments) {
    PathRng r(1, 0);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        s += z;
        s2 += z * z;
    }
    EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(EulerConfig, Validation) {
    EXPECT_THROW(config(0.0, 1.0, 1).validate(), std::invalid_argument);
    EXPECT_THROW(config(0.1, 0.05, 1).validate(), std::invalid_argument);
    EXPECT_THROW(config(0.1, 1.0, 0).validate(), std::invalid_argument);
    EXPECT_NO_THROW(config(0.1, 1.0, 1).validate());
}

TEST(EulerPaths, ZeroCoefficientsGiveConstantPaths) {
    auto c = config(0.1, 2.0, 10);
    c.record_times = {0.0, 1.0};
    const auto e = euler_paths(LinearSdeCoefficients{}, 3.0, c);
    for (double x : e.values) EXPECT_EQ(x, 3.0);
    EXPECT_EQ(e.times.size(), 3u);
}

TEST(EulerPaths, GbmMeanMatchesMoment) {
    const auto coeffs = LinearSdeCoefficients::geometric(0.0329, 0.3464);
    const auto e = euler_paths(coeffs, 1.0, config(1.0 / 12.0, 25.0, 100000, 3));
    const auto m = sample_moments(e, 25.0);
    EXPECT_NEAR(lognormal_moment(1.0, coeffs, 25.0, 1.0), 2.2761831883546866, 1e-12);
    EXPECT_NEAR(m.mean, 2.2761831883546866, 3.0 * m.mean_se);
}

TEST(EulerPaths, SalaryMeanMatchesMoment) {
    const auto coeffs = LinearSdeCoefficients::geometric(-0.0328, std::sqrt(1.0 / 6.0));
    const auto e = euler_paths(coeffs, 1.0, config(1.0 / 12.0, 40.0, 100000, 4));
    const auto m = sample_moments(e, 40.0);
    EXPECT_NEAR(m.mean, 0.26928095555244996, 3.0 * m.mean_se);
}

TEST(EulerPaths, ExceedanceMatchesLognormalCdf) {
    const double mu = 0.05, sigma = 0.3, t = 5.0;
    const auto e = euler_paths(LinearSdeCoefficients::geometric(mu, sigma), 1.0, config(0.01, t, 100000, 5));
    for (double y : {0.8, 1.2, 2.0}) {
        const auto est = mc_estimate(e, functional::Exceedance{y, t})[0];
        const double exact = 1.0 - normal_cdf((std::log(y) - (mu - 0.5 * sigma * sigma) * t) / (sigma * std::sqrt(t)));
        EXPECT_NEAR(est.value, exact, 3.0 * est.standard_error) << "y = " << y;
    }
}

TEST(EulerPaths, EulerBiasShrinksBelowStandardError) {
    // Euler's mean x0 (1 + a dt)^(T/dt) against a halved step, relative to the
    // MC standard error at 1e5 paths.
    const double a = 0.0329, b = 0.3464, t = 25.0, dt = 1.0 / 12.0;
    const double coarse = std::pow(1.0 + a * dt, t / dt), fine = std::pow(1.0 + a * dt / 2, 2 * t / dt);
    const double se = std::exp(a * t) * std::sqrt(std::expm1(b * b * t) / 1e5);
    EXPECT_LT(std::abs(coarse - fine), se);
}

TEST(EulerPaths, PositivityGuardCountsFlooredSteps) {
    const auto e = euler_paths(LinearSdeCoefficients::geometric(0.0, 3.0), 1.0, config(0.5, 5.0, 1000));
    EXPECT_GT(e.floored_steps, 0u);
    for (double x : e.at(e.time_index(5.0))) EXPECT_GT(x, 0.0);
}

TEST(Determinism, ResultsIndependentOfThreadCount) {
    const auto c = CalibratedConstants::published();
    auto one = config(0.05, 10.0, 3000, 42);
    one.record_times = {5.0};
    auto many = one;
    one.threads = 1;
    many.threads = 7;

    const auto g1 = euler_paths(LinearSdeCoefficients::geometric(0.03, 0.3), 1.0, one);
    const auto g2 = euler_paths(LinearSdeCoefficients::geometric(0.03, 0.3), 1.0, many);
    EXPECT_TRUE(same_bits(g1.values, g2.values));

    const auto f1 = simulate_fund(c, one, KillBox{3.0, 2.0});
    const auto f2 = simulate_fund(c, many, KillBox{3.0, 2.0});
    EXPECT_TRUE(same_bits(f1.values, f2.values));
    EXPECT_TRUE(same_bits(f1.aux, f2.aux));
    EXPECT_TRUE(same_bits(f1.first_passage, f2.first_passage));

    one.initial_sigma = many.initial_sigma = 0.05;
    const auto k1 = simulate_consumption(c, 7.5, one);
    const auto k2 = simulate_consumption(c, 7.5, many);
    EXPECT_TRUE(same_bits(k1.first_passage, k2.first_passage));
    EXPECT_TRUE(same_bits(k1.values, k2.values));

    auto small = one;
    small.n_paths = 300;
    small.threads = 1;
    auto small_many = small;
    small_many.threads = 3;
    EXPECT_TRUE(same_bits(simulate_index_average(50, c, small).values,
                          simulate_index_average(50, c, small_many).values));
}

TEST(Determinism, PathsDoNotDependOnEnsembleSize) {
    const auto coeffs = LinearSdeCoefficients::geometric(0.03, 0.3);
    const auto a = euler_paths(coeffs, 1.0, config(0.1, 3.0, 300, 9));
    const auto b = euler_paths(coeffs, 1.0, config(0.1, 3.0, 1000, 9));
    for (std::size_t p = 0; p < 300; ++p) EXPECT_EQ(a.at(0)[p], b.at(0)[p]);
}

TEST(Antithetic, PairsMirrorTheirNoise) {
    auto c = config(0.1, 1.0, 10, 2);
    c.antithetic = true;
    const auto e = euler_paths(LinearSdeCoefficients{0.0, 0.0, 0.0, 1.0}, 0.0, c);
    const auto x = e.at(e.time_index(1.0));
    for (std::size_t p = 0; p < 10; p += 2) EXPECT_DOUBLE_EQ(x[p], -x[p + 1]);
}

TEST(IndexAverage, SingleConstituentIsGbmInLaw) {
    const auto c = CalibratedConstants::published();
    const auto e = simulate_index_average(1, c, config(0.05, 10.0, 50000, 6));
    const auto m = sample_moments(e, 10.0);
    EXPECT_NEAR(m.mean, std::exp(0.0329 * 10.0), 3.0 * m.mean_se);
    const double var = std::exp(2 * 0.0329 * 10.0) * std::expm1(0.3464 * 0.3464 * 10.0);
    EXPECT_NEAR(m.variance, var, 3.0 * m.variance_se);
}

TEST(Fund, NoDriftNoNoiseNoContributionIsConstant) {
    CalibratedConstants c = CalibratedConstants::published();
    c.psi = 0.0;
    c.phi = 0.0;
    c.lambda_contrib = 0.0;
    const auto e = simulate_fund(c, config(0.1, 5.0, 20));
    for (double v : e.at(e.time_index(5.0))) EXPECT_EQ(v, 1.0);
}

TEST(Fund, ZeroNoiseSolvesTheContributionOde) {
    CalibratedConstants c = CalibratedConstants::published();
    c.phi = 0.0;
    c.eta = 0.0;
    const double t = 10.0;
    const auto e = simulate_fund(c, config(1e-5, t, 1));
    const double psi = c.psi, xi = c.xi, lam = c.lambda_contrib;
    const double exact = std::exp(psi * t) * (1.0 + lam * std::expm1((xi - psi) * t) / (xi - psi));
    EXPECT_NEAR(e.at(e.time_index(t))[0], exact, 1e-6 * exact);
    EXPECT_NEAR(e.aux_at(e.time_index(t))[0], std::exp(xi * t), 1e-6);
}

TEST(Fund, KillBoxFreezesPaths) {
    const auto c = CalibratedConstants::published();
    auto cfg = config(0.05, 25.0, 2000, 8);
    const auto e = simulate_fund(c, cfg, KillBox{2.0, 1.5});
    ASSERT_TRUE(e.absorbing);
    std::size_t killed = 0;
    for (std::size_t p = 0; p < e.n_paths; ++p)
        if (!std::isinf(e.first_passage[p])) {
            ++killed;
            EXPECT_TRUE(e.at(e.time_index(25.0))[p] >= 2.0 || e.aux_at(e.time_index(25.0))[p] >= 1.5);
        }
    EXPECT_GT(killed, 0u);
    // Killed paths never count as exceeding.
    const auto all = mc_estimate(e, functional::Exceedance{0.0, 25.0})[0];
    EXPECT_NEAR(all.value, 1.0 - static_cast<double>(killed) / 2000.0, 1e-15);
}

TEST(Consumption, DeterministicDrainAbsorbsAtTheRatio) {
    CalibratedConstants c = CalibratedConstants::published();
    c.psi = 0.0;
    c.phi = 0.0;
    const double dt = 0.01;
    const auto e = simulate_consumption(c, 7.5, config(dt, 20.0, 64));
    for (double tau : e.first_passage) EXPECT_NEAR(tau, 7.5, 1e-12);
    const auto m = mc_estimate(e, functional::Mfpt{})[0];
    EXPECT_NEAR(m.value, 7.5, 1e-12);
    EXPECT_EQ(m.censored_fraction, 0.0);
}

TEST(Consumption, NoConsumptionNeverAbsorbs) {
    const auto c = CalibratedConstants::published();
    const auto e = simulate_consumption(c, std::numeric_limits<double>::infinity(), config(0.05, 30.0, 500));
    for (double tau : e.first_passage) EXPECT_TRUE(std::isinf(tau));
    EXPECT_EQ(mc_estimate(e, functional::Survival{30.0})[0].value, 1.0);
}

TEST(Consumption, SurvivalMonotoneInTimeAndRatio) {
    const auto c = CalibratedConstants::published();
    const auto lo = simulate_consumption(c, 10.0, config(0.02, 40.0, 4000, 3));
    const auto hi = simulate_consumption(c, 12.0, config(0.02, 40.0, 4000, 3));
    double prev = 1.0;
    for (double t = 0.0; t <= 40.0; t += 1.0) {
        const double s = mc_estimate(lo, functional::Survival{t})[0].value;
        EXPECT_LE(s, prev);
        EXPECT_LE(s, mc_estimate(hi, functional::Survival{t})[0].value);
        prev = s;
    }
}

TEST(Consumption, InitialSpreadKeepsTheMeanDrain) {
    CalibratedConstants c = CalibratedConstants::published();
    c.psi = 0.0;
    c.phi = 0.0;
    auto cfg = config(0.01, 20.0, 20000, 11);
    cfg.initial_sigma = 0.05;
    const auto m = mc_estimate(simulate_consumption(c, 7.5, cfg), functional::Mfpt{})[0];
    EXPECT_NEAR(m.value, 7.5, 0.01 + 3.0 * m.standard_error);
    EXPECT_NEAR(m.standard_error * std::sqrt(20000.0), 7.5 * 0.05, 0.02);
}

TEST(McEstimate, ConstantEnsemble) {
    const auto e = euler_paths(LinearSdeCoefficients{}, 2.0, config(0.5, 1.0, 100));
    const auto below = mc_estimate(e, functional::Exceedance{1.0, 1.0})[0];
    EXPECT_EQ(below.value, 1.0);
    EXPECT_EQ(below.standard_error, 0.0);
    const auto cdf = mc_estimate(e, functional::CdfGrid{{1.0, 2.0, 3.0}, 1.0});
    EXPECT_EQ(cdf[0].value, 0.0);
    EXPECT_EQ(cdf[1].value, 1.0);
    EXPECT_EQ(cdf[2].value, 1.0);
}

TEST(McEstimate, IncompatibleFunctionalsThrow) {
    const auto e = euler_paths(LinearSdeCoefficients{}, 2.0, config(0.5, 1.0, 10));
    EXPECT_THROW(mc_estimate(e, functional::Survival{0.5}), std::invalid_argument);
    EXPECT_THROW(mc_estimate(e, functional::Mfpt{}), std::invalid_argument);
    EXPECT_THROW(mc_estimate(e, functional::Exceedance{1.0, 0.25}), std::invalid_argument);
}
