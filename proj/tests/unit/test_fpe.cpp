#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pension/fpe.hpp"
#include "pension/index_approx.hpp"
#include "pension/montecarlo.hpp"

using namespace pension;

namespace {

Grid small_2d() {
    Grid g;
    g.dh = 0.05;
    g.n_v = 80;
    g.dm = 0.1;
    g.n_s = 30;
    g.dk = 0.1;
    return g;
}

Grid line(double dx, int n, double dk) {
    Grid g = Grid::consumption_default();
    g.dh = dx;
    g.n_v = n;
    g.dk = dk;
    return g;
}

double gaussian_pdf(double x, double c, double s) {
    const double z = (x - c) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST(Grid, DefaultsAndValidation) {
    const Grid a = Grid::accumulation_default();
    EXPECT_DOUBLE_EQ(a.v_max(), 18.0);
    EXPECT_DOUBLE_EQ(a.s_max(), 5.0);
    EXPECT_EQ(a.s_lower, EdgeCondition::zero_flux);
    const Grid c = Grid::consumption_default();
    EXPECT_DOUBLE_EQ(c.v_max(), 12.0);
    EXPECT_EQ(c.s_nodes(), 1u);
    Grid bad = a;
    bad.n_s = 2;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_EQ(edge_condition_from_string(to_string(EdgeCondition::dirichlet)), EdgeCondition::dirichlet);
    EXPECT_THROW(edge_condition_from_string("open"), std::invalid_argument);
}

TEST(InitialDensity, UnitMassSymmetryAndMean) {
    Grid g = small_2d();
    g.s_lower = EdgeCondition::dirichlet;
    const auto f = initial_density(g, 2.0, 1.5, 0.1, 0.2);
    EXPECT_NEAR(f.mass(), 1.0, 1e-12);
    // v = 2 and s = 1.5 are mid-grid, so reflection about the centre maps nodes to nodes.
    for (int dj = 1; dj < 30; ++dj)
        for (int dl = 1; dl < 14; ++dl)
            EXPECT_NEAR(f.at(40 + dj, 15 + dl), f.at(40 - dj, 15 - dl), 1e-12);
    const auto m = marginals(f);
    double mean = 0.0;
    for (std::size_t j = 0; j < m.v.size(); ++j) mean += g.dh * j * m.v[j] * g.dh;
    EXPECT_NEAR(mean, 2.0, g.dh / 2);
}

TEST(InitialDensity, EdgesAreZeroAndCloseCentresThrow) {
    const Grid g = small_2d();
    const auto f = initial_density(g, 1.0, 1.0, 0.05, 0.05);
    const std::size_t nv = g.v_nodes(), ns = g.s_nodes();
    for (std::size_t l = 0; l < ns; ++l) {
        EXPECT_EQ(f.at(0, l), 0.0);
        EXPECT_EQ(f.at(nv - 1, l), 0.0);
    }
    for (std::size_t j = 0; j < nv; ++j) EXPECT_EQ(f.at(j, ns - 1), 0.0);
    EXPECT_THROW(initial_density(g, 0.2, 1.0, 0.05, 0.05), std::invalid_argument);
    EXPECT_THROW(initial_density(g, 3.8, 1.0, 0.05, 0.05), std::invalid_argument);
    EXPECT_THROW(initial_density(g, 1.0, 1.0, 0.0, 0.05), std::invalid_argument);
}

TEST(Marginals, ProductFormGivesOneDimensionalGaussians) {
    Grid g = small_2d();
    g.dh = 0.01;
    g.n_v = 400;
    g.dm = 0.01;
    g.n_s = 300;
    const auto f = initial_density(g, 2.0, 1.5, 0.1, 0.2);
    const auto m = marginals(f);
    double mv = 0.0, ms = 0.0;
    for (std::size_t j = 0; j < m.v.size(); ++j) {
        EXPECT_NEAR(m.v[j], gaussian_pdf(j * g.dh, 2.0, 0.1), 1e-8);
        mv += (j == 0 || j + 1 == m.v.size() ? 0.5 : 1.0) * g.dh * m.v[j];
    }
    for (std::size_t l = 0; l < m.s.size(); ++l) {
        EXPECT_NEAR(m.s[l], gaussian_pdf(l * g.dm, 1.5, 0.2), 1e-8);
        ms += (l == 0 || l + 1 == m.s.size() ? 0.5 : 1.0) * g.dm * m.s[l];
    }
    EXPECT_NEAR(mv, f.mass(), 1e-10);
    EXPECT_NEAR(ms, f.mass(), 1e-10);
}

TEST(Solve2d, ZeroCoefficientsLeaveDensityUnchanged) {
    const Grid g = small_2d();
    const auto ic = initial_density(g, 1.0, 1.0, 0.05, 0.05);
    const auto sol = solve_fpe_2d(FpeModel{}, ic, 2.0, {1.0, 2.0});
    ASSERT_EQ(sol.checkpoints.size(), 2u);
    for (std::size_t i = 0; i < ic.values.size(); ++i) EXPECT_NEAR(sol.at(2.0).values[i], ic.values[i], 1e-15);
    EXPECT_EQ(sol.diagnostics.steps, 20u);
}

TEST(Solve2d, MassNeverIncreasesAndEdgesStayZero) {
    const Grid g = small_2d();
    const auto sol = solve_fpe_2d(FpeModel::from(CalibratedConstants::published()),
                                  initial_density(g, 1.0, 1.0, 0.05, 0.05), 10.0, {10.0});
    EXPECT_TRUE(sol.diagnostics.mass_non_increasing);
    for (std::size_t k = 1; k < sol.step_mass.size(); ++k) EXPECT_LE(sol.step_mass[k], sol.step_mass[k - 1] + 1e-14);
    const auto& f = sol.at(10.0);
    for (std::size_t l = 0; l < g.s_nodes(); ++l) {
        EXPECT_EQ(f.at(0, l), 0.0);
        EXPECT_EQ(f.at(g.v_nodes() - 1, l), 0.0);
    }
    // A one-cell-wide start undershoots; the diagnostic has to say so.
    EXPECT_EQ(sol.diagnostics.undershoot_steps > 0, sol.diagnostics.min_value < -1e-10);
    const double lost = sol.diagnostics.initial_mass - sol.diagnostics.final_mass;
    EXPECT_NEAR(sol.diagnostics.leak.total(), lost, 1e-10);
}

TEST(Solve2d, VMarginalMatchesLognormalIndexLaw) {
    // Lambda = 0 and eta = 0 decouple v from s; v then follows the F-W index.
    const auto c = CalibratedConstants::published();
    FpeModel m = FpeModel::from(c);
    m.lambda_contrib = 0.0;
    m.eta = 0.0;
    m.xi = 0.0;
    const double t = 10.0;
    auto l1_error = [&](double dh, int n_v, double sigma_v) {
        Grid g = Grid::accumulation_default();
        g.dh = dh;
        g.n_v = n_v;
        g.n_s = 10;
        const auto sol = solve_fpe_2d(m, initial_density(g, 1.0, 1.0, sigma_v, 0.05), t, {t});
        const auto mv = marginals(sol.at(t)).v;
        // The start is a Gaussian, not a point, and backward Euler diffuses
        // the drift psi v by (psi v)^2 dk / 2: add both log variances, keep the mean.
        const double s2 = FwApproximation(c).log_law(1.0, t).s2 + std::log1p(sigma_v * sigma_v) + c.psi * c.psi * g.dk * t;
        const double mu = c.psi * t - 0.5 * s2;
        double l1 = 0.0;
        for (std::size_t j = 1; j < mv.size(); ++j) {
            const double v = j * g.dh;
            const double z = (std::log(v) - mu) / std::sqrt(s2);
            const double pdf = std::exp(-0.5 * z * z) / (v * std::sqrt(2.0 * std::numbers::pi * s2));
            l1 += std::abs(mv[j] / sol.at(t).mass() - pdf) * g.dh;
        }
        return l1;
    };
    EXPECT_LT(l1_error(0.025, 720, 0.1), 0.02);
    // A start two cells wide is under-resolved; halving dh must close most of the gap.
    const double coarse = l1_error(0.025, 720, 0.05);
    const double fine = l1_error(0.0125, 1440, 0.05);
    EXPECT_LT(fine, 0.5 * coarse);
    EXPECT_LT(fine, 0.03);
}

TEST(Solve2d, RejectsWrongGrid) {
    const auto ic = initial_density(line(0.01, 400, 0.01), 1.0, 0.0, 0.05, 0.0);
    EXPECT_THROW(solve_fpe_2d(FpeModel{}, ic, 1.0, {}), std::invalid_argument);
    const auto ic2 = initial_density(small_2d(), 1.0, 1.0, 0.05, 0.05);
    EXPECT_THROW(solve_fpe_2d(FpeModel{}, ic2, 1.0, {2.0}), std::invalid_argument);
}

TEST(Solve1d, NoConsumptionNoMotionKeepsMass) {
    const Grid g = line(0.01, 400, 0.05);
    const auto sol = solve_fpe_1d(FpeModel{}, std::numeric_limits<double>::infinity(), g, 20.0);
    for (double m : sol.step_mass) EXPECT_NEAR(m, 1.0, 1e-12);
    const auto s = survival_curve(sol);
    for (double v : s.s) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Solve1d, DeterministicDrain) {
    const Grid g = line(0.01, 400, 0.01);
    const auto sol = solve_fpe_1d(FpeModel{}, 7.5, g, 20.0);
    const auto s = survival_curve(sol);
    // The front x = 1 - t/7.5 carries the start's spread plus backward Euler's
    // numerical diffusion, a^2 dk / 2 per unit time.
    const double a = 1.0 / 7.5;
    auto front = [&](double t) {
        const double sd = std::sqrt(0.05 * 0.05 + a * a * g.dk * t);
        return 0.5 * std::erfc(-(1.0 - a * t) / (sd * std::sqrt(2.0)));
    };
    for (double t : {6.0, 7.0, 7.5, 8.0, 9.0}) EXPECT_NEAR(s(t), front(t), 0.03) << t;
    // Undershoot at the absorbing edge can return a little mass once it is all gone.
    for (std::size_t k = 1; k < s.s.size(); ++k) EXPECT_LE(s.s[k], s.s[k - 1] + 1e-4);
    const auto m = mfpt_from_survival(s);
    EXPECT_NEAR(m.mfpt, 7.5, g.dk);
    EXPECT_FALSE(m.horizon_warning);
}

TEST(Solve1d, AbsorptionTimesMatchMonteCarlo) {
    // Constant Phi (one constituent), so both sides integrate the same SDE;
    // Kolmogorov-Smirnov distance between the absorption-time laws.
    CalibratedConstants c = CalibratedConstants::published();
    c.n_constituents = 1;
    c.phi = 0.2;
    const double ratio = 12.5, horizon = 40.0;
    FpeModel m = FpeModel::from(c);
    const Grid g = line(0.01, 1200, 0.01);
    const auto s = survival_curve(solve_fpe_1d(m, ratio, g, horizon));

    EulerConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = horizon;
    cfg.n_paths = 100000;
    cfg.seed = 3;
    cfg.initial_sigma = 0.05;
    auto tau = simulate_consumption(c, ratio, cfg).first_passage;
    std::sort(tau.begin(), tau.end());
    double ks = 0.0;
    for (std::size_t k = 0; k < s.t.size(); k += 10) {
        const auto dead = std::upper_bound(tau.begin(), tau.end(), s.t[k]) - tau.begin();
        const double s_mc = 1.0 - static_cast<double>(dead) / static_cast<double>(tau.size());
        ks = std::max(ks, std::abs(s_mc - s.s[k]));
    }
    EXPECT_LT(ks, 0.02);
}

TEST(Exceedance, ThresholdsAndErrors) {
    const Grid g = small_2d();
    const auto f = initial_density(g, 1.0, 1.0, 0.05, 0.05);
    EXPECT_NEAR(exceedance_from_density(f, 0.0), f.mass(), 1e-12);
    EXPECT_NEAR(exceedance_from_density(f, 1.0), 0.5, 1e-3);
    EXPECT_LT(exceedance_from_density(f, 1.3), 1e-6);
    EXPECT_EQ(exceedance_from_density(f, g.v_max()), 0.0);
    EXPECT_THROW(exceedance_from_density(f, g.v_max() + 0.1), std::invalid_argument);
    EXPECT_THROW(exceedance_from_density(f, -1.0), std::invalid_argument);
}

TEST(SurvivalCurve, InterpolationAndBounds) {
    const SurvivalCurve s{{0.0, 1.0, 2.0}, {1.0, 0.5, 0.25}};
    EXPECT_DOUBLE_EQ(s(0.5), 0.75);
    EXPECT_DOUBLE_EQ(s(2.0), 0.25);
    EXPECT_THROW(s(2.5), std::invalid_argument);
}

TEST(Mfpt, ExponentialTailIsExactForExponentialSurvival) {
    SurvivalCurve s;
    for (int k = 0; k <= 3000; ++k) {
        s.t.push_back(0.01 * k);
        s.s.push_back(std::exp(-0.2 * 0.01 * k));
    }
    const auto m = mfpt_from_survival(s);
    EXPECT_NEAR(m.mfpt, 5.0, 1e-4);
    EXPECT_NEAR(m.tail, std::exp(-6.0) / 0.2, 1e-9);
    EXPECT_FALSE(m.horizon_warning);
    EXPECT_GT(m.tail_share, 0.0);
}

TEST(TruncationError, Published) {
    const Grid g = Grid::accumulation_default();
    EXPECT_EQ(boundary_truncation_error(g, g, 1.0, 1.0, 0.05, 0.05).value, 0.0);
    Grid big = g;
    big.n_v = 1440;
    big.n_s = 50;
    const auto e = boundary_truncation_error(g, big, 1.0, 1.0, 0.05, 0.05);
    EXPECT_LT(e.log10, -100.0);
    const auto wider = boundary_truncation_error(g, big, 1.0, 1.0, 0.1, 0.1);
    EXPECT_GT(wider.log10, e.log10);
    EXPECT_THROW(boundary_truncation_error(big, g, 1.0, 1.0, 0.05, 0.05), std::invalid_argument);
}
