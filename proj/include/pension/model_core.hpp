#pragma once

// Closed-form machinery for scalar linear Ito SDEs
//
//   dX = (a1(t) X + a2(t)) dt + (b1(t) X + b2(t)) dW,
//
// used as analytic ground truth by the estimation, simulation and PDE layers.

#include <span>
#include <vector>

namespace pension {

/// A function of time that is constant between knots. Value `values[0]`
/// applies before `knots[0]`, `values[k]` on [knots[k-1], knots[k]), and the
/// last value from the last knot onwards. Integrals are exact.
class PiecewiseConstant {
public:
    PiecewiseConstant(double value = 0.0);  // NOLINT(google-explicit-constructor)
    PiecewiseConstant(std::vector<double> knots, std::vector<double> values);

    /// Samples f on a grid: the piece on [grid[k], grid[k+1]) takes f(grid[k]).
    template <class F>
    static PiecewiseConstant sampled(std::span<const double> grid, F&& f) {
        std::vector<double> knots(grid.begin() + 1, grid.end() - 1);
        std::vector<double> values;
        values.reserve(grid.size() - 1);
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) values.push_back(f(grid[k]));
        return PiecewiseConstant(std::move(knots), std::move(values));
    }

    double operator()(double t) const;
    double integral(double t0, double t1) const;
    double integral_of_square(double t0, double t1) const;

    bool is_constant() const { return values_.size() == 1; }
    bool is_zero() const;
    bool finite() const;

    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& values() const { return values_; }

private:
    template <class G>
    double integrate(double t0, double t1, G&& g) const;

    std::vector<double> knots_;
    std::vector<double> values_;
};

struct LinearSdeCoefficients {
    PiecewiseConstant a1;  // 1/year
    PiecewiseConstant a2;  // value/year
    PiecewiseConstant b1;  // 1/sqrt(year)
    PiecewiseConstant b2;  // value/sqrt(year)

    static LinearSdeCoefficients geometric(PiecewiseConstant drift, PiecewiseConstant vol) {
        return {std::move(drift), 0.0, std::move(vol), 0.0};
    }

    bool homogeneous() const { return a2.is_zero() && b2.is_zero(); }
    bool finite() const { return a1.finite() && a2.finite() && b1.finite() && b2.finite(); }
};

/// The constants every downstream model consumes.
struct CalibratedConstants {
    double psi = 0.0;             // index drift, 1/year
    double phi = 0.0;             // constituent volatility, 1/sqrt(year)
    double xi = 0.0;              // salary drift, 1/year
    double eta = 0.0;             // salary volatility, 1/sqrt(year)
    double lambda_contrib = 0.1;  // contribution fraction of salary
    double q_monthly = 0.0;       // 1/month
    double r_monthly_vol = 0.0;   // 1/sqrt(month)
    int n_constituents = 500;

    /// psi = 0.0329, phi = 0.3464, xi = -0.0328, eta = sqrt(1/6), 10% contributions.
    static CalibratedConstants published();

    /// Throws std::invalid_argument when phi, eta or the contribution fraction
    /// are out of range, or when the monthly and annual scales disagree.
    void validate() const;
};

/// E[x(t)^k] for the homogeneous equation dx = a1 x dt + b1 x dW, k > 0 real.
double lognormal_moment(double x0, const LinearSdeCoefficients& coeffs, double t, double k);

/// Mean and variance of the homogeneous solution at t.
struct Moments {
    double mean;
    double variance;
};
Moments lognormal_mean_variance(double x0, const LinearSdeCoefficients& coeffs, double t);

/// Evaluates the closed-form solution X(t) = H(t) [1 + int (a2 - b1 b2)/H ds
/// + int b2/H dW] on `times`, with left-point (Ito) quadrature of both
/// correction integrals. `noise[k]` is the Brownian increment over
/// [times[k], times[k+1]]. For homogeneous coefficients no quadrature is
/// involved beyond the stochastic integral of b1.
std::vector<double> solve_linear_sde_path(const LinearSdeCoefficients& coeffs, double x0,
                                          std::span<const double> noise,
                                          std::span<const double> times);

struct AnnualRates {
    double psi;
    double phi;
};

/// Monthly drift/volatility to annual: psi = 12 q, phi = sqrt(12) r_vol.
AnnualRates rescale_monthly_to_annual(double q, double r_vol);

}  // namespace pension
