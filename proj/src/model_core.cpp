#include "pension/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pension {

PiecewiseConstant::PiecewiseConstant(double value) : values_{value} {}

PiecewiseConstant::PiecewiseConstant(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (values_.size() != knots_.size() + 1)
        throw std::invalid_argument("piecewise-constant function needs one more value than knots");
    if (!std::is_sorted(knots_.begin(), knots_.end()) ||
        std::adjacent_find(knots_.begin(), knots_.end()) != knots_.end())
        throw std::invalid_argument("piecewise-constant knots must be strictly increasing");
}

double PiecewiseConstant::operator()(double t) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    return values_[static_cast<std::size_t>(it - knots_.begin())];
}

bool PiecewiseConstant::is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

bool PiecewiseConstant::finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

template <class G>
double PiecewiseConstant::integrate(double t0, double t1, G&& g) const {
    if (t1 < t0) return -integrate(t1, t0, g);
    double total = 0.0;
    double left = t0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t0);
    std::size_t piece = static_cast<std::size_t>(it - knots_.begin());
    while (left < t1) {
        const double right = (piece < knots_.size()) ? std::min(knots_[piece], t1) : t1;
        total += g(values_[piece]) * (right - left);
        left = right;
        ++piece;
    }
    return total;
}

double PiecewiseConstant::integral(double t0, double t1) const {
    return integrate(t0, t1, [](double v) { return v; });
}

double PiecewiseConstant::integral_of_square(double t0, double t1) const {
    return integrate(t0, t1, [](double v) { return v * v; });
}

CalibratedConstants CalibratedConstants::published() {
    CalibratedConstants c;
    c.q_monthly = 0.002742;
    c.r_monthly_vol = 0.1;
    c.psi = 0.0329;
    c.phi = 0.3464;
    c.xi = -0.0328;
    c.eta = std::sqrt(1.0 / 6.0);
    c.lambda_contrib = 0.1;
    c.n_constituents = 500;
    return c;
}

void CalibratedConstants::validate() const {
    if (!(phi > 0.0)) throw std::invalid_argument("phi must be positive");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!(lambda_contrib > 0.0 && lambda_contrib < 1.0))
        throw std::invalid_argument("contribution fraction must lie in (0, 1)");
    if (n_constituents < 1) throw std::invalid_argument("n_constituents must be >= 1");
    if (q_monthly != 0.0 || r_monthly_vol != 0.0) {
        // Published values are rounded to four decimals.
        const auto rates = rescale_monthly_to_annual(q_monthly, r_monthly_vol);
        if (std::abs(rates.psi - psi) > 5e-4 || std::abs(rates.phi - phi) > 5e-4)
            throw std::invalid_argument("monthly and annual constants disagree");
    }
}

double lognormal_moment(double x0, const LinearSdeCoefficients& coeffs, double t, double k) {
    if (!(x0 > 0.0)) throw std::invalid_argument("lognormal_moment: x0 must be positive");
    if (!(k > 0.0)) throw std::invalid_argument("lognormal_moment: k must be positive");
    if (!(t >= 0.0)) throw std::invalid_argument("lognormal_moment: t must be non-negative");
    if (!coeffs.homogeneous())
        throw std::invalid_argument("lognormal_moment: coefficients must be homogeneous");
    const double drift = coeffs.a1.integral(0.0, t);
    const double var = coeffs.b1.integral_of_square(0.0, t);
    if (!std::isfinite(drift) || !std::isfinite(var))
        throw std::domain_error("lognormal_moment: non-finite coefficient integral");
    return std::pow(x0, k) * std::exp(k * drift + 0.5 * (k * k - k) * var);
}

Moments lognormal_mean_variance(double x0, const LinearSdeCoefficients& coeffs, double t) {
    const double m1 = lognormal_moment(x0, coeffs, t, 1.0);
    const double var_int = coeffs.b1.integral_of_square(0.0, t);
    return {m1, m1 * m1 * std::expm1(var_int)};
}

std::vector<double> solve_linear_sde_path(const LinearSdeCoefficients& coeffs, double x0,
                                          std::span<const double> noise,
                                          std::span<const double> times) {
    if (times.empty()) throw std::invalid_argument("solve_linear_sde_path: empty time grid");
    if (noise.size() + 1 != times.size())
        throw std::invalid_argument("solve_linear_sde_path: need one noise increment per interval");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1]))
            throw std::invalid_argument("solve_linear_sde_path: times must be strictly increasing");
    if (!coeffs.finite()) throw std::domain_error("solve_linear_sde_path: non-finite coefficients");

    // Uses the normalised fundamental solution G = H / x0 (G(t0) = 1), so that
    // X = G [x0 + int (a2 - b1 b2)/G ds + int b2/G dW] also covers x0 = 0.
    std::vector<double> path(times.size());
    path[0] = x0;
    const bool homogeneous = coeffs.homogeneous();
    double log_g = 0.0;
    double g = 1.0;
    double bracket = x0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double left = times[k];
        const double right = times[k + 1];
        if (!homogeneous) {
            if (!(g > 0.0) || !std::isfinite(g))
                throw std::domain_error("solve_linear_sde_path: H(s) vanished, coefficients corrupted");
            bracket += (coeffs.a2(left) - coeffs.b1(left) * coeffs.b2(left)) / g * (right - left);
            bracket += coeffs.b2(left) / g * noise[k];
        }
        log_g += coeffs.a1.integral(left, right) - 0.5 * coeffs.b1.integral_of_square(left, right);
        log_g += coeffs.b1(left) * noise[k];
        g = std::exp(log_g);
        path[k + 1] = g * bracket;
    }
    return path;
}

AnnualRates rescale_monthly_to_annual(double q, double r_vol) {
    if (r_vol < 0.0) throw std::invalid_argument("monthly volatility must be non-negative");
    return {12.0 * q, std::sqrt(12.0) * r_vol};
}

}  // namespace pension
