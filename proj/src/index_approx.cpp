#include "pension/index_approx.hpp"

#include <cmath>
#include <stdexcept>

namespace pension {

std::vector<double> WeightScheme::weights() const {
    if (n < 1) throw std::invalid_argument("weight scheme needs n >= 1");
    if (alpha < 0.0) throw std::invalid_argument("weight scheme needs alpha >= 0");
    // Scale by n^alpha to keep i^alpha representable for large alpha.
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 1; i <= n; ++i) {
        w[static_cast<std::size_t>(i - 1)] = std::pow(static_cast<double>(i) / n, alpha);
        total += w[static_cast<std::size_t>(i - 1)];
    }
    for (double& x : w) x /= total;
    return w;
}

WeightReport weight_sum_squares(const WeightScheme& scheme) {
    const auto w = scheme.weights();
    double sq = 0.0;
    double sum = 0.0;
    for (double x : w) {
        sq += x * x;
        sum += x;
    }
    const double a = scheme.alpha;
    const double asym = (a + 1.0) * (a + 1.0) / ((2.0 * a + 1.0) * scheme.n);
    return {sq, asym, sq / asym, sum};
}

FwApproximation::FwApproximation(double psi, double phi, int n) : psi_(psi), phi_(phi), n_(n) {
    if (n < 1) throw std::invalid_argument("F-W approximation needs n >= 1");
    if (phi < 0.0) throw std::invalid_argument("F-W approximation needs phi >= 0");
}

double FwApproximation::phi_squared(double t) const {
    if (t < 0.0) throw std::invalid_argument("phi_squared: t must be non-negative");
    const double p2 = phi_ * phi_;
    // phi^2 / (1 + (n - 1) e^{-phi^2 t}) avoids overflow for large t.
    return p2 / (1.0 + (n_ - 1) * std::exp(-p2 * t));
}

double FwApproximation::integrated_phi_squared(double t) const {
    const double p2 = phi_ * phi_;
    return std::log((std::exp(p2 * t) + n_ - 1) / n_);
}

Moments FwApproximation::zn_law(double x0, double t) const {
    if (!(x0 > 0.0)) throw std::invalid_argument("zn_law: x0 must be positive");
    if (t < 0.0) throw std::invalid_argument("zn_law: t must be non-negative");
    const double mean = x0 * std::exp(psi_ * t);
    // exp(int Phi^2) - 1 = (e^{phi^2 t} - 1) / n
    const double var = mean * mean * std::expm1(integrated_phi_squared(t));
    return {mean, var};
}

Moments FwApproximation::xn_law(double x0, double t) const {
    const double mean = x0 * std::exp(psi_ * t);
    const double var = mean * mean * std::expm1(phi_ * phi_ * t) / n_;
    return {mean, var};
}

FwApproximation::LogLaw FwApproximation::log_law(double x0, double t) const {
    const double s2 = integrated_phi_squared(t);
    return {std::log(x0) + psi_ * t - 0.5 * s2, s2};
}

}  // namespace pension
