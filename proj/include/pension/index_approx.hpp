#pragma once

// Index model: power-law constituent weights (diagnostic only) and the
// two-moment lognormal (Fenton-Wilkinson) replacement Z_n of the
// equal-weight average X_n of n independent geometric Brownian motions.

#include <vector>

#include "pension/model_core.hpp"

namespace pension {

/// lambda_i = i^alpha / sum_j j^alpha, i = 1..n.
struct WeightScheme {
    int n = 1;
    double alpha = 0.0;

    std::vector<double> weights() const;
};

struct WeightReport {
    double sum_squares;   // exact sum of lambda_i^2
    double asymptotic;    // (alpha + 1)^2 / ((2 alpha + 1) n)
    double ratio;         // sum_squares / asymptotic
    double weight_total;  // sum of lambda_i, should be 1
};

WeightReport weight_sum_squares(const WeightScheme& scheme);

class FwApproximation {
public:
    FwApproximation(double psi, double phi, int n);
    explicit FwApproximation(const CalibratedConstants& c)
        : FwApproximation(c.psi, c.phi, c.n_constituents) {}

    double psi() const { return psi_; }
    double phi() const { return phi_; }
    int n() const { return n_; }

    /// Phi^2(t) = phi^2 e^{phi^2 t} / (e^{phi^2 t} + n - 1).
    double phi_squared(double t) const;

    /// int_0^t Phi^2 = log(e^{phi^2 t} + n - 1) - log n.
    double integrated_phi_squared(double t) const;

    /// Law of Z_n(t) (equal to the first two moments of X_n(t)).
    Moments zn_law(double x0, double t) const;

    /// Exact mean/variance of X_n(t) from the constituent GBM moments.
    Moments xn_law(double x0, double t) const;

    /// Parameters of log Z_n(t) ~ N(mu, s2).
    struct LogLaw {
        double mu;
        double s2;
    };
    LogLaw log_law(double x0, double t) const;

private:
    double psi_;
    double phi_;
    int n_;
};

}  // namespace pension
