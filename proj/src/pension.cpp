#include "pension/pension.hpp"

#include <cmath>
#include <stdexcept>

namespace pension {

namespace {

/// Bisection for an increasing function on [lo, hi].
template <class F>
double bisect_increasing(F&& f, double lo, double hi, const char* what) {
    double flo = f(lo), fhi = f(hi);
    if (flo > 0.0 || fhi < 0.0)
        throw std::domain_error(std::string(what) + ": no root in the bracket [-0.99, 1]");
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double implied_annual_return(double ratio, int years, double lambda_contrib) {
    if (!(ratio > 0.0)) throw std::invalid_argument("implied return needs a positive ratio");
    if (years < 1) throw std::invalid_argument("implied return needs at least one year");
    if (!(lambda_contrib > 0.0)) throw std::invalid_argument("implied return needs a positive contribution");
    auto f = [&](double r) {
        double sum = 0.0, g = 1.0;
        for (int i = 1; i <= years; ++i) {
            g *= 1.0 + r;
            sum += g;
        }
        return lambda_contrib * sum - ratio;
    };
    return bisect_increasing(f, -0.99, 1.0, "implied annual return");
}

double retirement_irr(double consumption_ratio, int years) {
    if (!(consumption_ratio > 0.0)) throw std::invalid_argument("IRR needs a positive consumption ratio");
    if (years < 1) throw std::invalid_argument("IRR needs at least one year");
    // Present value decreases in r, so bisect on its negation.
    auto f = [&](double r) {
        double sum = 0.0, g = 1.0;
        for (int i = 1; i <= years; ++i) {
            g /= 1.0 + r;
            sum += g;
        }
        return consumption_ratio - sum;
    };
    return bisect_increasing(f, -0.99, 1.0, "retirement IRR");
}

PearsonResult shifted_pearson(const std::vector<double>& a, const std::vector<double>& b, int shift) {
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long j = static_cast<long>(i) + shift;
        if (j >= 0 && j < static_cast<long>(b.size())) pairs.emplace_back(a[i], b[static_cast<std::size_t>(j)]);
    }
    if (pairs.size() < 3) throw std::invalid_argument("shifted series overlap in fewer than 3 points");
    const double n = static_cast<double>(pairs.size());
    double ma = 0.0, mb = 0.0;
    for (auto [x, y] : pairs) {
        ma += x;
        mb += y;
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (auto [x, y] : pairs) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if (saa == 0.0 || sbb == 0.0) throw std::domain_error("Pearson correlation of a constant series");
    return {sab / std::sqrt(saa * sbb), pairs.size()};
}

double prob_pension_outlives(const SurvivalCurve& survival, const DeathDistribution& deaths) {
    double p = 0.0;
    for (std::size_t i = 0; i < deaths.mass.size(); ++i) p += survival(deaths.offsets[i]) * deaths.mass[i];
    return p;
}

}  // namespace pension
