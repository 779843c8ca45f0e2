#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "pension/fpe.hpp"

namespace pension {

std::string to_string(EdgeCondition e) {
    return e == EdgeCondition::dirichlet ? "dirichlet" : "zero_flux";
}

EdgeCondition edge_condition_from_string(const std::string& s) {
    if (s == "dirichlet") return EdgeCondition::dirichlet;
    if (s == "zero_flux") return EdgeCondition::zero_flux;
    throw std::invalid_argument("unknown edge condition '" + s + "' (dirichlet | zero_flux)");
}

Grid Grid::accumulation_default() { return Grid{}; }

Grid Grid::consumption_default() {
    Grid g;
    g.dims = 1;
    g.dh = 0.01;
    g.n_v = 1200;
    g.dm = 0.0;
    g.n_s = 0;
    g.dk = 0.01;
    return g;
}

void Grid::validate() const {
    if (dims != 1 && dims != 2) throw std::invalid_argument("grid dims must be 1 or 2");
    if (!(dh > 0.0) || !(dk > 0.0)) throw std::invalid_argument("grid spacings must be positive");
    if (n_v < 3) throw std::invalid_argument("grid needs at least 3 intervals per axis");
    if (dims == 2) {
        if (!(dm > 0.0)) throw std::invalid_argument("grid spacings must be positive");
        if (n_s < 3) throw std::invalid_argument("grid needs at least 3 intervals per axis");
    }
}

double DensityField::mass() const {
    const std::size_t nv = grid.v_nodes();
    const std::size_t ns = grid.s_nodes();
    double total = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
        const double wv = (j == 0 || j + 1 == nv) ? 0.5 * grid.dh : grid.dh;
        if (grid.dims == 1) {
            total += wv * values[j];
            continue;
        }
        double row = 0.0;
        for (std::size_t l = 0; l < ns; ++l) {
            const double ws = (l == 0 || l + 1 == ns) ? 0.5 * grid.dm : grid.dm;
            row += ws * values[j * ns + l];
        }
        total += wv * row;
    }
    return total;
}

DensityField initial_density(const Grid& grid, double v0, double s0, double sigma_v, double sigma_s) {
    grid.validate();
    if (!(sigma_v > 0.0) || (grid.dims == 2 && !(sigma_s > 0.0)))
        throw std::invalid_argument("initial density needs positive sigmas");
    auto check = [](double c, double sigma, double hi, bool low_absorbing, const char* axis) {
        const bool low_ok = !low_absorbing || c - 6.0 * sigma >= 0.0;
        if (!low_ok || c + 6.0 * sigma > hi || c < 0.0) {
            std::ostringstream msg;
            msg << "initial density centre " << axis << "=" << c << " lies within 6 sigma (" << 6.0 * sigma
                << ") of the grid edge";
            throw std::invalid_argument(msg.str());
        }
    };
    check(v0, sigma_v, grid.v_max(), true, grid.dims == 2 ? "v" : "x");
    if (grid.dims == 2) check(s0, sigma_s, grid.s_max(), grid.s_lower == EdgeCondition::dirichlet, "s");

    DensityField f;
    f.grid = grid;
    const std::size_t nv = grid.v_nodes();
    const std::size_t ns = grid.s_nodes();
    f.values.assign(nv * ns, 0.0);
    auto gauss = [](double x, double c, double s) {
        const double z = (x - c) / s;
        return std::exp(-0.5 * z * z);
    };
    const std::size_t l_lo = (grid.dims == 2 && grid.s_lower == EdgeCondition::zero_flux) ? 0 : 1;
    for (std::size_t j = 1; j + 1 < nv; ++j) {
        const double gv = gauss(static_cast<double>(j) * grid.dh, v0, sigma_v);
        if (grid.dims == 1) {
            f.values[j] = gv;
            continue;
        }
        for (std::size_t l = l_lo; l + 1 < ns; ++l)
            f.values[j * ns + l] = gv * gauss(static_cast<double>(l) * grid.dm, s0, sigma_s);
    }
    const double m = f.mass();
    for (double& v : f.values) v /= m;
    return f;
}

Marginals marginals(const DensityField& field) {
    const auto& g = field.grid;
    const std::size_t nv = g.v_nodes();
    const std::size_t ns = g.s_nodes();
    Marginals m;
    m.v.assign(nv, 0.0);
    m.s.assign(ns, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
        const double wv = (j == 0 || j + 1 == nv) ? 0.5 * g.dh : g.dh;
        for (std::size_t l = 0; l < ns; ++l) {
            const double p = std::max(0.0, field.values[j * ns + l]);
            const double ws = g.dims == 1 ? 1.0 : ((l == 0 || l + 1 == ns) ? 0.5 * g.dm : g.dm);
            m.v[j] += ws * p;
            m.s[l] += wv * p;
        }
    }
    return m;
}

double exceedance_from_density(const DensityField& field, double y) {
    const auto& g = field.grid;
    if (y < 0.0) throw std::invalid_argument("exceedance threshold must be non-negative");
    if (y > g.v_max())
        throw std::invalid_argument("exceedance threshold " + std::to_string(y) +
                                    " lies beyond the truncated domain (v_max = " + std::to_string(g.v_max()) +
                                    ")");
    const auto mv = marginals(field).v;
    const std::size_t nv = mv.size();
    const double pos = y / g.dh;
    auto j = static_cast<std::size_t>(std::floor(pos));
    if (j >= nv - 1) return 0.0;
    const double frac = pos - static_cast<double>(j);
    const double my = mv[j] + frac * (mv[j + 1] - mv[j]);
    double total = 0.5 * (my + mv[j + 1]) * (1.0 - frac) * g.dh;
    for (std::size_t k = j + 1; k + 1 < nv; ++k) total += 0.5 * (mv[k] + mv[k + 1]) * g.dh;
    return total;
}

namespace {

/// log Pr(Z > z) for a standard normal, accurate far into the tail.
double log_upper_tail(double z) {
    if (z < 25.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
    return -0.5 * z2 - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

/// log(e^a - e^b) for a >= b.
double log_diff(double a, double b) {
    if (b == -INFINITY) return a;
    return a + std::log1p(-std::exp(b - a));
}

double log_sum(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == -INFINITY) return a;
    return a + std::log1p(std::exp(b - a));
}

/// log Pr(lo < X < hi) for X ~ N(c, s^2) when the interval lies in the upper tail.
double log_upper_interval(double lo, double hi, double c, double s) {
    return log_diff(log_upper_tail((lo - c) / s), log_upper_tail((hi - c) / s));
}

double log_inside(double hi, double c, double s) {
    // Pr(0 < X < hi) is 1 minus two tails; both are negligible at the 6-sigma margin.
    const double out = std::exp(log_upper_tail(c / s)) + std::exp(log_upper_tail((hi - c) / s));
    return std::log1p(-out);
}

}  // namespace

TruncationError boundary_truncation_error(const Grid& grid, const Grid& extended, double v0, double s0,
                                          double sigma_v, double sigma_s) {
    if (extended.v_max() < grid.v_max() || (grid.dims == 2 && extended.s_max() < grid.s_max()))
        throw std::invalid_argument("extended grid must contain the base grid");
    const bool same_v = extended.v_max() == grid.v_max();
    const bool same_s = grid.dims == 1 || extended.s_max() == grid.s_max();
    if (same_v && same_s) return {0.0, -INFINITY};
    // M(a, b) = Pv(0, a) Ps(0, b); the difference splits into the part gained
    // along v and the part gained along s over the extended range.
    double log_total = -INFINITY;
    if (!same_v) {
        double term = log_upper_interval(grid.v_max(), extended.v_max(), v0, sigma_v);
        if (grid.dims == 2) term += log_inside(extended.s_max(), s0, sigma_s);
        log_total = log_sum(log_total, term);
    }
    if (!same_s) {
        const double term =
            log_upper_interval(grid.s_max(), extended.s_max(), s0, sigma_s) + log_inside(grid.v_max(), v0, sigma_v);
        log_total = log_sum(log_total, term);
    }
    return {std::exp(log_total), log_total / std::numbers::ln10};
}

const DensityField& FpeSolution::at(double t) const {
    for (const auto& c : checkpoints)
        if (std::abs(c.time - t) <= 0.5 * c.grid.dk) return c;
    throw std::invalid_argument("no checkpoint at t = " + std::to_string(t));
}

double SurvivalCurve::operator()(double time) const {
    if (t.empty()) throw std::invalid_argument("empty survival curve");
    if (time <= t.front()) return s.front();
    if (time > t.back() * (1.0 + 1e-12))
        throw std::invalid_argument("survival requested at t = " + std::to_string(time) + " beyond the solved horizon");
    auto it = std::lower_bound(t.begin(), t.end(), time);
    if (it == t.end()) return s.back();
    const auto k = static_cast<std::size_t>(it - t.begin());
    if (*it == time) return s[k];
    const double w = (time - t[k - 1]) / (t[k] - t[k - 1]);
    return s[k - 1] + w * (s[k] - s[k - 1]);
}

SurvivalCurve survival_curve(const FpeSolution& solution) {
    SurvivalCurve c{solution.step_times, solution.step_mass};
    const double m0 = c.s.empty() ? 1.0 : c.s.front();
    for (double& v : c.s) v = std::clamp(v / m0, 0.0, 1.0);
    return c;
}

MfptResult mfpt_from_survival(const SurvivalCurve& curve) {
    if (curve.t.size() < 2) throw std::invalid_argument("survival curve needs at least two samples");
    MfptResult r;
    for (std::size_t k = 0; k + 1 < curve.t.size(); ++k)
        r.trapezoid += 0.5 * (curve.s[k] + curve.s[k + 1]) * (curve.t[k + 1] - curve.t[k]);
    const double horizon = curve.t.back();
    const double s_end = curve.s.back();
    r.horizon_warning = s_end > 0.05;
    if (s_end > 0.0) {
        const double t_ref = std::max(curve.t.front(), horizon - 10.0);
        const double s_ref = curve(t_ref);
        const double span = horizon - t_ref;
        if (span > 0.0 && s_ref > s_end) {
            const double rate = std::log(s_ref / s_end) / span;
            r.tail = s_end / rate;
        } else {
            r.note = "survival flat over the last decade; tail omitted";
        }
    }
    r.mfpt = r.trapezoid + r.tail;
    r.tail_share = r.mfpt > 0.0 ? r.tail / r.mfpt : 0.0;
    if (r.horizon_warning) {
        std::ostringstream msg;
        msg << "S(" << horizon << ") = " << s_end << " > 0.05: horizon too short for the tail estimate";
        r.note = r.note.empty() ? msg.str() : r.note + "; " + msg.str();
    }
    return r;
}

}  // namespace pension
