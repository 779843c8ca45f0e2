#include "pension/estimation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pension/rng.hpp"

namespace pension {

std::size_t Panel::observations() const {
    std::size_t n = 0;
    for (const auto& tr : trajectories) n += tr.values.size();
    return n;
}

void Panel::validate() const {
    if (trajectories.empty()) throw std::invalid_argument("panel is empty");
    for (const auto& tr : trajectories) {
        if (tr.values.empty()) throw std::invalid_argument("trajectory '" + tr.id + "' has no values");
        if (std::abs(tr.values[0] - 1.0) > 1e-12)
            throw std::invalid_argument("trajectory '" + tr.id + "' does not start at 1");
        for (double v : tr.values)
            if (!(v > 0.0) || !std::isfinite(v))
                throw std::invalid_argument("trajectory '" + tr.id + "' has a non-positive value");
    }
}

Panel cpi_adjust(const Panel& panel, const CpiSeries& cpi, long base_period) {
    const double base = cpi.at(base_period);
    Panel out = panel;
    for (auto& tr : out.trajectories) {
        for (std::size_t k = 0; k < tr.values.size(); ++k)
            tr.values[k] *= base / cpi.at(tr.t0 + static_cast<long>(k));
        const double first = tr.values.front();
        for (double& v : tr.values) v /= first;
    }
    return out;
}

CoefficientSurface build_surfaces(const Panel& panel, double bin_width) {
    if (panel.trajectories.empty()) throw std::invalid_argument("build_surfaces: panel is empty");
    if (!(bin_width > 0.0)) throw std::invalid_argument("build_surfaces: bin width must be positive");

    struct Acc {
        double x = 0.0, a = 0.0, b2 = 0.0;
        std::size_t n = 0;
    };
    std::map<std::pair<long, long>, Acc> acc;
    for (const auto& tr : panel.trajectories) {
        for (std::size_t k = 0; k + 1 < tr.values.size(); ++k) {
            const double x = tr.values[k];
            const double d = tr.values[k + 1] - x;
            const long bin = static_cast<long>(std::floor(x / bin_width));
            Acc& cell = acc[{tr.t0 + static_cast<long>(k), bin}];
            cell.x += x;
            cell.a += d;
            cell.b2 += d * d;
            ++cell.n;
        }
    }
    CoefficientSurface s;
    s.bin_width = bin_width;
    s.period = panel.period;
    s.bins.reserve(acc.size());
    for (const auto& [key, c] : acc) {
        const double n = static_cast<double>(c.n);
        s.bins.push_back({key.first, (static_cast<double>(key.second) + 0.5) * bin_width, c.x / n, c.a / n,
                          c.b2 / n, c.n});
    }
    return s;
}

namespace {

/// Weighted polynomial fit of given degree; returns coefficients highest power first.
Eigen::VectorXd weighted_polyfit(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& w, int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    double scale = 0.0;
    for (double xi : x) scale = std::max(scale, std::abs(xi));
    if (scale == 0.0) scale = 1.0;
    Eigen::MatrixXd A(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double sw = std::sqrt(w[static_cast<std::size_t>(i)]);
        const double u = x[static_cast<std::size_t>(i)] / scale;
        double p = 1.0;
        for (int d = degree; d >= 0; --d) {
            A(i, d) = sw * p;
            p *= u;
        }
        b(i) = sw * y[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    // Undo the scaling: column d carries u^(degree - d).
    for (int d = 0; d <= degree; ++d) c(d) /= std::pow(scale, degree - d);
    return c;
}

}  // namespace

CoefficientSurface fit_slices(CoefficientSurface surface) {
    surface.slices.clear();
    auto it = surface.bins.begin();
    while (it != surface.bins.end()) {
        auto end = std::find_if(it, surface.bins.end(), [&](const SurfaceBin& b) { return b.tau != it->tau; });
        std::vector<double> x, a, b2, w;
        for (auto b = it; b != end; ++b) {
            x.push_back(b->x_mean);
            a.push_back(b->a);
            b2.push_back(b->b2);
            w.push_back(static_cast<double>(b->count));
        }
        SliceFit f;
        f.tau = it->tau;
        const bool motionless = std::all_of(it, end, [](const SurfaceBin& b) { return b.a == 0.0 && b.b2 == 0.0; });
        if (motionless) {
            // Zero coefficients fit exactly however few bins there are.
            f.drift_fitted = f.vol_fitted = true;
        } else if (x.size() >= 2) {
            const auto c = weighted_polyfit(x, a, w, 1);
            f.q = c(0);
            f.q2 = c(1);
            f.drift_fitted = true;
        }
        if (!motionless && x.size() >= 3) {
            const auto c = weighted_polyfit(x, b2, w, 2);
            f.r = c(0);
            f.r2 = c(1);
            f.r3 = c(2);
            f.vol_fitted = true;
        }
        surface.slices.push_back(f);
        it = end;
    }
    return surface;
}

std::vector<double> moving_average(const std::vector<double>& series, double window_fraction) {
    if (series.empty()) throw std::invalid_argument("moving_average: empty series");
    if (!(window_fraction > 0.0 && window_fraction <= 1.0))
        throw std::invalid_argument("moving_average: window fraction must lie in (0, 1]");
    const auto n = series.size();
    const auto window = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n) - 1e-9)));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
        double sum = 0.0;
        for (std::size_t j = lo; j <= i; ++j) sum += series[j];
        out[i] = sum / static_cast<double>(i + 1 - lo);
    }
    return out;
}

namespace {

double realised_vol(const Trajectory& tr) {
    if (tr.values.size() < 3) return 0.0;
    std::vector<double> r;
    for (std::size_t k = 0; k + 1 < tr.values.size(); ++k) r.push_back(std::log(tr.values[k + 1] / tr.values[k]));
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(r.size() - 1));
}

std::vector<Trajectory> drop_top(std::vector<Trajectory> trs, double fraction, double (*metric)(const Trajectory&)) {
    const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(trs.size()) - 1e-9));
    if (k == 0) return trs;
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < trs.size(); ++i) order.emplace_back(metric(trs[i]), i);
    std::sort(order.begin(), order.end(), [&](const auto& l, const auto& r) {
        if (l.first != r.first) return l.first > r.first;
        return trs[l.second].id < trs[r.second].id;
    });
    std::vector<bool> drop(trs.size(), false);
    for (std::size_t i = 0; i < k; ++i) drop[order[i].second] = true;
    std::vector<Trajectory> kept;
    for (std::size_t i = 0; i < trs.size(); ++i)
        if (!drop[i]) kept.push_back(std::move(trs[i]));
    return kept;
}

}  // namespace

Panel filter_outliers(const Panel& panel, double vol_drop_fraction, double growth_drop_fraction) {
    auto in_range = [](double f) { return f >= 0.0 && f < 0.5; };
    if (!in_range(vol_drop_fraction) || !in_range(growth_drop_fraction))
        throw std::invalid_argument("filter_outliers: fractions must lie in [0, 0.5)");
    Panel out;
    out.period = panel.period;
    out.trajectories = drop_top(panel.trajectories, vol_drop_fraction, realised_vol);
    out.trajectories = drop_top(std::move(out.trajectories), growth_drop_fraction,
                                [](const Trajectory& t) { return t.values.back(); });
    if (out.trajectories.empty()) throw std::invalid_argument("filter_outliers: every trajectory was dropped");
    return out;
}

SmoothedSlices smooth_slices(const CoefficientSurface& surface, double window_fraction) {
    SmoothedSlices s;
    for (const auto& f : surface.slices) {
        if (f.drift_fitted) {
            s.drift_taus.push_back(f.tau);
            s.q.push_back(f.q);
        }
        if (f.vol_fitted) {
            s.vol_taus.push_back(f.tau);
            s.r.push_back(f.r);
        }
    }
    if (s.q.empty() || s.r.empty())
        throw std::invalid_argument("surface has no fitted slices; populate more growth bins");
    s.q_smooth = moving_average(s.q, window_fraction);
    s.r_smooth = moving_average(s.r, window_fraction);
    return s;
}

namespace {

std::pair<double, double> terminal_drift_vol(const CoefficientSurface& surface, double window_fraction,
                                             const char* side) {
    const auto s = smooth_slices(surface, window_fraction);
    double r = s.r_smooth.back();
    if (r < 0.0) {
        // Round-off on zero-noise panels may leave a tiny negative slope.
        if (r > -1e-14) r = 0.0;
        else throw std::domain_error(std::string(side) + " squared-volatility slope is negative");
    }
    return {s.q_smooth.back(), std::sqrt(r)};
}

}  // namespace

CalibratedConstants extract_constants(const CoefficientSurface& stock_surface,
                                      const CoefficientSurface& salary_surface, double window_fraction) {
    CalibratedConstants c;
    const auto [q, r_vol] = terminal_drift_vol(stock_surface, window_fraction, "stock");
    if (stock_surface.period == Period::month) {
        c.q_monthly = q;
        c.r_monthly_vol = r_vol;
        const auto annual = rescale_monthly_to_annual(q, r_vol);
        c.psi = annual.psi;
        c.phi = annual.phi;
    } else {
        c.psi = q;
        c.phi = r_vol;
        c.q_monthly = q / 12.0;
        c.r_monthly_vol = r_vol / std::sqrt(12.0);
    }
    auto [xi, eta] = terminal_drift_vol(salary_surface, window_fraction, "salary");
    if (salary_surface.period == Period::month) {
        const auto annual = rescale_monthly_to_annual(xi, eta);
        xi = annual.psi;
        eta = annual.phi;
    }
    c.xi = xi;
    c.eta = eta;
    return c;
}

Panel synthesize_gbm_panel(const SyntheticConfig& config, Period period) {
    if (config.n_paths < 1) throw std::invalid_argument("synthetic panel needs n_paths >= 1");
    if (config.horizon < 1) throw std::invalid_argument("synthetic panel needs horizon >= 1");
    if (config.vol < 0.0) throw std::invalid_argument("synthetic panel needs vol >= 0");
    Panel p;
    p.period = period;
    const int width = static_cast<int>(std::to_string(config.n_paths - 1).size());
    const double mu = config.drift - 0.5 * config.vol * config.vol;
    for (std::size_t i = 0; i < config.n_paths; ++i) {
        PathRng rng(config.seed, i);
        std::string id = std::to_string(i);
        id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
        Trajectory tr{std::move(id), 0, {}};
        tr.values.reserve(static_cast<std::size_t>(config.horizon) + 1);
        double x = 1.0;
        tr.values.push_back(x);
        for (long k = 0; k < config.horizon; ++k) {
            x *= std::exp(mu + config.vol * rng.normal());
            tr.values.push_back(x);
        }
        p.trajectories.push_back(std::move(tr));
    }
    return p;
}

}  // namespace pension
