#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pension/fpe.hpp"
#include "pension/index_approx.hpp"
#include "pension/kernels.hpp"

namespace pension {

FpeModel FpeModel::from(const CalibratedConstants& c) {
    return {c.psi, c.phi, c.n_constituents, c.xi, c.eta, c.lambda_contrib, 0.0};
}

namespace {

constexpr double kUndershoot = -1e-10;

std::size_t step_count(double horizon, double dk) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("FPE horizon must be non-negative");
    return static_cast<std::size_t>(std::ceil(horizon / dk - 1e-9));
}

std::vector<std::size_t> checkpoint_steps(const std::vector<double>& times, double dk, std::size_t steps) {
    std::vector<std::size_t> out;
    for (double t : times) {
        const auto k = static_cast<std::size_t>(std::llround(t / dk));
        if (t < 0.0 || k > steps) throw std::invalid_argument("checkpoint " + std::to_string(t) + " outside the horizon");
        out.push_back(k);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

[[noreturn]] void solve_failure(const Grid& g, double t, const char* sweep) {
    std::ostringstream msg;
    msg << "tridiagonal solve failed in the " << sweep << " sweep at t=" << t << " (dims=" << g.dims
        << ", dh=" << g.dh << ", n_v=" << g.n_v << ", dm=" << g.dm << ", n_s=" << g.n_s << ", dk=" << g.dk << ")";
    throw std::runtime_error(msg.str());
}

/// Three-point operator coefficients of one axis for node j:
/// L p_j = cm p_j-1 + c0 p_j + cp p_j+1.
struct Stencil {
    double cm, c0, cp;
};

inline Stencil flux_stencil(double a_lo, double a_hi, double d_m, double d_0, double d_p, double h) {
    const double inv2h = 0.5 / h;
    const double inv2h2 = 0.5 / (h * h);
    return {a_lo * inv2h + d_m * inv2h2, -(a_hi - a_lo) * inv2h - 2.0 * d_0 * inv2h2, -a_hi * inv2h + d_p * inv2h2};
}

void track_values(const std::vector<double>& v, FpeDiagnostics& d) {
    double mn = 0.0;
    for (double x : v) mn = std::min(mn, x);
    d.min_value = std::min(d.min_value, mn);
    if (mn < kUndershoot) ++d.undershoot_steps;
}

void track_mass(FpeSolution& sol, double t, double mass) {
    auto& d = sol.diagnostics;
    const double prev = sol.step_mass.back();
    // Allow round-off at the level of the summation error.
    if (mass > prev + 1e-13 * std::max(1.0, prev)) {
        d.mass_non_increasing = false;
    }
    d.max_mass_increase = std::max(d.max_mass_increase, mass - prev);
    sol.step_times.push_back(t);
    sol.step_mass.push_back(mass);
}

}  // namespace

FpeSolution solve_fpe_2d(const FpeModel& model, const DensityField& ic, double horizon,
                         const std::vector<double>& checkpoints) {
    const Grid& g = ic.grid;
    g.validate();
    if (g.dims != 2) throw std::invalid_argument("solve_fpe_2d needs a 2-D grid");
    const auto& kern = simd::active_kernels();
    const FwApproximation fw(model.psi, model.phi, model.n_constituents);
    const std::size_t steps = step_count(horizon, g.dk);
    const auto ck = checkpoint_steps(checkpoints, g.dk, steps);

    const std::size_t nv = g.v_nodes();
    const std::size_t ns = g.s_nodes();
    const std::size_t rows_v = nv - 2;
    const bool wall = g.s_lower == EdgeCondition::zero_flux;
    const std::size_t l_lo = wall ? 0 : 1;
    const std::size_t rows_s = ns - 1 - l_lo;
    const double h = g.dh, m = g.dm, dk = g.dk;

    auto s_at = [&](std::size_t l) { return static_cast<double>(l) * m; };
    auto v_at = [&](std::size_t j) { return static_cast<double>(j) * h; };
    auto ws = [&](std::size_t l) { return (l == 0 || l + 1 == ns) ? 0.5 * m : m; };

    FpeSolution sol;
    sol.diagnostics.isa = std::string(simd::isa_name(kern.isa));
    std::vector<double> p = ic.values;
    if (!wall)
        for (std::size_t j = 0; j < nv; ++j) p[j * ns] = 0.0;
    for (std::size_t l = 0; l < ns; ++l) {
        p[l] = 0.0;
        p[(nv - 1) * ns + l] = 0.0;
    }
    for (std::size_t j = 0; j < nv; ++j) p[j * ns + ns - 1] = 0.0;

    auto field_at = [&](double t) {
        DensityField f;
        f.grid = g;
        f.time = t;
        f.values = p;
        return f;
    };
    auto mass = [&] { return field_at(0.0).mass(); };

    sol.diagnostics.initial_mass = mass();
    sol.step_times.push_back(0.0);
    sol.step_mass.push_back(sol.diagnostics.initial_mass);
    std::size_t next_ck = 0;
    if (next_ck < ck.size() && ck[next_ck] == 0) {
        sol.checkpoints.push_back(field_at(0.0));
        ++next_ck;
    }

    // The s operator does not depend on v or t: one shared matrix.
    std::vector<double> s_sub(rows_s), s_diag(rows_s), s_sup(rows_s);
    {
        const double eta2 = model.eta * model.eta;
        auto b = [&](double s) { return model.xi * s; };
        auto d = [&](double s) { return eta2 * s * s; };
        for (std::size_t r = 0; r < rows_s; ++r) {
            const std::size_t l = r + l_lo;
            const double s = s_at(l);
            Stencil st;
            if (l == 0) {
                // Half cell against the wall: (m/2) p0' = -F_1/2.
                const double a_hi = b(0.5 * m);
                st = {0.0, -a_hi / m - d(0.0) / (m * m), -a_hi / m + d(m) / (m * m)};
            } else {
                st = flux_stencil(b(s - 0.5 * m), b(s + 0.5 * m), d(s - m), d(s), d(s + m), m);
            }
            s_sub[r] = -dk * st.cm;
            s_diag[r] = 1.0 - dk * st.c0;
            s_sup[r] = -dk * st.cp;
        }
        for (std::size_t l = 1; l + 1 < ns; ++l) {
            const double s = s_at(l);
            if (d(s) > 0.0)
                sol.diagnostics.max_peclet_s =
                    std::max(sol.diagnostics.max_peclet_s, std::abs(b(s)) * m / (0.5 * d(s)));
        }
    }

    std::vector<double> v_sub(rows_v * ns), v_diag(rows_v * ns), v_sup(rows_v * ns);
    std::vector<double> scratch(std::max(rows_v * ns, rows_s));
    std::vector<double> tr(ns * nv);

    for (std::size_t n = 1; n <= steps; ++n) {
        const double t = static_cast<double>(n) * dk;
        const double phi2 = model.phi > 0.0 ? fw.phi_squared(t + model.phi_clock_offset) : 0.0;
        auto a = [&](double v, double s) { return model.psi * v + model.lambda_contrib * s; };
        auto dv = [&](double v) { return phi2 * v * v; };

        // v sweep: rows j = 1..nv-2, one lane per s node.
        for (std::size_t r = 0; r < rows_v; ++r) {
            const std::size_t j = r + 1;
            const double v = v_at(j);
            for (std::size_t l = 0; l < ns; ++l) {
                const double s = s_at(l);
                const Stencil st = flux_stencil(a(v - 0.5 * h, s), a(v + 0.5 * h, s), dv(v - h), dv(v), dv(v + h), h);
                const std::size_t o = r * ns + l;
                v_sub[o] = -dk * st.cm;
                v_diag[o] = 1.0 - dk * st.c0;
                v_sup[o] = -dk * st.cp;
                if (n == 1 && dv(v) > 0.0)
                    sol.diagnostics.max_peclet_v =
                        std::max(sol.diagnostics.max_peclet_v, std::abs(a(v, s)) * h / (0.5 * dv(v)));
            }
        }
        kern.tridiag_batched(rows_v, ns, v_sub.data(), v_diag.data(), v_sup.data(), p.data() + ns, scratch.data());
        for (std::size_t l = 0; l < ns; ++l) {
            const double s = s_at(l);
            const double p1 = p[ns + l];
            const double pn = p[(nv - 2) * ns + l];
            const double f_lo = 0.5 * a(0.5 * h, s) * p1 - 0.5 * dv(h) * p1 / h;
            const double f_hi = 0.5 * a(v_at(nv - 1) - 0.5 * h, s) * pn + 0.5 * dv(v_at(nv - 2)) * pn / h;
            sol.diagnostics.leak.v_low -= f_lo * dk * ws(l);
            sol.diagnostics.leak.v_high += f_hi * dk * ws(l);
        }

        // s sweep on the transposed field: rows l, lanes j.
        for (std::size_t j = 0; j < nv; ++j)
            for (std::size_t l = 0; l < ns; ++l) tr[l * nv + j] = p[j * ns + l];
        kern.tridiag_shared(rows_s, nv, s_sub.data(), s_diag.data(), s_sup.data(), tr.data() + l_lo * nv,
                            scratch.data());
        for (std::size_t j = 0; j < nv; ++j)
            for (std::size_t l = 0; l < ns; ++l) p[j * ns + l] = tr[l * nv + j];
        {
            const double eta2 = model.eta * model.eta;
            for (std::size_t j = 1; j + 1 < nv; ++j) {
                const double wv = h;
                const double pn = p[j * ns + ns - 2];
                const double s_top = s_at(ns - 1);
                const double f_hi = 0.5 * model.xi * (s_top - 0.5 * m) * pn + 0.5 * eta2 * (s_top - m) * (s_top - m) * pn / m;
                sol.diagnostics.leak.s_high += f_hi * dk * wv;
                if (!wall) {
                    const double p1 = p[j * ns + 1];
                    const double f_lo = 0.5 * model.xi * 0.5 * m * p1 - 0.5 * eta2 * m * m * p1 / m;
                    sol.diagnostics.leak.s_low -= f_lo * dk * wv;
                }
            }
        }

        for (double x : p)
            if (!std::isfinite(x)) solve_failure(g, t, "v/s");
        track_values(p, sol.diagnostics);
        track_mass(sol, t, mass());
        if (next_ck < ck.size() && ck[next_ck] == n) {
            sol.checkpoints.push_back(field_at(t));
            ++next_ck;
        }
    }
    sol.diagnostics.steps = steps;
    sol.diagnostics.final_mass = sol.step_mass.back();
    return sol;
}

FpeSolution solve_fpe_1d(const FpeModel& model, double ratio, const DensityField& ic, double horizon,
                         const std::vector<double>& checkpoints) {
    const Grid& g = ic.grid;
    g.validate();
    if (g.dims != 1) throw std::invalid_argument("solve_fpe_1d needs a 1-D grid");
    if (!(ratio > 0.0)) throw std::invalid_argument("consumption ratio must be positive");
    const auto& kern = simd::active_kernels();
    const FwApproximation fw(model.psi, model.phi, model.n_constituents);
    const std::size_t steps = step_count(horizon, g.dk);
    const auto ck = checkpoint_steps(checkpoints, g.dk, steps);
    const std::size_t nx = g.v_nodes();
    const std::size_t rows = nx - 2;
    const double h = g.dh, dk = g.dk;
    const double drain = std::isinf(ratio) ? 0.0 : 1.0 / ratio;

    FpeSolution sol;
    sol.diagnostics.isa = std::string(simd::isa_name(kern.isa));
    std::vector<double> p = ic.values;
    p.front() = 0.0;
    p.back() = 0.0;
    auto field_at = [&](double t) {
        DensityField f;
        f.grid = g;
        f.time = t;
        f.values = p;
        return f;
    };
    auto mass = [&] { return h * kern.striped_sum(std::span<const double>(p).subspan(1, rows)); };

    sol.diagnostics.initial_mass = mass();
    sol.step_times.push_back(0.0);
    sol.step_mass.push_back(sol.diagnostics.initial_mass);
    std::size_t next_ck = 0;
    if (next_ck < ck.size() && ck[next_ck] == 0) {
        sol.checkpoints.push_back(field_at(0.0));
        ++next_ck;
    }

    std::vector<double> sub(rows), diag(rows), sup(rows), scratch(rows);
    auto a = [&](double x) { return model.psi * x - drain; };
    for (std::size_t n = 1; n <= steps; ++n) {
        const double t = static_cast<double>(n) * dk;
        const double phi2 = model.phi > 0.0 ? fw.phi_squared(t + model.phi_clock_offset) : 0.0;
        auto d = [&](double x) { return phi2 * x * x; };
        for (std::size_t r = 0; r < rows; ++r) {
            const double x = static_cast<double>(r + 1) * h;
            const Stencil st = flux_stencil(a(x - 0.5 * h), a(x + 0.5 * h), d(x - h), d(x), d(x + h), h);
            sub[r] = -dk * st.cm;
            diag[r] = 1.0 - dk * st.c0;
            sup[r] = -dk * st.cp;
            if (n == 1 && d(x) > 0.0)
                sol.diagnostics.max_peclet_v = std::max(sol.diagnostics.max_peclet_v, std::abs(a(x)) * h / (0.5 * d(x)));
        }
        kern.tridiag_shared(rows, 1, sub.data(), diag.data(), sup.data(), p.data() + 1, scratch.data());
        if (!std::isfinite(p[1]) || !std::isfinite(p[rows])) solve_failure(g, t, "x");
        const double p1 = p[1], pn = p[rows];
        const double f_lo = 0.5 * a(0.5 * h) * p1 - 0.5 * d(h) * p1 / h;
        const double x_top = static_cast<double>(nx - 1) * h;
        const double f_hi = 0.5 * a(x_top - 0.5 * h) * pn + 0.5 * d(x_top - h) * pn / h;
        sol.diagnostics.leak.v_low -= f_lo * dk;
        sol.diagnostics.leak.v_high += f_hi * dk;
        track_values(p, sol.diagnostics);
        track_mass(sol, t, mass());
        if (next_ck < ck.size() && ck[next_ck] == n) {
            sol.checkpoints.push_back(field_at(t));
            ++next_ck;
        }
    }
    sol.diagnostics.steps = steps;
    sol.diagnostics.final_mass = sol.step_mass.back();
    return sol;
}

FpeSolution solve_fpe_1d(const FpeModel& model, double ratio, const Grid& grid, double horizon,
                         const std::vector<double>& checkpoints) {
    return solve_fpe_1d(model, ratio, initial_density(grid, 1.0, 0.0, 0.05, 0.0), horizon, checkpoints);
}

}  // namespace pension
