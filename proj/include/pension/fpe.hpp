#pragma once

// Implicit finite-volume solvers for the accumulation (v, s) and consumption
// (x) Fokker-Planck equations.
//
//   accumulation: p_t = -[(psi v + Lambda s) p]_v - [xi s p]_s
//                       + 1/2 [eta^2 s^2 p]_ss + 1/2 [Phi^2(t) v^2 p]_vv
//   consumption:  q_t = -[(psi x - 1/ratio) q]_x + 1/2 Phi^2(t) [x^2 q]_xx
//
// Fluxes are central on cell faces, F = A (p_j + p_j+1)/2 - (D_j+1 p_j+1 - D_j p_j)/(2h),
// so the only way mass changes is through the edges. Time stepping is backward
// Euler; the 2-D problem is split into an implicit v sweep followed by an
// implicit s sweep, each a batch of tridiagonal solves.

#include <string>
#include <vector>

#include "pension/model_core.hpp"

namespace pension {

enum class EdgeCondition {
    dirichlet,  // absorbing, p = 0
    zero_flux,  // reflecting wall; only offered for the s = 0 edge
};

std::string to_string(EdgeCondition e);
EdgeCondition edge_condition_from_string(const std::string& s);

struct Grid {
    int dims = 2;
    double dh = 0.025;  // v (or x) spacing
    int n_v = 720;      // v (or x) intervals; nodes 0..n_v
    double dm = 0.2;    // s spacing
    int n_s = 25;       // s intervals
    double dk = 0.1;    // time step, years
    EdgeCondition s_lower = EdgeCondition::zero_flux;

    /// dh = 0.025 over [0, 18], dm = 0.2 over [0, 5], dk = 0.1.
    static Grid accumulation_default();
    /// dx = 0.01 over [0, 12], dk = 0.01.
    static Grid consumption_default();

    double v_max() const { return dh * n_v; }
    double s_max() const { return dm * n_s; }
    std::size_t v_nodes() const { return static_cast<std::size_t>(n_v) + 1; }
    std::size_t s_nodes() const { return dims == 2 ? static_cast<std::size_t>(n_s) + 1 : 1; }
    void validate() const;
};

/// Density on the grid nodes. 2-D values are stored v-major with s
/// contiguous: values[j * s_nodes + l] is p(v_j, s_l). Dirichlet edges hold 0.
struct DensityField {
    Grid grid;
    double time = 0.0;
    std::vector<double> values;

    double at(std::size_t j, std::size_t l = 0) const { return values[j * grid.s_nodes() + l]; }
    /// Trapezoidal integral of the stored values (no clipping).
    double mass() const;
};

/// Per-axis Gaussian centred at (v0, s0) (s0 ignored in 1-D), normalised to
/// unit trapezoidal mass. Throws when the centre is closer than 6 sigma to
/// an absorbing edge or the far edges.
DensityField initial_density(const Grid& grid, double v0, double s0, double sigma_v, double sigma_s);

struct EdgeLeak {
    double v_low = 0.0;
    double v_high = 0.0;
    double s_low = 0.0;
    double s_high = 0.0;

    double total() const { return v_low + v_high + s_low + s_high; }
};

struct FpeDiagnostics {
    std::size_t steps = 0;
    EdgeLeak leak;
    double initial_mass = 0.0;
    double final_mass = 0.0;
    double min_value = 0.0;           // most negative value seen at any step
    std::size_t undershoot_steps = 0;  // steps with a value below -1e-10
    bool mass_non_increasing = true;
    double max_mass_increase = 0.0;  // largest step-to-step gain
    double max_peclet_v = 0.0;
    double max_peclet_s = 0.0;
    std::string isa;
};

struct FpeSolution {
    std::vector<DensityField> checkpoints;
    /// Mass after every step, starting with the initial mass at t = 0.
    std::vector<double> step_times;
    std::vector<double> step_mass;
    FpeDiagnostics diagnostics;

    const DensityField& at(double t) const;
};

/// Coefficient overrides used by tests and degenerate cross-checks.
struct FpeModel {
    double psi = 0.0;
    double phi = 0.0;  // F-W constituent volatility; phi = 0 turns diffusion in v off
    int n_constituents = 500;
    double xi = 0.0;
    double eta = 0.0;
    double lambda_contrib = 0.0;
    /// Time added to the solver clock when evaluating Phi^2.
    double phi_clock_offset = 0.0;

    static FpeModel from(const CalibratedConstants& c);
};

FpeSolution solve_fpe_2d(const FpeModel& model, const DensityField& ic, double horizon,
                         const std::vector<double>& checkpoints);

FpeSolution solve_fpe_1d(const FpeModel& model, double ratio, const DensityField& ic, double horizon,
                         const std::vector<double>& checkpoints);

/// Consumption solve with the default Gaussian (x0 = 1, sigma 0.05) start.
FpeSolution solve_fpe_1d(const FpeModel& model, double ratio, const Grid& grid, double horizon,
                         const std::vector<double>& checkpoints = {});

struct SurvivalCurve {
    std::vector<double> t;
    std::vector<double> s;

    /// Linear interpolation; throws beyond the last sample.
    double operator()(double time) const;
};

SurvivalCurve survival_curve(const FpeSolution& solution);

struct MfptResult {
    double mfpt = 0.0;
    double trapezoid = 0.0;
    double tail = 0.0;
    double tail_share = 0.0;
    bool horizon_warning = false;  // S(horizon) > 0.05
    std::string note;
};

/// Trapezoidal integral of S plus an exponential tail fitted to the last ten
/// years of the curve.
MfptResult mfpt_from_survival(const SurvivalCurve& curve);

/// Pr(v > y): trapezoid over v with the threshold cell split linearly.
/// Negative undershoots are clipped to zero.
double exceedance_from_density(const DensityField& field, double y);

struct Marginals {
    std::vector<double> v;  // integrated over s
    std::vector<double> s;  // integrated over v
};
Marginals marginals(const DensityField& field);

struct TruncationError {
    double value;  // may underflow to 0
    double log10;
};

/// Mass that the initial Gaussian places in `extended` but not in `grid`,
/// evaluated from normal tail probabilities in log space.
TruncationError boundary_truncation_error(const Grid& grid, const Grid& extended, double v0, double s0,
                                          double sigma_v, double sigma_s);

}  // namespace pension
