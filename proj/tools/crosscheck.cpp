#include "crosscheck.hpp"

#include <algorithm>
#include <cmath>

#include "pension/montecarlo.hpp"

namespace pension::cli {

namespace {

EulerConfig oracle_config(const RunConfig& config, double horizon, double sigma, unsigned threads) {
    EulerConfig e;
    e.dt = config.mc_dt;
    e.horizon = horizon;
    e.n_paths = config.mc_paths;
    e.seed = config.seed;
    e.antithetic = config.mc_antithetic;
    e.threads = threads;
    e.initial_sigma = sigma;
    return e;
}

CheckRow probability_row(const std::string& question, double ratio, double time, double fpe, const Estimate& mc,
                         const RunConfig& config) {
    CheckRow row{question, ratio, time, fpe, mc.value, mc.standard_error, 0.0, false};
    row.tolerance = std::max(config.tolerance_pp / 100.0, 3.0 * mc.standard_error);
    row.pass = std::abs(fpe - mc.value) <= row.tolerance;
    return row;
}

}  // namespace

std::vector<CheckRow> check_pension(int years, const std::vector<double>& ratios, const RunConfig& config,
                                    unsigned threads) {
    std::vector<CheckRow> rows;
    if (ratios.empty()) return rows;
    const auto table = pension_size_table(years, ratios, config.constants, config.solver);
    const double horizon = static_cast<double>(years);
    auto e = oracle_config(config, horizon, config.solver.sigma_v, threads);
    e.record_times = {horizon};
    const Grid& g = config.solver.accumulation;
    const auto ens = simulate_fund(config.constants, e, KillBox{g.v_max(), g.s_max()});
    for (const auto& r : table.rows) {
        const auto mc = mc_estimate(ens, functional::Exceedance{r.ratio, horizon})[0];
        rows.push_back(probability_row("pension", r.ratio, horizon, r.probability, mc, config));
    }
    return rows;
}

std::vector<CheckRow> check_consumption(double ratio, const std::vector<int>& years, bool with_mfpt,
                                        const RunConfig& config, unsigned threads) {
    std::vector<CheckRow> rows;
    const auto e = oracle_config(config, 2.0 * config.solver.consumption_horizon, config.solver.sigma_x, threads);
    const auto ens = simulate_consumption(config.constants, ratio, e);
    if (!years.empty()) {
        const auto table = consumption_survival_table(ratio, years, config.constants, config.solver);
        for (const auto& r : table.rows) {
            const double t = static_cast<double>(r.years);
            const auto mc = mc_estimate(ens, functional::Survival{t})[0];
            rows.push_back(probability_row("survival", ratio, t, r.survival, mc, config));
        }
    }
    if (with_mfpt) {
        const auto fpe = mfpt_table({ratio}, config.constants, config.solver)[0].mfpt;
        const auto mc = mc_estimate(ens, functional::Mfpt{})[0];
        CheckRow row{"mfpt", ratio, 0.0, fpe.mfpt, mc.value, mc.standard_error, config.mfpt_tolerance, false};
        row.pass = std::abs(fpe.mfpt - mc.value) <= row.tolerance;
        rows.push_back(row);
    }
    return rows;
}

CheckRow check_drain(double ratio, const RunConfig& config, unsigned threads) {
    FpeModel model = FpeModel::from(config.constants);
    model.psi = 0.0;
    model.phi = 0.0;
    const Grid& grid = config.solver.consumption;
    const auto ic = initial_density(grid, 1.0, 0.0, config.solver.sigma_x, 0.0);
    const double horizon = std::max(config.solver.consumption_horizon, 2.0 * ratio);
    const auto fpe = mfpt_from_survival(survival_curve(solve_fpe_1d(model, ratio, ic, horizon, {})));

    CalibratedConstants c = config.constants;
    c.psi = 0.0;
    c.phi = 0.0;
    c.q_monthly = 0.0;
    c.r_monthly_vol = 0.0;
    const auto e = oracle_config(config, horizon, config.solver.sigma_x, threads);
    const auto mc = mc_estimate(simulate_consumption(c, ratio, e), functional::Mfpt{})[0];

    CheckRow row{"drain", ratio, 0.0, fpe.mfpt, mc.value, mc.standard_error, config.mfpt_tolerance, false};
    // Both must also sit on the analytic value to within one time step.
    const double step = std::max(grid.dk, config.mc_dt);
    row.pass = std::abs(fpe.mfpt - mc.value) <= row.tolerance && std::abs(fpe.mfpt - ratio) <= step &&
               std::abs(mc.value - ratio) <= step + 3.0 * mc.standard_error;
    return row;
}

}  // namespace pension::cli
