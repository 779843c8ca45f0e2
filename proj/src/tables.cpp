#include <algorithm>
#include <stdexcept>

#include "pension/pension.hpp"

namespace pension {

PensionSizeTable pension_size_table(int saving_years, const std::vector<double>& ratios,
                                    const CalibratedConstants& constants, const SolverSetup& setup) {
    if (saving_years < 1) throw std::invalid_argument("saving period must be at least one year");
    PensionSizeTable table;
    table.years = saving_years;
    if (ratios.empty()) return table;
    const auto ic = initial_density(setup.accumulation, 1.0, 1.0, setup.sigma_v, setup.sigma_s);
    const double horizon = static_cast<double>(saving_years);
    const auto sol = solve_fpe_2d(FpeModel::from(constants), ic, horizon, {horizon});
    const auto& field = sol.at(horizon);
    table.diagnostics = sol.diagnostics;
    table.remaining_mass = field.mass();
    for (double y : ratios) {
        const double p = exceedance_from_density(field, y);
        table.rows.push_back({y, implied_annual_return(y, saving_years, constants.lambda_contrib), p,
                              table.remaining_mass > 0.0 ? p / table.remaining_mass : 0.0});
    }
    return table;
}

namespace {

FpeSolution consumption_solve(double ratio, const CalibratedConstants& constants, const SolverSetup& setup,
                              double horizon) {
    const auto ic = initial_density(setup.consumption, 1.0, 0.0, setup.sigma_x, 0.0);
    return solve_fpe_1d(FpeModel::from(constants), ratio, ic, horizon, {});
}

}  // namespace

SurvivalTable consumption_survival_table(double consumption_ratio, const std::vector<int>& retirement_years,
                                         const CalibratedConstants& constants, const SolverSetup& setup) {
    SurvivalTable table;
    table.consumption_ratio = consumption_ratio;
    if (retirement_years.empty()) return table;
    const int longest = *std::max_element(retirement_years.begin(), retirement_years.end());
    const double horizon = std::max(setup.consumption_horizon, static_cast<double>(longest));
    const auto sol = consumption_solve(consumption_ratio, constants, setup, horizon);
    const auto s = survival_curve(sol);
    table.diagnostics = sol.diagnostics;
    for (int years : retirement_years)
        table.rows.push_back({years, retirement_irr(consumption_ratio, years), s(static_cast<double>(years))});
    return table;
}

std::vector<MfptRow> mfpt_table(const std::vector<double>& ratios, const CalibratedConstants& constants,
                                const SolverSetup& setup) {
    std::vector<MfptRow> rows;
    for (double r : ratios) {
        const auto sol = consumption_solve(r, constants, setup, setup.consumption_horizon);
        rows.push_back({r, mfpt_from_survival(survival_curve(sol))});
    }
    return rows;
}

std::vector<MortalityRow> mortality_table(int retirement_age, const std::vector<double>& ratios,
                                          const LifeTable& table, const CalibratedConstants& constants,
                                          const SolverSetup& setup) {
    const auto deaths = conditional_death_pdf(table, retirement_age);
    const double reach = *std::max_element(deaths.offsets.begin(), deaths.offsets.end());
    const double horizon = std::max(setup.consumption_horizon, reach);
    std::vector<MortalityRow> rows;
    for (double r : ratios) {
        const auto sol = consumption_solve(r, constants, setup, horizon);
        rows.push_back({r, prob_pension_outlives(survival_curve(sol), deaths)});
    }
    return rows;
}

namespace published {

std::vector<double> pension_ratios(int years) {
    if (years == 25) return {28.0 / 9, 30.0 / 9, 32.0 / 9, 36.0 / 9, 40.0 / 9, 45.0 / 9, 52.5 / 9, 60.0 / 9};
    if (years == 40) return {5.0, 6.5, 7.0, 7.5, 9.5, 11.0, 15.0};
    throw std::invalid_argument("published pension tables exist for 25 and 40 years only");
}

std::vector<SurvivalBlock> survival_blocks() {
    return {
        {7.5, {8, 9, 10, 11}},
        {10.0, {10, 11, 12, 13, 14, 15}},
        {12.0, {13, 14, 15, 16, 17, 18}},
        {12.5, {13, 14, 15, 16, 17, 18, 19, 20}},
        {15.0, {15, 20, 25, 30}},
        {16.25, {20, 25, 30, 35}},
    };
}

std::vector<double> consumption_ratios() { return {7.5, 10.0, 12.0, 12.5, 15.0, 16.25}; }

std::vector<int> retirement_ages() { return {67, 72}; }

}  // namespace published

}  // namespace pension
