#pragma once

// Pension questions on top of the solvers: implied returns, IRR, mortality
// and the tables built from them.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pension/fpe.hpp"
#include "pension/model_core.hpp"

namespace pension {

struct LifeRow {
    int age = 0;
    bool open = false;  // terminal "age+" interval
    double q = 0.0;
    double l = 0.0;
    double d = 0.0;
    double L = 0.0;
    double T = 0.0;
    double e = 0.0;
};

class LifeTable {
public:
    explicit LifeTable(std::vector<LifeRow> rows);

    /// United States 2003 period table, ages 0 to 100+.
    static const LifeTable& us_2003();

    /// Reads `age,q,l,d,L,T,e`; age is an integer or "N+" for the last row.
    static LifeTable read_csv(std::istream& in);
    static LifeTable read_csv(const std::filesystem::path& path);
    void write_csv(std::ostream& out) const;

    const std::vector<LifeRow>& rows() const { return rows_; }
    const LifeRow& row(int age) const;
    int first_age() const { return rows_.front().age; }
    int last_age() const { return rows_.back().age; }

    /// Throws std::invalid_argument when the table breaks its own identities
    /// (d = l - l', q = d / l, l non-increasing, terminal q = 1).
    void validate() const;

private:
    std::vector<LifeRow> rows_;
};

/// Remaining-lifetime distribution of someone alive at `age`: mass
/// (l_{age+t} - l_{age+t+1}) / l_age, which is d_{age+t}/l_age up to the table's
/// rounding, at offset t + 1/2 for each closed row, and the open interval's mass at its
/// start plus its tabulated expectancy.
struct DeathDistribution {
    int age = 0;
    std::vector<double> offsets;  // years after `age` at which each mass is evaluated
    std::vector<double> mass;

    double total() const;
    double expectancy() const;
};

DeathDistribution conditional_death_pdf(const LifeTable& table, int current_age);

/// Solves lambda * sum_{i=1..years} (1 + r)^i = ratio by bisection on [-0.99, 1].
double implied_annual_return(double ratio, int years, double lambda_contrib);

/// Solves sum_{i=1..years} (1 + r)^{-i} = consumption_ratio by bisection on [-0.99, 1].
double retirement_irr(double consumption_ratio, int years);

struct PearsonResult {
    double rho;
    std::size_t overlap;
};

/// Pearson correlation of a[i] against b[i + shift] over the overlapping indices.
PearsonResult shifted_pearson(const std::vector<double>& a, const std::vector<double>& b, int shift);

/// Grid and initial-condition settings shared by the table generators.
struct SolverSetup {
    Grid accumulation = Grid::accumulation_default();
    Grid consumption = Grid::consumption_default();
    double sigma_v = 0.05;
    double sigma_s = 0.05;
    double sigma_x = 0.05;
    double consumption_horizon = 60.0;
};

struct PensionSizeRow {
    double ratio;
    double implied_return;
    double probability;              // raw interior integral
    double probability_renormalized;  // divided by the remaining mass
};

struct PensionSizeTable {
    int years = 0;
    std::vector<PensionSizeRow> rows;
    FpeDiagnostics diagnostics;
    double remaining_mass = 0.0;
};

PensionSizeTable pension_size_table(int saving_years, const std::vector<double>& ratios,
                                    const CalibratedConstants& constants, const SolverSetup& setup);

struct SurvivalRow {
    int years;
    double irr;
    double survival;
};

struct SurvivalTable {
    double consumption_ratio = 0.0;
    std::vector<SurvivalRow> rows;
    FpeDiagnostics diagnostics;
};

SurvivalTable consumption_survival_table(double consumption_ratio, const std::vector<int>& retirement_years,
                                         const CalibratedConstants& constants, const SolverSetup& setup);

struct MfptRow {
    double ratio;
    MfptResult mfpt;
};

std::vector<MfptRow> mfpt_table(const std::vector<double>& ratios, const CalibratedConstants& constants,
                                const SolverSetup& setup);

/// Sum over the death distribution of S(offset) * mass.
double prob_pension_outlives(const SurvivalCurve& survival, const DeathDistribution& deaths);

struct MortalityRow {
    double ratio;
    double probability;
};

std::vector<MortalityRow> mortality_table(int retirement_age, const std::vector<double>& ratios,
                                          const LifeTable& table, const CalibratedConstants& constants,
                                          const SolverSetup& setup);

/// The parameter sets of the published tables, reproduced by --paper-defaults.
namespace published {
/// Target pension / initial salary for 25 and 40 years of saving. The 25-year
/// ratios are the exact ninths that the two-decimal labels truncate.
std::vector<double> pension_ratios(int years);
struct SurvivalBlock {
    double ratio;
    std::vector<int> years;
};
std::vector<SurvivalBlock> survival_blocks();
std::vector<double> consumption_ratios();  // MFPT and mortality tables
std::vector<int> retirement_ages();        // 67 and 72
}  // namespace published

}  // namespace pension
