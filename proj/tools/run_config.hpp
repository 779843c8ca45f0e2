#pragma once

// Run configuration: defaults, a sectioned key = value file format, and the
// canonical text that is echoed into reports and hashed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pension/estimation.hpp"
#include "pension/fpe.hpp"
#include "pension/model_core.hpp"
#include "pension/pension.hpp"

namespace pension::cli {

struct RunConfig {
    std::uint64_t seed = 0;
    /// Published constants, grids and table parameter sets.
    bool paper_defaults = false;

    CalibratedConstants constants = CalibratedConstants::published();
    SolverSetup solver;

    std::size_t mc_paths = 100000;
    double mc_dt = 0.005;
    bool mc_antithetic = false;

    std::string panel;
    std::string salary_panel;
    std::string cpi;
    std::string life_table;  // empty: the bundled 2003 table

    Period period = Period::month;
    double bin_width = 0.25;         // stock panel
    double salary_bin_width = 0.5;
    double window_fraction = 0.1;
    double vol_drop = 0.0;
    double growth_drop = 0.0;
    std::optional<long> cpi_base;  // empty: first CPI period

    SyntheticConfig synth;
    std::optional<std::uint64_t> synth_seed;  // empty: the run seed

    int years = 25;
    int age = 67;
    std::vector<double> ratios;
    std::vector<int> retirement_years;

    std::string model = "fund";  // linear | index | fund | consumption
    double horizon = 25.0;
    double ratio = 10.0;
    double x0 = 1.0;
    double a1 = 0.0, a2 = 0.0, b1 = 0.0, b2 = 0.0;
    std::vector<double> record_times;
    bool export_paths = false;

    std::string solve_kind = "accumulation";  // accumulation | consumption
    std::vector<double> checkpoints;

    std::string question = "survival";  // pension | survival | mfpt | drain | all
    double tolerance_pp = 1.5;
    double mfpt_tolerance = 0.5;

    /// Effective synthetic-panel seed.
    std::uint64_t synth_seed_value() const { return synth_seed.value_or(seed); }

    /// Resets constants, grids and initial spreads to the published values.
    void apply_paper_defaults();
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line = 0);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Applies `[section]` / `key = value` lines onto `config`. `#` starts a comment.
/// Unknown sections or keys, repeated keys and unparsable values throw ConfigError.
void apply_config(RunConfig& config, std::istream& in);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Sets a single `section.key` value.
void set_config_value(RunConfig& config, const std::string& dotted_key, const std::string& value);

/// Every key in a fixed order, one `key = value` per line under its section.
/// Parsing this text back yields the same configuration.
std::string canonical_text(const RunConfig& config);

/// Key reference for --help.
std::string config_reference();

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// SHA-1 of the git blob object holding `text`, as 40 hex digits.
std::string git_blob_hash(const std::string& text);

}  // namespace pension::cli
