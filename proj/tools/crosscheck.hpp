#pragma once

// Fokker-Planck values against the Euler oracle run on the same question:
// same constants, same Gaussian start, paths killed where the solver's far
// edges absorb mass.

#include <string>
#include <vector>

#include "run_config.hpp"

namespace pension::cli {

struct CheckRow {
    std::string question;  // pension | survival | mfpt | drain
    double ratio = 0.0;
    double time = 0.0;   // saving or retirement years; 0 for MFPT rows
    double fpe = 0.0;
    double mc = 0.0;
    double mc_se = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Pr(v > ratio) after `years` of saving, for every ratio.
std::vector<CheckRow> check_pension(int years, const std::vector<double>& ratios, const RunConfig& config,
                                    unsigned threads);

/// Survival at each of `years` and (when `with_mfpt`) the mean first passage
/// time of one consumption ratio.
std::vector<CheckRow> check_consumption(double ratio, const std::vector<int>& years, bool with_mfpt,
                                        const RunConfig& config, unsigned threads);

/// psi = phi = 0: the fund drains linearly and both sides must find MFPT = ratio.
CheckRow check_drain(double ratio, const RunConfig& config, unsigned threads);

}  // namespace pension::cli
