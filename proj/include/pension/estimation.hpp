#pragma once

// Panel ingestion and empirical drift / volatility estimation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pension/model_core.hpp"

namespace pension {

enum class Period { month, year };

struct Trajectory {
    std::string id;
    long t0 = 0;
    std::vector<double> values;  // values[0] == 1
};

struct Panel {
    std::vector<Trajectory> trajectories;
    Period period = Period::month;

    std::size_t observations() const;
    /// Throws std::invalid_argument unless every trajectory is non-empty,
    /// positive and starts at 1.
    void validate() const;
};

struct CpiSeries {
    long t0 = 0;
    std::vector<double> levels;

    bool covers(long t) const { return t >= t0 && t < t0 + static_cast<long>(levels.size()); }
    double at(long t) const;
};

/// Malformed input file. `row()` is the 1-based line number (header = 1), or 0
/// when the problem is not tied to a line.
class IngestionError : public std::runtime_error {
public:
    IngestionError(const std::string& what, std::size_t row = 0);
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

/// Reads `id,t,value` rows. Rows of one id are sorted by t; if an id has gaps
/// only its last contiguous run is kept, and each trajectory is normalised to
/// start at 1.
Panel read_panel_csv(std::istream& in, Period period = Period::month);
Panel read_panel_csv(const std::filesystem::path& path, Period period = Period::month);
void write_panel_csv(std::ostream& out, const Panel& panel);

/// Reads `t,index` rows; periods must be contiguous and levels positive.
CpiSeries read_cpi_csv(std::istream& in);
CpiSeries read_cpi_csv(const std::filesystem::path& path);

/// Deflates v at period p to v * cpi(base) / cpi(p), then renormalises each
/// trajectory to start at 1. Throws IngestionError naming the first missing period.
Panel cpi_adjust(const Panel& panel, const CpiSeries& cpi, long base_period);

struct SurfaceBin {
    long tau;
    double x_center;
    double x_mean;  // mean growth of the members
    double a;       // mean increment per period
    double b2;      // mean squared increment per period
    std::size_t count;
};

struct SliceFit {
    long tau;
    bool drift_fitted = false;
    bool vol_fitted = false;
    double q = 0.0, q2 = 0.0;            // a  ~ q x + q2
    double r = 0.0, r2 = 0.0, r3 = 0.0;  // b2 ~ r x^2 + r2 x + r3
};

struct CoefficientSurface {
    double bin_width = 0.0;
    Period period = Period::month;
    std::vector<SurfaceBin> bins;  // ordered by (tau, x_center)
    std::vector<SliceFit> slices;  // ordered by tau; empty until fit_slices
};

CoefficientSurface build_surfaces(const Panel& panel, double bin_width);

/// Count-weighted least squares per slice, against the member-mean growth of
/// each bin. Slices with too few bins are kept but flagged unfitted, except
/// slices whose increments are all zero, which fit zero coefficients exactly.
CoefficientSurface fit_slices(CoefficientSurface surface);

/// Trailing average over N = ceil(window_fraction * size) points; the first
/// N - 1 entries average over the points available.
std::vector<double> moving_average(const std::vector<double>& series, double window_fraction);

/// Drops the top `vol_drop_fraction` of trajectories by realised log-return
/// volatility, then the top `growth_drop_fraction` of the rest by terminal
/// growth. Each drop removes ceil(fraction * remaining); ties go to the
/// lexicographically smaller id.
Panel filter_outliers(const Panel& panel, double vol_drop_fraction, double growth_drop_fraction);

struct SmoothedSlices {
    std::vector<long> drift_taus;
    std::vector<double> q;         // raw slope per fitted slice
    std::vector<double> q_smooth;  // trailing average
    std::vector<long> vol_taus;
    std::vector<double> r;
    std::vector<double> r_smooth;
};

SmoothedSlices smooth_slices(const CoefficientSurface& surface, double window_fraction);

/// Terminal smoothed slopes become the model constants: the stock side gives
/// (q, r_vol = sqrt(r)), annualised when the panel is monthly; the salary side
/// gives (xi, eta = sqrt(r)). The result is not validated, so zero-noise
/// panels yield zero volatilities.
CalibratedConstants extract_constants(const CoefficientSurface& stock_surface,
                                      const CoefficientSurface& salary_surface,
                                      double window_fraction);

struct SyntheticConfig {
    std::size_t n_paths = 1000;
    long horizon = 120;  // periods
    double drift = 0.0;  // per period
    double vol = 0.0;    // per sqrt(period)
    std::uint64_t seed = 0;
};

/// Exact GBM trajectories x(t+1) = x(t) exp(drift - vol^2/2 + vol z), all
/// starting at t = 0 with x = 1. Ids are zero-padded path indices.
Panel synthesize_gbm_panel(const SyntheticConfig& config, Period period = Period::month);

}  // namespace pension
