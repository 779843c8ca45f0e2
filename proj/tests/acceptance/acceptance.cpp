// Acceptance criteria. Prints one PASS/FAIL line per criterion on stdout and
// row-level detail on stderr. `--criterion N` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "crosscheck.hpp"
#include "pension/estimation.hpp"
#include "pension/fpe.hpp"
#include "pension/index_approx.hpp"
#include "pension/montecarlo.hpp"
#include "pension/pension.hpp"
#include "run_config.hpp"

using namespace pension;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string summary;
};

// Counts failed checks and writes one detail line per check.
class Ledger {
public:
    explicit Ledger(std::string tag) : tag_(std::move(tag)) {}

    void check(bool ok, const std::string& what) {
        ++total_;
        if (!ok) ++failed_;
        std::cerr << "  [" << tag_ << "] " << (ok ? "ok   " : "FAIL ") << what << '\n';
    }

    Outcome outcome() const {
        std::ostringstream s;
        s << total_ - failed_ << " of " << total_ << " checks within tolerance";
        return {failed_ == 0 && total_ > 0, s.str()};
    }

private:
    std::string tag_;
    int total_ = 0;
    int failed_ = 0;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

cli::RunConfig published_config() {
    cli::RunConfig c;
    c.apply_paper_defaults();
    return c;
}

// ---------------------------------------------------------------- reference values

struct PensionRef {
    double ratio;
    double implied_pct;
    double probability_pct;
};

const std::vector<PensionRef> kPension25 = {
    {28.0 / 9, 1.64, 65.40}, {30.0 / 9, 2.15, 54.40}, {32.0 / 9, 2.61, 45.17}, {36.0 / 9, 3.60, 28.27},
    {40.0 / 9, 4.17, 16.16}, {45.0 / 9, 4.98, 7.37},  {52.5 / 9, 6.02, 1.72},  {60.0 / 9, 6.90, 0.34},
};

const std::vector<PensionRef> kPension40 = {
    {5.0, 1.05, 59.38}, {6.5, 2.23, 54.51}, {7.0, 2.55, 49.17},  {7.5, 2.85, 41.77},
    {9.5, 3.83, 21.69}, {11.0, 4.43, 14.86}, {15.0, 5.65, 1.07},
};

struct SurvivalRef {
    double ratio;
    int years;
    double irr_pct;
    double survival_pct;
};

const std::vector<SurvivalRef> kSurvival = {
    {7.5, 8, 1.45, 48.73},    {7.5, 9, 3.81, 29.04},    {7.5, 10, 5.6, 20.46},    {7.5, 11, 6.99, 14.74},
    {10, 10, 0.00, 79.78},    {10, 11, 1.62, 54.01},    {10, 12, 2.92, 31.12},    {10, 13, 3.97, 20.6},
    {10, 14, 4.84, 14.75},    {10, 15, 5.55, 10.79},    {12, 13, 1.16, 70.79},    {12, 14, 2.12, 48.21},
    {12, 15, 2.92, 29.22},    {12, 16, 3.60, 18.53},    {12, 17, 4.17, 12.7},     {12, 18, 4.66, 9.11},
    {12.5, 13, 0.56, 82.36},  {12.5, 14, 1.54, 64.46},  {12.5, 15, 2.37, 42.61},  {12.5, 16, 3.06, 26.14},
    {12.5, 17, 3.65, 16.68},  {12.5, 18, 4.15, 11.4},   {12.5, 19, 4.58, 8.12},   {12.5, 20, 4.96, 5.84},
    {15, 15, 0.00, 93.17},    {15, 20, 2.91, 28.93},    {15, 25, 4.38, 3.48},     {15, 30, 5.21, 0.43},
    {16.25, 20, 2.06, 60.94}, {16.25, 25, 3.63, 9.61},  {16.25, 30, 4.52, 1.08},  {16.25, 35, 5.06, 0.09},
};

const std::map<double, double> kMfpt = {{7.5, 8.27},  {10.0, 11.29}, {12.0, 13.86},
                                        {12.5, 14.53}, {15.0, 18.16}, {16.25, 20.15}};

const std::map<int, std::vector<double>> kMortality = {
    {67, {19.18, 28.65, 54.70, 60.29, 67.43, 72.62}},
    {72, {28.18, 40.93, 60.70, 65.39, 78.13, 87.78}},
};

// ---------------------------------------------------------------- 1, 2

Outcome pension_table(int years, const std::vector<PensionRef>& ref) {
    const auto c = published_config();
    std::vector<double> ratios;
    for (const auto& r : ref) ratios.push_back(r.ratio);
    const auto t = pension_size_table(years, ratios, c.constants, c.solver);
    Ledger l("pension " + std::to_string(years));
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto& row = t.rows[i];
        const double p = 100.0 * row.probability, r = 100.0 * row.implied_return;
        l.check(std::abs(p - ref[i].probability_pct) <= 2.0,
                fmt("ratio %.2f probability %.2f%% vs %.2f%%", ref[i].ratio, p, ref[i].probability_pct));
        l.check(std::abs(r - ref[i].implied_pct) <= 0.01 + 1e-9,
                fmt("ratio %.2f implied return %.3f%% vs %.2f%%", ref[i].ratio, r, ref[i].implied_pct));
    }
    std::cerr << "  remaining mass " << t.remaining_mass << '\n';
    return l.outcome();
}

// ---------------------------------------------------------------- 3

Outcome survival_tables() {
    const auto c = published_config();
    Ledger l("survival");
    for (const auto& block : published::survival_blocks()) {
        const auto t = consumption_survival_table(block.ratio, block.years, c.constants, c.solver);
        for (const auto& row : t.rows) {
            const auto ref = std::find_if(kSurvival.begin(), kSurvival.end(), [&](const SurvivalRef& r) {
                return r.ratio == block.ratio && r.years == row.years;
            });
            const double s = 100.0 * row.survival;
            const double tol = ref->survival_pct < 2.0 ? 0.5 : 2.0;
            l.check(std::abs(s - ref->survival_pct) <= tol,
                    fmt("ratio %.2f, %.0f years: survival %.2f%% vs %.2f%%", block.ratio, row.years, s,
                        ref->survival_pct));
            l.check(std::abs(100.0 * row.irr - ref->irr_pct) <= 0.01 + 1e-9,
                    fmt("ratio %.2f, %.0f years: IRR %.3f%% vs %.2f%%", block.ratio, row.years, 100.0 * row.irr,
                        ref->irr_pct));
        }
    }
    return l.outcome();
}

// ---------------------------------------------------------------- 4

Outcome mfpt() {
    const auto c = published_config();
    Ledger l("mfpt");
    for (const auto& row : mfpt_table(published::consumption_ratios(), c.constants, c.solver)) {
        const double ref = kMfpt.at(row.ratio);
        const double tol = row.ratio == 16.25 ? 0.7 : 0.5;
        l.check(std::abs(row.mfpt.mfpt - ref) <= tol,
                fmt("ratio %.2f: %.3f vs %.2f years (tail share %.4f)", row.ratio, row.mfpt.mfpt, ref,
                    row.mfpt.tail_share));
    }
    return l.outcome();
}

// ---------------------------------------------------------------- 5

Outcome mortality() {
    const auto c = published_config();
    const auto table = LifeTable::read_csv(fs::path(PENSION_SOURCE_DIR) / "data" / "cdc_2003_life_table.csv");
    Ledger l("mortality");
    for (const auto& [age, ref] : kMortality) {
        const auto rows = mortality_table(age, published::consumption_ratios(), table, c.constants, c.solver);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double p = 100.0 * rows[i].probability;
            l.check(std::abs(p - ref[i]) <= 2.5,
                    fmt("age %.0f ratio %.2f: %.2f%% vs %.2f%%", age, rows[i].ratio, p, ref[i]));
        }
    }
    return l.outcome();
}

// ---------------------------------------------------------------- 6

Outcome oracle_equivalence() {
    auto c = published_config();
    c.mc_paths = 100000;
    c.seed = 20240601;
    Ledger l("oracle");
    auto record = [&](const std::vector<cli::CheckRow>& rows) {
        for (const auto& r : rows)
            l.check(r.pass, r.question + fmt(" ratio %.2f t %.0f: fpe %.4f mc %.4f", r.ratio, r.time, r.fpe, r.mc) +
                                fmt(" (se %.4f, tol %.4f)", r.mc_se, r.tolerance));
    };
    record(cli::check_pension(25, published::pension_ratios(25), c, 0));
    record(cli::check_pension(40, published::pension_ratios(40), c, 0));
    for (const auto& block : published::survival_blocks()) record(cli::check_consumption(block.ratio, block.years, true, c, 0));
    return l.outcome();
}

// ---------------------------------------------------------------- 7

Outcome analytic_suite() {
    const auto c = CalibratedConstants::published();
    Ledger l("analytic");
    EulerConfig e;
    e.n_paths = 100000;
    e.seed = 7;

    e.dt = 1.0 / 12.0;
    e.horizon = 25.0;
    const auto stock = LinearSdeCoefficients::geometric(c.psi, c.phi);
    const auto ms = sample_moments(euler_paths(stock, 1.0, e), 25.0);
    const double es = lognormal_moment(1.0, stock, 25.0, 1.0);
    l.check(std::abs(ms.mean - es) <= 3.0 * ms.mean_se, fmt("stock mean at 25y: mc %.5f exact %.5f se %.5f", ms.mean, es, ms.mean_se));

    e.horizon = 40.0;
    const auto salary = LinearSdeCoefficients::geometric(c.xi, c.eta);
    const auto mw = sample_moments(euler_paths(salary, 1.0, e), 40.0);
    const double ew = lognormal_moment(1.0, salary, 40.0, 1.0);
    l.check(std::abs(mw.mean - ew) <= 3.0 * mw.mean_se, fmt("salary mean at 40y: mc %.5f exact %.5f se %.5f", mw.mean, ew, mw.mean_se));

    // Equal-weight average of 500 simulated constituents against the F-W law.
    const FwApproximation fw(c);
    EulerConfig ie;
    ie.dt = 1.0 / 12.0;
    ie.horizon = 50.0;
    ie.n_paths = 4000;
    ie.seed = 8;
    ie.record_times = {10.0, 25.0, 50.0};
    const auto index = simulate_index_average(c.n_constituents, c, ie);
    for (double t : ie.record_times) {
        const auto m = sample_moments(index, t);
        const auto z = fw.zn_law(1.0, t), x = fw.xn_law(1.0, t);
        l.check(std::abs(z.mean - x.mean) <= 1e-12 * x.mean && std::abs(z.variance - x.variance) <= 1e-12 * x.variance,
                fmt("t %.0f: F-W law moments equal the index moments", t));
        l.check(std::abs(m.mean - z.mean) <= 3.0 * m.mean_se,
                fmt("t %.0f: E[X_n] mc %.5f vs E[Z_n] %.5f (se %.5f)", t, m.mean, z.mean, m.mean_se));
        l.check(std::abs(m.variance - z.variance) <= 3.0 * m.variance_se,
                fmt("t %.0f: Var[X_n] mc %.5f vs Var[Z_n] %.5f (se %.5f)", t, m.variance, z.variance,
                    m.variance_se));
    }

    const double phi2 = c.phi * c.phi;
    l.check(std::abs(fw.phi_squared(0.0) - phi2 / c.n_constituents) <= 0.01 * phi2 / c.n_constituents,
            fmt("Phi^2(0) %.6g vs phi^2/n %.6g", fw.phi_squared(0.0), phi2 / c.n_constituents));
    l.check(std::abs(fw.phi_squared(200.0) - phi2) <= 0.01 * phi2,
            fmt("Phi^2(200) %.6g vs phi^2 %.6g", fw.phi_squared(200.0), phi2));

    // Deterministic drain: psi = phi = 0, absorption exactly at the ratio.
    const SolverSetup setup;
    CalibratedConstants still = c;
    still.psi = 0.0;
    still.phi = 0.0;
    const auto fpe = mfpt_table({7.5}, still, setup)[0].mfpt.mfpt;
    l.check(std::abs(fpe - 7.5) <= setup.consumption.dk, fmt("drain MFPT %.5f vs 7.5 (dk %.3f)", fpe, setup.consumption.dk));
    EulerConfig de;
    de.dt = setup.consumption.dk;
    de.horizon = 20.0;
    de.n_paths = 1000;
    const auto mc = mc_estimate(simulate_consumption(still, 7.5, de), functional::Mfpt{})[0];
    l.check(std::abs(mc.value - 7.5) <= de.dt, fmt("drain MFPT (Euler) %.5f vs 7.5", mc.value));
    return l.outcome();
}

// ---------------------------------------------------------------- 8

Outcome estimation_recovery() {
    Ledger l("estimation");
    const double q = 0.002742, vol = 0.1;
    // Raw second moment of a monthly GBM increment per x^2.
    const double r = std::exp(2.0 * q) * std::expm1(vol * vol) + std::expm1(q) * std::expm1(q);
    for (std::uint64_t seed : {1, 2, 3}) {
        const SyntheticConfig cfg{5000, 504, q, vol, seed};
        const auto s = fit_slices(build_surfaces(synthesize_gbm_panel(cfg), 0.25));
        const auto k = extract_constants(s, s, 0.1);
        const double dq = (k.q_monthly - q) / q, dv = (k.r_monthly_vol - vol) / vol;
        l.check(std::abs(dq) <= 0.15, fmt("seed %.0f: q %.6f vs %.6f (%+.1f%%)", seed, k.q_monthly, q, 100 * dq));
        l.check(std::abs(dv) <= 0.15,
                fmt("seed %.0f: r_vol %.5f vs %.5f (%+.1f%%)", seed, k.r_monthly_vol, vol, 100 * dv) +
                    fmt(", raw-moment target %.5f", std::sqrt(r)));
    }
    return l.outcome();
}

// ---------------------------------------------------------------- 9

Outcome numerical_hygiene() {
    const auto c = published_config();
    Ledger l("hygiene");
    const auto model = FpeModel::from(c.constants);
    const auto& setup = c.solver;

    auto exceed_333 = [&](const Grid& g) {
        const auto sol = solve_fpe_2d(model, initial_density(g, 1.0, 1.0, setup.sigma_v, setup.sigma_s), 25.0, {25.0});
        return std::make_pair(exceedance_from_density(sol.at(25.0), 30.0 / 9), sol);
    };
    const auto [p, sol] = exceed_333(setup.accumulation);
    l.check(sol.diagnostics.mass_non_increasing,
            fmt("2-D mass non-increasing over 25 years (largest gain %.3g)", sol.diagnostics.max_mass_increase));
    l.check(sol.diagnostics.final_mass > 0.95,
            fmt("2-D mass after 25 years %.4f (leak v_high %.4f, s_high %.4f)", sol.diagnostics.final_mass,
                sol.diagnostics.leak.v_high, sol.diagnostics.leak.s_high));
    l.check(sol.diagnostics.min_value >= -1e-10, fmt("2-D most negative value %.3g", sol.diagnostics.min_value));

    const auto one = solve_fpe_1d(model, 10.0, initial_density(setup.consumption, 1.0, 0.0, setup.sigma_x, 0.0),
                                  setup.consumption_horizon, {});
    l.check(one.diagnostics.mass_non_increasing, "1-D mass non-increasing over 60 years");

    Grid extended = setup.accumulation;
    extended.n_v *= 2;
    extended.n_s *= 2;
    const auto trunc =
        boundary_truncation_error(setup.accumulation, extended, 1.0, 1.0, setup.sigma_v, setup.sigma_s);
    l.check(trunc.log10 < -100.0, fmt("truncation error 18x5 -> 36x10: 10^%.1f", trunc.log10));

    Grid fine = setup.accumulation;
    fine.dh /= 2;
    fine.n_v *= 2;
    fine.dk /= 2;
    const double pf = exceed_333(fine).first;
    l.check(std::abs(pf - p) < 0.005, fmt("Pr(v > 3.33) at 25y: %.4f, refined %.4f", p, pf));

    auto survival_10 = [&](const Grid& g) {
        return survival_curve(solve_fpe_1d(model, 10.0, initial_density(g, 1.0, 0.0, setup.sigma_x, 0.0), 20.0, {}))(10.0);
    };
    Grid fine1 = setup.consumption;
    fine1.dh /= 2;
    fine1.n_v *= 2;
    fine1.dk /= 2;
    const double s0 = survival_10(setup.consumption), s1 = survival_10(fine1);
    l.check(std::abs(s1 - s0) < 0.005, fmt("S(10) at ratio 10: %.4f, refined %.4f", s0, s1));
    return l.outcome();
}

// ---------------------------------------------------------------- 10

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream f(e.path(), std::ios::binary);
        std::ostringstream s;
        s << f.rdbuf();
        files[e.path().filename().string()] = s.str();
    }
    return files;
}

Outcome determinism() {
    Ledger l("determinism");
    const fs::path root = fs::temp_directory_path() / "pension_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::vector<std::string>> commands = {
        {"simulate", "--model", "fund", "--seed", "5", "--set", "montecarlo.n_paths=20000", "--set",
         "simulate.export_paths=false"},
        {"simulate", "--model", "consumption", "--seed", "5", "--set", "montecarlo.n_paths=5000", "--set",
         "simulate.ratio=12", "--set", "simulate.horizon=40"},
        {"tables", "survival", "--paper-defaults", "--seed", "5"},
        {"crosscheck", "--question", "survival", "--ratio", "12.5", "--seed", "5", "--set", "montecarlo.n_paths=5000",
         "--set", "crosscheck.tolerance_pp=100"},
    };
    int k = 0;
    for (const auto& base : commands) {
        std::map<std::string, std::string> reference;
        for (const char* threads : {"1", "1", "4"}) {
            auto args = base;
            const fs::path out = root / (std::to_string(k++));
            args.insert(args.end(), {"--threads", threads, "--out", out.string()});
            std::ostringstream o, log;
            const int rc = cli::run(args, o, log);
            const auto files = read_tree(out);
            if (reference.empty()) {
                l.check(rc == 0 && !files.empty(), base[0] + " " + base[1] + ": exit " + std::to_string(rc));
                reference = files;
                continue;
            }
            l.check(files == reference, base[0] + " " + base[1] + ": byte-identical with --threads " + threads);
        }
    }
    fs::remove_all(root);
    return l.outcome();
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "pension_25", [] { return pension_table(25, kPension25); }},
        {2, "pension_40", [] { return pension_table(40, kPension40); }},
        {3, "survival_tables", survival_tables},
        {4, "mfpt_table", mfpt},
        {5, "mortality_tables", mortality},
        {6, "oracle_equivalence", oracle_equivalence},
        {7, "analytic_suite", analytic_suite},
        {8, "estimation_recovery", estimation_recovery},
        {9, "numerical_hygiene", numerical_hygiene},
        {10, "determinism", determinism},
    };
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }
    bool ok = true;
    bool ran = false;
    for (const auto& c : all) {
        if (only && c.id != only) continue;
        ran = true;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "criterion " << c.id << " " << c.name << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.summary
                  << ", " << fmt("%.1f s", secs) << ")" << std::endl;
        ok = ok && o.pass;
    }
    if (!ran) {
        std::cerr << "no criterion " << only << '\n';
        return 2;
    }
    return ok ? 0 : 1;
}
