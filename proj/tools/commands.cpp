#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "crosscheck.hpp"
#include "pension/estimation.hpp"
#include "pension/fpe.hpp"
#include "pension/index_approx.hpp"
#include "pension/montecarlo.hpp"
#include "pension/pension.hpp"
#include "run_config.hpp"

namespace pension::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Context {
    RunConfig config;
    fs::path out;
    unsigned threads = 0;
    std::string command;
    std::ostream* log = nullptr;
};

std::string num(double v) { return format_number(v); }

void write_file(const Context& ctx, const std::string& name, const std::string& content) {
    fs::create_directories(ctx.out);
    const fs::path path = ctx.out / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path.string());
    *ctx.log << "wrote " << path.string() << '\n';
}

void write_json(const Context& ctx, const std::string& name, const json& j) { write_file(ctx, name, j.dump(2) + "\n"); }

json constants_json(const CalibratedConstants& c) {
    return {{"psi", c.psi},           {"phi", c.phi},
            {"xi", c.xi},             {"eta", c.eta},
            {"lambda", c.lambda_contrib}, {"n_constituents", c.n_constituents},
            {"q_monthly", c.q_monthly}, {"r_monthly_vol", c.r_monthly_vol}};
}

json grid_json(const Grid& g) {
    json j = {{"dims", g.dims}, {"dh", g.dh}, {"n_v", g.n_v}, {"v_max", g.v_max()}};
    if (g.dims == 2) {
        j["dm"] = g.dm;
        j["n_s"] = g.n_s;
        j["s_max"] = g.s_max();
        j["s_lower"] = to_string(g.s_lower);
    }
    j["dk"] = g.dk;
    return j;
}

json diagnostics_json(const FpeDiagnostics& d) {
    return {{"steps", d.steps},
            {"initial_mass", d.initial_mass},
            {"final_mass", d.final_mass},
            {"leak", {{"v_low", d.leak.v_low}, {"v_high", d.leak.v_high}, {"s_low", d.leak.s_low},
                      {"s_high", d.leak.s_high}, {"total", d.leak.total()}}},
            {"mass_non_increasing", d.mass_non_increasing},
            {"max_mass_increase", d.max_mass_increase},
            {"min_value", d.min_value},
            {"undershoot_steps", d.undershoot_steps},
            {"max_peclet_v", d.max_peclet_v},
            {"max_peclet_s", d.max_peclet_s}};
}

json estimate_json(const Estimate& e) {
    return {{"value", e.value}, {"standard_error", e.standard_error}, {"samples", e.samples}};
}

json provenance(const Context& ctx) {
    const std::string text = canonical_text(ctx.config);
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", ctx.command},
            {"seed", ctx.config.seed},
            {"config_hash", git_blob_hash(text)},
            {"config", text},
            {"constants", constants_json(ctx.config.constants)}};
}

const LifeTable& life_table(const RunConfig& c, std::optional<LifeTable>& storage) {
    if (c.life_table.empty()) return LifeTable::us_2003();
    storage = LifeTable::read_csv(fs::path(c.life_table));
    return *storage;
}

std::vector<double> default_record_times(const RunConfig& c) {
    if (!c.record_times.empty()) return c.record_times;
    std::vector<double> t;
    for (int y = 1; y < c.horizon; ++y) t.push_back(y);
    t.push_back(c.horizon);
    return t;
}

// ---------------------------------------------------------------- synth

int cmd_synth(Context& ctx) {
    const RunConfig& c = ctx.config;
    SyntheticConfig s = c.synth;
    s.seed = c.synth_seed_value();
    const Panel panel = synthesize_gbm_panel(s, c.period);
    std::ostringstream csv;
    write_panel_csv(csv, panel);
    write_file(ctx, "panel.csv", csv.str());
    json report = provenance(ctx);
    report["synth"] = {{"n_paths", s.n_paths}, {"horizon", s.horizon}, {"drift", s.drift}, {"vol", s.vol},
                       {"seed", s.seed}};
    report["observations"] = panel.observations();
    write_json(ctx, "synth.json", report);
    return kOk;
}

// ---------------------------------------------------------------- estimate

struct SurfaceRun {
    std::size_t trajectories_read = 0;
    std::size_t trajectories_kept = 0;
    CoefficientSurface surface;
};

SurfaceRun estimate_surface(const RunConfig& c, const std::string& path, double bin_width,
                            const std::optional<CpiSeries>& cpi) {
    SurfaceRun run;
    Panel panel = read_panel_csv(fs::path(path), c.period);
    run.trajectories_read = panel.trajectories.size();
    if (cpi) panel = cpi_adjust(panel, *cpi, c.cpi_base.value_or(cpi->t0));
    if (c.vol_drop > 0.0 || c.growth_drop > 0.0) panel = filter_outliers(panel, c.vol_drop, c.growth_drop);
    run.trajectories_kept = panel.trajectories.size();
    run.surface = fit_slices(build_surfaces(panel, bin_width));
    return run;
}

void write_surface(const Context& ctx, const std::string& tag, const CoefficientSurface& s, double window) {
    std::ostringstream bins;
    bins << "tau,x_center,x_mean,a,b2,count\n";
    for (const auto& b : s.bins)
        bins << b.tau << ',' << num(b.x_center) << ',' << num(b.x_mean) << ',' << num(b.a) << ',' << num(b.b2) << ','
             << b.count << '\n';
    write_file(ctx, "surface_" + tag + ".csv", bins.str());

    std::ostringstream fits;
    fits << "tau,drift_fitted,q,q2,vol_fitted,r,r2,r3\n";
    for (const auto& f : s.slices)
        fits << f.tau << ',' << int(f.drift_fitted) << ',' << num(f.q) << ',' << num(f.q2) << ',' << int(f.vol_fitted)
             << ',' << num(f.r) << ',' << num(f.r2) << ',' << num(f.r3) << '\n';
    write_file(ctx, "slices_" + tag + ".csv", fits.str());

    const auto sm = smooth_slices(s, window);
    std::ostringstream drift;
    drift << "tau,q,q_smooth\n";
    for (std::size_t i = 0; i < sm.drift_taus.size(); ++i)
        drift << sm.drift_taus[i] << ',' << num(sm.q[i]) << ',' << num(sm.q_smooth[i]) << '\n';
    write_file(ctx, "drift_" + tag + ".csv", drift.str());
    std::ostringstream vol;
    vol << "tau,r,r_smooth\n";
    for (std::size_t i = 0; i < sm.vol_taus.size(); ++i)
        vol << sm.vol_taus[i] << ',' << num(sm.r[i]) << ',' << num(sm.r_smooth[i]) << '\n';
    write_file(ctx, "vol_" + tag + ".csv", vol.str());
}

int cmd_estimate(Context& ctx) {
    const RunConfig& c = ctx.config;
    if (c.panel.empty()) throw std::invalid_argument("estimate needs paths.panel");
    std::optional<CpiSeries> cpi;
    if (!c.cpi.empty()) cpi = read_cpi_csv(fs::path(c.cpi));

    const SurfaceRun stock = estimate_surface(c, c.panel, c.bin_width, cpi);
    std::optional<SurfaceRun> salary;
    if (!c.salary_panel.empty()) salary = estimate_surface(c, c.salary_panel, c.salary_bin_width, cpi);

    CalibratedConstants est =
        extract_constants(stock.surface, salary ? salary->surface : stock.surface, c.window_fraction);
    est.lambda_contrib = c.constants.lambda_contrib;
    est.n_constituents = c.constants.n_constituents;
    if (!salary) {
        est.xi = c.constants.xi;
        est.eta = c.constants.eta;
    }

    write_surface(ctx, "stock", stock.surface, c.window_fraction);
    if (salary) write_surface(ctx, "salary", salary->surface, c.window_fraction);

    std::ostringstream conf;
    conf << "[constants]\npsi = " << num(est.psi) << "\nphi = " << num(est.phi) << "\nxi = " << num(est.xi)
         << "\neta = " << num(est.eta) << '\n';
    write_file(ctx, "constants.conf", conf.str());

    json report = provenance(ctx);
    report["estimated"] = constants_json(est);
    report["salary_estimated"] = salary.has_value();
    report["stock_panel"] = {{"trajectories_read", stock.trajectories_read},
                             {"trajectories_kept", stock.trajectories_kept},
                             {"bins", stock.surface.bins.size()},
                             {"slices", stock.surface.slices.size()}};
    if (salary)
        report["salary_panel"] = {{"trajectories_read", salary->trajectories_read},
                                  {"trajectories_kept", salary->trajectories_kept},
                                  {"bins", salary->surface.bins.size()},
                                  {"slices", salary->surface.slices.size()}};
    write_json(ctx, "constants.json", report);
    return kOk;
}

// ---------------------------------------------------------------- simulate

EulerConfig euler_config(const Context& ctx, std::vector<double> record) {
    const RunConfig& c = ctx.config;
    EulerConfig e;
    e.dt = c.mc_dt;
    e.horizon = c.horizon;
    e.n_paths = c.mc_paths;
    e.seed = c.seed;
    e.antithetic = c.mc_antithetic;
    e.record_times = std::move(record);
    e.threads = ctx.threads;
    return e;
}

void export_paths(const Context& ctx, const PathEnsemble& ens) {
    std::ostringstream csv;
    csv << "path,t,value\n";
    for (std::size_t p = 0; p < ens.n_paths; ++p)
        for (std::size_t k = 0; k < ens.times.size(); ++k) {
            if (ens.absorbing && !(ens.first_passage[p] > ens.times[k])) break;
            csv << p << ',' << num(ens.times[k]) << ',' << num(ens.at(k)[p]) << '\n';
        }
    write_file(ctx, "paths.csv", csv.str());
}

int cmd_simulate(Context& ctx) {
    const RunConfig& c = ctx.config;
    const auto record = default_record_times(c);
    const EulerConfig e = euler_config(ctx, record);
    PathEnsemble ens;
    json report = provenance(ctx);
    json rows = json::array();

    if (c.model == "linear") {
        const LinearSdeCoefficients coeffs{c.a1, c.a2, c.b1, c.b2};
        ens = euler_paths(coeffs, c.x0, e);
        for (double t : record) {
            const auto m = sample_moments(ens, t);
            json row = {{"t", t}, {"mean", m.mean}, {"mean_se", m.mean_se}, {"variance", m.variance},
                        {"variance_se", m.variance_se}};
            if (coeffs.homogeneous() && c.x0 > 0.0) {
                const auto exact = lognormal_mean_variance(c.x0, coeffs, t);
                row["exact_mean"] = exact.mean;
                row["exact_variance"] = exact.variance;
            }
            rows.push_back(row);
        }
    } else if (c.model == "index") {
        ens = simulate_index_average(c.constants.n_constituents, c.constants, e);
        const FwApproximation fw(c.constants);
        for (double t : record) {
            const auto m = sample_moments(ens, t);
            const auto law = fw.zn_law(1.0, t);
            rows.push_back({{"t", t}, {"mean", m.mean}, {"mean_se", m.mean_se}, {"variance", m.variance},
                            {"variance_se", m.variance_se}, {"fw_mean", law.mean}, {"fw_variance", law.variance}});
        }
    } else if (c.model == "fund") {
        ens = simulate_fund(c.constants, e);
        for (double t : record) {
            const auto m = sample_moments(ens, t);
            json row = {{"t", t}, {"mean", m.mean}, {"mean_se", m.mean_se}, {"variance", m.variance},
                        {"variance_se", m.variance_se}};
            json exceed = json::array();
            for (double y : c.ratios)
                exceed.push_back({{"ratio", y}, {"probability", estimate_json(mc_estimate(ens, functional::Exceedance{y, t})[0])}});
            if (!c.ratios.empty()) row["exceedance"] = exceed;
            rows.push_back(row);
        }
    } else if (c.model == "consumption") {
        ens = simulate_consumption(c.constants, c.ratio, e);
        for (double t : record)
            rows.push_back({{"t", t}, {"survival", estimate_json(mc_estimate(ens, functional::Survival{t})[0])}});
        const auto m = mc_estimate(ens, functional::Mfpt{})[0];
        report["mfpt"] = estimate_json(m);
        report["mfpt"]["censored_fraction"] = m.censored_fraction;
    } else {
        throw std::invalid_argument("simulate.model must be linear, index, fund or consumption");
    }

    report["model"] = c.model;
    report["euler"] = {{"dt", e.dt}, {"horizon", e.horizon}, {"n_paths", e.n_paths}, {"antithetic", e.antithetic},
                       {"floored_steps", ens.floored_steps}};
    report["times"] = rows;
    if (c.export_paths) export_paths(ctx, ens);
    write_json(ctx, "simulate.json", report);
    return kOk;
}

// ---------------------------------------------------------------- solve

std::vector<double> checkpoint_times(const RunConfig& c, double horizon) {
    std::vector<double> t = c.checkpoints;
    if (std::find(t.begin(), t.end(), horizon) == t.end()) t.push_back(horizon);
    std::sort(t.begin(), t.end());
    return t;
}

json mass_curve(const FpeSolution& sol) {
    json curve = json::array();
    for (std::size_t k = 0; k < sol.step_times.size(); ++k) curve.push_back({sol.step_times[k], sol.step_mass[k]});
    return curve;
}

int cmd_solve(Context& ctx) {
    const RunConfig& c = ctx.config;
    const FpeModel model = FpeModel::from(c.constants);
    json report = provenance(ctx);
    report["kind"] = c.solve_kind;
    std::ostringstream csv;

    if (c.solve_kind == "accumulation") {
        const Grid& g = c.solver.accumulation;
        const auto ic = initial_density(g, 1.0, 1.0, c.solver.sigma_v, c.solver.sigma_s);
        const auto times = checkpoint_times(c, c.horizon);
        const auto sol = solve_fpe_2d(model, ic, c.horizon, times);
        csv << "t,v,s,p\n";
        for (const auto& f : sol.checkpoints)
            for (std::size_t j = 0; j < g.v_nodes(); ++j)
                for (std::size_t l = 0; l < g.s_nodes(); ++l)
                    csv << num(f.time) << ',' << num(static_cast<double>(j) * g.dh) << ','
                        << num(static_cast<double>(l) * g.dm) << ',' << num(f.at(j, l)) << '\n';
        const auto& last = sol.at(c.horizon);
        json exceed = json::array();
        for (double y : c.ratios) exceed.push_back({{"ratio", y}, {"probability", exceedance_from_density(last, y)}});
        report["grid"] = grid_json(g);
        report["exceedance"] = exceed;
        report["mass"] = mass_curve(sol);
        report["diagnostics"] = diagnostics_json(sol.diagnostics);
    } else if (c.solve_kind == "consumption") {
        const Grid& g = c.solver.consumption;
        const double horizon = std::max(c.horizon, c.solver.consumption_horizon);
        const auto ic = initial_density(g, 1.0, 0.0, c.solver.sigma_x, 0.0);
        const auto sol = solve_fpe_1d(model, c.ratio, ic, horizon, checkpoint_times(c, c.horizon));
        csv << "t,x,q\n";
        for (const auto& f : sol.checkpoints)
            for (std::size_t j = 0; j < g.v_nodes(); ++j)
                csv << num(f.time) << ',' << num(static_cast<double>(j) * g.dh) << ',' << num(f.at(j)) << '\n';
        const auto s = survival_curve(sol);
        std::ostringstream sc;
        sc << "t,survival\n";
        for (std::size_t k = 0; k < s.t.size(); ++k) sc << num(s.t[k]) << ',' << num(s.s[k]) << '\n';
        write_file(ctx, "survival.csv", sc.str());
        const auto m = mfpt_from_survival(s);
        report["grid"] = grid_json(g);
        report["ratio"] = c.ratio;
        report["mfpt"] = {{"value", m.mfpt}, {"trapezoid", m.trapezoid}, {"tail", m.tail},
                          {"tail_share", m.tail_share}, {"horizon_warning", m.horizon_warning}, {"note", m.note}};
        report["mass"] = mass_curve(sol);
        report["diagnostics"] = diagnostics_json(sol.diagnostics);
    } else {
        throw std::invalid_argument("solve.kind must be accumulation or consumption");
    }
    write_file(ctx, "checkpoints.csv", csv.str());
    write_json(ctx, "solve.json", report);
    return kOk;
}

// ---------------------------------------------------------------- tables

int tables_pension(Context& ctx) {
    RunConfig& c = ctx.config;
    if (c.paper_defaults && c.ratios.empty()) c.ratios = published::pension_ratios(c.years);
    const auto table = pension_size_table(c.years, c.ratios, c.constants, c.solver);
    std::ostringstream csv;
    csv << "ratio,implied_return_pct,probability_pct,probability_renormalized_pct\n";
    json rows = json::array();
    for (const auto& r : table.rows) {
        csv << num(r.ratio) << ',' << num(100 * r.implied_return) << ',' << num(100 * r.probability) << ','
            << num(100 * r.probability_renormalized) << '\n';
        rows.push_back({{"ratio", r.ratio}, {"implied_return", r.implied_return}, {"probability", r.probability},
                        {"probability_renormalized", r.probability_renormalized}});
    }
    const std::string stem = "pension_" + std::to_string(c.years);
    write_file(ctx, stem + ".csv", csv.str());
    json report = provenance(ctx);
    report["table"] = "pension";
    report["years"] = c.years;
    report["grid"] = grid_json(c.solver.accumulation);
    report["rows"] = rows;
    if (!table.rows.empty()) {
        report["remaining_mass"] = table.remaining_mass;
        report["diagnostics"] = diagnostics_json(table.diagnostics);
    }
    write_json(ctx, stem + ".json", report);
    return kOk;
}

int tables_survival(Context& ctx) {
    const RunConfig& c = ctx.config;
    std::vector<published::SurvivalBlock> blocks;
    if (c.paper_defaults && c.ratios.empty()) blocks = published::survival_blocks();
    else
        for (double r : c.ratios) blocks.push_back({r, c.retirement_years});
    std::ostringstream csv;
    csv << "ratio,years,irr_pct,survival_pct\n";
    json rows = json::array();
    json diags = json::array();
    for (const auto& b : blocks) {
        const auto t = consumption_survival_table(b.ratio, b.years, c.constants, c.solver);
        for (const auto& r : t.rows) {
            csv << num(b.ratio) << ',' << r.years << ',' << num(100 * r.irr) << ',' << num(100 * r.survival) << '\n';
            rows.push_back({{"ratio", b.ratio}, {"years", r.years}, {"irr", r.irr}, {"survival", r.survival}});
        }
        if (!t.rows.empty()) diags.push_back({{"ratio", b.ratio}, {"diagnostics", diagnostics_json(t.diagnostics)}});
    }
    write_file(ctx, "survival.csv", csv.str());
    json report = provenance(ctx);
    report["table"] = "survival";
    report["grid"] = grid_json(c.solver.consumption);
    report["rows"] = rows;
    report["diagnostics"] = diags;
    write_json(ctx, "survival.json", report);
    return kOk;
}

int tables_mfpt(Context& ctx) {
    RunConfig& c = ctx.config;
    if (c.paper_defaults && c.ratios.empty()) c.ratios = published::consumption_ratios();
    const auto table = mfpt_table(c.ratios, c.constants, c.solver);
    std::ostringstream csv;
    csv << "ratio,mfpt_years\n";
    json rows = json::array();
    for (const auto& r : table) {
        csv << num(r.ratio) << ',' << num(r.mfpt.mfpt) << '\n';
        rows.push_back({{"ratio", r.ratio}, {"mfpt", r.mfpt.mfpt}, {"tail_share", r.mfpt.tail_share},
                        {"horizon_warning", r.mfpt.horizon_warning}, {"note", r.mfpt.note}});
    }
    write_file(ctx, "mfpt.csv", csv.str());
    json report = provenance(ctx);
    report["table"] = "mfpt";
    report["grid"] = grid_json(c.solver.consumption);
    report["rows"] = rows;
    write_json(ctx, "mfpt.json", report);
    return kOk;
}

int tables_mortality(Context& ctx) {
    RunConfig& c = ctx.config;
    if (c.paper_defaults && c.ratios.empty()) c.ratios = published::consumption_ratios();
    std::optional<LifeTable> storage;
    const LifeTable& lt = life_table(c, storage);
    const auto table = mortality_table(c.age, c.ratios, lt, c.constants, c.solver);
    std::ostringstream csv;
    csv << "ratio,probability_pct\n";
    json rows = json::array();
    for (const auto& r : table) {
        csv << num(r.ratio) << ',' << num(100 * r.probability) << '\n';
        rows.push_back({{"ratio", r.ratio}, {"probability", r.probability}});
    }
    const std::string stem = "mortality_" + std::to_string(c.age);
    write_file(ctx, stem + ".csv", csv.str());
    const auto deaths = conditional_death_pdf(lt, c.age);
    json report = provenance(ctx);
    report["table"] = "mortality";
    report["age"] = c.age;
    report["life_table"] = c.life_table.empty() ? "bundled 2003" : c.life_table;
    report["life_expectancy"] = deaths.expectancy();
    report["grid"] = grid_json(c.solver.consumption);
    report["rows"] = rows;
    write_json(ctx, stem + ".json", report);
    return kOk;
}

// ---------------------------------------------------------------- crosscheck

int cmd_crosscheck(Context& ctx) {
    const RunConfig& c = ctx.config;
    const std::string& q = c.question;
    if (q != "pension" && q != "survival" && q != "mfpt" && q != "drain" && q != "all")
        throw std::invalid_argument("crosscheck.question must be pension, survival, mfpt, drain or all");
    const bool all = q == "all";
    std::vector<CheckRow> rows;
    auto add = [&](std::vector<CheckRow> more) { rows.insert(rows.end(), more.begin(), more.end()); };

    if (q == "pension" || all) {
        if (c.paper_defaults && c.ratios.empty()) {
            for (int years : {25, 40}) add(check_pension(years, published::pension_ratios(years), c, ctx.threads));
        } else {
            add(check_pension(c.years, c.ratios, c, ctx.threads));
        }
    }
    if (q == "survival" || q == "mfpt" || all) {
        const bool survival = q != "mfpt";
        const bool mfpt = q != "survival";
        if (c.paper_defaults && c.ratios.empty()) {
            // The MFPT rows use the same six ratios as the survival blocks.
            for (const auto& b : published::survival_blocks())
                add(check_consumption(b.ratio, survival ? b.years : std::vector<int>{}, mfpt, c, ctx.threads));
        } else {
            const std::vector<double> ratios = c.ratios.empty() ? std::vector<double>{c.ratio} : c.ratios;
            for (double r : ratios)
                add(check_consumption(r, survival ? c.retirement_years : std::vector<int>{}, mfpt, c, ctx.threads));
        }
    }
    if (q == "drain" || all) rows.push_back(check_drain(c.ratio, c, ctx.threads));

    std::ostringstream csv;
    csv << "question,ratio,time,fpe,mc,mc_se,difference,tolerance,pass\n";
    json out = json::array();
    std::size_t failed = 0;
    for (const auto& r : rows) {
        csv << r.question << ',' << num(r.ratio) << ',' << num(r.time) << ',' << num(r.fpe) << ',' << num(r.mc) << ','
            << num(r.mc_se) << ',' << num(r.fpe - r.mc) << ',' << num(r.tolerance) << ',' << (r.pass ? "pass" : "fail")
            << '\n';
        out.push_back({{"question", r.question}, {"ratio", r.ratio}, {"time", r.time}, {"fpe", r.fpe}, {"mc", r.mc},
                       {"mc_se", r.mc_se}, {"difference", r.fpe - r.mc}, {"tolerance", r.tolerance},
                       {"pass", r.pass}});
        if (!r.pass) ++failed;
    }
    write_file(ctx, "crosscheck.csv", csv.str());
    json report = provenance(ctx);
    report["accumulation_grid"] = grid_json(c.solver.accumulation);
    report["consumption_grid"] = grid_json(c.solver.consumption);
    report["oracle"] = {{"dt", c.mc_dt}, {"n_paths", c.mc_paths}, {"antithetic", c.mc_antithetic}};
    report["rows"] = out;
    report["failed"] = failed;
    write_json(ctx, "crosscheck.json", report);
    *ctx.log << rows.size() - failed << " of " << rows.size() << " cross-checks passed\n";
    return failed ? kCheckFailed : kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    CLI::App app{"Pension fund accumulation and consumption: estimation, Monte Carlo, Fokker-Planck solvers and tables.",
                 kToolName};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();
    app.footer("Configuration file: '[section]' headers and 'key = value' lines, '#' comments.\n"
               "Precedence: defaults < --config < --set < subcommand options < --paper-defaults < --seed.\n"
               "--paper-defaults resets constants, grids and initial spreads to the published values and,\n"
               "where no ratios are given, uses the published table parameter sets.\n\nKeys:\n" +
               config_reference());

    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    bool paper = false;
    unsigned threads = 0;
    app.add_option("--config", config_path, "configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override one key: section.key=value (repeatable)");
    app.add_option("--seed", seed, "master seed (u64)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--paper-defaults", paper, "published constants, grids and table parameter sets");
    app.add_option("--threads", threads, "worker threads for Monte Carlo (0 = all cores); never changes results");

    auto* synth = app.add_subcommand("synth", "write a seeded synthetic GBM panel (panel.csv)");
    auto* estimate = app.add_subcommand("estimate", "estimate drift and volatility constants from panel CSVs");
    auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama ensembles with summary statistics");
    auto* solve = app.add_subcommand("solve", "Fokker-Planck solve with checkpoint export");
    auto* tables = app.add_subcommand("tables", "pension, survival, MFPT and mortality tables");
    auto* crosscheck = app.add_subcommand("crosscheck", "compare Fokker-Planck values with the Monte Carlo oracle");

    std::string model, kind, table_kind, question;
    std::optional<int> years, age;
    std::optional<double> ratio;
    simulate->add_option("--model", model, "linear | index | fund | consumption");
    solve->add_option("--kind", kind, "accumulation | consumption");
    solve->add_option("--ratio", ratio, "consumption ratio");
    tables->add_option("kind", table_kind, "pension | survival | mfpt | mortality")
        ->required()
        ->check(CLI::IsMember({"pension", "survival", "mfpt", "mortality"}));
    tables->add_option("--years", years, "saving years (pension table)");
    tables->add_option("--age", age, "retirement age (mortality table)");
    crosscheck->add_option("--question", question, "pension | survival | mfpt | drain | all");
    crosscheck->add_option("--years", years, "saving years (pension question)");
    crosscheck->add_option("--ratio", ratio, "consumption ratio (survival, mfpt and drain questions)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, log);
    }

    Context ctx;
    ctx.out = out_dir;
    ctx.threads = threads;
    ctx.log = &log;
    try {
        RunConfig& c = ctx.config;
        if (!config_path.empty()) apply_config_file(c, config_path);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + s + "'");
            set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
        }
        if (!model.empty()) c.model = model;
        if (!kind.empty()) c.solve_kind = kind;
        if (!question.empty()) c.question = question;
        if (years) c.years = *years;
        if (age) c.age = *age;
        if (ratio) c.ratio = *ratio;
        if (paper) c.paper_defaults = true;
        if (c.paper_defaults) c.apply_paper_defaults();
        if (seed) c.seed = *seed;

        if (synth->parsed()) {
            ctx.command = "synth";
            return cmd_synth(ctx);
        }
        if (estimate->parsed()) {
            ctx.command = "estimate";
            return cmd_estimate(ctx);
        }
        if (simulate->parsed()) {
            ctx.command = "simulate";
            return cmd_simulate(ctx);
        }
        if (solve->parsed()) {
            ctx.command = "solve";
            return cmd_solve(ctx);
        }
        if (tables->parsed()) {
            ctx.command = "tables " + table_kind;
            if (table_kind == "pension") return tables_pension(ctx);
            if (table_kind == "survival") return tables_survival(ctx);
            if (table_kind == "mfpt") return tables_mfpt(ctx);
            return tables_mortality(ctx);
        }
        ctx.command = "crosscheck";
        return cmd_crosscheck(ctx);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kError;
    }
}

}  // namespace pension::cli
