#include "run_config.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace pension::cli {

ConfigError::ConfigError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + what : what), line_(line) {}

void RunConfig::apply_paper_defaults() {
    constants = CalibratedConstants::published();
    solver = SolverSetup{};
}

std::string format_number(double v) {
    std::array<char, 32> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string fmt(double v) { return format_number(v); }

template <class T>
T parse_number(const std::string& s) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v)) throw std::invalid_argument("not a finite number: '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw std::invalid_argument("expected true or false, got '" + s + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& s) {
    std::vector<T> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item)));
    return out;
}

template <class T>
std::string fmt_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) out += fmt(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

struct Key {
    const char* section;
    const char* name;
    const char* doc;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

Key real(const char* sec, const char* name, const char* doc, double RunConfig::*field) {
    return {sec, name, doc, [field](const RunConfig& c) { return fmt(c.*field); },
            [field](RunConfig& c, const std::string& v) { c.*field = parse_number<double>(v); }};
}

Key text(const char* sec, const char* name, const char* doc, std::string RunConfig::*field) {
    return {sec, name, doc, [field](const RunConfig& c) { return c.*field; },
            [field](RunConfig& c, const std::string& v) { c.*field = v; }};
}

Key reals(const char* sec, const char* name, const char* doc, std::vector<double> RunConfig::*field) {
    return {sec, name, doc, [field](const RunConfig& c) { return fmt_list(c.*field); },
            [field](RunConfig& c, const std::string& v) { c.*field = parse_list<double>(v); }};
}

Key grid_keys_real(const char* sec, const char* name, const char* doc, Grid SolverSetup::*grid, double Grid::*field) {
    return {sec, name, doc, [=](const RunConfig& c) { return fmt(c.solver.*grid.*field); },
            [=](RunConfig& c, const std::string& v) { c.solver.*grid.*field = parse_number<double>(v); }};
}

Key grid_keys_int(const char* sec, const char* name, const char* doc, Grid SolverSetup::*grid, int Grid::*field) {
    return {sec, name, doc, [=](const RunConfig& c) { return std::to_string(c.solver.*grid.*field); },
            [=](RunConfig& c, const std::string& v) { c.solver.*grid.*field = parse_number<int>(v); }};
}

Key constant(const char* name, const char* doc, double CalibratedConstants::*field) {
    return {"constants", name, doc, [field](const RunConfig& c) { return fmt(c.constants.*field); },
            [field](RunConfig& c, const std::string& v) {
                c.constants.*field = parse_number<double>(v);
                // Annual values given directly; drop the monthly pair they came from.
                c.constants.q_monthly = 0.0;
                c.constants.r_monthly_vol = 0.0;
            }};
}

const std::vector<Key>& keys() {
    using C = CalibratedConstants;
    static const std::vector<Key> table = {
        {"run", "seed", "master seed for every random stream (u64)",
         [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>(v); }},
        {"run", "paper_defaults", "published constants, grids and table parameter sets: true | false",
         [](const RunConfig& c) { return std::string(c.paper_defaults ? "true" : "false"); },
         [](RunConfig& c, const std::string& v) { c.paper_defaults = parse_bool(v); }},

        constant("psi", "index drift per year", &C::psi),
        constant("phi", "constituent volatility per sqrt(year)", &C::phi),
        constant("xi", "salary drift per year", &C::xi),
        constant("eta", "salary volatility per sqrt(year)", &C::eta),
        {"constants", "lambda", "contribution fraction of salary",
         [](const RunConfig& c) { return fmt(c.constants.lambda_contrib); },
         [](RunConfig& c, const std::string& v) { c.constants.lambda_contrib = parse_number<double>(v); }},
        {"constants", "n_constituents", "number of index constituents",
         [](const RunConfig& c) { return std::to_string(c.constants.n_constituents); },
         [](RunConfig& c, const std::string& v) { c.constants.n_constituents = parse_number<int>(v); }},

        grid_keys_real("accumulation_grid", "dh", "v spacing", &SolverSetup::accumulation, &Grid::dh),
        grid_keys_int("accumulation_grid", "n_v", "v intervals", &SolverSetup::accumulation, &Grid::n_v),
        grid_keys_real("accumulation_grid", "dm", "s spacing", &SolverSetup::accumulation, &Grid::dm),
        grid_keys_int("accumulation_grid", "n_s", "s intervals", &SolverSetup::accumulation, &Grid::n_s),
        grid_keys_real("accumulation_grid", "dk", "time step, years", &SolverSetup::accumulation, &Grid::dk),
        {"accumulation_grid", "s_lower", "edge condition at s = 0: zero_flux | dirichlet",
         [](const RunConfig& c) { return to_string(c.solver.accumulation.s_lower); },
         [](RunConfig& c, const std::string& v) { c.solver.accumulation.s_lower = edge_condition_from_string(v); }},

        grid_keys_real("consumption_grid", "dx", "x spacing", &SolverSetup::consumption, &Grid::dh),
        grid_keys_int("consumption_grid", "n_x", "x intervals", &SolverSetup::consumption, &Grid::n_v),
        grid_keys_real("consumption_grid", "dk", "time step, years", &SolverSetup::consumption, &Grid::dk),
        {"consumption_grid", "horizon", "solve horizon, years",
         [](const RunConfig& c) { return fmt(c.solver.consumption_horizon); },
         [](RunConfig& c, const std::string& v) { c.solver.consumption_horizon = parse_number<double>(v); }},

        {"initial", "sigma_v", "Gaussian width of the initial fund density",
         [](const RunConfig& c) { return fmt(c.solver.sigma_v); },
         [](RunConfig& c, const std::string& v) { c.solver.sigma_v = parse_number<double>(v); }},
        {"initial", "sigma_s", "Gaussian width of the initial salary density",
         [](const RunConfig& c) { return fmt(c.solver.sigma_s); },
         [](RunConfig& c, const std::string& v) { c.solver.sigma_s = parse_number<double>(v); }},
        {"initial", "sigma_x", "Gaussian width of the initial consumption density",
         [](const RunConfig& c) { return fmt(c.solver.sigma_x); },
         [](RunConfig& c, const std::string& v) { c.solver.sigma_x = parse_number<double>(v); }},

        {"montecarlo", "n_paths", "paths per ensemble",
         [](const RunConfig& c) { return std::to_string(c.mc_paths); },
         [](RunConfig& c, const std::string& v) { c.mc_paths = parse_number<std::size_t>(v); }},
        real("montecarlo", "dt", "Euler step, years", &RunConfig::mc_dt),
        {"montecarlo", "antithetic", "pair every path with its mirrored noise: true | false",
         [](const RunConfig& c) { return std::string(c.mc_antithetic ? "true" : "false"); },
         [](RunConfig& c, const std::string& v) { c.mc_antithetic = parse_bool(v); }},

        text("paths", "panel", "stock panel CSV (id,t,value)", &RunConfig::panel),
        text("paths", "salary_panel", "salary panel CSV (id,t,value)", &RunConfig::salary_panel),
        text("paths", "cpi", "CPI CSV (t,index); empty skips deflation", &RunConfig::cpi),
        text("paths", "life_table", "life table CSV; empty uses the bundled 2003 table", &RunConfig::life_table),

        {"estimate", "period", "panel period: month | year",
         [](const RunConfig& c) { return std::string(c.period == Period::month ? "month" : "year"); },
         [](RunConfig& c, const std::string& v) {
             if (v == "month") c.period = Period::month;
             else if (v == "year") c.period = Period::year;
             else throw std::invalid_argument("period must be month or year");
         }},
        real("estimate", "bin_width", "growth-bin width of the stock surfaces", &RunConfig::bin_width),
        real("estimate", "salary_bin_width", "growth-bin width of the salary surfaces", &RunConfig::salary_bin_width),
        real("estimate", "window_fraction", "moving-average window as a fraction of the slices", &RunConfig::window_fraction),
        real("estimate", "vol_drop", "fraction dropped as volatility outliers", &RunConfig::vol_drop),
        real("estimate", "growth_drop", "fraction dropped as growth outliers", &RunConfig::growth_drop),
        {"estimate", "cpi_base", "CPI base period; empty uses the first CPI period",
         [](const RunConfig& c) { return c.cpi_base ? std::to_string(*c.cpi_base) : std::string(); },
         [](RunConfig& c, const std::string& v) {
             if (v.empty()) c.cpi_base.reset();
             else c.cpi_base = parse_number<long>(v);
         }},

        {"synth", "n_paths", "synthetic trajectories",
         [](const RunConfig& c) { return std::to_string(c.synth.n_paths); },
         [](RunConfig& c, const std::string& v) { c.synth.n_paths = parse_number<std::size_t>(v); }},
        {"synth", "horizon", "periods per trajectory",
         [](const RunConfig& c) { return std::to_string(c.synth.horizon); },
         [](RunConfig& c, const std::string& v) { c.synth.horizon = parse_number<long>(v); }},
        {"synth", "drift", "GBM drift per period",
         [](const RunConfig& c) { return fmt(c.synth.drift); },
         [](RunConfig& c, const std::string& v) { c.synth.drift = parse_number<double>(v); }},
        {"synth", "vol", "GBM volatility per sqrt(period)",
         [](const RunConfig& c) { return fmt(c.synth.vol); },
         [](RunConfig& c, const std::string& v) { c.synth.vol = parse_number<double>(v); }},
        {"synth", "seed", "generator seed; empty uses run.seed",
         [](const RunConfig& c) { return c.synth_seed ? std::to_string(*c.synth_seed) : std::string(); },
         [](RunConfig& c, const std::string& v) {
             if (v.empty()) c.synth_seed.reset();
             else c.synth_seed = parse_number<std::uint64_t>(v);
         }},

        {"tables", "years", "saving years of the pension table",
         [](const RunConfig& c) { return std::to_string(c.years); },
         [](RunConfig& c, const std::string& v) { c.years = parse_number<int>(v); }},
        {"tables", "age", "retirement age of the mortality table",
         [](const RunConfig& c) { return std::to_string(c.age); },
         [](RunConfig& c, const std::string& v) { c.age = parse_number<int>(v); }},
        reals("tables", "ratios", "comma-separated ratios (pension size, or consumption V_r / beta)", &RunConfig::ratios),
        {"tables", "retirement_years", "comma-separated years for the survival table",
         [](const RunConfig& c) { return fmt_list(c.retirement_years); },
         [](RunConfig& c, const std::string& v) { c.retirement_years = parse_list<int>(v); }},

        text("simulate", "model", "linear | index | fund | consumption", &RunConfig::model),
        real("simulate", "horizon", "years", &RunConfig::horizon),
        real("simulate", "ratio", "consumption ratio V_r / beta (consumption, solve and crosscheck)", &RunConfig::ratio),
        real("simulate", "x0", "start value of the linear model", &RunConfig::x0),
        real("simulate", "a1", "linear model: dx = (a1 x + a2) dt + (b1 x + b2) dW", &RunConfig::a1),
        real("simulate", "a2", "linear model", &RunConfig::a2),
        real("simulate", "b1", "linear model", &RunConfig::b1),
        real("simulate", "b2", "linear model", &RunConfig::b2),
        reals("simulate", "record_times", "comma-separated times at which paths are summarised", &RunConfig::record_times),
        {"simulate", "export_paths", "write paths.csv (path,t,value): true | false",
         [](const RunConfig& c) { return std::string(c.export_paths ? "true" : "false"); },
         [](RunConfig& c, const std::string& v) { c.export_paths = parse_bool(v); }},

        text("solve", "kind", "accumulation | consumption", &RunConfig::solve_kind),
        reals("solve", "checkpoints", "comma-separated checkpoint times; empty writes the horizon only",
              &RunConfig::checkpoints),

        text("crosscheck", "question", "pension | survival | mfpt | drain | all", &RunConfig::question),
        real("crosscheck", "tolerance_pp", "probability tolerance, percentage points", &RunConfig::tolerance_pp),
        real("crosscheck", "mfpt_tolerance", "MFPT tolerance, years", &RunConfig::mfpt_tolerance),
    };
    return table;
}

const Key& find_key(const std::string& section, const std::string& name) {
    for (const auto& k : keys())
        if (section == k.section && name == k.name) return k;
    throw std::invalid_argument("unknown key '" + section + "." + name + "'");
}

}  // namespace

void apply_config(RunConfig& config, std::istream& in) {
    std::set<std::string> sections;
    for (const auto& k : keys()) sections.insert(k.section);
    std::set<std::string> seen;
    std::string section = "run";
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", n);
            section = trim(line.substr(1, line.size() - 2));
            if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]", n);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value", n);
        const std::string name = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(section + "." + name).second) throw ConfigError("repeated key " + section + "." + name, n);
        try {
            find_key(section, name).set(config, value);
        } catch (const std::exception& e) {
            throw ConfigError(e.what(), n);
        }
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    apply_config(config, in);
}

void set_config_value(RunConfig& config, const std::string& dotted_key, const std::string& value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string::npos) throw ConfigError("expected section.key, got '" + dotted_key + "'");
    try {
        find_key(dotted_key.substr(0, dot), dotted_key.substr(dot + 1)).set(config, value);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

std::string canonical_text(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const auto& k : keys()) {
        if (section != k.section) {
            section = k.section;
            out += (out.empty() ? "[" : "\n[") + section + "]\n";
        }
        out += std::string(k.name) + " = " + k.get(config) + "\n";
    }
    return out;
}

std::string config_reference() {
    const RunConfig defaults;
    std::string out;
    std::string section;
    for (const auto& k : keys()) {
        if (section != k.section) {
            section = k.section;
            out += "  [" + section + "]\n";
        }
        const std::string value = k.get(defaults);
        out += "    " + std::string(k.name) + " = " + (value.empty() ? "(empty)" : value) + "\n        " + k.doc +
               "\n";
    }
    return out;
}

std::string git_blob_hash(const std::string& text) {
    const std::string header = "blob " + std::to_string(text.size()) + '\0';
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx, text.data(), text.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("SHA-1 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

}  // namespace pension::cli
