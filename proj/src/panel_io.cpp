#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "pension/estimation.hpp"

namespace pension {

namespace {

std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && issp(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

long parse_long(const std::string& s, const char* what, std::size_t row) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw IngestionError(std::string(what) + " is not an integer: '" + s + "'", row);
    return v;
}

double parse_double(const std::string& s, const char* what, std::size_t row) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw IngestionError(std::string(what) + " is not a finite number: '" + s + "'", row);
    return v;
}

void expect_header(std::istream& in, const std::vector<std::string>& cols) {
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("empty file", 1);
    auto got = split(trim(line));
    if (!got.empty() && got[0].rfind("\xEF\xBB\xBF", 0) == 0) got[0] = got[0].substr(3);
    if (got != cols) {
        std::string want;
        for (const auto& c : cols) want += (want.empty() ? "" : ",") + c;
        throw IngestionError("expected header '" + want + "'", 1);
    }
}

}  // namespace

IngestionError::IngestionError(const std::string& what, std::size_t row)
    : std::runtime_error(row ? "row " + std::to_string(row) + ": " + what : what), row_(row) {}

Panel read_panel_csv(std::istream& in, Period period) {
    expect_header(in, {"id", "t", "value"});
    std::map<std::string, std::map<long, double>> rows;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split(line);
        if (f.size() != 3) throw IngestionError("expected 3 fields, got " + std::to_string(f.size()), row);
        if (f[0].empty()) throw IngestionError("empty id", row);
        const long t = parse_long(f[1], "t", row);
        const double v = parse_double(f[2], "value", row);
        if (!(v > 0.0)) throw IngestionError("value must be positive", row);
        if (!rows[f[0]].emplace(t, v).second)
            throw IngestionError("duplicate observation for id '" + f[0] + "' at t=" + f[1], row);
    }
    if (rows.empty()) throw IngestionError("panel has no observations");

    Panel panel;
    panel.period = period;
    for (const auto& [id, obs] : rows) {
        // Keep the last contiguous run: re-entries restart the trajectory.
        auto start = std::prev(obs.end());
        while (start != obs.begin() && std::prev(start)->first == start->first - 1) --start;
        Trajectory tr{id, start->first, {}};
        const double base = start->second;
        for (auto it = start; it != obs.end(); ++it) tr.values.push_back(it->second / base);
        panel.trajectories.push_back(std::move(tr));
    }
    return panel;
}

Panel read_panel_csv(const std::filesystem::path& path, Period period) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open panel file " + path.string());
    return read_panel_csv(in, period);
}

void write_panel_csv(std::ostream& out, const Panel& panel) {
    out << "id,t,value\n";
    char buf[64];
    for (const auto& tr : panel.trajectories)
        for (std::size_t k = 0; k < tr.values.size(); ++k) {
            auto r = std::to_chars(buf, buf + sizeof buf, tr.values[k]);
            out << tr.id << ',' << tr.t0 + static_cast<long>(k) << ',' << std::string_view(buf, r.ptr - buf)
                << '\n';
        }
}

CpiSeries read_cpi_csv(std::istream& in) {
    expect_header(in, {"t", "index"});
    std::map<long, double> levels;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split(line);
        if (f.size() != 2) throw IngestionError("expected 2 fields, got " + std::to_string(f.size()), row);
        const long t = parse_long(f[0], "t", row);
        const double v = parse_double(f[1], "index", row);
        if (!(v > 0.0)) throw IngestionError("CPI level must be positive", row);
        if (!levels.emplace(t, v).second) throw IngestionError("duplicate CPI period " + f[0], row);
    }
    if (levels.empty()) throw IngestionError("CPI series has no rows");
    CpiSeries cpi;
    cpi.t0 = levels.begin()->first;
    long expect = cpi.t0;
    for (const auto& [t, v] : levels) {
        if (t != expect) throw IngestionError("CPI series is missing period " + std::to_string(expect));
        cpi.levels.push_back(v);
        ++expect;
    }
    return cpi;
}

CpiSeries read_cpi_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open CPI file " + path.string());
    return read_cpi_csv(in);
}

double CpiSeries::at(long t) const {
    if (!covers(t)) throw IngestionError("CPI series is missing period " + std::to_string(t));
    return levels[static_cast<std::size_t>(t - t0)];
}

}  // namespace pension
