#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "life_table_data.hpp"
#include "pension/estimation.hpp"
#include "pension/pension.hpp"

namespace pension {

LifeTable::LifeTable(std::vector<LifeRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("life table has no rows");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].open && i + 1 != rows_.size())
            throw std::invalid_argument("only the last life-table row may be open-ended");
        if (i > 0 && rows_[i].age != rows_[i - 1].age + 1)
            throw std::invalid_argument("life-table ages must be consecutive");
    }
}

const LifeTable& LifeTable::us_2003() {
    static const LifeTable table = [] {
        std::istringstream in(detail::kUs2003LifeTableCsv);
        return read_csv(in);
    }();
    return table;
}

namespace {

double number(const std::string& s, std::size_t row) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw IngestionError("not a finite number: '" + s + "'", row);
    return v;
}

}  // namespace

LifeTable LifeTable::read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IngestionError("empty life table", 1);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line != "age,q,l,d,L,T,e") throw IngestionError("expected header 'age,q,l,d,L,T,e'", 1);
    std::vector<LifeRow> rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw IngestionError("expected 7 fields, got " + std::to_string(f.size()), row);
        LifeRow r;
        std::string age = f[0];
        if (!age.empty() && age.back() == '+') {
            r.open = true;
            age.pop_back();
        }
        auto [p, ec] = std::from_chars(age.data(), age.data() + age.size(), r.age);
        if (ec != std::errc() || p != age.data() + age.size() || r.age < 0)
            throw IngestionError("bad age '" + f[0] + "'", row);
        r.q = number(f[1], row);
        r.l = number(f[2], row);
        r.d = number(f[3], row);
        r.L = number(f[4], row);
        r.T = number(f[5], row);
        r.e = number(f[6], row);
        rows.push_back(r);
    }
    try {
        LifeTable t(std::move(rows));
        t.validate();
        return t;
    } catch (const std::invalid_argument& e) {
        throw IngestionError(e.what());
    }
}

LifeTable LifeTable::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open life table " + path.string());
    return read_csv(in);
}

void LifeTable::write_csv(std::ostream& out) const {
    out << "age,q,l,d,L,T,e\n";
    for (const auto& r : rows_)
        out << r.age << (r.open ? "+" : "") << ',' << r.q << ',' << r.l << ',' << r.d << ',' << r.L << ',' << r.T
            << ',' << r.e << '\n';
}

const LifeRow& LifeTable::row(int age) const {
    if (age < first_age() || age > last_age())
        throw std::out_of_range("age " + std::to_string(age) + " outside the life table");
    return rows_[static_cast<std::size_t>(age - first_age())];
}

void LifeTable::validate() const {
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        const std::string at = " at age " + std::to_string(r.age);
        if (!(r.l > 0.0) || r.d < 0.0 || r.q < 0.0 || r.q > 1.0) throw std::invalid_argument("invalid row" + at);
        if (std::abs(r.d / r.l - r.q) > 1e-3) throw std::invalid_argument("q differs from d / l" + at);
        if (i + 1 < rows_.size()) {
            const auto& next = rows_[i + 1];
            if (next.l > r.l) throw std::invalid_argument("survivors increase" + at);
            if (std::abs(r.l - next.l - r.d) > 1.0) throw std::invalid_argument("d differs from l - l'" + at);
        } else if (r.open && std::abs(r.q - 1.0) > 1e-12) {
            throw std::invalid_argument("open terminal interval must have q = 1");
        }
    }
}

double DeathDistribution::total() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

double DeathDistribution::expectancy() const {
    double s = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) s += offsets[i] * mass[i];
    return s;
}

DeathDistribution conditional_death_pdf(const LifeTable& table, int current_age) {
    const LifeRow& start = table.row(current_age);
    DeathDistribution dist;
    dist.age = current_age;
    // Deaths as l - l' rather than the rounded d column, so the masses
    // telescope to exactly one.
    for (int a = current_age; a <= table.last_age(); ++a) {
        const LifeRow& r = table.row(a);
        const double t = static_cast<double>(a - current_age);
        const double deaths = r.open ? r.l : r.l - table.row(a + 1).l;
        dist.offsets.push_back(r.open ? t + r.e : t + 0.5);
        dist.mass.push_back(deaths / start.l);
    }
    return dist;
}

}  // namespace pension
