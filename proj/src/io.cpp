#include "esp/io.hpp"

#include "esp/errors.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace esp {

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
    return buf;
}

namespace {

struct Token {
    std::string text;
    int column;  // 1-based
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    std::size_t end = line.find('#');
    if (end == std::string::npos) end = line.size();
    std::size_t i = 0;
    while (i < end) {
        while (i < end && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= end) break;
        std::size_t j = i;
        while (j < end && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
        i = j;
    }
    return out;
}

double parse_number(const Token& t, int line) {
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    double v = 0.0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw InputError("expected a number, got '" + t.text + "'", line, t.column);
    return v;
}

} // namespace

ParticleSystem read_particles(std::istream& in) {
    ParticleSystem sys;
    bool have_cell = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tok = tokenize(line);
        if (tok.empty()) continue;
        if (!have_cell) {
            if (tok[0].text == "cell") {
                if (tok.size() != 4) throw InputError("'cell' expects 3 lengths", lineno, tok[0].column);
                double L[3];
                for (int a = 0; a < 3; ++a) {
                    L[a] = parse_number(tok[a + 1], lineno);
                    if (!(L[a] > 0.0)) throw InputError("cell lengths must be positive", lineno, tok[a + 1].column);
                }
                sys.cell = Cell::orthorhombic(L[0], L[1], L[2]);
            } else if (tok[0].text == "cell3") {
                if (tok.size() != 10) throw InputError("'cell3' expects 9 entries", lineno, tok[0].column);
                Mat3 h;
                for (int k = 0; k < 9; ++k) h(k % 3, k / 3) = parse_number(tok[k + 1], lineno);
                try {
                    sys.cell = Cell(h);
                } catch (const CellError& e) {
                    throw InputError(e.what(), lineno, tok[0].column);
                }
            } else {
                throw InputError("expected a 'cell' or 'cell3' header before particle lines", lineno, tok[0].column);
            }
            have_cell = true;
            continue;
        }
        if (tok.size() != 5)
            throw InputError("particle line needs 5 fields (x y z q m), got " + std::to_string(tok.size()), lineno,
                             tok.size() > 5 ? tok[5].column : tok.back().column);
        double v[5];
        for (int k = 0; k < 5; ++k) v[k] = parse_number(tok[k], lineno);
        if (!(v[4] > 0.0)) throw InputError("mass must be positive", lineno, tok[4].column);
        sys.positions.push_back(sys.cell.wrap(Vec3(v[0], v[1], v[2])));
        sys.charges.push_back(v[3]);
        sys.masses.push_back(v[4]);
    }
    if (!have_cell) throw InputError("missing 'cell' header", lineno, 1);
    if (sys.positions.empty()) throw InputError("no particles", lineno, 1);
    sys.momenta.assign(sys.size(), Vec3::Zero());
    return sys;
}

ParticleSystem read_particles_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open particle file '" + path + "'");
    return read_particles(f);
}

void write_particles(std::ostream& out, const ParticleSystem& sys) {
    const Mat3& h = sys.cell.h();
    if (sys.cell.is_orthorhombic()) {
        out << "cell " << format_double(h(0, 0)) << ' ' << format_double(h(1, 1)) << ' ' << format_double(h(2, 2))
            << '\n';
    } else {
        out << "cell3";
        for (int k = 0; k < 9; ++k) out << ' ' << format_double(h(k % 3, k / 3));
        out << '\n';
    }
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const Vec3& r = sys.positions[i];
        out << format_double(r[0]) << ' ' << format_double(r[1]) << ' ' << format_double(r[2]) << ' '
            << format_double(sys.charges[i]) << ' ' << format_double(sys.masses[i]) << '\n';
    }
}

void RecordFile::add(std::string kind, std::string name, std::vector<double> values) {
    records.push_back({std::move(kind), std::move(name), std::move(values)});
}

const Record& RecordFile::find(const std::string& kind, const std::string& name) const {
    for (const auto& r : records)
        if (r.kind == kind && r.name == name) return r;
    throw InputError("no record '" + kind + " " + name + "'");
}

RecordFile read_records(std::istream& in) {
    RecordFile f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            f.header.push_back(line.size() >= 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
            continue;
        }
        const auto tok = tokenize(line);
        if (tok.size() < 2) throw InputError("record needs a kind and a name", lineno, 1);
        Record r{tok[0].text, tok[1].text, {}};
        for (std::size_t k = 2; k < tok.size(); ++k) r.values.push_back(parse_number(tok[k], lineno));
        f.records.push_back(std::move(r));
    }
    return f;
}

void write_records(std::ostream& out, const RecordFile& f) {
    for (const auto& h : f.header) out << "# " << h << '\n';
    for (const auto& r : f.records) {
        out << r.kind << ' ' << r.name;
        for (double v : r.values) out << ' ' << format_double(v);
        out << '\n';
    }
}

} // namespace esp
