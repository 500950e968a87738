#pragma once

#include "esp/system.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace esp {

// %.17g; round-trips every finite double.
std::string format_double(double x);

/// Particle file: `cell Lx Ly Lz` or `cell3 h11 h21 h31 h12 h22 h32 h13 h23 h33`
/// (column-major), then one `x y z q m` line per particle.  `#` starts a comment.
/// Positions are wrapped into the primary cell; momenta start at zero.
ParticleSystem read_particles(std::istream& in);
ParticleSystem read_particles_file(const std::string& path);
void write_particles(std::ostream& out, const ParticleSystem& sys);

/// Whitespace-delimited output records: `kind name v1 v2 ...`, preceded by `#`
/// header lines.  Values are written with format_double, so reading a file and
/// writing it again reproduces it byte for byte.
struct Record {
    std::string kind;
    std::string name;
    std::vector<double> values;
};

struct RecordFile {
    std::vector<std::string> header;  // without the leading "# "
    std::vector<Record> records;

    void add(std::string kind, std::string name, std::vector<double> values);
    // First record with this kind and name; throws InputError when absent.
    const Record& find(const std::string& kind, const std::string& name) const;
};

RecordFile read_records(std::istream& in);
void write_records(std::ostream& out, const RecordFile& f);

} // namespace esp
