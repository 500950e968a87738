#include "esp/system.hpp"

#include "esp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esp {

Mat3 reciprocal_basis(const Mat3& h) {
    const double det = h.determinant();
    if (!(det > 0.0)) throw CellError("cell matrix must have positive determinant (got " + std::to_string(det) + ")");
    const double scale = h.cwiseAbs().maxCoeff();
    if (det < 1e-12 * scale * scale * scale) throw CellError("cell matrix is numerically singular");
    return 2.0 * M_PI * h.inverse().transpose();
}

Cell::Cell(const Mat3& h) : h_(h) {
    recip_ = reciprocal_basis(h);
    h_inv_ = h.inverse();
    volume_ = h.determinant();
}

Cell Cell::orthorhombic(double Lx, double Ly, double Lz) {
    Mat3 h = Mat3::Zero();
    h.diagonal() << Lx, Ly, Lz;
    return Cell(h);
}

bool Cell::is_orthorhombic() const {
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b && h_(a, b) != 0.0) return false;
    return true;
}

Vec3 Cell::perpendicular_widths() const {
    Vec3 w;
    for (int a = 0; a < 3; ++a) w[a] = 2.0 * M_PI / recip_.col(a).norm();
    return w;
}

Vec3 Cell::wrap(const Vec3& r) const {
    Vec3 s = h_inv_ * r;
    if (s.minCoeff() >= 0.0 && s.maxCoeff() < 1.0) return r;
    for (int a = 0; a < 3; ++a) {
        s[a] -= std::floor(s[a]);
        if (s[a] >= 1.0) s[a] = 0.0;  // -tiny + 1 rounds to 1
    }
    return h_ * s;
}

Vec3 Cell::minimum_image(const Vec3& dr) const {
    Vec3 s = h_inv_ * dr;
    for (int a = 0; a < 3; ++a) s[a] -= std::floor(s[a] + 0.5);
    return h_ * s;
}

double ParticleSystem::total_charge() const {
    double q = 0.0;
    for (double x : charges) q += x;
    return q;
}

void ParticleSystem::validate() const {
    const std::size_t n = positions.size();
    if (n == 0) throw ParameterError("particle system is empty");
    if (charges.size() != n || masses.size() != n || momenta.size() != n)
        throw ParameterError("particle arrays have inconsistent sizes");
    for (std::size_t i = 0; i < n; ++i)
        if (!(masses[i] > 0.0)) throw ParameterError("mass of particle " + std::to_string(i) + " is not positive");
}

void ParticleSystem::wrap() {
    for (auto& r : positions) r = cell.wrap(r);
}

void ParticleSystem::rescale_cell(const Mat3& h_new) {
    Cell next(h_new);
    for (auto& r : positions) r = next.wrap(h_new * cell.to_fractional(r));
    cell = next;
}

namespace {

void check_geometry(const Cell& cell, double reach) {
    if (!(reach < 0.5 * cell.min_width()))
        throw GeometryError("cutoff + skin = " + std::to_string(reach) +
                            " must be less than half the minimum perpendicular cell width (" +
                            std::to_string(0.5 * cell.min_width()) + ")");
}

} // namespace

NeighborList build_all_pairs(const ParticleSystem& sys, double r_c, double skin) {
    const double reach = r_c + skin;
    check_geometry(sys.cell, reach);
    NeighborList nl;
    nl.cutoff = r_c;
    nl.skin = skin;
    nl.reference_positions = sys.positions;
    nl.reference_h = sys.cell.h();
    const double r2 = reach * reach;
    const std::size_t n = sys.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (sys.cell.minimum_image(sys.positions[i] - sys.positions[j]).squaredNorm() <= r2)
                nl.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    return nl;
}

NeighborList build_cell_list(const ParticleSystem& sys, double r_c, double skin) {
    const double reach = r_c + skin;
    check_geometry(sys.cell, reach);
    const Vec3 w = sys.cell.perpendicular_widths();
    int nb[3];
    for (int a = 0; a < 3; ++a) nb[a] = static_cast<int>(std::floor(w[a] / reach));
    if (nb[0] < 3 || nb[1] < 3 || nb[2] < 3) return build_all_pairs(sys, r_c, skin);

    const std::size_t n = sys.size();
    const std::size_t nbins = static_cast<std::size_t>(nb[0]) * nb[1] * nb[2];
    std::vector<int> bin_of(n);
    std::vector<std::size_t> start(nbins + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 s = sys.cell.to_fractional(sys.positions[i]);
        int b[3];
        for (int a = 0; a < 3; ++a) {
            double f = s[a] - std::floor(s[a]);
            b[a] = std::min(static_cast<int>(f * nb[a]), nb[a] - 1);
        }
        bin_of[i] = (b[0] * nb[1] + b[1]) * nb[2] + b[2];
        ++start[bin_of[i] + 1];
    }
    for (std::size_t b = 0; b < nbins; ++b) start[b + 1] += start[b];
    std::vector<std::uint32_t> members(n);
    {
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t i = 0; i < n; ++i) members[fill[bin_of[i]]++] = static_cast<std::uint32_t>(i);
    }

    NeighborList nl;
    nl.cutoff = r_c;
    nl.skin = skin;
    nl.reference_positions = sys.positions;
    nl.reference_h = sys.cell.h();
    const double r2 = reach * reach;
    for (std::size_t i = 0; i < n; ++i) {
        const int b = bin_of[i];
        const int bx = b / (nb[1] * nb[2]), by = (b / nb[2]) % nb[1], bz = b % nb[2];
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    const int x = (bx + dx + nb[0]) % nb[0], y = (by + dy + nb[1]) % nb[1],
                              z = (bz + dz + nb[2]) % nb[2];
                    const int nbr = (x * nb[1] + y) * nb[2] + z;
                    for (std::size_t m = start[nbr]; m < start[nbr + 1]; ++m) {
                        const std::uint32_t j = members[m];
                        if (j <= i) continue;
                        if (sys.cell.minimum_image(sys.positions[i] - sys.positions[j]).squaredNorm() <= r2)
                            nl.pairs.emplace_back(static_cast<std::uint32_t>(i), j);
                    }
                }
    }
    std::sort(nl.pairs.begin(), nl.pairs.end());
    return nl;
}

bool needs_rebuild(const NeighborList& nl, const ParticleSystem& sys) {
    if (nl.reference_positions.size() != sys.size()) return true;
    if (nl.skin <= 0.0) return true;
    // Affine part of the motion bounds pair-distance changes by the strain norm.
    const Mat3 affine = sys.cell.h() * nl.reference_h.inverse();
    const double strain = (affine - Mat3::Identity()).norm();
    double max_disp = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        Vec3 d = sys.cell.minimum_image(sys.positions[i] - affine * nl.reference_positions[i]);
        max_disp = std::max(max_disp, d.norm());
    }
    return 2.0 * max_disp + strain * (nl.cutoff + nl.skin) > nl.skin;
}

} // namespace esp
