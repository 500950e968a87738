#pragma once

#include "esp/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace esp {

// Columns of h are the cell vectors; reciprocal() has columns b_beta with h_alpha . b_beta = 2 pi delta.
class Cell {
public:
    Cell() = default;
    explicit Cell(const Mat3& h);
    static Cell orthorhombic(double Lx, double Ly, double Lz);
    static Cell cubic(double L) { return orthorhombic(L, L, L); }

    const Mat3& h() const { return h_; }
    const Mat3& h_inv() const { return h_inv_; }
    const Mat3& reciprocal() const { return recip_; }
    double volume() const { return volume_; }
    bool is_orthorhombic() const;
    Vec3 lengths() const { return {h_.col(0).norm(), h_.col(1).norm(), h_.col(2).norm()}; }
    // Distances between opposite faces.
    Vec3 perpendicular_widths() const;
    double min_width() const { return perpendicular_widths().minCoeff(); }

    Vec3 to_fractional(const Vec3& r) const { return h_inv_ * r; }
    Vec3 to_cartesian(const Vec3& s) const { return h_ * s; }
    Vec3 wrap(const Vec3& r) const;
    Vec3 minimum_image(const Vec3& dr) const;

private:
    Mat3 h_ = Mat3::Identity();
    Mat3 h_inv_ = Mat3::Identity();
    Mat3 recip_ = 2.0 * M_PI * Mat3::Identity();
    double volume_ = 1.0;
};

Mat3 reciprocal_basis(const Mat3& h);

struct ParticleSystem {
    Vec3List positions;
    std::vector<double> charges;
    std::vector<double> masses;
    Vec3List momenta;
    Cell cell;

    std::size_t size() const { return positions.size(); }
    double total_charge() const;
    // Throws on size mismatch, N = 0 or non-positive masses.
    void validate() const;
    void wrap();
    // Scale the cell to h_new keeping fractional coordinates.
    void rescale_cell(const Mat3& h_new);
};

struct NeighborList {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // i < j
    double cutoff = 0.0;
    double skin = 0.0;
    Vec3List reference_positions;  // positions at build time
    Mat3 reference_h = Mat3::Identity();
};

// Every unordered pair with minimum-image distance <= r_c + skin, each exactly once.
NeighborList build_cell_list(const ParticleSystem& sys, double r_c, double skin = 0.0);

// All-pairs reference with the same semantics.
NeighborList build_all_pairs(const ParticleSystem& sys, double r_c, double skin = 0.0);

// True when positions or the cell moved enough that pairs within r_c may be missing.
bool needs_rebuild(const NeighborList& nl, const ParticleSystem& sys);

} // namespace esp
