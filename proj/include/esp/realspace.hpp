#pragma once

#include "esp/kernel.hpp"
#include "esp/system.hpp"

#include <vector>

namespace esp {

struct ShortRangeResult {
    double energy = 0.0;
    Vec3List forces;
    Mat3 pressure = Mat3::Zero();
    std::size_t pair_count = 0;  // pairs within r_c
};

/// Tabulated near-field kernel: Taylor series below r_in, cubic Hermite on [r_in, r_c].
/// Tabulates g = 1 - phi0 and F_N, so near_field = g / r.
class PairTable {
public:
    PairTable() = default;

    double r_in() const { return r_in_; }
    double r_c() const { return r_c_; }
    int resolution() const { return knots_; }
    int taylor_order() const { return static_cast<int>(far_taylor_.size()) * 2 - 2; }
    const std::vector<double>& far_taylor() const { return far_taylor_; }
    const std::vector<double>& fn_taylor() const { return fn_taylor_; }

    // near_field(r) and F_N(r) for 0 < r <= r_c.
    void eval(double r, double& near, double& fn) const;

    friend PairTable build_pair_table(const SplitKernel& kern, double r_in, int resolution);

private:
    double r_in_ = 0.0, r_c_ = 0.0, inv_rc_ = 0.0;
    int knots_ = 0;
    double h_ = 0.0, inv_h_ = 0.0;
    // x = r / r_c; far_field = sum far_taylor[m] x^{2m}; F_N = 1 + x sum fn_taylor[m] x^{2m}
    std::vector<double> far_taylor_, fn_taylor_;
    // Per interval: g0, g1, dg0*h, dg1*h, f0, f1, df0*h, df1*h
    std::vector<double> seg_;
};

PairTable build_pair_table(const SplitKernel& kern, double r_in = -1.0, int resolution = 4096);

// Fused energy/force/pressure pass.  With table == nullptr the kernel is evaluated directly.
ShortRangeResult short_range(const ParticleSystem& sys, const SplitKernel& kern, const NeighborList& nl,
                             const PairTable* table = nullptr);

} // namespace esp
