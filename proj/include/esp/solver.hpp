#pragma once

#include "esp/mesh.hpp"
#include "esp/realspace.hpp"

#include <memory>
#include <optional>

namespace esp {

struct EspParams {
    double delta_split = 1e-4;
    double delta_spread = 0.0;  // 0: same as delta_split
    int P = 0;                  // 0: ceil(-log10 delta_spread) + 1
    double r_c = 0.0;
    double oversampling = 1.0;
    ForceMode mode = ForceMode::analytic;
    double prefactor = 1.0;  // Coulomb constant multiplying every electrostatic output
    double table_tol = 1e-13;
    bool use_pair_table = true;
    double r_in = 0.0;  // 0: 0.1 r_c
    int table_resolution = 4096;
    double pswf_table_tol() const { return table_tol; }
};

// Fill defaults (delta_spread, P, r_in) deterministically.
EspParams resolve(EspParams p);
int default_order(double delta);

struct EspResult {
    double U_near = 0.0, U_far = 0.0, U_self = 0.0, U_cb = 0.0, U_bb = 0.0;
    Vec3List forces;       // total electrostatic force
    Vec3List forces_near, forces_far;
    PressureTensor pressure;  // kinetic left at zero
    std::optional<std::vector<Mat3>> per_particle_far;
    std::size_t pair_count = 0;

    double energy() const { return U_near + U_far + U_self + U_cb + U_bb; }
    // U_N + U_F + U_self, the part entering the virial identity
    double coulomb_energy() const { return U_near + U_far + U_self; }
};

/// ESP electrostatics for one cell geometry.  Re-plan by calling set_cell; the
/// splitting and spreading bases stay fixed.
class EspSolver {
public:
    EspSolver(const EspParams& params, const Cell& cell);

    const EspParams& params() const { return params_; }
    const SplitKernel& kernel() const { return kern_; }
    const GridSpec& grid() const { return grid_; }
    const PairTable& pair_table() const { return table_; }
    FftProvider& fft() { return *fft_; }

    // Re-plan the grid for a new cell (M recomputed).
    void replan(const Cell& cell);
    // Follow a cell change with M fixed.
    void follow(const Cell& cell);

    EspResult compute(const ParticleSystem& sys, const NeighborList* nl = nullptr, bool local_pressure = false,
                      bool forces = true);
    double energy(const ParticleSystem& sys);

private:
    EspParams params_;
    SplitKernel kern_;
    std::shared_ptr<const PswfBasis> spread_;
    GridSpec grid_;
    PairTable table_;
    std::unique_ptr<FftProvider> fft_;
};

} // namespace esp
