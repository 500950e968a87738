#pragma once

#include "esp/fft.hpp"
#include "esp/kernel.hpp"
#include "esp/system.hpp"

#include <complex>
#include <memory>
#include <optional>
#include <vector>

namespace esp {

struct GridSpec {
    Dims M{0, 0, 0};
    Vec3 L = Vec3::Zero();
    Vec3 spacing = Vec3::Zero();
    int P = 0;
    Vec3 omega = Vec3::Zero();  // P h_d / 2
    double delta_spread = 0.0;
    double oversampling = 1.0;
    std::shared_ptr<const PswfBasis> spread_basis;
    WindowTable window;

    std::size_t points() const { return full_size(M); }
    double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
};

GridSpec plan_grid(const Cell& cell, const SplitKernel& kern, double delta_spread, int P, double oversampling = 1.0,
                   double table_tol = 1e-13);

// Same, reusing an existing spreading basis (keeps c_spread fixed).
GridSpec plan_grid(const Cell& cell, const SplitKernel& kern, std::shared_ptr<const PswfBasis> spread_basis, int P,
                   double oversampling, double delta_spread);

// Explicit point counts; the GridSpec invariants are still checked.
GridSpec make_grid(const Cell& cell, const SplitKernel& kern, std::shared_ptr<const PswfBasis> spread_basis, int P,
                   const Dims& M, double delta_spread, double oversampling = 1.0);

// Keep M, P and the basis, and follow the cell to new box lengths.
GridSpec rescale_grid(const GridSpec& spec, const Cell& cell);

// Throws PlanningError naming the first violated GridSpec invariant.
void check_grid(const GridSpec& spec, const Cell& cell, const SplitKernel& kern);

struct GridField {
    Dims M{0, 0, 0};
    bool spectral = false;
    std::vector<double> real;                   // M_x M_y M_z, z fastest
    std::vector<std::complex<double>> modes;  // half spectrum
};

enum class ForceMode { ik, analytic };

struct LongRangeResult {
    double energy = 0.0;
    Vec3List forces;
    Mat3 pressure = Mat3::Zero();
    std::optional<std::vector<Mat3>> per_particle_pressure;
};

struct LongRangeOptions {
    bool forces = true;
    bool pressure = true;
    bool local_pressure = false;
    ForceMode mode = ForceMode::analytic;
};

// rho_grid(x_g) = sum_j q_j W(x_g - r_j), periodized.
GridField spread_charges(const ParticleSystem& sys, const GridSpec& spec);

// rho_hat(m) = dV_g sum_g rho_grid(x_g) e^{-2 pi i m.g/M}; one forward transform.
GridField forward_transform(const GridField& rho, const GridSpec& spec, FftProvider& fft);

// W_hat(k) = prod_d omega_d lambda0 psi0(omega_d k_d / c_spread); 0 outside the band.
double window_hat(const GridSpec& spec, const Vec3& k);

Mat3 long_range_pressure(const GridField& rho_hat, const SplitKernel& kern, const GridSpec& spec, const Cell& cell);
double long_range_energy(const GridField& rho_hat, const SplitKernel& kern, const GridSpec& spec, const Cell& cell);
Vec3List long_range_forces(const GridField& rho_hat, const ParticleSystem& sys, const SplitKernel& kern,
                           const GridSpec& spec, ForceMode mode, FftProvider& fft);
std::vector<Mat3> local_pressure(const GridField& rho_hat, const ParticleSystem& sys, const SplitKernel& kern,
                                 const GridSpec& spec, FftProvider& fft);

// Whole pipeline with a single forward transform.
LongRangeResult long_range(const ParticleSystem& sys, const SplitKernel& kern, const GridSpec& spec,
                           FftProvider& fft, const LongRangeOptions& opts = {});

// Number of retained modes |k| <= kmax, k != 0, over the full (not half) spectrum.
std::size_t retained_modes(const GridSpec& spec, const SplitKernel& kern);

ForceMode parse_force_mode(const std::string& s);
const char* to_string(ForceMode m);

} // namespace esp
