#pragma once

#include "esp/solver.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace esp {

struct NptConfig {
    double dt = 0.002;
    long n_steps = 0;
    double target_T = 1.0;
    double target_P0 = 0.0;
    double tau_P = 1.0;
    double beta_T = 0.0;        // isothermal compressibility; 0 disables the barostat
    bool barostat_noise = true;
    int thermostat_period = 0;  // steps between velocity rescalings; 0 disables
    double kB = 1.0;
    std::uint64_t seed = 1;
    EspParams esp;

    double softcore_A = 1.0;  // U = A (r^-12 - r_c^-12) for r < r_c
    double skin = 0.3;
    double force_ceiling = 1e6;
    double volume_floor = 0.0;      // absolute; 0: 10% of the initial volume
    double replan_threshold = 0.02;  // relative volume change since the last plan
    long record_every = 1;
    long burn_in = 0;  // steps excluded from the statistics

    // Throws ParameterError on the first violated invariant.
    void validate() const;
};

struct ThermoRecord {
    long step = 0;
    double time = 0.0;
    double T = 0.0;
    Mat3 P_ins = Mat3::Zero();  // kinetic + near + far + corrections + soft core
    double V = 0.0;
    double U_near = 0.0, U_far = 0.0, U_self = 0.0, U_background = 0.0, U_soft = 0.0;
    double kinetic = 0.0;

    double potential() const { return U_near + U_far + U_self + U_background + U_soft; }
    double total() const { return kinetic + potential(); }
    double enthalpy(double P0) const { return total() + P0 * V; }
};

struct MeanError {
    double mean = 0.0;
    double stderr_ = 0.0;  // block-averaged standard error
    std::size_t samples = 0;
};

struct NptStatistics {
    MeanError pressure;  // (1/3) tr P_ins
    MeanError volume;
    MeanError temperature;
    double energy_drift = 0.0;  // max |E - E_0| / |E_0| over the run
    double max_net_force = 0.0;  // max |sum F| / sum |F| over the run
    long replans = 0;
    long neighbor_rebuilds = 0;
};

struct NptTrajectory {
    std::vector<ThermoRecord> records;
    NptStatistics stats;
    ParticleSystem final_state;
    std::vector<double> volumes;  // every step, for determinism checks
};

struct SoftCoreResult {
    double energy = 0.0;
    Vec3List forces;
    Mat3 pressure = Mat3::Zero();
};

SoftCoreResult soft_core(const ParticleSystem& sys, const NeighborList& nl, double A, double r_c);

Mat3 kinetic_pressure(const ParticleSystem& sys);
double kinetic_energy(const ParticleSystem& sys);
// 2K / (kB (3N - 3)), center-of-mass motion removed from the count.
double kinetic_temperature(const ParticleSystem& sys, double kB = 1.0);

// Maxwell-Boltzmann momenta at T with zero total momentum.
void init_momenta(ParticleSystem& sys, double T, double kB, std::mt19937_64& rng);

/// Euler-Maruyama step of the isotropic stochastic cell-rescaling SDE for
/// eps = ln V; rescales the cell and positions (momenta unchanged).  Returns d eps.
double barostat_step(ParticleSystem& sys, const Mat3& P_ins, const NptConfig& cfg, std::mt19937_64& rng,
                     double volume_floor, long step);

// Block-averaged mean and standard error.
MeanError block_average(const std::vector<double>& x, int blocks = 20);

using RecordSink = std::function<void(const ThermoRecord&)>;

NptTrajectory integrate(const NptConfig& cfg, const ParticleSystem& initial, const RecordSink& sink = {});

// Random non-overlapping ±q system at number density rho, in a cubic box.
ParticleSystem toy_system(std::size_t n, double rho, std::uint64_t seed, double min_sep = 0.9);

} // namespace esp
