#pragma once

#include "esp/config.hpp"
#include "esp/io.hpp"
#include "esp/oracle.hpp"
#include "esp/tune.hpp"

#include <string>
#include <vector>

namespace esp {

// Header lines shared by every output artifact: tool name, units, resolved config.
std::vector<std::string> artifact_header(const std::string& what, const RunConfig& cfg);

RecordFile compute_records(const ParticleSystem& sys, const RunConfig& cfg);
RecordFile local_pressure_records(const ParticleSystem& sys, const RunConfig& cfg);
RecordFile tune_records(const TuneResult& r, const RunConfig& cfg);

/// Oracle suite on one configuration: mesh vs direct k-sum, ESP vs classical
/// Ewald, finite-difference forces and pressure, virial audit, local-pressure
/// sum and ik momentum conservation.
std::vector<OracleReport> verify_suite(const ParticleSystem& sys, const EspParams& params);
RecordFile verify_records(const std::vector<OracleReport>& reports, const RunConfig& cfg);

// Random neutral ±1 system in an orthorhombic box with a minimum separation.
ParticleSystem random_system(std::size_t n, const Vec3& L, std::uint64_t seed, double min_sep = 0.0);

// Slope of log y against log x by least squares.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingRow {
    std::size_t n = 0;
    double seconds = 0.0;
    std::size_t pairs = 0;
    std::size_t grid_points = 0;
};

// Per-step (compute) wall time for N = n_min, 2 n_min, ... at fixed density.
std::vector<ScalingRow> bench_scaling(const EspParams& params, std::size_t n_min, int doublings, double density,
                                      int repeats, std::uint64_t seed);

struct ConvergenceRow {
    int M = 0;               // grid points per dimension
    int P = 0;
    double diag_error = 0.0;     // relative L2 of the diagonal vs the reference
    double offdiag_error = 0.0;  // relative L2 of the off-diagonal vs the reference
};

// Far-field pressure error against direct_ksum for a sweep of grid sizes (fixed P)
// or of orders P (fixed M), on one configuration in a cubic box.
std::vector<ConvergenceRow> bench_grid(const ParticleSystem& sys, const EspParams& params, const std::vector<int>& Ms);
std::vector<ConvergenceRow> bench_order(const ParticleSystem& sys, const EspParams& params, int M,
                                        const std::vector<int>& Ps);

// ESP (ik forces) against classical Ewald on a few random systems, for each delta.
std::vector<CalibrationRow> run_calibration(const std::vector<double>& deltas, int systems, std::uint64_t seed,
                                            double oversampling);

} // namespace esp
