#pragma once

#include "esp/kernel.hpp"
#include "esp/system.hpp"

#include <functional>
#include <string>
#include <vector>

namespace esp {

struct OracleReport {
    std::string quantity;
    std::vector<double> oracle;
    std::vector<double> test;
    double abs_dev = 0.0;
    double rel_dev = 0.0;
    double tol = 0.0;
    bool pass = false;
};

inline constexpr double kRelativeFloor = 1e-300;

// |a - b| / max(|a|, |b|, floor)
double relative_deviation(double a, double b);
// ||a - b|| / max(||a||, ||b||, floor) over the flattened vectors.
double relative_l2(const std::vector<double>& a, const std::vector<double>& b);
OracleReport make_report(const std::string& quantity, std::vector<double> oracle, std::vector<double> test, double tol);

std::vector<double> flatten(const Vec3List& v);
std::vector<double> flatten(const Mat3& m);

struct OracleResult {
    double energy = 0.0;
    Vec3List forces;
    Mat3 pressure = Mat3::Zero();
};

// Exact structure-factor sum over |k| <= kmax, k != 0, any cell.
OracleResult direct_ksum(const ParticleSystem& sys, const SplitKernel& kern);

struct EwaldParams {
    double alpha = 0.0;  // Gaussian splitting parameter beta
    double r_cut = 0.0;
    double k_cut = 0.0;
};

// Parameters for ~1e-12 relative truncation error.
EwaldParams ewald_recipe(const Cell& cell, double tol = 1e-13);

// Gaussian-split Ewald with tin-foil boundary and uniform neutralizing background.
// With check = true the result is recomputed with enlarged cutoffs and an OracleError is
// thrown if the two disagree beyond 1e-10 relative.
OracleResult classical_ewald(const ParticleSystem& sys, const EwaldParams& p, bool check = true);

using EnergyFunctional = std::function<double(const ParticleSystem&)>;

// Central differences of the energy vs analytic forces (relative L2 over all components).
// Escalates to a 5-point stencil, then halves the step twice, before reporting failure.
OracleReport fd_force_check(const ParticleSystem& sys, const EnergyFunctional& energy, const Vec3List& forces,
                            double step = -1.0, double tol = 1e-5);

enum class Coupling { isotropic, anisotropic, flexible };
Coupling parse_coupling(const std::string& s);
const char* to_string(Coupling c);

// Strain derivatives of the energy at fixed fractional coordinates vs the analytic potential
// pressure tensor: isotropic compares tr(P)/3, anisotropic the diagonal, flexible all 9 entries
// of -(1/V) (dE/dh) h^T.
OracleReport fd_pressure_check(const ParticleSystem& sys, Coupling coupling, const EnergyFunctional& energy,
                               const Mat3& pressure, double step = 1e-6, double tol = 1e-5);

// tr(P_N + P_F) V - (U_N + U_F + U_self), tolerance 10 delta |U|.
OracleReport virial_audit(double U_total, const Mat3& P_potential, double V, double delta);

// Madelung constant of rock salt from classical Ewald on the 8-ion conventional cell.
double rocksalt_madelung(double a = 1.0);

} // namespace esp
