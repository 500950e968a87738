#include "esp/errors.hpp"
#include "esp/oracle.hpp"
#include "esp/realspace.hpp"
#include "esp/solver.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace esp;
using esp::test::rel;

namespace {

Mat3 sheared(double Lx, double Ly, double Lz) {
    Mat3 h = Vec3(Lx, Ly, Lz).asDiagonal();
    h(0, 1) = 0.2 * Ly;
    h(0, 2) = -0.1 * Lz;
    h(1, 2) = 0.15 * Lz;
    return h;
}

// Mesh-free ESP total: real-space sum plus direct k-sum plus self and background terms.
double esp_total(const ParticleSystem& s, const SplitKernel& k, Mat3* P = nullptr, Vec3List* F = nullptr) {
    const ShortRangeResult sr = short_range(s, k, build_cell_list(s, k.r_c()));
    const OracleResult d = direct_ksum(s, k);
    const BackgroundCorrection bc = k.background_correction(s.total_charge(), s.cell.volume());
    if (P) *P = sr.pressure + d.pressure + bc.pressure;
    if (F) {
        *F = sr.forces;
        for (std::size_t i = 0; i < F->size(); ++i) (*F)[i] += d.forces[i];
    }
    return sr.energy + d.energy + k.self_energy(s.charges) + bc.energy();
}

SplitKernel kernel(double delta, double r_c) { return SplitKernel(build_pswf(solve_bandwidth(delta)), r_c); }

} // namespace

TEST_CASE("relative deviation and reports") {
    CHECK(relative_deviation(0.0, 0.0) == 0.0);
    CHECK(relative_deviation(1.0, 1.5) == doctest::Approx(1.0 / 3.0));
    const OracleReport r = make_report("x", {1.0, 2.0}, {1.0, 2.0 + 1e-9}, 1e-8);
    CHECK(r.pass);
    CHECK(r.abs_dev == doctest::Approx(1e-9));
}

TEST_CASE("direct k-sum: zeros, symmetry, invariances") {
    const SplitKernel k = kernel(1e-6, 2.0);
    auto zero = esp::test::random_charges(6, 5.0, 1);
    for (auto& q : zero.charges) q = 0.0;
    const OracleResult z = direct_ksum(zero, k);
    CHECK(z.energy == 0.0);
    CHECK(z.pressure.norm() == 0.0);

    const auto pair = esp::test::pair_system(5.0, Vec3(1, 1, 1), Vec3(1.8, 1.5, 1.2));
    const OracleResult p = direct_ksum(pair, k);
    CHECK((p.pressure - p.pressure.transpose()).norm() <= 1e-14 * p.pressure.norm());
    // combined identity: tr(P_N + P_F) V = U_N + U_F + U_self up to delta
    const ShortRangeResult sr = short_range(pair, k, build_cell_list(pair, k.r_c()));
    const double U = sr.energy + p.energy + k.self_energy(pair.charges);
    const OracleReport v = virial_audit(U, sr.pressure + p.pressure, pair.cell.volume(), 1e-6);
    CHECK(v.pass);

    const auto tri = esp::test::random_charges(32, sheared(6.0, 6.5, 7.0), 3);
    const OracleResult a = direct_ksum(tri, k);
    auto perm = tri;
    std::reverse(perm.positions.begin(), perm.positions.end());
    std::reverse(perm.charges.begin(), perm.charges.end());
    CHECK(rel(direct_ksum(perm, k).energy, a.energy) < 1e-11);
    auto moved = tri;
    for (auto& x : moved.positions) x = moved.cell.wrap(x + Vec3(0.77, -1.3, 2.1));
    const OracleResult b = direct_ksum(moved, k);
    CHECK(rel(b.energy, a.energy) < 1e-11);
    CHECK(relative_l2(flatten(b.pressure), flatten(a.pressure)) < 1e-11);
}

TEST_CASE("classical Ewald: isolated pair, convergence, Madelung constant") {
    const auto pair = esp::test::pair_system(40.0, Vec3(10, 10, 10), Vec3(11, 10, 10));
    EwaldParams p = ewald_recipe(pair.cell);
    const OracleResult a = classical_ewald(pair, p);
    CHECK(std::fabs(a.energy + 1.0) < 1e-2);
    CHECK(std::fabs(a.energy + 1.0) > 1e-6);
    EwaldParams q = p;
    q.k_cut *= 2.0;
    CHECK(std::fabs(classical_ewald(pair, q, false).energy - a.energy) < 1e-10);
    CHECK(std::fabs(rocksalt_madelung() - 1.747564594633182) < 1e-8);
    CHECK(std::fabs(rocksalt_madelung(2.5) - 1.747564594633182) < 1e-8);
}

TEST_CASE("ESP and classical Ewald agree on neutral and charged systems") {
    for (double delta : {1e-6, 1e-8}) {
        const auto sys = esp::test::random_charges(24, Mat3(Vec3(6.0, 6.5, 7.0).asDiagonal()), 5);
        const SplitKernel k = kernel(delta, 2.8);
        const double U = esp_total(sys, k);
        const OracleResult ew = classical_ewald(sys, ewald_recipe(sys.cell));
        CHECK(std::fabs(U - ew.energy) <= std::max(1e-9, delta * std::fabs(ew.energy)));
    }
    auto charged = esp::test::random_charges(15, 6.0, 9, false);
    REQUIRE(std::fabs(charged.total_charge()) > 0.5);
    const SplitKernel k = kernel(1e-8, 2.8);
    Mat3 P;
    const double U = esp_total(charged, k, &P);
    const OracleResult ew = classical_ewald(charged, ewald_recipe(charged.cell));
    CHECK(std::fabs(U - ew.energy) <= std::max(1e-9, 1e-8 * std::fabs(ew.energy)));
}

TEST_CASE("finite-difference force check") {
    const SplitKernel k = kernel(1e-8, 2.0);
    const EnergyFunctional E = [&](const ParticleSystem& s) { return esp_total(s, k); };

    ParticleSystem one;
    one.cell = Cell::cubic(5.0);
    one.positions = {Vec3(1, 2, 3)};
    one.charges = {1.0};
    one.masses = {1.0};
    Vec3List F;
    esp_total(one, k, nullptr, &F);
    CHECK(F[0].norm() < 1e-12);
    CHECK(fd_force_check(one, E, F).abs_dev < 1e-8);

    const auto pair = esp::test::pair_system(5.0, Vec3(1, 1, 1), Vec3(1.9, 1.6, 1.3));
    esp_total(pair, k, nullptr, &F);
    CHECK(fd_force_check(pair, E, F, -1.0, 1e-6).pass);

    const auto sys = esp::test::random_charges(16, 5.0, 13, true, 0.6);
    esp_total(sys, k, nullptr, &F);
    const OracleReport r = fd_force_check(sys, E, F);
    CHECK(r.pass);
    CHECK(r.rel_dev <= 1e-5);
}

TEST_CASE("finite-difference pressure check in all couplings") {
    const SplitKernel k = kernel(1e-8, 2.0);
    const EnergyFunctional E = [&](const ParticleSystem& s) { return esp_total(s, k); };
    auto zero = esp::test::random_charges(8, 5.0, 2);
    for (auto& q : zero.charges) q = 0.0;
    Mat3 P;
    esp_total(zero, k, &P);
    CHECK(P.norm() == 0.0);
    CHECK(fd_pressure_check(zero, Coupling::isotropic, E, P).abs_dev == 0.0);

    const auto sys = esp::test::random_charges(16, Mat3(Vec3(5.0, 5.4, 5.8).asDiagonal()), 14, true, 0.6);
    esp_total(sys, k, &P);
    CHECK(fd_pressure_check(sys, Coupling::isotropic, E, P).rel_dev <= 1e-5);
    CHECK(fd_pressure_check(sys, Coupling::anisotropic, E, P).rel_dev <= 1e-5);

    const auto tri = esp::test::random_charges(16, sheared(5.0, 5.4, 5.8), 15, true, 0.6);
    esp_total(tri, k, &P);
    CHECK((P - P.transpose()).norm() <= 1e-12 * P.norm());
    const OracleReport f = fd_pressure_check(tri, Coupling::flexible, E, P);
    CHECK(f.rel_dev <= 1e-5);
    CHECK(f.oracle.size() == 9);
    CHECK(parse_coupling("flexible") == Coupling::flexible);
    CHECK_THROWS_AS(parse_coupling("semi"), ParameterError);
}

TEST_CASE("virial audit") {
    const OracleReport z = virial_audit(0.0, Mat3::Zero(), 10.0, 1e-6);
    CHECK(z.pass);
    CHECK(z.abs_dev == 0.0);

    const SplitKernel k6 = kernel(1e-6, 2.0);
    const auto pair = esp::test::pair_system(5.0, Vec3(1, 1, 1), Vec3(1.7, 1.4, 0.8));
    Mat3 P;
    const double U = esp_total(pair, k6, &P);
    CHECK(virial_audit(U, P, pair.cell.volume(), 1e-6).pass);

    // 128 random charges; the residual is intrinsic to the truncated splitting (see the ledger)
    const auto sys = esp::test::random_charges(128, 10.0, 16, true, 0.8);
    for (double delta : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const SplitKernel k = kernel(delta, 4.0);
        const double Ut = esp_total(sys, k, &P);
        const OracleReport r = virial_audit(Ut, P, sys.cell.volume(), delta);
        CHECK_MESSAGE(r.pass, "delta = " << delta << " residual/|U| = " << r.rel_dev);
    }
}
