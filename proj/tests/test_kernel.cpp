#include "esp/errors.hpp"
#include "esp/kernel.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace esp;
using esp::test::rel;

namespace {

const SplitKernel& kern12() {
    static const SplitKernel k(build_pswf(12.0), 0.9);
    return k;
}

} // namespace

TEST_CASE("splitting identity on log-spaced radii") {
    for (double delta : {1e-3, 1e-6, 1e-8}) {
        const SplitKernel k(build_pswf(solve_bandwidth(delta)), 1.3);
        double worst = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const double r = k.r_c() * std::pow(10.0, -6.0 + 6.0 * i / 9999.0);
            worst = std::max(worst, std::fabs(k.near_field(r) + k.far_field(r) - 1.0 / r) * r);
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("near field examples") {
    const SplitKernel& k = kern12();
    CHECK(k.near_field(k.r_c()) == 0.0);
    CHECK(k.near_field(2.0 * k.r_c()) == 0.0);
    const double r = 0.3 * k.r_c();
    CHECK(std::fabs(k.near_field(r) - (1.0 / r - k.far_field(r))) * r < 1e-12);
    CHECK_THROWS_AS(k.near_field(0.0), SingularityError);
}

TEST_CASE("far field examples") {
    const SplitKernel& k = kern12();
    const PswfBasis& b = k.basis();
    CHECK(rel(k.far_field(0.0), b.psi0_at_zero() / (b.C0() * k.r_c())) < 1e-14);
    CHECK(rel(k.far_field(3.0 * k.r_c()), 1.0 / (3.0 * k.r_c())) < 1e-15);
    const double r = 0.5 * k.r_c();
    const double q = esp::test::integrate([&](double t) { return b.expansion(t); }, 0.0, 0.5) / b.C0();
    CHECK(rel(k.far_field(r), q / r) < 1e-11);
}

TEST_CASE("far field is C1 at the cutoff to delta level") {
    const SplitKernel& k = kern12();
    const double rc = k.r_c(), h = 1e-6;
    const double delta = k.basis().value_at_one();
    CHECK(std::fabs(k.far_field(rc) - 1.0 / rc) * rc < 1e-12);
    const double d = (k.far_field(rc) - k.far_field(rc - h)) / h;
    CHECK(std::fabs(d + 1.0 / (rc * rc)) * rc * rc < 10.0 * delta);
}

TEST_CASE("far field transform: limits, band, radial Fourier transform") {
    const SplitKernel& k = kern12();
    const double km = k.kmax();
    const double small = 1e-4 * km;
    CHECK(std::fabs(k.far_field_hat(small) * small * small / (4.0 * M_PI) - 1.0) < 1e-6);
    CHECK(k.far_field_hat(1.01 * km) == 0.0);
    CHECK_THROWS_AS(k.far_field_hat(0.0), ZeroModeError);

    // F_hat(k) = (4 pi / k) int_0^inf r F(r) sin(kr) dr; beyond r_c the tail is 1/r,
    // whose regularized contribution is (4 pi / k^2) cos(k r_c).
    const double kk = 0.6 * km, rc = k.r_c();
    const double inner = esp::test::integrate([&](double r) { return r * k.far_field(r) * std::sin(kk * r); }, 0.0, rc);
    const double ft = 4.0 * M_PI / kk * inner + 4.0 * M_PI / (kk * kk) * std::cos(kk * rc);
    CHECK(rel(k.far_field_hat(kk), ft) < 1e-8);
}

TEST_CASE("fn_weight examples") {
    const SplitKernel& k = kern12();
    const PswfBasis& b = k.basis();
    CHECK(std::fabs(k.fn_weight(1e-9 * k.r_c()) - 1.0) < 1e-10);
    CHECK(rel(k.fn_weight(k.r_c()), b.value_at_one() / b.C0()) < 1e-10);
    CHECK(k.fn_weight(1.0001 * k.r_c()) == 0.0);
    const double r = 0.7 * k.r_c(), h = 1e-6 * k.r_c();
    const double fd = -r * r * (k.near_field(r + h) - k.near_field(r - h)) / (2.0 * h);
    CHECK(std::fabs(fd - k.fn_weight(r)) < 1e-7);
    CHECK_THROWS_AS(k.fn_weight(0.0), DomainError);
}

TEST_CASE("pressure kernel examples and symmetries") {
    const SplitKernel& k = kern12();
    const double km = k.kmax();
    const Mat3 Px = k.pressure_kernel_hat(Vec3(0.5 * km, 0, 0));
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (a != b) CHECK(Px(a, b) == 0.0);
    CHECK(k.pressure_kernel_hat(Vec3(0.8 * km, 0.8 * km, 0)).norm() == 0.0);
    CHECK_THROWS_AS(k.pressure_kernel_hat(Vec3::Zero()), ZeroModeError);

    const Vec3 kv = Vec3(0.4, 0.3, 0.2) * km;
    const double kn = kv.norm();
    const PswfBasis& b = k.basis();
    const double x = kn * k.r_c() / b.c();
    const double tr = k.far_field_hat(kn) + 2.0 * M_PI * b.lambda0() / b.C0() * x * eval_psi0(b, x, 1) / (kn * kn);
    const Mat3 P = k.pressure_kernel_hat(kv);
    CHECK(rel(P.trace(), tr) < 1e-13);
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK((P - k.pressure_kernel_hat(-kv)).norm() <= 1e-15 * P.norm());

    // trace depends on |k| only
    const Eigen::AngleAxisd rot(0.7, Vec3(1, 2, 3).normalized());
    const Mat3 Pr = k.pressure_kernel_hat(rot * kv);
    CHECK(std::fabs(Pr.trace() - P.trace()) <= 1e-12 * std::fabs(P.trace()));
}

TEST_CASE("self energy") {
    const SplitKernel& k = kern12();
    const PswfBasis& b = k.basis();
    CHECK(k.self_energy(std::vector<double>{}) == 0.0);
    CHECK(rel(k.self_energy(std::vector<double>{1.0, -1.0}), -b.psi0_at_zero() / (b.C0() * k.r_c())) < 1e-15);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::vector<double> q(10);
    double q2 = 0.0;
    for (auto& x : q) {
        x = U(rng);
        q2 += x * x;
    }
    CHECK(rel(k.self_energy(q), -0.5 * q2 * k.far_field(0.0)) < 1e-14);
}

TEST_CASE("background correction") {
    const SplitKernel& k = kern12();
    const BackgroundCorrection z = k.background_correction(0.0, 10.0);
    CHECK(z.U_cb == 0.0);
    CHECK(z.U_bb == 0.0);
    CHECK(z.pressure.norm() == 0.0);
    const double Q = 3.0, V = 27.0;
    const BackgroundCorrection c = k.background_correction(Q, V);
    CHECK(c.U_bb == -c.U_cb / 2.0);
    CHECK(rel(c.U_cb, -4.0 * M_PI * Q * Q / V * k.J()) < 1e-15);
    CHECK(rel(c.pressure(0, 0), -2.0 * M_PI * Q * Q * k.J() / (V * V)) < 1e-15);
    CHECK(c.pressure(0, 1) == 0.0);
    const double rc = k.r_c();
    const double J = rc * rc / 2.0 -
                     esp::test::integrate([&](double r) { return r * eval_phi0(k.basis(), r, rc); }, 0.0, rc);
    CHECK(rel(k.J(), J) < 1e-11);
}
