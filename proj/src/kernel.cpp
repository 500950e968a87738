#include "esp/kernel.hpp"

#include "esp/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

namespace esp {

SplitKernel::SplitKernel(PswfBasis basis, double r_c) : basis_(std::move(basis)), r_c_(r_c) {
    if (!(r_c > 0.0)) throw ParameterError("SplitKernel: r_c must be positive");
    kmax_ = basis_.c() / r_c_;
    fourier_prefactor_ = 2.0 * M_PI * basis_.lambda0() / basis_.C0();
    using boost::math::quadrature::gauss;
    const double I = gauss<double, 128>::integrate([&](double r) { return r * eval_phi0(basis_, r, r_c_); }, 0.0, r_c_);
    J_ = 0.5 * r_c_ * r_c_ - I;
}

double SplitKernel::near_field(double r) const {
    if (!(r > 0.0)) throw SingularityError("near_field: r = 0", 0, 0);
    if (r >= r_c_) return 0.0;
    return eval_phi0_complement(basis_, r, r_c_) / r;
}

double SplitKernel::far_field(double r) const {
    if (!(r >= 0.0)) throw DomainError("far_field: r < 0");
    const double x = r / r_c_;
    if (x >= 1.0) return 1.0 / r;
    return basis_.integral_table()(x) / (basis_.C0() * r_c_);
}

double SplitKernel::far_field_hat(double k) const {
    if (!(k > 0.0)) throw ZeroModeError("far_field_hat: k = 0 is excluded (tin-foil)");
    if (k > kmax_) return 0.0;
    const double x = k / kmax_;
    return fourier_prefactor_ * eval_psi0(basis_, x) / (k * k);
}

double SplitKernel::fn_weight(double r) const {
    if (!(r > 0.0)) throw DomainError("fn_weight: r must be positive");
    if (r > r_c_) return 0.0;
    const double x = r / r_c_;
    return eval_phi0_complement(basis_, r, r_c_) + x * eval_psi0(basis_, x) / basis_.C0();
}

void SplitKernel::spectral_coeffs(double k, double& fhat, double& kk_coeff) const {
    const double x = std::min(k / kmax_, 1.0);
    const double k2 = k * k;
    fhat = fourier_prefactor_ * basis_.eval_table()(x) / k2;
    kk_coeff = fourier_prefactor_ * x * basis_.deriv_table()(x) / (k2 * k2);
}

Mat3 SplitKernel::pressure_kernel_hat(const Vec3& k) const {
    const double kn = k.norm();
    if (!(kn > 0.0)) throw ZeroModeError("pressure_kernel_hat: k = 0 is excluded (tin-foil)");
    if (kn > kmax_) return Mat3::Zero();
    double fhat, kkc;
    spectral_coeffs(kn, fhat, kkc);
    const Mat3 kk = k * k.transpose();
    return fhat * (Mat3::Identity() - 2.0 * kk / (kn * kn)) + kkc * kk;
}

double SplitKernel::self_energy(std::span<const double> charges) const {
    double q2 = 0.0;
    for (double q : charges) q2 += q * q;
    return -0.5 * far_field(0.0) * q2;
}

BackgroundCorrection SplitKernel::background_correction(double Q_tot, double V) const {
    if (!(V > 0.0)) throw ParameterError("background_correction: V must be positive");
    BackgroundCorrection bc;
    const double q2 = Q_tot * Q_tot;
    bc.U_cb = -4.0 * M_PI * q2 * J_ / V;
    bc.U_bb = 2.0 * M_PI * q2 * J_ / V;
    bc.pressure = (-2.0 * M_PI * q2 * J_ / (V * V)) * Mat3::Identity();
    return bc;
}

} // namespace esp
