#pragma once

#include "esp/pswf.hpp"
#include "esp/types.hpp"

#include <span>

namespace esp {

struct BackgroundCorrection {
    double U_cb = 0.0;  // charge-background
    double U_bb = 0.0;  // background-background
    Mat3 pressure = Mat3::Zero();
    double energy() const { return U_cb + U_bb; }
};

/// PSWF splitting 1/r = N(r) + F(r) at cutoff r_c, with the Coulomb prefactor set to 1.
class SplitKernel {
public:
    SplitKernel() = default;
    SplitKernel(PswfBasis basis, double r_c);

    const PswfBasis& basis() const { return basis_; }
    double r_c() const { return r_c_; }
    double kmax() const { return kmax_; }
    // r_c^2/2 - int_0^{r_c} r phi0(r) dr
    double J() const { return J_; }

    double near_field(double r) const;
    double far_field(double r) const;
    double far_field_hat(double k) const;
    double fn_weight(double r) const;
    Mat3 pressure_kernel_hat(const Vec3& k) const;

    double self_energy(std::span<const double> charges) const;
    BackgroundCorrection background_correction(double Q_tot, double V) const;

    // Unchecked spectral pieces for |k| in (0, kmax]: F_hat and the k k^T coefficient
    // (2 pi lambda0 / C0) x psi0'(x) / k^4 with x = k r_c / c.
    void spectral_coeffs(double k, double& fhat, double& kk_coeff) const;

private:
    PswfBasis basis_;
    double r_c_ = 0.0;
    double kmax_ = 0.0;
    double J_ = 0.0;
    double fourier_prefactor_ = 0.0;  // 2 pi lambda0 / C0
};

} // namespace esp
