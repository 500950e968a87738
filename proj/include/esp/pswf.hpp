#pragma once

#include <cmath>
#include <vector>

namespace esp {

// Piecewise polynomial on uniform breakpoints over [lo, hi].  Each piece stores
// monomial coefficients (highest power first) in the local variable t in [-1, 1].
struct PolyTable {
    double lo = 0.0;
    double hi = 1.0;
    int degree = 18;
    int pieces = 0;
    std::vector<double> coeffs;
    double max_error = 0.0;  // achieved max abs error at the check points

    double operator()(double x) const;
};

/// Order-zero prolate spheroidal wave function for bandwidth c.
///
/// The expansion is in normalized Legendre polynomials sqrt(k + 1/2) P_k with
/// even k only; legendre_coeffs()[j] multiplies degree 2j.  The tables cover
/// [0, 1] and are evaluated at |x|, so parity holds exactly.
class PswfBasis {
public:
    PswfBasis() = default;

    double c() const { return c_; }
    const std::vector<double>& legendre_coeffs() const { return coeffs_; }
    double lambda0() const { return lambda0_; }
    double psi0_at_zero() const { return psi0_zero_; }
    double C0() const { return C0_; }
    double chi() const { return chi_; }
    // psi0(1) from the quad-precision coefficients.
    double value_at_one() const { return psi0_one_; }
    double table_tol() const { return table_tol_; }

    const PolyTable& eval_table() const { return eval_table_; }
    const PolyTable& deriv_table() const { return deriv_table_; }
    // Table of (1/x) int_0^x psi0, even and smooth, so phi0 keeps relative accuracy near 0.
    const PolyTable& integral_table() const { return integral_table_; }
    // Table of log((int_x^1 psi0) / (1 - x)), so 1 - phi0 keeps relative accuracy near 1.
    const PolyTable& tail_table() const { return tail_table_; }

    // Direct Legendre-sum evaluation, used to build the tables and as an oracle.
    double expansion(double x) const;
    double expansion_derivative(double x) const;
    double expansion_integral(double x) const;  // int_0^x psi0

    friend PswfBasis build_pswf(double c, double table_tol);

private:
    double c_ = 0.0;
    std::vector<double> coeffs_;
    double lambda0_ = 0.0;
    double psi0_zero_ = 0.0;
    double C0_ = 0.0;
    double chi_ = 0.0;
    double psi0_one_ = 0.0;
    double table_tol_ = 0.0;
    PolyTable eval_table_, deriv_table_, integral_table_, tail_table_;
};

PswfBasis build_pswf(double c, double table_tol = 1e-13);

// Table lookup of psi0 (derivative = 0) or psi0' (derivative = 1).
double eval_psi0(const PswfBasis& basis, double x, int derivative = 0);

// c with psi0^c(1) = delta.
double solve_bandwidth(double delta);

// psi0^c(1) straight from a quad-precision eigensolve, without building tables.
double psi0_at_one(double c);

// (1/C0) int_0^{r/r_c} psi0; 1 for r >= r_c.
double eval_phi0(const PswfBasis& basis, double r, double r_c);
// 1 - phi0(r), evaluated without cancellation.
double eval_phi0_complement(const PswfBasis& basis, double r, double r_c);

/// Spreading window W(t) = psi0(2t/P) on [-P/2, P/2] in grid units, one polynomial
/// per stencil point.  Point p of the stencil sees the argument P/2 - p - 1/2 + s
/// with s in [-1/2, 1/2]; polynomials are stored in tau = 2s.
class WindowTable {
public:
    WindowTable() = default;

    int P() const { return P_; }
    int degree() const { return degree_; }
    double max_error() const { return max_error_; }
    double max_deriv_error() const { return max_deriv_error_; }
    const std::vector<double>& coeffs() const { return coeffs_; }

    // Weights W(t_p) for the P stencil points at offset s.
    void weights(double s, double* w) const;
    // Weights and dW/dt (grid units).
    void weights_and_derivs(double s, double* w, double* dw) const;

    // Window at an arbitrary grid-unit argument; 0 outside the support.
    double value(double x) const;
    double derivative(double x) const;

    friend WindowTable tabulate_window(const PswfBasis& basis, int P, double table_tol, int degree);

private:
    int P_ = 0;
    int degree_ = 0;
    double max_error_ = 0.0;
    double max_deriv_error_ = 0.0;
    std::vector<double> coeffs_;   // P x (degree + 1)
    std::vector<double> dcoeffs_;  // P x (degree + 1), dW/dt
};

WindowTable tabulate_window(const PswfBasis& basis, int P, double table_tol = 1e-13, int degree = 18);

// Stencil start index and offset s for a particle at grid-unit coordinate u.
inline void stencil_start(double u, int P, long& i0, double& s) {
    if (P % 2 == 1) {
        double n = std::nearbyint(u);
        s = u - n;
        i0 = static_cast<long>(n) - (P - 1) / 2;
    } else {
        double n = std::floor(u);
        s = u - n - 0.5;
        i0 = static_cast<long>(n) - P / 2 + 1;
    }
}

} // namespace esp
