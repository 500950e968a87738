#include "esp/pswf.hpp"

#include "esp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

extern "C" {
#include <quadmath.h>
}

namespace esp {

namespace {

using quad = __float128;

struct QuadSolution {
    std::vector<quad> a;  // coefficient of normalized P_{2j}
    quad chi;
};

// Prolate operator in the even normalized-Legendre basis: symmetric tridiagonal.
void prolate_matrix(double c, int n, std::vector<quad>& d, std::vector<quad>& e) {
    const quad c2 = static_cast<quad>(c) * static_cast<quad>(c);
    d.assign(n, 0);
    e.assign(n > 0 ? n - 1 : 0, 0);
    for (int j = 0; j < n; ++j) {
        quad k = 2 * j;
        d[j] = k * (k + 1) + c2 * (2 * k * (k + 1) - 1) / ((2 * k + 3) * (2 * k - 1));
        if (j + 1 < n)
            e[j] = c2 * (k + 2) * (k + 1) / ((2 * k + 3) * sqrtq((2 * k + 1) * (2 * k + 5)));
    }
}

// Number of eigenvalues below x (Sturm sequence of the LDL^T pivots).
int sturm_count(const std::vector<quad>& d, const std::vector<quad>& e, quad x) {
    int count = 0;
    quad q = 1;
    const quad tiny = 1e-4000Q;
    for (std::size_t j = 0; j < d.size(); ++j) {
        q = d[j] - x - (j > 0 ? e[j - 1] * e[j - 1] / q : 0);
        if (q == 0) q = -tiny;
        if (q < 0) ++count;
    }
    return count;
}

QuadSolution solve_tridiagonal(double c, int n) {
    std::vector<quad> d, e;
    prolate_matrix(c, n, d, e);

    quad lo = d[0], hi = d[0];
    for (int j = 0; j < n; ++j) {
        quad r = (j > 0 ? fabsq(e[j - 1]) : 0) + (j + 1 < n ? fabsq(e[j]) : 0);
        lo = fminq(lo, d[j] - r);
        hi = fmaxq(hi, d[j] + r);
    }
    for (int it = 0; it < 400; ++it) {
        quad mid = (lo + hi) / 2;
        if (sturm_count(d, e, mid) >= 1)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= 1e-33Q * fmaxq(1, fabsq(hi))) break;
    }
    if (hi - lo > 1e-30Q * fmaxq(1, fabsq(hi)))
        throw ConstructionError("prolate eigensolve: bisection did not converge");

    // Inverse iteration with the shift just below the eigenvalue, so T - sigma is positive definite.
    const quad sigma = lo;
    std::vector<quad> v(n, 1), piv(n), y(n);
    for (int it = 0; it < 4; ++it) {
        piv[0] = d[0] - sigma;
        y[0] = v[0];
        for (int j = 1; j < n; ++j) {
            quad m = e[j - 1] / piv[j - 1];
            piv[j] = d[j] - sigma - m * e[j - 1];
            y[j] = v[j] - m * y[j - 1];
        }
        v[n - 1] = y[n - 1] / piv[n - 1];
        for (int j = n - 2; j >= 0; --j) v[j] = (y[j] - e[j] * v[j + 1]) / piv[j];
        quad nrm = 0;
        for (quad x : v) nrm += x * x;
        nrm = sqrtq(nrm);
        for (quad& x : v) x /= nrm;
    }

    // Rayleigh quotient and residual.
    quad chi = 0;
    std::vector<quad> tv(n);
    for (int j = 0; j < n; ++j) {
        tv[j] = d[j] * v[j] + (j > 0 ? e[j - 1] * v[j - 1] : 0) + (j + 1 < n ? e[j] * v[j + 1] : 0);
        chi += v[j] * tv[j];
    }
    quad res = 0;
    for (int j = 0; j < n; ++j) res = fmaxq(res, fabsq(tv[j] - chi * v[j]));
    if (res > 1e-24Q * fmaxq(1, fabsq(hi)))
        throw ConstructionError("prolate eigensolve: inverse iteration did not converge");

    // psi0(0) > 0.
    quad p0 = 1, psi0 = 0;
    for (int j = 0; j < n; ++j) {
        psi0 += v[j] * sqrtq(2 * j + 0.5Q) * p0;
        p0 = -p0 * (2 * j + 1) / (2 * j + 2);
    }
    if (psi0 < 0)
        for (quad& x : v) x = -x;
    return {std::move(v), chi};
}

QuadSolution prolate_quad(double c) {
    int n = static_cast<int>(std::ceil(c + 15.0)) + 1;  // max degree >= 2c + 30
    for (int attempt = 0; attempt < 20; ++attempt) {
        QuadSolution s = solve_tridiagonal(c, n);
        quad amax = 0;
        for (quad x : s.a) amax = fmaxq(amax, fabsq(x));
        if (fabsq(s.a.back()) < 1e-32Q * amax && fabsq(s.a[n - 2]) < 1e-30Q * amax) return s;
        n += 10;
    }
    throw ConstructionError("prolate eigensolve: Legendre expansion did not truncate");
}

quad value_at_one_quad(const QuadSolution& s) {
    quad v = 0;
    for (std::size_t j = 0; j < s.a.size(); ++j) v += s.a[j] * sqrtq(2 * j + 0.5Q);
    return v;
}

// (1 / (1 - x)) int_x^1 psi0 in quad precision; int_x^1 P_k = (P_{k-1} - P_{k+1}) / (2k + 1) for k >= 1.
quad tail_mean_quad(const QuadSolution& s, quad x) {
    if (x >= 1) return value_at_one_quad(s);
    const int kmax = 2 * static_cast<int>(s.a.size()) + 1;
    std::vector<quad> P(kmax + 1);
    P[0] = 1;
    P[1] = x;
    for (int k = 1; k < kmax; ++k) P[k + 1] = ((2 * k + 1) * x * P[k] - k * P[k - 1]) / (k + 1);
    quad sum = s.a[0] * sqrtq(0.5Q) * (1 - x);
    for (std::size_t j = 1; j < s.a.size(); ++j) {
        const int k = 2 * static_cast<int>(j);
        sum += s.a[j] * sqrtq(k + 0.5Q) * (P[k - 1] - P[k + 1]) / (2 * k + 1);
    }
    return sum / (1 - x);
}

// Chebyshev interpolation of f on [a, b] at first-kind nodes, converted to monomials in t.
std::vector<double> cheb_fit(const std::function<double(double)>& f, double a, double b, int degree) {
    const int n = degree + 1;
    std::vector<double> fv(n), tn(n);
    for (int i = 0; i < n; ++i) {
        tn[i] = std::cos(M_PI * (i + 0.5) / n);
        fv[i] = f(0.5 * (a + b) + 0.5 * (b - a) * tn[i]);
    }
    std::vector<double> ch(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += fv[i] * std::cos(M_PI * k * (i + 0.5) / n);
        ch[k] = 2.0 * s / n;
    }
    ch[0] *= 0.5;

    // Monomial coefficients, lowest first: T_{k+1} = 2t T_k - T_{k-1}.
    std::vector<double> mono(n, 0.0), tkm1(n, 0.0), tk(n, 0.0), tkp1(n, 0.0);
    tkm1[0] = 1.0;
    mono[0] += ch[0];
    if (n > 1) {
        tk[1] = 1.0;
        mono[1] += ch[1];
    }
    for (int k = 1; k + 1 < n; ++k) {
        std::fill(tkp1.begin(), tkp1.end(), 0.0);
        for (int j = 0; j + 1 < n; ++j) tkp1[j + 1] += 2.0 * tk[j];
        for (int j = 0; j < n; ++j) tkp1[j] -= tkm1[j];
        for (int j = 0; j < n; ++j) mono[j] += ch[k + 1] * tkp1[j];
        std::swap(tkm1, tk);
        std::swap(tk, tkp1);
    }
    std::reverse(mono.begin(), mono.end());
    return mono;
}

inline double horner(const double* c, int degree, double t) {
    double v = c[0];
    for (int j = 1; j <= degree; ++j) v = v * t + c[j];
    return v;
}

// Refine uniform pieces on [lo, hi] until the max error at check points is <= tol.
PolyTable fit_table(const std::function<double(double)>& f, double lo, double hi, int degree, double tol) {
    PolyTable tab;
    tab.lo = lo;
    tab.hi = hi;
    tab.degree = degree;
    double best_err = INFINITY, prev_err = INFINITY;
    PolyTable best;
    for (int pieces = 1; pieces <= 4096; pieces *= 2) {
        tab.pieces = pieces;
        tab.coeffs.clear();
        const double w = (hi - lo) / pieces;
        for (int p = 0; p < pieces; ++p) {
            auto m = cheb_fit(f, lo + p * w, lo + (p + 1) * w, degree);
            tab.coeffs.insert(tab.coeffs.end(), m.begin(), m.end());
        }
        double err = 0;
        const int checks = 2 * degree + 3;
        for (int p = 0; p < pieces; ++p)
            for (int i = 0; i <= checks; ++i) {
                double x = lo + (p + static_cast<double>(i) / checks) * w;
                err = std::max(err, std::fabs(tab(x) - f(x)));
            }
        tab.max_error = err;
        if (err < best_err) {
            best_err = err;
            best = tab;
        }
        if (err <= tol) return tab;
        // Past the rounding floor more pieces do not help.
        if (pieces >= 16 && err > 0.25 * prev_err) break;
        prev_err = err;
    }
    return best;
}

double legendre_sum(const std::vector<double>& a, double x, bool derivative) {
    const int kmax = 2 * static_cast<int>(a.size()) - 2;
    double pm1 = 1.0, p = x;   // P_{k-1}, P_k starting at k = 1
    double dp = 1.0;           // P_k'
    double sum = derivative ? 0.0 : a[0] * std::sqrt(0.5);
    for (int k = 1; k < kmax; ++k) {
        const double pn = ((2 * k + 1) * x * p - k * pm1) / (k + 1);
        const double dpn = x * dp + (k + 1) * p;
        pm1 = p;
        p = pn;
        dp = dpn;
        if ((k + 1) % 2 == 0) sum += a[(k + 1) / 2] * std::sqrt(k + 1.5) * (derivative ? dp : p);
    }
    return sum;
}

} // namespace

double PolyTable::operator()(double x) const {
    const double w = (hi - lo) / pieces;
    int p = static_cast<int>((x - lo) / w);
    p = std::clamp(p, 0, pieces - 1);
    const double t = 2.0 * (x - lo - p * w) / w - 1.0;
    return horner(&coeffs[static_cast<std::size_t>(p) * (degree + 1)], degree, t);
}

double PswfBasis::expansion(double x) const { return legendre_sum(coeffs_, x, false); }
double PswfBasis::expansion_derivative(double x) const { return legendre_sum(coeffs_, x, true); }

double PswfBasis::expansion_integral(double x) const {
    // int_0^x P_k = (P_{k+1} - P_{k-1}) / (2k + 1) for k >= 1; x for k = 0.
    const int kmax = 2 * static_cast<int>(coeffs_.size()) + 1;
    std::vector<double> P(kmax + 1);
    P[0] = 1.0;
    P[1] = x;
    for (int k = 1; k < kmax; ++k) P[k + 1] = ((2 * k + 1) * x * P[k] - k * P[k - 1]) / (k + 1);
    double sum = coeffs_[0] * std::sqrt(0.5) * x;
    for (std::size_t j = 1; j < coeffs_.size(); ++j) {
        const int k = 2 * static_cast<int>(j);
        sum += coeffs_[j] * std::sqrt(k + 0.5) * (P[k + 1] - P[k - 1]) / (2 * k + 1);
    }
    return sum;
}

PswfBasis build_pswf(double c, double table_tol) {
    if (!(c >= 0.5 && c <= 80.0))
        throw ParameterError("build_pswf: bandwidth c = " + std::to_string(c) + " outside [0.5, 80]");
    if (!(table_tol >= 1e-15 && table_tol <= 1e-6))
        throw ParameterError("build_pswf: table_tol outside [1e-15, 1e-6]");

    QuadSolution qs = prolate_quad(c);
    PswfBasis b;
    b.c_ = c;
    b.table_tol_ = table_tol;
    b.chi_ = static_cast<double>(qs.chi);
    b.psi0_one_ = static_cast<double>(value_at_one_quad(qs));
    b.coeffs_.resize(qs.a.size());
    for (std::size_t j = 0; j < qs.a.size(); ++j) b.coeffs_[j] = static_cast<double>(qs.a[j]);
    // Drop coefficients that no longer affect a double result.
    while (b.coeffs_.size() > 1 && std::fabs(b.coeffs_.back()) < 1e-20) b.coeffs_.pop_back();

    quad p0 = 1, psi_zero = 0;
    for (std::size_t j = 0; j < qs.a.size(); ++j) {
        psi_zero += qs.a[j] * sqrtq(2 * j + 0.5Q) * p0;
        p0 = -p0 * (2 * j + 1) / (2 * j + 2);
    }
    b.psi0_zero_ = static_cast<double>(psi_zero);

    using boost::math::quadrature::gauss;
    b.C0_ = gauss<double, 64>::integrate([&](double x) { return b.expansion(x); }, 0.0, 1.0);
    b.lambda0_ = 2.0 * b.C0_ / b.psi0_zero_;

    // Internal targets leave headroom so table-vs-table comparisons stay within table_tol.
    const double target = 0.25 * table_tol;
    const int deg = 18;
    b.eval_table_ = fit_table([&](double x) { return b.expansion(x); }, 0.0, 1.0, deg, target * b.psi0_zero_);
    double dscale = 0;
    for (int i = 0; i <= 200; ++i) dscale = std::max(dscale, std::fabs(b.expansion_derivative(i / 200.0)));
    b.deriv_table_ = fit_table([&](double x) { return b.expansion_derivative(x); }, 0.0, 1.0, deg,
                               target * dscale);
    b.integral_table_ = fit_table(
        [&](double x) { return x == 0.0 ? b.psi0_zero_ : b.expansion_integral(x) / x; }, 0.0, 1.0, deg,
        target * b.psi0_zero_);
    b.tail_table_ = fit_table([&](double x) { return static_cast<double>(logq(tail_mean_quad(qs, x))); }, 0.5, 1.0,
                              deg, std::max(target, 1e-13));
    return b;
}

double eval_psi0(const PswfBasis& basis, double x, int derivative) {
    if (!(std::fabs(x) <= 1.0)) throw DomainError("eval_psi0: |x| > 1");
    const double ax = std::fabs(x);
    if (derivative == 0) return basis.eval_table()(ax);
    if (derivative == 1) {
        if (ax == 0.0) return 0.0;
        double v = basis.deriv_table()(ax);
        return x < 0 ? -v : v;
    }
    throw ParameterError("eval_psi0: derivative order must be 0 or 1");
}

double psi0_at_one(double c) {
    if (!(c >= 0.5 && c <= 80.0)) throw ParameterError("psi0_at_one: bandwidth outside [0.5, 80]");
    return static_cast<double>(value_at_one_quad(prolate_quad(c)));
}

double solve_bandwidth(double delta) {
    if (!(delta >= 1e-14 && delta <= 1e-1))
        throw ParameterError("solve_bandwidth: delta outside [1e-14, 1e-1]");
    const double target = std::log(delta);
    auto f = [&](double c) { return std::log(psi0_at_one(c)) - target; };
    std::uintmax_t iters = 100;
    auto r = boost::math::tools::toms748_solve(f, 0.5, 80.0, boost::math::tools::eps_tolerance<double>(48), iters);
    return 0.5 * (r.first + r.second);
}

double eval_phi0(const PswfBasis& basis, double r, double r_c) {
    if (!(r >= 0.0)) throw DomainError("eval_phi0: r < 0");
    if (!(r_c > 0.0)) throw DomainError("eval_phi0: r_c <= 0");
    const double x = r / r_c;
    if (x >= 1.0) return 1.0;
    return x * basis.integral_table()(x) / basis.C0();
}

double eval_phi0_complement(const PswfBasis& basis, double r, double r_c) {
    if (!(r >= 0.0)) throw DomainError("eval_phi0_complement: r < 0");
    if (!(r_c > 0.0)) throw DomainError("eval_phi0_complement: r_c <= 0");
    const double x = r / r_c;
    if (x >= 1.0) return 0.0;
    if (x < 0.5) return 1.0 - x * basis.integral_table()(x) / basis.C0();
    return (1.0 - x) * std::exp(basis.tail_table()(x)) / basis.C0();
}

WindowTable tabulate_window(const PswfBasis& basis, int P, double table_tol, int degree) {
    if (P < 2) throw ParameterError("tabulate_window: P must be >= 2");
    if (!(table_tol > 0.0)) throw ParameterError("tabulate_window: table_tol must be positive");
    const double scale = basis.psi0_at_zero();
    double dscale = 0;
    for (int i = 0; i <= 200; ++i) dscale = std::max(dscale, std::fabs(basis.expansion_derivative(i / 200.0)));
    dscale *= 2.0 / P;

    for (int deg = std::max(degree, 2); deg <= 40; deg += 2) {
        WindowTable wt;
        wt.P_ = P;
        wt.degree_ = deg;
        wt.coeffs_.clear();
        wt.dcoeffs_.clear();
        for (int p = 0; p < P; ++p) {
            // q_p(tau) = psi0((P - 2p - 1 + tau) / P)
            auto m = cheb_fit([&](double tau) { return basis.expansion((P - 2 * p - 1 + tau) / P); }, -1.0, 1.0,
                              deg);
            wt.coeffs_.insert(wt.coeffs_.end(), m.begin(), m.end());
            // Fitted directly: differentiating the value interpolant amplifies rounding by ~deg^3.
            auto dm = cheb_fit(
                [&](double tau) { return 2.0 / P * basis.expansion_derivative((P - 2 * p - 1 + tau) / P); }, -1.0,
                1.0, deg);
            wt.dcoeffs_.insert(wt.dcoeffs_.end(), dm.begin(), dm.end());
        }
        double err = 0, derr = 0;
        std::vector<double> w(P), dw(P);
        const int checks = 4 * deg;
        for (int i = 0; i <= checks; ++i) {
            const double s = -0.5 + static_cast<double>(i) / checks;
            wt.weights_and_derivs(s, w.data(), dw.data());
            for (int p = 0; p < P; ++p) {
                const double x = (P - 2 * p - 1 + 2 * s) / P;
                err = std::max(err, std::fabs(w[p] - basis.expansion(x)));
                derr = std::max(derr, std::fabs(dw[p] - 2.0 / P * basis.expansion_derivative(x)));
            }
        }
        wt.max_error_ = err;
        wt.max_deriv_error_ = derr;
        if (err <= 0.25 * table_tol * scale && derr <= 0.25 * table_tol * std::max(dscale, scale)) return wt;
        if (deg >= 40)
            throw ParameterError("tabulate_window: tolerance " + std::to_string(table_tol) + " unattainable for P = " +
                                 std::to_string(P));
    }
    throw ParameterError("tabulate_window: tolerance unattainable");
}

void WindowTable::weights(double s, double* w) const {
    const double tau = 2.0 * s;
    const std::size_t stride = degree_ + 1;
    for (int p = 0; p < P_; ++p) w[p] = horner(&coeffs_[p * stride], degree_, tau);
}

void WindowTable::weights_and_derivs(double s, double* w, double* dw) const {
    const double tau = 2.0 * s;
    const std::size_t stride = degree_ + 1;
    for (int p = 0; p < P_; ++p) {
        w[p] = horner(&coeffs_[p * stride], degree_, tau);
        dw[p] = horner(&dcoeffs_[p * stride], degree_, tau);
    }
}

double WindowTable::value(double x) const {
    const double half = 0.5 * P_;
    if (!(std::fabs(x) <= half)) return 0.0;
    // x = P/2 - p - 1/2 + s
    int p = static_cast<int>(std::floor(half - x));
    p = std::clamp(p, 0, P_ - 1);
    const double s = x - (half - p - 0.5);
    return horner(&coeffs_[p * (degree_ + 1)], degree_, 2.0 * s);
}

double WindowTable::derivative(double x) const {
    const double half = 0.5 * P_;
    if (!(std::fabs(x) <= half)) return 0.0;
    int p = static_cast<int>(std::floor(half - x));
    p = std::clamp(p, 0, P_ - 1);
    const double s = x - (half - p - 0.5);
    return horner(&dcoeffs_[p * (degree_ + 1)], degree_, 2.0 * s);
}

} // namespace esp
