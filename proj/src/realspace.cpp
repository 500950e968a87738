#include "esp/realspace.hpp"

#include "esp/errors.hpp"
#include "esp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esp {

namespace {

// Taylor coefficients of psi0 about 0 from the prolate ODE:
// (n+2)(n+1) t_{n+2} = [n(n+1) - chi] t_n + c^2 t_{n-2}.
std::vector<double> psi_taylor(const PswfBasis& b, double x_max) {
    std::vector<double> t = {b.psi0_at_zero()};
    const double c2 = b.c() * b.c(), chi = b.chi();
    double tm2 = 0.0, tn = t[0];
    double xp = 1.0;
    for (int n = 0; n < 400; n += 2) {
        const double next = ((n * (n + 1) - chi) * tn + c2 * tm2) / ((n + 2.0) * (n + 1.0));
        tm2 = tn;
        tn = next;
        t.push_back(next);
        xp *= x_max * x_max;
        if (n > 8 && std::fabs(next) * xp < 1e-18 * b.psi0_at_zero()) break;
    }
    return t;  // t[m] multiplies x^{2m}
}

} // namespace

PairTable build_pair_table(const SplitKernel& kern, double r_in, int resolution) {
    const double rc = kern.r_c();
    if (r_in < 0.0) r_in = 0.1 * rc;
    if (!(r_in > 0.0 && r_in < rc)) throw ParameterError("build_pair_table: r_in must lie in (0, r_c)");
    if (resolution < 16) throw ParameterError("build_pair_table: resolution must be >= 16");
    const PswfBasis& b = kern.basis();
    const double C0 = b.C0();

    PairTable t;
    t.r_in_ = r_in;
    t.r_c_ = rc;
    t.inv_rc_ = 1.0 / rc;
    t.knots_ = resolution;
    const auto tay = psi_taylor(b, r_in / rc);
    // far = phi/r = (1/(C0 rc)) sum t_m x^{2m}/(2m+1);  F_N = 1 + (1/C0) sum t_m x^{2m+1} 2m/(2m+1)
    for (std::size_t m = 0; m < tay.size(); ++m) {
        t.far_taylor_.push_back(tay[m] / ((2.0 * m + 1.0) * C0 * rc));
        t.fn_taylor_.push_back(tay[m] * 2.0 * m / ((2.0 * m + 1.0) * C0));
    }

    t.h_ = (rc - r_in) / resolution;
    t.inv_h_ = 1.0 / t.h_;
    auto g = [&](double r) { return eval_phi0_complement(b, r, rc); };
    auto dg = [&](double r) { return -eval_psi0(b, std::min(r / rc, 1.0)) / (C0 * rc); };
    // The near-field numerator is tabulated as g / (r_c - r), smooth and nonzero up to r_c.
    auto q = [&](double r) { return g(r) / (rc - r); };
    auto dq = [&](double r) { return dg(r) / (rc - r) + g(r) / ((rc - r) * (rc - r)); };
    auto fn = [&](double r) { return kern.fn_weight(r); };
    auto dfn = [&](double r) {
        const double x = std::min(r / rc, 1.0);
        return x * eval_psi0(b, x, 1) / (C0 * rc);
    };
    t.seg_.resize(static_cast<std::size_t>(resolution) * 8);
    for (int k = 0; k < resolution; ++k) {
        const double r0 = r_in + k * t.h_, r1 = (k + 1 == resolution) ? rc : r_in + (k + 1) * t.h_;
        double* s = &t.seg_[static_cast<std::size_t>(k) * 8];
        s[0] = q(r0);
        s[2] = dq(r0) * t.h_;
        if (k + 1 == resolution) {
            s[1] = eval_psi0(b, 1.0) / (C0 * rc);
            s[3] = eval_psi0(b, 1.0, 1) / (2.0 * C0 * rc * rc) * t.h_;
        } else {
            s[1] = q(r1);
            s[3] = dq(r1) * t.h_;
        }
        s[4] = fn(r0);
        s[5] = fn(r1);
        s[6] = dfn(r0) * t.h_;
        s[7] = dfn(r1) * t.h_;
    }
    return t;
}

void PairTable::eval(double r, double& near, double& fn) const {
    if (r <= r_in_) {
        const double x = r * inv_rc_, x2 = x * x;
        double far = 0.0, f = 0.0;
        for (std::size_t m = far_taylor_.size(); m-- > 0;) {
            far = far * x2 + far_taylor_[m];
            f = f * x2 + fn_taylor_[m];
        }
        near = 1.0 / r - far;
        fn = 1.0 + x * f;
        return;
    }
    if (r >= r_c_) {
        near = 0.0;
        fn = r > r_c_ ? 0.0 : seg_[static_cast<std::size_t>(knots_ - 1) * 8 + 5];
        return;
    }
    const double u = (r - r_in_) * inv_h_;
    const int k = std::min(static_cast<int>(u), knots_ - 1);
    const double t = u - k, t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double* s = &seg_[static_cast<std::size_t>(k) * 8];
    near = (h00 * s[0] + h01 * s[1] + h10 * s[2] + h11 * s[3]) * (r_c_ - r) / r;
    fn = h00 * s[4] + h01 * s[5] + h10 * s[6] + h11 * s[7];
}

ShortRangeResult short_range(const ParticleSystem& sys, const SplitKernel& kern, const NeighborList& nl,
                             const PairTable* table) {
    const std::size_t n = sys.size();
    const double rc = kern.r_c(), rc2 = rc * rc;
    const double rmin = 1e-12 * rc;
    const int nt = num_threads();

    struct Partial {
        double energy = 0.0;
        Mat3 virial = Mat3::Zero();
        Vec3List forces;
        std::size_t count = 0;
    };
    std::vector<Partial> parts(nt);
    parallel_chunks(nl.pairs.size(), [&](std::size_t b, std::size_t e, int c) {
        Partial& p = parts[c];
        p.forces.assign(n, Vec3::Zero());
        for (std::size_t m = b; m < e; ++m) {
            const auto [i, j] = nl.pairs[m];
            const Vec3 dr = sys.cell.minimum_image(sys.positions[i] - sys.positions[j]);
            const double r2 = dr.squaredNorm();
            if (r2 > rc2) continue;
            const double r = std::sqrt(r2);
            if (r < rmin)
                throw SingularityError("coincident particles " + std::to_string(i) + " and " + std::to_string(j), i, j);
            double near, fn;
            if (table) {
                table->eval(r, near, fn);
            } else {
                near = kern.near_field(r);
                fn = kern.fn_weight(r);
            }
            const double qq = sys.charges[i] * sys.charges[j];
            p.energy += qq * near;
            const Vec3 f = (qq * fn / (r2 * r)) * dr;
            p.forces[i] += f;
            p.forces[j] -= f;
            p.virial += f * dr.transpose();
            ++p.count;
        }
    });

    ShortRangeResult res;
    res.forces.assign(n, Vec3::Zero());
    Mat3 virial = Mat3::Zero();
    for (const Partial& p : parts) {
        if (p.forces.empty()) continue;
        res.energy += p.energy;
        virial += p.virial;
        res.pair_count += p.count;
        for (std::size_t i = 0; i < n; ++i) res.forces[i] += p.forces[i];
    }
    res.pressure = virial / sys.cell.volume();
    res.pressure = 0.5 * (res.pressure + res.pressure.transpose()).eval();
    return res;
}

} // namespace esp
