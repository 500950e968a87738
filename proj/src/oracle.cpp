#include "esp/oracle.hpp"

#include "esp/errors.hpp"
#include "esp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace esp {

double relative_deviation(double a, double b) {
    return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), kRelativeFloor});
}

double relative_l2(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ParameterError("relative_l2: size mismatch");
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(d) / std::max({std::sqrt(na), std::sqrt(nb), kRelativeFloor});
}

OracleReport make_report(const std::string& quantity, std::vector<double> oracle, std::vector<double> test,
                         double tol) {
    OracleReport r;
    r.quantity = quantity;
    double d = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i) d = std::max(d, std::fabs(oracle[i] - test[i]));
    r.abs_dev = d;
    r.rel_dev = oracle.size() == 1 ? relative_deviation(oracle[0], test[0]) : relative_l2(oracle, test);
    r.tol = tol;
    r.pass = r.rel_dev <= tol;
    r.oracle = std::move(oracle);
    r.test = std::move(test);
    return r;
}

std::vector<double> flatten(const Vec3List& v) {
    std::vector<double> out;
    out.reserve(3 * v.size());
    for (const auto& x : v) out.insert(out.end(), {x[0], x[1], x[2]});
    return out;
}

std::vector<double> flatten(const Mat3& m) {
    std::vector<double> out;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) out.push_back(m(a, b));
    return out;
}

namespace {

// Modes in a half space of Z^3 with |B m| <= kcut, B = reciprocal basis.
struct ModeSet {
    std::vector<std::array<int, 3>> m;
    std::array<int, 3> nmax;
};

ModeSet half_space_modes(const Cell& cell, double kcut) {
    ModeSet s;
    const Mat3& B = cell.reciprocal();
    for (int a = 0; a < 3; ++a) s.nmax[a] = static_cast<int>(std::floor(kcut * cell.h().col(a).norm() / (2 * M_PI)));
    const double k2max = kcut * kcut;
    for (int x = 0; x <= s.nmax[0]; ++x)
        for (int y = -s.nmax[1]; y <= s.nmax[1]; ++y)
            for (int z = -s.nmax[2]; z <= s.nmax[2]; ++z) {
                if (x == 0 && (y < 0 || (y == 0 && z <= 0))) continue;
                const Vec3 k = B * Vec3(x, y, z);
                if (k.squaredNorm() <= k2max) s.m.push_back({x, y, z});
            }
    return s;
}

// Sum over half-space modes of weight(k) |S|^2 plus forces and tensor(k) |S|^2.
// kernel(k, k2, fhat, ptensor) fills the energy kernel and pressure kernel for a mode.
template <class K>
OracleResult ksum(const ParticleSystem& sys, double kcut, K&& kernel) {
    const std::size_t n = sys.size();
    const Cell& cell = sys.cell;
    const ModeSet ms = half_space_modes(cell, kcut);
    const Mat3& B = cell.reciprocal();
    // e^{2 pi i m s_a} for |m| <= nmax per dimension.
    std::array<std::vector<std::complex<double>>, 3> ph;
    for (int a = 0; a < 3; ++a) {
        const int w = 2 * ms.nmax[a] + 1;
        ph[a].resize(n * w);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = cell.to_fractional(sys.positions[i])[a];
            for (int m = -ms.nmax[a]; m <= ms.nmax[a]; ++m)
                ph[a][i * w + (m + ms.nmax[a])] = std::polar(1.0, 2 * M_PI * m * s);
        }
    }
    const int nt = num_threads();
    std::vector<double> en(nt, 0.0);
    std::vector<Mat3> pr(nt, Mat3::Zero());
    std::vector<Vec3List> fo(nt);
    parallel_chunks(ms.m.size(), [&](std::size_t b, std::size_t e, int c) {
        fo[c].assign(n, Vec3::Zero());
        std::vector<std::complex<double>> eik(n);
        for (std::size_t q = b; q < e; ++q) {
            const auto& m = ms.m[q];
            const Vec3 k = B * Vec3(m[0], m[1], m[2]);
            const double k2 = k.squaredNorm();
            double fhat;
            Mat3 ptens;
            kernel(k, k2, fhat, ptens);
            std::complex<double> S = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                eik[i] = ph[0][i * (2 * ms.nmax[0] + 1) + m[0] + ms.nmax[0]] *
                         ph[1][i * (2 * ms.nmax[1] + 1) + m[1] + ms.nmax[1]] *
                         ph[2][i * (2 * ms.nmax[2] + 1) + m[2] + ms.nmax[2]];
                S += sys.charges[i] * eik[i];
            }
            const double s2 = std::norm(S);
            // Half space: each mode stands for k and -k.
            en[c] += 2.0 * fhat * s2;
            pr[c] += 2.0 * s2 * ptens;
            for (std::size_t i = 0; i < n; ++i) {
                const double im = (std::conj(S) * eik[i]).imag();
                fo[c][i] += (2.0 * fhat * sys.charges[i] * im) * k;
            }
        }
    });
    OracleResult r;
    r.forces.assign(n, Vec3::Zero());
    const double V = cell.volume();
    for (int c = 0; c < nt; ++c) {
        r.energy += en[c];
        r.pressure += pr[c];
        if (!fo[c].empty())
            for (std::size_t i = 0; i < n; ++i) r.forces[i] += fo[c][i];
    }
    r.energy /= 2.0 * V;
    r.pressure /= 2.0 * V * V;
    r.pressure = (0.5 * (r.pressure + r.pressure.transpose())).eval();
    for (auto& f : r.forces) f /= V;
    return r;
}

} // namespace

OracleResult direct_ksum(const ParticleSystem& sys, const SplitKernel& kern) {
    return ksum(sys, kern.kmax(), [&](const Vec3& k, double k2, double& fhat, Mat3& pt) {
        const double kn = std::sqrt(k2);
        fhat = kern.far_field_hat(kn);
        pt = kern.pressure_kernel_hat(k);
    });
}

EwaldParams ewald_recipe(const Cell& cell, double tol) {
    EwaldParams p;
    const double s = std::sqrt(-std::log(tol));
    p.r_cut = 0.5 * cell.min_width();
    p.alpha = s / p.r_cut;
    p.k_cut = 2.0 * p.alpha * s;
    return p;
}

namespace {

OracleResult ewald_once(const ParticleSystem& sys, const EwaldParams& p) {
    const double beta = p.alpha;
    const std::size_t n = sys.size();
    const Cell& cell = sys.cell;
    const double V = cell.volume();

    OracleResult r = ksum(sys, p.k_cut, [&](const Vec3& k, double k2, double& fhat, Mat3& pt) {
        fhat = 4.0 * M_PI * std::exp(-k2 / (4.0 * beta * beta)) / k2;
        pt = fhat * (Mat3::Identity() - 2.0 * (1.0 / k2 + 1.0 / (4.0 * beta * beta)) * (k * k.transpose()));
    });

    // Real space over images.
    const Vec3 w = cell.perpendicular_widths();
    std::array<int, 3> nimg;
    for (int a = 0; a < 3; ++a) nimg[a] = static_cast<int>(std::ceil(p.r_cut / w[a])) + 1;
    const double rc2 = p.r_cut * p.r_cut;
    const double two_over_sqrtpi = 2.0 / std::sqrt(M_PI);
    const int nt = num_threads();
    std::vector<double> en(nt, 0.0);
    std::vector<Mat3> vir(nt, Mat3::Zero());
    std::vector<Vec3List> fo(nt);
    parallel_chunks(n, [&](std::size_t b, std::size_t e, int c) {
        fo[c].assign(n, Vec3::Zero());
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const Vec3 d0 = cell.minimum_image(sys.positions[i] - sys.positions[j]);
                const double qq = sys.charges[i] * sys.charges[j];
                for (int x = -nimg[0]; x <= nimg[0]; ++x)
                    for (int y = -nimg[1]; y <= nimg[1]; ++y)
                        for (int z = -nimg[2]; z <= nimg[2]; ++z) {
                            if (i == j && x == 0 && y == 0 && z == 0) continue;
                            const Vec3 dr = d0 + cell.h() * Vec3(x, y, z);
                            const double r2 = dr.squaredNorm();
                            if (r2 > rc2) continue;
                            const double rr = std::sqrt(r2);
                            const double er = std::erfc(beta * rr);
                            en[c] += 0.5 * qq * er / rr;
                            const double wgt = er + two_over_sqrtpi * beta * rr * std::exp(-beta * beta * r2);
                            const Vec3 f = (qq * wgt / (r2 * rr)) * dr;
                            fo[c][i] += f;
                            vir[c] += 0.5 * f * dr.transpose();
                        }
            }
    });
    for (int c = 0; c < nt; ++c) {
        r.energy += en[c];
        r.pressure += vir[c] / V;
        if (!fo[c].empty())
            for (std::size_t i = 0; i < n; ++i) r.forces[i] += fo[c][i];
    }

    double q2 = 0.0, Q = 0.0;
    for (double q : sys.charges) {
        q2 += q * q;
        Q += q;
    }
    r.energy += -beta / std::sqrt(M_PI) * q2;
    const double ubg = -M_PI * Q * Q / (2.0 * V * beta * beta);
    r.energy += ubg;
    r.pressure += (ubg / V) * Mat3::Identity();
    r.pressure = (0.5 * (r.pressure + r.pressure.transpose())).eval();
    return r;
}

} // namespace

OracleResult classical_ewald(const ParticleSystem& sys, const EwaldParams& p, bool check) {
    if (!(p.alpha > 0 && p.r_cut > 0 && p.k_cut > 0)) throw OracleError("classical_ewald: invalid parameters");
    OracleResult a = ewald_once(sys, p);
    if (!check) return a;
    EwaldParams q = p;
    q.r_cut += 1.0 / p.alpha;
    q.k_cut += 2.0 * p.alpha;
    OracleResult b = ewald_once(sys, q);
    double q2 = 0.0;
    for (double x : sys.charges) q2 += x * x;
    const double scale = std::max(std::fabs(b.energy), 1e-300 + q2 * p.alpha * 1e-3);
    if (std::fabs(a.energy - b.energy) > 1e-10 * scale)
        throw OracleError("classical_ewald: energy not converged (" + std::to_string(a.energy) + " vs " +
                          std::to_string(b.energy) + "); enlarge r_cut/k_cut");
    if (relative_l2(flatten(a.forces), flatten(b.forces)) > 1e-9 && q2 > 0)
        throw OracleError("classical_ewald: forces not converged; enlarge r_cut/k_cut");
    return b;
}

OracleReport fd_force_check(const ParticleSystem& sys, const EnergyFunctional& energy, const Vec3List& forces,
                            double step, double tol) {
    if (step <= 0.0) step = 1e-6 * sys.cell.lengths().maxCoeff();
    const std::size_t n = sys.size();
    auto gradient = [&](double h, bool five) {
        std::vector<double> g(3 * n);
        ParticleSystem s = sys;
        for (std::size_t i = 0; i < n; ++i)
            for (int d = 0; d < 3; ++d) {
                auto at = [&](double off) {
                    s.positions[i] = sys.positions[i];
                    s.positions[i][d] += off;
                    return energy(s);
                };
                double der;
                if (five)
                    der = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
                else
                    der = (at(h) - at(-h)) / (2 * h);
                s.positions[i] = sys.positions[i];
                g[3 * i + d] = -der;
            }
        return g;
    };
    const std::vector<double> analytic = flatten(forces);
    OracleReport best;
    best.rel_dev = INFINITY;
    double h = step;
    for (int attempt = 0; attempt < 3; ++attempt, h *= 0.5) {
        for (bool five : {false, true}) {
            OracleReport r = make_report("forces", gradient(h, five), analytic, tol);
            if (r.pass) return r;
            if (r.rel_dev < best.rel_dev) best = r;
        }
    }
    return best;
}

Coupling parse_coupling(const std::string& s) {
    if (s == "isotropic") return Coupling::isotropic;
    if (s == "anisotropic") return Coupling::anisotropic;
    if (s == "flexible") return Coupling::flexible;
    throw ParameterError("unknown coupling '" + s + "' (expected isotropic, anisotropic or flexible)");
}

const char* to_string(Coupling c) {
    switch (c) {
        case Coupling::isotropic: return "isotropic";
        case Coupling::anisotropic: return "anisotropic";
        default: return "flexible";
    }
}

OracleReport fd_pressure_check(const ParticleSystem& sys, Coupling coupling, const EnergyFunctional& energy,
                               const Mat3& pressure, double step, double tol) {
    const Mat3 h0 = sys.cell.h();
    const double V = sys.cell.volume();
    auto energy_at = [&](const Mat3& h) {
        ParticleSystem s = sys;
        s.rescale_cell(h);
        return energy(s);
    };
    auto attempt = [&](double eps, bool five) -> OracleReport {
        auto diff = [&](const std::function<Mat3(double)>& hof) {
            if (five)
                return (-energy_at(hof(2 * eps)) + 8 * energy_at(hof(eps)) - 8 * energy_at(hof(-eps)) +
                        energy_at(hof(-2 * eps))) /
                       (12 * eps);
            return (energy_at(hof(eps)) - energy_at(hof(-eps))) / (2 * eps);
        };
        if (coupling == Coupling::isotropic) {
            // V(e) = V (1 + e)
            const double dEde = diff([&](double e) { return Mat3(h0 * std::cbrt(1.0 + e)); });
            return make_report("pressure.isotropic", {-dEde / V}, {pressure.trace() / 3.0}, tol);
        }
        if (coupling == Coupling::anisotropic) {
            std::vector<double> fd, an;
            for (int a = 0; a < 3; ++a) {
                const double dEde = diff([&](double e) {
                    Mat3 h = h0;
                    h.col(a) *= 1.0 + e;
                    return h;
                });
                fd.push_back(-dEde / V);
                an.push_back(pressure(a, a));
            }
            return make_report("pressure.anisotropic", fd, an, tol);
        }
        // -(1/V) dE/dh h^T from the 9 entries of dE/dh.
        Mat3 dEdh;
        const double scale = h0.cwiseAbs().maxCoeff();
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                dEdh(a, b) = diff([&](double e) {
                                 Mat3 h = h0;
                                 h(a, b) += e * scale;
                                 return h;
                             }) /
                             scale;
        const Mat3 fd = -(dEdh * h0.transpose()) / V;
        return make_report("pressure.flexible", flatten(fd), flatten(pressure), tol);
    };
    OracleReport best;
    best.rel_dev = INFINITY;
    double eps = step;
    for (int k = 0; k < 3; ++k, eps *= 0.5)
        for (bool five : {false, true}) {
            OracleReport r = attempt(eps, five);
            if (r.pass) return r;
            if (r.rel_dev < best.rel_dev) best = r;
        }
    return best;
}

OracleReport virial_audit(double U_total, const Mat3& P_potential, double V, double delta) {
    OracleReport r;
    r.quantity = "virial";
    const double lhs = P_potential.trace() * V;
    r.oracle = {U_total};
    r.test = {lhs};
    r.abs_dev = std::fabs(lhs - U_total);
    r.rel_dev = relative_deviation(U_total, lhs);
    r.tol = 10.0 * delta;
    r.pass = r.abs_dev <= 10.0 * delta * std::fabs(U_total);
    return r;
}

double rocksalt_madelung(double a) {
    ParticleSystem s;
    s.cell = Cell::cubic(2.0 * a);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z) {
                s.positions.emplace_back(x * a, y * a, z * a);
                s.charges.push_back(((x + y + z) % 2) ? -1.0 : 1.0);
                s.masses.push_back(1.0);
                s.momenta.push_back(Vec3::Zero());
            }
    const OracleResult r = classical_ewald(s, ewald_recipe(s.cell, 1e-15));
    // 4 ion pairs per cell
    return -r.energy * a / 4.0;
}

} // namespace esp
