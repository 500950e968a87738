#include "esp/mesh.hpp"

#include "esp/errors.hpp"
#include "esp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace esp {

namespace {

std::string vec_str(const Vec3& v) {
    std::ostringstream os;
    os.precision(6);
    os << "(" << v[0] << ", " << v[1] << ", " << v[2] << ")";
    return os.str();
}

// Per-dimension wavevectors and window transforms; ok = false marks Nyquist indices.
struct AxisTables {
    std::array<std::vector<double>, 3> k, what;
    std::array<std::vector<char>, 3> ok;
};

AxisTables axis_tables(const GridSpec& spec, const Cell& cell) {
    AxisTables t;
    const PswfBasis& sb = *spec.spread_basis;
    const double cs = sb.c();
    const Vec3 L = cell.lengths();
    for (int d = 0; d < 3; ++d) {
        const int M = spec.M[d];
        const int n = d == 2 ? M / 2 + 1 : M;
        t.k[d].resize(n);
        t.what[d].resize(n);
        t.ok[d].resize(n);
        for (int i = 0; i < n; ++i) {
            const int m = i <= M / 2 ? i : i - M;
            const double k = 2.0 * M_PI * m / L[d];
            t.k[d][i] = k;
            t.ok[d][i] = (2 * i != M);
            const double x = spec.omega[d] * std::fabs(k) / cs;
            t.what[d][i] = x <= 1.0 ? spec.omega[d] * sb.lambda0() * eval_psi0(sb, x) : 0.0;
        }
    }
    return t;
}

void check_cell_matches(const GridSpec& spec, const Cell& cell) {
    if (!cell.is_orthorhombic()) throw PlanningError("mesh pipeline requires an orthorhombic cell");
    const Vec3 L = cell.lengths();
    for (int d = 0; d < 3; ++d)
        if (std::fabs(L[d] - spec.L[d]) > 1e-12 * spec.L[d])
            throw PlanningError("grid was planned for box " + vec_str(spec.L) + " but the cell is " + vec_str(L));
}

inline std::size_t half_index(const Dims& M, int ix, int iy, int iz) {
    return (static_cast<std::size_t>(ix) * M[1] + iy) * (M[2] / 2 + 1) + iz;
}

struct ModeInfo {
    std::size_t index;
    Vec3 k;
    double k2;
    double weight;  // 1 for iz = 0, 2 for interior z modes
    double inv_w2;
};

// Calls f(info, chunk) for every retained mode of the half spectrum, chunked over ix.
template <class F>
void scan_modes(const GridSpec& spec, const SplitKernel& kern, const Cell& cell, F&& f) {
    const AxisTables t = axis_tables(spec, cell);
    const double kmax2 = kern.kmax() * kern.kmax();
    const double w0 = t.what[0][0] * t.what[1][0] * t.what[2][0];
    const Dims M = spec.M;
    const int nz = M[2] / 2 + 1;
    parallel_chunks(M[0], [&](std::size_t b, std::size_t e, int chunk) {
        for (int ix = static_cast<int>(b); ix < static_cast<int>(e); ++ix) {
            if (!t.ok[0][ix]) continue;
            const double kx = t.k[0][ix];
            for (int iy = 0; iy < M[1]; ++iy) {
                if (!t.ok[1][iy]) continue;
                const double ky = t.k[1][iy];
                const double kxy2 = kx * kx + ky * ky;
                if (kxy2 > kmax2) continue;
                for (int iz = 0; iz < nz; ++iz) {
                    if (!t.ok[2][iz]) continue;
                    const double kz = t.k[2][iz];
                    const double k2 = kxy2 + kz * kz;
                    if (k2 > kmax2) break;  // |k_z| grows with iz on the half spectrum
                    if (k2 == 0.0) continue;
                    const double w = t.what[0][ix] * t.what[1][iy] * t.what[2][iz];
                    if (!(std::fabs(w) >= 1e-13 * std::fabs(w0)))
                        throw PlanningError("window transform vanishes on a retained mode; increase c_spread or "
                                            "reduce P relative to the grid");
                    ModeInfo mi{half_index(M, ix, iy, iz), Vec3(kx, ky, kz), k2, iz == 0 ? 1.0 : 2.0, 1.0 / (w * w)};
                    f(mi, chunk);
                }
            }
        }
    });
}

struct Stencil {
    int P;
    long idx[3][32];
    double w[3][32];
    double dw[3][32];
};

void make_stencil(const GridSpec& spec, const Vec3& r, bool derivs, Stencil& st) {
    const int P = spec.P;
    st.P = P;
    for (int d = 0; d < 3; ++d) {
        const int M = spec.M[d];
        double u = r[d] / spec.spacing[d];
        u -= M * std::floor(u / M);
        long i0;
        double s;
        stencil_start(u, P, i0, s);
        for (int p = 0; p < P; ++p) {
            long g = (i0 + p) % M;
            if (g < 0) g += M;
            st.idx[d][p] = g;
        }
        if (derivs)
            spec.window.weights_and_derivs(s, st.w[d], st.dw[d]);
        else
            spec.window.weights(s, st.w[d]);
    }
}

inline std::size_t grid_index(const Dims& M, long x, long y, long z) {
    return (static_cast<std::size_t>(x) * M[1] + y) * M[2] + z;
}

void require_spectral(const GridField& f, const GridSpec& spec) {
    if (!f.spectral || f.M != spec.M || f.modes.size() != half_size(spec.M))
        throw ParameterError("expected the forward transform of a spread grid for this GridSpec");
}

// Gather sum_g W(x_g - r) field(x_g) for several real fields at once.
void gather(const GridSpec& spec, const Stencil& st, const std::vector<const double*>& fields, double* out) {
    const int P = st.P;
    const std::size_t nf = fields.size();
    std::fill(out, out + nf, 0.0);
    for (int a = 0; a < P; ++a)
        for (int b = 0; b < P; ++b) {
            const double wab = st.w[0][a] * st.w[1][b];
            const std::size_t row = (static_cast<std::size_t>(st.idx[0][a]) * spec.M[1] + st.idx[1][b]) * spec.M[2];
            for (int c = 0; c < P; ++c) {
                const double wt = wab * st.w[2][c];
                const std::size_t g = row + st.idx[2][c];
                for (std::size_t f = 0; f < nf; ++f) out[f] += wt * fields[f][g];
            }
        }
}

void check_mode_budget(int P) {
    if (P > 32) throw ParameterError("spreading order P > 32 is not supported");
}

} // namespace

GridSpec make_grid(const Cell& cell, const SplitKernel& kern, std::shared_ptr<const PswfBasis> spread_basis, int P,
                   const Dims& M, double delta_spread, double oversampling) {
    if (!cell.is_orthorhombic()) throw PlanningError("plan_grid: mesh pipeline requires an orthorhombic cell");
    if (P < 2) throw PlanningError("plan_grid: P must be >= 2");
    check_mode_budget(P);
    GridSpec spec;
    spec.L = cell.lengths();
    spec.P = P;
    spec.M = M;
    spec.delta_spread = delta_spread;
    spec.oversampling = oversampling;
    spec.spread_basis = std::move(spread_basis);
    for (int d = 0; d < 3; ++d) {
        if (M[d] < 2) throw PlanningError("plan_grid: every grid dimension needs at least 2 points");
        spec.spacing[d] = spec.L[d] / M[d];
        spec.omega[d] = 0.5 * P * spec.spacing[d];
    }
    spec.window = tabulate_window(*spec.spread_basis, P, spec.spread_basis->table_tol());
    check_grid(spec, cell, kern);
    return spec;
}

GridSpec plan_grid(const Cell& cell, const SplitKernel& kern, std::shared_ptr<const PswfBasis> spread_basis, int P,
                   double oversampling, double delta_spread) {
    if (!cell.is_orthorhombic()) throw PlanningError("plan_grid: mesh pipeline requires an orthorhombic cell");
    if (!(oversampling >= 1.0)) throw PlanningError("plan_grid: oversampling must be >= 1");
    const Vec3 L = cell.lengths();
    Dims M{0, 0, 0};
    for (int d = 0; d < 3; ++d) {
        const double x = oversampling * kern.kmax() * L[d] / M_PI;
        int m = static_cast<int>(std::ceil(x * (1.0 - 1e-12)));
        if (m % 2) ++m;
        M[d] = std::max(m, 2);
    }
    return make_grid(cell, kern, std::move(spread_basis), P, M, delta_spread, oversampling);
}

GridSpec plan_grid(const Cell& cell, const SplitKernel& kern, double delta_spread, int P, double oversampling,
                   double table_tol) {
    auto sb = std::make_shared<const PswfBasis>(build_pswf(solve_bandwidth(delta_spread), table_tol));
    return plan_grid(cell, kern, std::move(sb), P, oversampling, delta_spread);
}

GridSpec rescale_grid(const GridSpec& spec, const Cell& cell) {
    if (!cell.is_orthorhombic()) throw PlanningError("rescale_grid: mesh pipeline requires an orthorhombic cell");
    GridSpec s = spec;
    s.L = cell.lengths();
    for (int d = 0; d < 3; ++d) {
        s.spacing[d] = s.L[d] / s.M[d];
        s.omega[d] = 0.5 * s.P * s.spacing[d];
    }
    return s;
}

void check_grid(const GridSpec& spec, const Cell& cell, const SplitKernel& kern) {
    check_cell_matches(spec, cell);
    const double kmax = kern.kmax();
    const double cs = spec.spread_basis->c();
    for (int d = 0; d < 3; ++d) {
        const char ax = "xyz"[d];
        if (M_PI / spec.spacing[d] < kmax * (1.0 - 1e-12))
            throw PlanningError(std::string("Nyquist coverage violated on ") + ax + ": pi/h = " +
                                std::to_string(M_PI / spec.spacing[d]) + " < kmax = " + std::to_string(kmax));
        if (cs / spec.omega[d] < kmax * (1.0 - 1e-12))
            throw PlanningError(std::string("band coverage violated on ") + ax + ": c_spread/omega = " +
                                std::to_string(cs / spec.omega[d]) + " < kmax = " + std::to_string(kmax));
        if (!(2.0 * spec.omega[d] < spec.L[d]))
            throw PlanningError(std::string("window support 2*omega = ") + std::to_string(2.0 * spec.omega[d]) +
                                " is not smaller than L_" + ax + " = " + std::to_string(spec.L[d]));
    }
}

GridField spread_charges(const ParticleSystem& sys, const GridSpec& spec) {
    check_cell_matches(spec, sys.cell);
    const Dims M = spec.M;
    const std::size_t n = sys.size();
    const int nt = num_threads();
    std::vector<std::vector<double>> part(nt);
    parallel_chunks(n, [&](std::size_t b, std::size_t e, int c) {
        auto& g = part[c];
        g.assign(full_size(M), 0.0);
        Stencil st;
        for (std::size_t j = b; j < e; ++j) {
            const double q = sys.charges[j];
            if (q == 0.0) continue;
            make_stencil(spec, sys.positions[j], false, st);
            for (int a = 0; a < spec.P; ++a)
                for (int bb = 0; bb < spec.P; ++bb) {
                    const double wab = q * st.w[0][a] * st.w[1][bb];
                    const std::size_t row = (static_cast<std::size_t>(st.idx[0][a]) * M[1] + st.idx[1][bb]) * M[2];
                    for (int cc = 0; cc < spec.P; ++cc) g[row + st.idx[2][cc]] += wab * st.w[2][cc];
                }
        }
    });
    GridField f;
    f.M = M;
    f.real = std::move(part[0]);
    for (int c = 1; c < nt; ++c)
        if (!part[c].empty())
            for (std::size_t i = 0; i < f.real.size(); ++i) f.real[i] += part[c][i];
    if (f.real.empty()) f.real.assign(full_size(M), 0.0);
    return f;
}

GridField forward_transform(const GridField& rho, const GridSpec& spec, FftProvider& fft) {
    if (rho.spectral || rho.M != spec.M) throw ParameterError("forward_transform: expected a real grid for this spec");
    GridField out;
    out.M = spec.M;
    out.spectral = true;
    out.modes.resize(half_size(spec.M));
    fft.forward(spec.M, rho.real.data(), out.modes.data());
    const double dv = spec.cell_volume();
    for (auto& z : out.modes) z *= dv;
    return out;
}

double window_hat(const GridSpec& spec, const Vec3& k) {
    const PswfBasis& sb = *spec.spread_basis;
    double w = 1.0;
    for (int d = 0; d < 3; ++d) {
        const double x = spec.omega[d] * std::fabs(k[d]) / sb.c();
        if (x > 1.0) return 0.0;
        w *= spec.omega[d] * sb.lambda0() * eval_psi0(sb, x);
    }
    return w;
}

double long_range_energy(const GridField& rho_hat, const SplitKernel& kern, const GridSpec& spec, const Cell& cell) {
    require_spectral(rho_hat, spec);
    check_cell_matches(spec, cell);
    std::vector<double> part(num_threads(), 0.0);
    scan_modes(spec, kern, cell, [&](const ModeInfo& m, int c) {
        double fhat, kkc;
        kern.spectral_coeffs(std::sqrt(m.k2), fhat, kkc);
        part[c] += m.weight * fhat * m.inv_w2 * std::norm(rho_hat.modes[m.index]);
    });
    double s = 0.0;
    for (double x : part) s += x;
    return s / (2.0 * cell.volume());
}

Mat3 long_range_pressure(const GridField& rho_hat, const SplitKernel& kern, const GridSpec& spec, const Cell& cell) {
    require_spectral(rho_hat, spec);
    check_cell_matches(spec, cell);
    const int nt = num_threads();
    std::vector<double> iso(nt, 0.0);
    std::vector<Mat3> aniso(nt, Mat3::Zero());
    scan_modes(spec, kern, cell, [&](const ModeInfo& m, int c) {
        double fhat, kkc;
        kern.spectral_coeffs(std::sqrt(m.k2), fhat, kkc);
        const double s = m.weight * m.inv_w2 * std::norm(rho_hat.modes[m.index]);
        iso[c] += s * fhat;
        aniso[c] += (s * (kkc - 2.0 * fhat / m.k2)) * (m.k * m.k.transpose());
    });
    double a = 0.0;
    Mat3 t = Mat3::Zero();
    for (int c = 0; c < nt; ++c) {
        a += iso[c];
        t += aniso[c];
    }
    const double V = cell.volume();
    Mat3 P = (a * Mat3::Identity() + t) / (2.0 * V * V);
    return 0.5 * (P + P.transpose());
}

Vec3List long_range_forces(const GridField& rho_hat, const ParticleSystem& sys, const SplitKernel& kern,
                           const GridSpec& spec, ForceMode mode, FftProvider& fft) {
    require_spectral(rho_hat, spec);
    check_cell_matches(spec, sys.cell);
    const Dims M = spec.M;
    const double V = sys.cell.volume();
    const double dv = spec.cell_volume();
    const std::size_t n = sys.size();
    Vec3List forces(n, Vec3::Zero());

    if (mode == ForceMode::analytic) {
        std::vector<std::complex<double>> g(half_size(M), 0.0);
        scan_modes(spec, kern, sys.cell, [&](const ModeInfo& m, int) {
            double fhat, kkc;
            kern.spectral_coeffs(std::sqrt(m.k2), fhat, kkc);
            g[m.index] = (fhat * m.inv_w2 / V) * rho_hat.modes[m.index];
        });
        std::vector<double> phi(full_size(M));
        fft.inverse(M, g.data(), phi.data());
        parallel_chunks(n, [&](std::size_t b, std::size_t e, int) {
            Stencil st;
            for (std::size_t j = b; j < e; ++j) {
                const double q = sys.charges[j];
                if (q == 0.0) continue;
                make_stencil(spec, sys.positions[j], true, st);
                Vec3 grad = Vec3::Zero();
                for (int a = 0; a < spec.P; ++a)
                    for (int bb = 0; bb < spec.P; ++bb) {
                        const std::size_t row =
                            (static_cast<std::size_t>(st.idx[0][a]) * M[1] + st.idx[1][bb]) * M[2];
                        for (int cc = 0; cc < spec.P; ++cc) {
                            const double f = phi[row + st.idx[2][cc]];
                            grad[0] += f * st.dw[0][a] * st.w[1][bb] * st.w[2][cc];
                            grad[1] += f * st.w[0][a] * st.dw[1][bb] * st.w[2][cc];
                            grad[2] += f * st.w[0][a] * st.w[1][bb] * st.dw[2][cc];
                        }
                    }
                for (int d = 0; d < 3; ++d) forces[j][d] = -q * dv * grad[d] / spec.spacing[d];
            }
        });
        return forces;
    }

    if (mode != ForceMode::ik) throw ParameterError("long_range_forces: unknown differentiation mode");
    std::array<std::vector<std::complex<double>>, 3> e;
    for (auto& v : e) v.assign(half_size(M), 0.0);
    scan_modes(spec, kern, sys.cell, [&](const ModeInfo& m, int) {
        double fhat, kkc;
        kern.spectral_coeffs(std::sqrt(m.k2), fhat, kkc);
        const std::complex<double> base = (fhat * m.inv_w2 / V) * rho_hat.modes[m.index];
        for (int d = 0; d < 3; ++d) e[d][m.index] = std::complex<double>(0.0, -m.k[d]) * base;
    });
    std::array<std::vector<double>, 3> field;
    for (int d = 0; d < 3; ++d) {
        field[d].resize(full_size(M));
        fft.inverse(M, e[d].data(), field[d].data());
    }
    const std::vector<const double*> ptrs = {field[0].data(), field[1].data(), field[2].data()};
    parallel_chunks(n, [&](std::size_t b, std::size_t en, int) {
        Stencil st;
        double out[3];
        for (std::size_t j = b; j < en; ++j) {
            const double q = sys.charges[j];
            if (q == 0.0) continue;
            make_stencil(spec, sys.positions[j], false, st);
            gather(spec, st, ptrs, out);
            for (int d = 0; d < 3; ++d) forces[j][d] = q * dv * out[d];
        }
    });
    return forces;
}

std::vector<Mat3> local_pressure(const GridField& rho_hat, const ParticleSystem& sys, const SplitKernel& kern,
                                 const GridSpec& spec, FftProvider& fft) {
    require_spectral(rho_hat, spec);
    check_cell_matches(spec, sys.cell);
    const Dims M = spec.M;
    const double V = sys.cell.volume();
    const double dv = spec.cell_volume();
    static const int comp[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
    std::array<std::vector<std::complex<double>>, 6> pi;
    for (auto& v : pi) v.assign(half_size(M), 0.0);
    scan_modes(spec, kern, sys.cell, [&](const ModeInfo& m, int) {
        double fhat, kkc;
        kern.spectral_coeffs(std::sqrt(m.k2), fhat, kkc);
        const std::complex<double> base = (m.inv_w2 / V) * rho_hat.modes[m.index];
        const double a = kkc - 2.0 * fhat / m.k2;
        for (int c = 0; c < 6; ++c) {
            const int i = comp[c][0], j = comp[c][1];
            pi[c][m.index] = ((i == j ? fhat : 0.0) + a * m.k[i] * m.k[j]) * base;
        }
    });
    std::array<std::vector<double>, 6> field;
    std::vector<const double*> ptrs;
    for (int c = 0; c < 6; ++c) {
        field[c].resize(full_size(M));
        fft.inverse(M, pi[c].data(), field[c].data());
        ptrs.push_back(field[c].data());
    }
    std::vector<Mat3> out(sys.size(), Mat3::Zero());
    parallel_chunks(sys.size(), [&](std::size_t b, std::size_t e, int) {
        Stencil st;
        double g[6];
        for (std::size_t j = b; j < e; ++j) {
            const double q = sys.charges[j];
            if (q == 0.0) continue;
            make_stencil(spec, sys.positions[j], false, st);
            gather(spec, st, ptrs, g);
            Mat3& Pj = out[j];
            for (int c = 0; c < 6; ++c) {
                const double v = q * dv * g[c] / (2.0 * V);
                Pj(comp[c][0], comp[c][1]) = v;
                Pj(comp[c][1], comp[c][0]) = v;
            }
        }
    });
    return out;
}

LongRangeResult long_range(const ParticleSystem& sys, const SplitKernel& kern, const GridSpec& spec,
                           FftProvider& fft, const LongRangeOptions& opts) {
    LongRangeResult res;
    const GridField rho_hat = forward_transform(spread_charges(sys, spec), spec, fft);
    res.energy = long_range_energy(rho_hat, kern, spec, sys.cell);
    if (opts.pressure) res.pressure = long_range_pressure(rho_hat, kern, spec, sys.cell);
    if (opts.forces)
        res.forces = long_range_forces(rho_hat, sys, kern, spec, opts.mode, fft);
    else
        res.forces.assign(sys.size(), Vec3::Zero());
    if (opts.local_pressure) res.per_particle_pressure = local_pressure(rho_hat, sys, kern, spec, fft);
    return res;
}

std::size_t retained_modes(const GridSpec& spec, const SplitKernel& kern) {
    Cell cell = Cell::orthorhombic(spec.L[0], spec.L[1], spec.L[2]);
    std::vector<double> part(num_threads(), 0.0);
    scan_modes(spec, kern, cell, [&](const ModeInfo& m, int c) { part[c] += m.weight; });
    double s = 0.0;
    for (double x : part) s += x;
    return static_cast<std::size_t>(std::llround(s));
}

ForceMode parse_force_mode(const std::string& s) {
    if (s == "ik") return ForceMode::ik;
    if (s == "analytic") return ForceMode::analytic;
    throw ParameterError("unknown force differentiation mode '" + s + "' (expected ik or analytic)");
}

const char* to_string(ForceMode m) { return m == ForceMode::ik ? "ik" : "analytic"; }

} // namespace esp
