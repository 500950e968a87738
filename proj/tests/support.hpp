#pragma once

#include "esp/fft.hpp"
#include "esp/system.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace esp::test {

inline double rel(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300}); }

// Adaptive Gauss-Kronrod integral of f over [a, b].
template <class F>
double integrate(F f, double a, double b, double tol = 1e-14) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

// Random neutral +-1 system (odd N gets one extra uncompensated charge unless neutral = false).
inline ParticleSystem random_charges(std::size_t n, const Mat3& h, std::uint64_t seed, bool neutral = true,
                                     double min_sep = 0.3) {
    ParticleSystem s;
    s.cell = Cell(h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    while (s.positions.size() < n) {
        const Vec3 r = s.cell.to_cartesian(Vec3(U(rng), U(rng), U(rng)));
        bool ok = true;
        for (const auto& p : s.positions)
            if (s.cell.minimum_image(r - p).norm() < min_sep) ok = false;
        if (!ok) continue;
        s.positions.push_back(r);
        s.charges.push_back(s.positions.size() % 2 ? 1.0 : -1.0);
        s.masses.push_back(1.0);
    }
    if (neutral && n % 2 == 1) s.charges.back() = 0.0;
    s.momenta.assign(n, Vec3::Zero());
    return s;
}

inline ParticleSystem random_charges(std::size_t n, double L, std::uint64_t seed, bool neutral = true,
                                     double min_sep = 0.3) {
    return random_charges(n, Mat3(L * Mat3::Identity()), seed, neutral, min_sep);
}

inline ParticleSystem pair_system(double L, const Vec3& a, const Vec3& b, double qa = 1.0, double qb = -1.0) {
    ParticleSystem s;
    s.cell = Cell::cubic(L);
    s.positions = {a, b};
    s.charges = {qa, qb};
    s.masses = {1.0, 1.0};
    s.momenta.assign(2, Vec3::Zero());
    return s;
}

// O(M^2) discrete Fourier transform obeying the FftProvider contract.
class NaiveDft : public FftProvider {
public:
    void forward(const Dims& M, const double* in, std::complex<double>* out) override {
        ++counters_.forward;
        const int hz = M[2] / 2 + 1;
        for (int a = 0; a < M[0]; ++a)
            for (int b = 0; b < M[1]; ++b)
                for (int c = 0; c < hz; ++c) {
                    std::complex<double> s = 0.0;
                    for (int x = 0; x < M[0]; ++x)
                        for (int y = 0; y < M[1]; ++y)
                            for (int z = 0; z < M[2]; ++z) {
                                const double ph = -2.0 * M_PI *
                                                  (double(a) * x / M[0] + double(b) * y / M[1] + double(c) * z / M[2]);
                                s += in[(std::size_t(x) * M[1] + y) * M[2] + z] * std::polar(1.0, ph);
                            }
                    out[(std::size_t(a) * M[1] + b) * hz + c] = s;
                }
    }

    void inverse(const Dims& M, const std::complex<double>* in, double* out) override {
        ++counters_.inverse;
        const int hz = M[2] / 2 + 1;
        for (int x = 0; x < M[0]; ++x)
            for (int y = 0; y < M[1]; ++y)
                for (int z = 0; z < M[2]; ++z) {
                    double s = 0.0;
                    for (int a = 0; a < M[0]; ++a)
                        for (int b = 0; b < M[1]; ++b)
                            for (int c = 0; c < M[2]; ++c) {
                                std::complex<double> v;
                                if (c < hz) {
                                    v = in[(std::size_t(a) * M[1] + b) * hz + c];
                                } else {
                                    const int a2 = (M[0] - a) % M[0], b2 = (M[1] - b) % M[1], c2 = M[2] - c;
                                    v = std::conj(in[(std::size_t(a2) * M[1] + b2) * hz + c2]);
                                }
                                const double ph = 2.0 * M_PI *
                                                  (double(a) * x / M[0] + double(b) * y / M[1] + double(c) * z / M[2]);
                                s += (v * std::polar(1.0, ph)).real();
                            }
                    out[(std::size_t(x) * M[1] + y) * M[2] + z] = s;
                }
    }
};

} // namespace esp::test
