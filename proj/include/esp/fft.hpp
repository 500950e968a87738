#pragma once

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <mutex>

namespace esp {

using Dims = std::array<int, 3>;

struct FftCounters {
    long forward = 0;
    long inverse = 0;
};

/// 3D periodic real transforms on a row-major grid (z fastest).  The spectrum is the
/// half spectrum M_x x M_y x (M_z/2 + 1).  forward computes sum_g f_g e^{-2 pi i m.g/M};
/// inverse computes the unnormalized sum over the Hermitian-completed spectrum.
class FftProvider {
public:
    virtual ~FftProvider() = default;
    virtual void forward(const Dims& M, const double* in, std::complex<double>* out) = 0;
    virtual void inverse(const Dims& M, const std::complex<double>* in, double* out) = 0;

    const FftCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = {}; }

protected:
    FftCounters counters_;
};

// FFTW-backed provider; plans use FFTW_ESTIMATE so results do not depend on timing.
class FftwProvider : public FftProvider {
public:
    FftwProvider();
    ~FftwProvider() override;
    void forward(const Dims& M, const double* in, std::complex<double>* out) override;
    void inverse(const Dims& M, const std::complex<double>* in, double* out) override;

private:
    struct Plans;
    Plans& plans_for(const Dims& M);
    std::map<Dims, std::unique_ptr<Plans>> cache_;
    std::mutex mutex_;
};

inline std::size_t half_size(const Dims& M) {
    return static_cast<std::size_t>(M[0]) * M[1] * (M[2] / 2 + 1);
}
inline std::size_t full_size(const Dims& M) { return static_cast<std::size_t>(M[0]) * M[1] * M[2]; }

} // namespace esp
