#include "esp/fft.hpp"

#include <cstring>
#include <fftw3.h>
#include <vector>

namespace esp {

namespace {
// FFTW's planner is not thread safe.
std::mutex g_planner_mutex;
}

struct FftwProvider::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    fftw_complex* scratch = nullptr;
    std::size_t half = 0;
    ~Plans() {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
        if (scratch) fftw_free(scratch);
    }
};

FftwProvider::FftwProvider() = default;
FftwProvider::~FftwProvider() = default;

FftwProvider::Plans& FftwProvider::plans_for(const Dims& M) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(M);
    if (it != cache_.end()) return *it->second;
    auto p = std::make_unique<Plans>();
    p->half = half_size(M);
    std::lock_guard<std::mutex> plock(g_planner_mutex);
    p->scratch = fftw_alloc_complex(p->half);
    double* rbuf = fftw_alloc_real(full_size(M));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p->r2c = fftw_plan_dft_r2c_3d(M[0], M[1], M[2], rbuf, p->scratch, flags);
    p->c2r = fftw_plan_dft_c2r_3d(M[0], M[1], M[2], p->scratch, rbuf, flags);
    fftw_free(rbuf);
    auto& ref = *p;
    cache_.emplace(M, std::move(p));
    return ref;
}

void FftwProvider::forward(const Dims& M, const double* in, std::complex<double>* out) {
    Plans& p = plans_for(M);
    fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
    ++counters_.forward;
}

void FftwProvider::inverse(const Dims& M, const std::complex<double>* in, double* out) {
    Plans& p = plans_for(M);
    // c2r overwrites its input.
    std::vector<std::complex<double>> copy(in, in + p.half);
    fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(copy.data()), out);
    ++counters_.inverse;
}

} // namespace esp
