#include "esp/solver.hpp"

#include "esp/errors.hpp"

#include <cmath>

namespace esp {

int default_order(double delta) { return static_cast<int>(std::ceil(-std::log10(delta) - 1e-9)) + 1; }

EspParams resolve(EspParams p) {
    if (!(p.delta_split > 0.0)) throw ParameterError("delta_split must be positive");
    if (p.delta_spread <= 0.0) p.delta_spread = p.delta_split;
    if (p.P <= 0) p.P = default_order(p.delta_spread);
    if (!(p.r_c > 0.0)) throw ParameterError("r_c must be positive");
    if (p.r_in <= 0.0) p.r_in = 0.1 * p.r_c;
    return p;
}

EspSolver::EspSolver(const EspParams& params, const Cell& cell) : params_(resolve(params)) {
    kern_ = SplitKernel(build_pswf(solve_bandwidth(params_.delta_split), params_.table_tol), params_.r_c);
    if (params_.delta_spread == params_.delta_split)
        spread_ = std::make_shared<const PswfBasis>(kern_.basis());
    else
        spread_ = std::make_shared<const PswfBasis>(build_pswf(solve_bandwidth(params_.delta_spread), params_.table_tol));
    fft_ = std::make_unique<FftwProvider>();
    if (params_.use_pair_table) table_ = build_pair_table(kern_, params_.r_in, params_.table_resolution);
    replan(cell);
}

void EspSolver::replan(const Cell& cell) {
    grid_ = plan_grid(cell, kern_, spread_, params_.P, params_.oversampling, params_.delta_spread);
}

void EspSolver::follow(const Cell& cell) {
    GridSpec g = rescale_grid(grid_, cell);
    check_grid(g, cell, kern_);
    grid_ = std::move(g);
}

EspResult EspSolver::compute(const ParticleSystem& sys, const NeighborList* nl, bool local, bool forces) {
    EspResult r;
    NeighborList own;
    if (!nl) {
        own = build_cell_list(sys, kern_.r_c());
        nl = &own;
    }
    const double k = params_.prefactor;
    const ShortRangeResult sr = short_range(sys, kern_, *nl, params_.use_pair_table ? &table_ : nullptr);
    LongRangeOptions opts;
    opts.forces = forces;
    opts.pressure = true;
    opts.local_pressure = local;
    opts.mode = params_.mode;
    const LongRangeResult lr = long_range(sys, kern_, grid_, *fft_, opts);
    const BackgroundCorrection bc = kern_.background_correction(sys.total_charge(), sys.cell.volume());

    r.U_near = k * sr.energy;
    r.U_far = k * lr.energy;
    r.U_self = k * kern_.self_energy(sys.charges);
    r.U_cb = k * bc.U_cb;
    r.U_bb = k * bc.U_bb;
    r.pair_count = sr.pair_count;
    r.pressure.near = k * sr.pressure;
    r.pressure.far = k * lr.pressure;
    r.pressure.correction = k * bc.pressure;
    const std::size_t n = sys.size();
    r.forces_near.resize(n);
    r.forces_far.resize(n);
    r.forces.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.forces_near[i] = k * sr.forces[i];
        r.forces_far[i] = k * lr.forces[i];
        r.forces[i] = r.forces_near[i] + r.forces_far[i];
    }
    if (lr.per_particle_pressure) {
        r.per_particle_far = *lr.per_particle_pressure;
        for (auto& m : *r.per_particle_far) m *= k;
    }
    return r;
}

double EspSolver::energy(const ParticleSystem& sys) { return compute(sys, nullptr, false, false).energy(); }

} // namespace esp
