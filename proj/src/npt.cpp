#include "esp/npt.hpp"

#include "esp/errors.hpp"

#include <cmath>

namespace esp {

void NptConfig::validate() const {
    if (!(dt > 0.0)) throw ParameterError("npt: dt must be positive");
    if (n_steps < 0) throw ParameterError("npt: n_steps must be non-negative");
    if (!(tau_P > 0.0)) throw ParameterError("npt: tau_P must be positive");
    if (!(beta_T >= 0.0)) throw ParameterError("npt: beta_T must be non-negative");
    if (!(target_T >= 0.0)) throw ParameterError("npt: target_T must be non-negative");
    if (!(kB > 0.0)) throw ParameterError("npt: kB must be positive");
    if (thermostat_period < 0) throw ParameterError("npt: thermostat_period must be non-negative");
    if (!(softcore_A >= 0.0)) throw ParameterError("npt: softcore_A must be non-negative");
    if (!(skin >= 0.0)) throw ParameterError("npt: skin must be non-negative");
    if (!(force_ceiling > 0.0)) throw ParameterError("npt: force_ceiling must be positive");
    if (!(volume_floor >= 0.0)) throw ParameterError("npt: volume_floor must be non-negative");
    if (!(replan_threshold > 0.0)) throw ParameterError("npt: replan_threshold must be positive");
    if (record_every < 1) throw ParameterError("npt: record_every must be >= 1");
    if (burn_in < 0) throw ParameterError("npt: burn_in must be non-negative");
}

SoftCoreResult soft_core(const ParticleSystem& sys, const NeighborList& nl, double A, double r_c) {
    SoftCoreResult r;
    r.forces.assign(sys.size(), Vec3::Zero());
    if (A == 0.0) return r;
    const double rc2 = r_c * r_c;
    const double shift = A / std::pow(rc2, 6);
    Mat3 virial = Mat3::Zero();
    for (const auto& [i, j] : nl.pairs) {
        const Vec3 d = sys.cell.minimum_image(sys.positions[i] - sys.positions[j]);
        const double r2 = d.squaredNorm();
        if (r2 >= rc2) continue;
        const double inv6 = 1.0 / (r2 * r2 * r2);
        const double u = A * inv6 * inv6;
        r.energy += u - shift;
        const Vec3 f = (12.0 * u / r2) * d;
        r.forces[i] += f;
        r.forces[j] -= f;
        virial += f * d.transpose();
    }
    r.pressure = virial / sys.cell.volume();
    return r;
}

Mat3 kinetic_pressure(const ParticleSystem& sys) {
    Mat3 k = Mat3::Zero();
    for (std::size_t i = 0; i < sys.size(); ++i) k += sys.momenta[i] * sys.momenta[i].transpose() / sys.masses[i];
    return k / sys.cell.volume();
}

double kinetic_energy(const ParticleSystem& sys) {
    double k = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) k += sys.momenta[i].squaredNorm() / (2.0 * sys.masses[i]);
    return k;
}

double kinetic_temperature(const ParticleSystem& sys, double kB) {
    const double dof = 3.0 * static_cast<double>(sys.size()) - 3.0;
    if (dof <= 0.0) return 0.0;
    return 2.0 * kinetic_energy(sys) / (kB * dof);
}

void init_momenta(ParticleSystem& sys, double T, double kB, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t n = sys.size();
    sys.momenta.assign(n, Vec3::Zero());
    Vec3 total = Vec3::Zero();
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::sqrt(sys.masses[i] * kB * T);
        for (int d = 0; d < 3; ++d) sys.momenta[i][d] = s * g(rng);
        total += sys.momenta[i];
        mass += sys.masses[i];
    }
    for (std::size_t i = 0; i < n; ++i) sys.momenta[i] -= total * (sys.masses[i] / mass);
}

double barostat_step(ParticleSystem& sys, const Mat3& P_ins, const NptConfig& cfg, std::mt19937_64& rng,
                     double volume_floor, long step) {
    if (cfg.beta_T == 0.0) return 0.0;
    const double V = sys.cell.volume();
    const double p = P_ins.trace() / 3.0;
    double de = -(cfg.beta_T / cfg.tau_P) * (cfg.target_P0 - p) * cfg.dt;
    if (cfg.barostat_noise) {
        std::normal_distribution<double> g(0.0, 1.0);
        de += std::sqrt(2.0 * cfg.kB * cfg.target_T * cfg.beta_T / (V * cfg.tau_P)) * std::sqrt(cfg.dt) * g(rng);
    }
    if (de == 0.0) return 0.0;
    const double V_new = V * std::exp(de);
    if (!(V_new > volume_floor))
        throw SimulationError("volume fell below the configured floor", step);
    sys.rescale_cell(sys.cell.h() * std::exp(de / 3.0));
    return de;
}

MeanError block_average(const std::vector<double>& x, int blocks) {
    MeanError m;
    m.samples = x.size();
    if (x.empty()) return m;
    double s = 0.0;
    for (double v : x) s += v;
    m.mean = s / static_cast<double>(x.size());
    const std::size_t nb = std::min<std::size_t>(blocks, x.size());
    if (nb < 2) return m;
    const std::size_t len = x.size() / nb;
    double ss = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        double bs = 0.0;
        for (std::size_t i = b * len; i < (b + 1) * len; ++i) bs += x[i];
        const double d = bs / static_cast<double>(len) - m.mean;
        ss += d * d;
    }
    m.stderr_ = std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb));
    return m;
}

namespace {

struct Evaluation {
    EspResult esp;
    SoftCoreResult soft;
    Vec3List forces;
};

void evaluate(EspSolver& solver, const ParticleSystem& sys, const NeighborList& nl, const NptConfig& cfg, long step,
              Evaluation& ev) {
    ev.esp = solver.compute(sys, &nl);
    ev.soft = soft_core(sys, nl, cfg.softcore_A, cfg.esp.r_c);
    ev.forces.resize(sys.size());
    for (std::size_t i = 0; i < sys.size(); ++i) {
        ev.forces[i] = ev.esp.forces[i] + ev.soft.forces[i];
        if (!(ev.forces[i].norm() <= cfg.force_ceiling))
            throw SimulationError("force on particle " + std::to_string(i) + " exceeds the configured ceiling", step);
    }
}

ThermoRecord make_record(const ParticleSystem& sys, const Evaluation& ev, long step, double dt, double kB) {
    ThermoRecord r;
    r.step = step;
    r.time = static_cast<double>(step) * dt;
    r.V = sys.cell.volume();
    r.kinetic = kinetic_energy(sys);
    r.T = kinetic_temperature(sys, kB);
    r.U_near = ev.esp.U_near;
    r.U_far = ev.esp.U_far;
    r.U_self = ev.esp.U_self;
    r.U_background = ev.esp.U_cb + ev.esp.U_bb;
    r.U_soft = ev.soft.energy;
    r.P_ins = kinetic_pressure(sys) + ev.esp.pressure.potential() + ev.soft.pressure;
    return r;
}

double net_force_ratio(const Vec3List& f) {
    Vec3 s = Vec3::Zero();
    double a = 0.0;
    for (const auto& v : f) {
        s += v;
        a += v.norm();
    }
    return a > 0.0 ? s.norm() / a : 0.0;
}

} // namespace

NptTrajectory integrate(const NptConfig& cfg, const ParticleSystem& initial, const RecordSink& sink) {
    cfg.validate();
    initial.validate();
    NptTrajectory out;
    ParticleSystem sys = initial;
    if (sys.momenta.size() != sys.size()) sys.momenta.assign(sys.size(), Vec3::Zero());
    std::mt19937_64 rng(cfg.seed);
    const double floor = cfg.volume_floor > 0.0 ? cfg.volume_floor : 0.1 * sys.cell.volume();
    const double rc = cfg.esp.r_c;

    EspSolver solver(cfg.esp, sys.cell);
    double V_plan = sys.cell.volume();
    NeighborList nl = build_cell_list(sys, rc, cfg.skin);
    Evaluation ev;
    evaluate(solver, sys, nl, cfg, 0, ev);

    ThermoRecord rec = make_record(sys, ev, 0, cfg.dt, cfg.kB);
    const double E0 = rec.total();
    out.records.push_back(rec);
    if (sink) sink(rec);
    out.volumes.push_back(rec.V);
    out.stats.max_net_force = net_force_ratio(ev.forces);

    std::vector<double> pressures, volumes, temps;
    auto accumulate = [&](const ThermoRecord& r) {
        if (r.step < cfg.burn_in) return;
        pressures.push_back(r.P_ins.trace() / 3.0);
        volumes.push_back(r.V);
        temps.push_back(r.T);
    };
    if (cfg.n_steps > 0) accumulate(rec);

    const std::size_t n = sys.size();
    for (long step = 1; step <= cfg.n_steps; ++step) {
        for (std::size_t i = 0; i < n; ++i) {
            sys.momenta[i] += 0.5 * cfg.dt * ev.forces[i];
            sys.positions[i] += (cfg.dt / sys.masses[i]) * sys.momenta[i];
        }
        sys.wrap();

        if (barostat_step(sys, rec.P_ins, cfg, rng, floor, step) != 0.0) {
            const double V = sys.cell.volume();
            bool replan = std::abs(V / V_plan - 1.0) > cfg.replan_threshold;
            if (!replan) {
                try {
                    solver.follow(sys.cell);
                } catch (const PlanningError&) {
                    replan = true;
                }
            }
            if (replan) {
                try {
                    solver.replan(sys.cell);
                } catch (const PlanningError& e) {
                    throw SimulationError(std::string("grid re-plan failed: ") + e.what(), step);
                }
                V_plan = V;
                ++out.stats.replans;
            }
        }

        if (needs_rebuild(nl, sys)) {
            try {
                nl = build_cell_list(sys, rc, cfg.skin);
            } catch (const GeometryError& e) {
                throw SimulationError(std::string("neighbor list: ") + e.what(), step);
            }
            ++out.stats.neighbor_rebuilds;
        }

        evaluate(solver, sys, nl, cfg, step, ev);
        for (std::size_t i = 0; i < n; ++i) sys.momenta[i] += 0.5 * cfg.dt * ev.forces[i];

        if (cfg.thermostat_period > 0 && step % cfg.thermostat_period == 0) {
            const double T = kinetic_temperature(sys, cfg.kB);
            if (T > 0.0) {
                const double s = std::sqrt(cfg.target_T / T);
                for (auto& p : sys.momenta) p *= s;
            }
        }

        rec = make_record(sys, ev, step, cfg.dt, cfg.kB);
        if (!(rec.V > 0.0)) throw SimulationError("non-positive volume", step);
        out.volumes.push_back(rec.V);
        out.stats.max_net_force = std::max(out.stats.max_net_force, net_force_ratio(ev.forces));
        if (E0 != 0.0) out.stats.energy_drift = std::max(out.stats.energy_drift, std::abs(rec.total() - E0) / std::abs(E0));
        accumulate(rec);
        if (step % cfg.record_every == 0 || step == cfg.n_steps) {
            out.records.push_back(rec);
            if (sink) sink(rec);
        }
    }

    out.stats.pressure = block_average(pressures);
    out.stats.volume = block_average(volumes);
    out.stats.temperature = block_average(temps);
    out.final_state = std::move(sys);
    return out;
}

ParticleSystem toy_system(std::size_t n, double rho, std::uint64_t seed, double min_sep) {
    if (n == 0 || !(rho > 0.0)) throw ParameterError("toy_system: need n > 0 and rho > 0");
    const double L = std::cbrt(static_cast<double>(n) / rho);
    ParticleSystem s;
    s.cell = Cell::cubic(L);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, L);
    const double m2 = min_sep * min_sep;
    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
            Vec3 r(u(rng), u(rng), u(rng));
            placed = true;
            for (const auto& q : s.positions)
                if (s.cell.minimum_image(r - q).squaredNorm() < m2) {
                    placed = false;
                    break;
                }
            if (placed) s.positions.push_back(r);
        }
        if (!placed) throw ParameterError("toy_system: could not place particles at this density and separation");
        s.charges.push_back(i % 2 ? -1.0 : 1.0);
        s.masses.push_back(1.0);
    }
    if (n % 2) s.charges.back() = 0.0;
    s.momenta.assign(n, Vec3::Zero());
    return s;
}

} // namespace esp
