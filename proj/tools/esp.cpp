#include "esp/commands.hpp"
#include "esp/errors.hpp"
#include "esp/parallel.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#ifndef ESP_DATA_DIR
#define ESP_DATA_DIR "data"
#endif

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kRuntime = 3 };

struct Options {
    std::string config_file;
    std::vector<std::string> sets;
    std::string input, output, final_state;
    std::optional<double> delta, delta_spread, r_c, oversampling, prefactor, target;
    std::optional<int> P, threads;
    std::optional<long> seed, steps;
    std::optional<std::string> mode, coupling, quantity, kind, calibration;
};

esp::RunConfig build_config(const std::string& sub, const Options& o) {
    esp::RunConfig cfg;
    if (!o.config_file.empty()) cfg.merge_file(o.config_file);
    cfg.set("subcommand", sub);
    if (!o.input.empty()) cfg.set("input", o.input);
    if (!o.output.empty()) cfg.set("output", o.output);
    auto num = [&](const char* key, const auto& v) {
        if (v) cfg.merge(nlohmann::json{{key, *v}});
    };
    num("delta_split", o.delta);
    num("delta_spread", o.delta_spread);
    num("r_c", o.r_c);
    num("oversampling", o.oversampling);
    num("prefactor", o.prefactor);
    num("P", o.P);
    num("threads", o.threads);
    num("seed", o.seed);
    num("npt.n_steps", o.steps);
    num("tune.target", o.target);
    num("mode", o.mode);
    num("coupling", o.coupling);
    num("tune.quantity", o.quantity);
    num("bench.kind", o.kind);
    num("tune.calibration", o.calibration);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw esp::ParameterError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg.resolved();
}

void emit(const esp::RecordFile& f, const esp::RunConfig& cfg) {
    const std::string out = cfg.str("output");
    if (out.empty() || out == "-") {
        esp::write_records(std::cout, f);
        return;
    }
    std::ofstream os(out);
    if (!os) throw esp::InputError("cannot write '" + out + "'");
    esp::write_records(os, f);
}

esp::ParticleSystem load_input(const esp::RunConfig& cfg) {
    const std::string in = cfg.str("input");
    if (in.empty()) throw esp::ParameterError("an input particle file is required (-i)");
    return esp::read_particles_file(in);
}

std::string calibration_path(const esp::RunConfig& cfg) {
    const std::string p = cfg.str("tune.calibration");
    return p.empty() ? std::string(ESP_DATA_DIR) + "/calibration.json" : p;
}

int run_tune(const esp::RunConfig& cfg) {
    esp::TuneTable table = esp::default_tune_table();
    const std::string cal = calibration_path(cfg);
    if (std::filesystem::exists(cal)) table = esp::load_tune_table(cal);
    std::optional<esp::ParticleSystem> sys;
    if (!cfg.str("input").empty()) sys = load_input(cfg);
    const auto r = esp::tune(esp::parse_tune_quantity(cfg.str("tune.quantity")), cfg.number("tune.target"), table,
                             cfg.number("r_c"), sys ? &sys->cell : nullptr, cfg.number("oversampling"));
    emit(esp::tune_records(r, cfg), cfg);
    return kOk;
}

int run_compute(const esp::RunConfig& cfg) {
    emit(esp::compute_records(load_input(cfg), cfg), cfg);
    return kOk;
}

int run_local(const esp::RunConfig& cfg) {
    emit(esp::local_pressure_records(load_input(cfg), cfg), cfg);
    return kOk;
}

int run_verify(const esp::RunConfig& cfg) {
    const auto reports = esp::verify_suite(load_input(cfg), cfg.esp_params());
    emit(esp::verify_records(reports, cfg), cfg);
    bool ok = true;
    for (const auto& r : reports) {
        std::cerr << (r.pass ? "PASS " : "FAIL ") << r.quantity << " rel=" << esp::format_double(r.rel_dev)
                  << " tol=" << esp::format_double(r.tol) << '\n';
        ok = ok && r.pass;
    }
    return ok ? kOk : kVerifyFailed;
}

int run_bench(const esp::RunConfig& cfg) {
    const std::string kind = cfg.str("bench.kind");
    esp::RecordFile f;
    f.header = esp::artifact_header("bench " + kind, cfg);
    const esp::EspParams p = cfg.esp_params();
    if (kind == "scaling") {
        const auto rows = esp::bench_scaling(p, static_cast<std::size_t>(cfg.integer("bench.n_min")),
                                             static_cast<int>(cfg.integer("bench.doublings")),
                                             cfg.number("bench.density"), static_cast<int>(cfg.integer("bench.repeats")),
                                             static_cast<std::uint64_t>(cfg.integer("seed")));
        f.header.push_back("columns: scaling <N> seconds pairs grid_points");
        std::vector<double> n, t;
        for (const auto& r : rows) {
            f.add("scaling", std::to_string(r.n),
                  {r.seconds, static_cast<double>(r.pairs), static_cast<double>(r.grid_points)});
            n.push_back(static_cast<double>(r.n));
            t.push_back(r.seconds);
        }
        f.add("slope", "loglog", {esp::loglog_slope(n, t)});
    } else if (kind == "grid" || kind == "order") {
        const esp::ParticleSystem sys = cfg.str("input").empty()
                                            ? esp::random_system(100, esp::Vec3(10, 10, 10),
                                                                 static_cast<std::uint64_t>(cfg.integer("seed")), 0.8)
                                            : load_input(cfg);
        std::vector<esp::ConvergenceRow> rows;
        if (kind == "grid") {
            esp::EspSolver probe(p, sys.cell);
            std::vector<int> Ms;
            for (int k = 0; k < 8; ++k) Ms.push_back(probe.grid().M[0] + 4 * k);
            rows = esp::bench_grid(sys, p, Ms);
        } else {
            esp::EspSolver probe(p, sys.cell);
            std::vector<int> Ps;
            for (int P = 2; P <= 16; ++P) Ps.push_back(P);
            rows = esp::bench_order(sys, p, 2 * probe.grid().M[0], Ps);
        }
        f.header.push_back("columns: convergence <M>x<P> M P diag_error offdiag_error");
        for (const auto& r : rows)
            f.add("convergence", std::to_string(r.M) + "x" + std::to_string(r.P),
                  {double(r.M), double(r.P), r.diag_error, r.offdiag_error});
    } else if (kind == "calibrate") {
        const std::vector<double> deltas = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6, 1e-7, 1e-8};
        const auto rows = esp::run_calibration(deltas, 4, static_cast<std::uint64_t>(cfg.integer("seed")),
                                               cfg.number("oversampling"));
        esp::save_calibration(calibration_path(cfg), rows);
        f.header.push_back("columns: calibration <delta> diag offdiag force");
        for (const auto& r : rows) f.add("calibration", esp::format_double(r.delta), {r.diag, r.offdiag, r.force});
    } else {
        throw esp::ParameterError("unknown bench kind '" + kind + "' (scaling, grid, order, calibrate)");
    }
    emit(f, cfg);
    return kOk;
}

int run_simulate(const esp::RunConfig& cfg, const std::string& final_state) {
    esp::ParticleSystem sys = load_input(cfg);
    const esp::NptConfig npt = cfg.npt_config();
    std::mt19937_64 rng(npt.seed ^ 0x9e3779b97f4a7c15ULL);
    esp::init_momenta(sys, npt.target_T, npt.kB, rng);
    esp::RecordFile f;
    f.header = esp::artifact_header("simulate", cfg);
    f.header.push_back(
        "columns: thermo <step> time T V Pxx Pxy Pxz Pyx Pyy Pyz Pzx Pzy Pzz U_near U_far U_self U_background U_soft "
        "kinetic total enthalpy");
    const auto traj = esp::integrate(npt, sys, [&](const esp::ThermoRecord& r) {
        std::vector<double> v = {r.time, r.T, r.V};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) v.push_back(r.P_ins(i, j));
        for (double x : {r.U_near, r.U_far, r.U_self, r.U_background, r.U_soft, r.kinetic, r.total(),
                         r.enthalpy(npt.target_P0)})
            v.push_back(x);
        f.add("thermo", std::to_string(r.step), std::move(v));
    });
    const auto& s = traj.stats;
    f.add("stat", "pressure", {s.pressure.mean, s.pressure.stderr_, double(s.pressure.samples)});
    f.add("stat", "volume", {s.volume.mean, s.volume.stderr_, double(s.volume.samples)});
    f.add("stat", "temperature", {s.temperature.mean, s.temperature.stderr_, double(s.temperature.samples)});
    f.add("stat", "energy_drift", {s.energy_drift});
    f.add("stat", "replans", {double(s.replans)});
    emit(f, cfg);
    if (!final_state.empty()) {
        std::ofstream os(final_state);
        if (!os) throw esp::InputError("cannot write '" + final_state + "'");
        esp::write_particles(os, traj.final_state);
    }
    return kOk;
}

void common_options(CLI::App* sub, Options& o) {
    sub->add_option("-c,--config", o.config_file, "flat JSON config file");
    sub->add_option("--set", o.sets, "override a config key: key=value")->take_all();
    sub->add_option("-i,--input", o.input, "particle file");
    sub->add_option("-o,--output", o.output, "output file (default stdout)");
    sub->add_option("--delta", o.delta, "splitting tolerance");
    sub->add_option("--delta-spread", o.delta_spread, "spreading tolerance (default: --delta)");
    sub->add_option("-P,--order", o.P, "spreading order (default ceil(-log10 delta)+1)");
    sub->add_option("--rc", o.r_c, "real-space cutoff");
    sub->add_option("--oversampling", o.oversampling, "grid oversampling factor");
    sub->add_option("--mode", o.mode, "force differentiation: ik or analytic");
    sub->add_option("--coupling", o.coupling, "isotropic, anisotropic or flexible");
    sub->add_option("--prefactor", o.prefactor, "Coulomb prefactor");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--threads", o.threads, "worker threads");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ESP electrostatics: energies, forces and pressure tensors with prolate splitting"};
    app.require_subcommand(1);
    Options o;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {{"tune", "map a target error to delta, P and a grid"},
                        {"compute", "energy, forces and pressure for one configuration"},
                        {"verify", "oracle suite; exit 1 on any failure"},
                        {"bench", "timing and convergence sweeps"},
                        {"local-pressure", "per-particle far-field pressure tensors"},
                        {"simulate", "NPT molecular dynamics"}};
    std::map<std::string, CLI::App*> apps;
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        common_options(sub, o);
        apps[s.name] = sub;
    }
    apps["tune"]->add_option("--quantity", o.quantity, "diag-pressure, offdiag-pressure or force");
    apps["tune"]->add_option("--target", o.target, "target relative error");
    apps["tune"]->add_option("--calibration", o.calibration, "calibration file");
    apps["bench"]->add_option("--kind", o.kind, "scaling, grid, order or calibrate");
    apps["bench"]->add_option("--calibration", o.calibration, "calibration output for --kind calibrate");
    apps["simulate"]->add_option("--steps", o.steps, "number of MD steps");
    apps["simulate"]->add_option("--final", o.final_state, "write the final configuration here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    std::string sub;
    for (const auto& [name, a] : apps)
        if (a->parsed()) sub = name;
    try {
        const esp::RunConfig cfg = build_config(sub, o);
        esp::set_num_threads(static_cast<int>(cfg.integer("threads")));
        if (sub == "tune") return run_tune(cfg);
        if (sub == "compute") return run_compute(cfg);
        if (sub == "verify") return run_verify(cfg);
        if (sub == "bench") return run_bench(cfg);
        if (sub == "local-pressure") return run_local(cfg);
        if (sub == "simulate") return run_simulate(cfg, o.final_state);
    } catch (const esp::InputError& e) {
        std::cerr << "input error";
        if (e.line() > 0) std::cerr << " at line " << e.line() << ", column " << e.column();
        std::cerr << ": " << e.what() << '\n';
        return kUsage;
    } catch (const esp::ParameterError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const esp::SimulationError& e) {
        std::cerr << "simulation error at step " << e.step() << ": " << e.what() << '\n';
        return kRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
