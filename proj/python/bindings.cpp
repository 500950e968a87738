#include "esp/commands.hpp"
#include "esp/errors.hpp"
#include "esp/io.hpp"
#include "esp/npt.hpp"
#include "esp/oracle.hpp"
#include "esp/parallel.hpp"
#include "esp/solver.hpp"
#include "esp/tune.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

namespace py = pybind11;
using namespace esp;

namespace {

using Rows3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

Rows3 to_rows(const Vec3List& v) {
    Rows3 m(static_cast<Eigen::Index>(v.size()), 3);
    for (std::size_t i = 0; i < v.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
    return m;
}

Vec3List from_rows(const Rows3& m) {
    Vec3List v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = m.row(i).transpose();
    return v;
}

// cell: a length-3 box or a 3x3 matrix whose columns are the cell vectors
Cell make_cell(const Eigen::MatrixXd& c) {
    if (c.size() == 3) return Cell::orthorhombic(c(0), c(1), c(2));
    if (c.rows() == 3 && c.cols() == 3) return Cell(Mat3(c));
    throw ParameterError("cell must be a length-3 box or a 3x3 matrix");
}

ParticleSystem make_system(const Rows3& positions, const std::vector<double>& charges, const Eigen::MatrixXd& cell,
                           std::optional<std::vector<double>> masses) {
    ParticleSystem s;
    s.cell = make_cell(cell);
    s.positions = from_rows(positions);
    for (auto& r : s.positions) r = s.cell.wrap(r);
    s.charges = charges;
    s.masses = masses ? *masses : std::vector<double>(charges.size(), 1.0);
    s.momenta.assign(s.positions.size(), Vec3::Zero());
    s.validate();
    return s;
}

RunConfig make_config(const std::string& subcommand, const std::string& config_json) {
    RunConfig c;
    c.merge(nlohmann::json::parse(config_json.empty() ? "{}" : config_json));
    c.set("subcommand", subcommand);
    return c.resolved();
}

py::dict pressure_dict(const PressureTensor& p) {
    py::dict d;
    d["near"] = Mat3(p.near);
    d["far"] = Mat3(p.far);
    d["correction"] = Mat3(p.correction);
    d["potential"] = p.potential();
    return d;
}

py::dict oracle_dict(const OracleResult& r) {
    py::dict d;
    d["energy"] = r.energy;
    d["forces"] = to_rows(r.forces);
    d["pressure"] = Mat3(r.pressure);
    return d;
}

py::dict system_dict(const ParticleSystem& s) {
    py::dict d;
    d["positions"] = to_rows(s.positions);
    d["charges"] = s.charges;
    d["masses"] = s.masses;
    d["momenta"] = to_rows(s.momenta);
    d["cell"] = Mat3(s.cell.h());
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ewald summation with prolate spheroidal wave functions";

    // translators run newest first, so the base class goes in first
    py::register_exception<Error>(m, "EspError", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    m.def("set_num_threads", &set_num_threads, py::arg("n"));
    m.def("solve_bandwidth", &solve_bandwidth, py::arg("delta"));

    m.def(
        "pswf_info",
        [](double c) {
            const PswfBasis b = build_pswf(c);
            py::dict d;
            d["c"] = b.c();
            d["lambda0"] = b.lambda0();
            d["C0"] = b.C0();
            d["psi0_at_zero"] = b.psi0_at_zero();
            d["psi0_at_one"] = b.value_at_one();
            d["legendre_coeffs"] = b.legendre_coeffs();
            return d;
        },
        py::arg("c"));

    m.def(
        "eval_psi0",
        [](double c, const std::vector<double>& x, int derivative) {
            const PswfBasis b = build_pswf(c);
            std::vector<double> y;
            y.reserve(x.size());
            for (double v : x) y.push_back(eval_psi0(b, v, derivative));
            return y;
        },
        py::arg("c"), py::arg("x"), py::arg("derivative") = 0);

    m.def(
        "compute",
        [](const Rows3& positions, const std::vector<double>& charges, const Eigen::MatrixXd& cell,
           const std::string& config, bool local_pressure) {
            const ParticleSystem s = make_system(positions, charges, cell, std::nullopt);
            const RunConfig c = make_config("compute", config);
            EspSolver solver(c.esp_params(), s.cell);
            const EspResult r = solver.compute(s, nullptr, local_pressure, true);
            py::dict d;
            d["U_near"] = r.U_near;
            d["U_far"] = r.U_far;
            d["U_self"] = r.U_self;
            d["U_background"] = r.U_cb + r.U_bb;
            d["energy"] = r.energy();
            d["forces"] = to_rows(r.forces);
            d["forces_near"] = to_rows(r.forces_near);
            d["forces_far"] = to_rows(r.forces_far);
            d["pressure"] = pressure_dict(r.pressure);
            d["grid"] = std::vector<int>(solver.grid().M.begin(), solver.grid().M.end());
            d["P"] = solver.grid().P;
            if (r.per_particle_far) {
                py::list local;
                for (const auto& t : *r.per_particle_far) local.append(Mat3(t));
                d["local_pressure"] = local;
            }
            return d;
        },
        py::arg("positions"), py::arg("charges"), py::arg("cell"), py::arg("config") = "{}",
        py::arg("local_pressure") = false);

    m.def(
        "direct_ksum",
        [](const Rows3& positions, const std::vector<double>& charges, const Eigen::MatrixXd& cell,
           const std::string& config) {
            const ParticleSystem s = make_system(positions, charges, cell, std::nullopt);
            const EspParams p = resolve(make_config("compute", config).esp_params());
            const SplitKernel k(build_pswf(solve_bandwidth(p.delta_split), p.table_tol), p.r_c);
            return oracle_dict(direct_ksum(s, k));
        },
        py::arg("positions"), py::arg("charges"), py::arg("cell"), py::arg("config") = "{}");

    m.def(
        "classical_ewald",
        [](const Rows3& positions, const std::vector<double>& charges, const Eigen::MatrixXd& cell, double tol) {
            const ParticleSystem s = make_system(positions, charges, cell, std::nullopt);
            return oracle_dict(classical_ewald(s, ewald_recipe(s.cell, tol)));
        },
        py::arg("positions"), py::arg("charges"), py::arg("cell"), py::arg("tol") = 1e-13);

    m.def(
        "verify",
        [](const Rows3& positions, const std::vector<double>& charges, const Eigen::MatrixXd& cell,
           const std::string& config) {
            const ParticleSystem s = make_system(positions, charges, cell, std::nullopt);
            py::list out;
            for (const OracleReport& r : verify_suite(s, make_config("verify", config).esp_params())) {
                py::dict d;
                d["quantity"] = r.quantity;
                d["rel_dev"] = r.rel_dev;
                d["abs_dev"] = r.abs_dev;
                d["tol"] = r.tol;
                d["pass"] = r.pass;
                out.append(d);
            }
            return out;
        },
        py::arg("positions"), py::arg("charges"), py::arg("cell"), py::arg("config") = "{}");

    m.def(
        "tune",
        [](const std::string& quantity, double target, double r_c, const std::string& calibration) {
            const TuneTable t = calibration.empty() ? default_tune_table() : load_tune_table(calibration);
            const TuneResult r = esp::tune(parse_tune_quantity(quantity), target, t, r_c);
            py::dict d;
            d["quantity"] = std::string(to_string(r.quantity));
            d["target"] = r.target;
            d["delta"] = r.delta;
            d["c_split"] = r.c_split;
            d["c_spread"] = r.c_spread;
            d["P"] = r.P;
            d["spacing"] = r.spacing;
            return d;
        },
        py::arg("quantity"), py::arg("target"), py::arg("r_c") = 0.0, py::arg("calibration") = "");

    m.def(
        "read_particles", [](const std::string& path) { return system_dict(read_particles_file(path)); },
        py::arg("path"));

    m.def(
        "toy_system", [](std::size_t n, double rho, std::uint64_t seed) { return system_dict(toy_system(n, rho, seed)); },
        py::arg("n"), py::arg("rho"), py::arg("seed"));

    m.def(
        "simulate",
        [](const Rows3& positions, const std::vector<double>& charges, const Eigen::MatrixXd& cell,
           const std::optional<std::vector<double>>& masses, const std::string& config) {
            ParticleSystem s = make_system(positions, charges, cell, masses);
            const RunConfig c = make_config("simulate", config);
            const NptConfig cfg = c.npt_config();
            std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
            init_momenta(s, cfg.target_T, cfg.kB, rng);
            NptTrajectory t;
            {
                py::gil_scoped_release release;
                t = integrate(cfg, s);
            }
            std::vector<double> time, T, V, P, total;
            for (const ThermoRecord& r : t.records) {
                time.push_back(r.time);
                T.push_back(r.T);
                V.push_back(r.V);
                P.push_back(r.P_ins.trace() / 3.0);
                total.push_back(r.total());
            }
            py::dict d;
            d["time"] = time;
            d["temperature"] = T;
            d["volume"] = V;
            d["pressure"] = P;
            d["total_energy"] = total;
            d["mean_pressure"] = t.stats.pressure.mean;
            d["pressure_stderr"] = t.stats.pressure.stderr_;
            d["mean_volume"] = t.stats.volume.mean;
            d["energy_drift"] = t.stats.energy_drift;
            d["final"] = system_dict(t.final_state);
            return d;
        },
        py::arg("positions"), py::arg("charges"), py::arg("cell"), py::arg("masses") = std::nullopt,
        py::arg("config") = "{}");
}
