// Writes the 2-particle fixture and its reference values from the mesh-free
// oracles (real-space sum plus direct k-sum).
#include "esp/commands.hpp"
#include "esp/realspace.hpp"
#include "esp/solver.hpp"

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: make_pair_fixture <particles out> <reference out>\n";
        return 2;
    }
    esp::ParticleSystem sys;
    sys.cell = esp::Cell::orthorhombic(6.0, 7.0, 8.0);
    sys.positions = {esp::Vec3(1.2, 2.5, 3.1), esp::Vec3(2.0, 2.9, 3.5)};
    sys.charges = {1.0, -1.0};
    sys.masses = {1.0, 1.0};
    {
        std::ofstream os(argv[1]);
        os << "# +-1 pair in a 6 x 7 x 8 box\n";
        esp::write_particles(os, sys);
    }

    esp::RunConfig cfg;
    cfg.merge({{"subcommand", "compute"}, {"delta_split", 1e-8}, {"r_c", 2.5}});
    cfg = cfg.resolved();
    const esp::EspParams p = esp::resolve(cfg.esp_params());
    const esp::EspSolver solver(p, sys.cell);
    const esp::SplitKernel& kern = solver.kernel();
    const esp::ShortRangeResult sr = esp::short_range(sys, kern, esp::build_cell_list(sys, p.r_c));
    const esp::OracleResult dk = esp::direct_ksum(sys, kern);
    const double U = sr.energy + dk.energy + kern.self_energy(sys.charges);
    const esp::Mat3 P = sr.pressure + dk.pressure;

    esp::RecordFile f;
    f.header = esp::artifact_header("pair reference (real-space sum + direct k-sum)", cfg);
    f.add("energy", "total", {U});
    std::vector<double> flat;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) flat.push_back(P(i, j));
    f.add("pressure", "potential", flat);
    for (std::size_t i = 0; i < 2; ++i) {
        const esp::Vec3 F = sr.forces[i] + dk.forces[i];
        f.add("force", std::to_string(i), {F[0], F[1], F[2]});
    }
    std::ofstream os(argv[2]);
    esp::write_records(os, f);
    return 0;
}
