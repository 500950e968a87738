#include "esp/errors.hpp"
#include "esp/system.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace esp;

namespace {

Mat3 random_triclinic(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    Mat3 h;
    h << 6.0, U(rng) * 6, U(rng) * 6, 0.0, 7.0, U(rng) * 7, 0.0, 0.0, 8.0;
    return h;
}

std::set<std::pair<std::uint32_t, std::uint32_t>> pair_set(const NeighborList& nl) {
    return {nl.pairs.begin(), nl.pairs.end()};
}

} // namespace

TEST_CASE("reciprocal basis") {
    CHECK((reciprocal_basis(5.0 * Mat3::Identity()) - (2.0 * M_PI / 5.0) * Mat3::Identity()).norm() < 1e-15);
    const Mat3 b = reciprocal_basis(Vec3(2.0, 3.0, 4.0).asDiagonal());
    CHECK(b(0, 0) == doctest::Approx(M_PI));
    CHECK(b(1, 1) == doctest::Approx(2.0 * M_PI / 3.0));
    CHECK(b(2, 2) == doctest::Approx(M_PI / 2.0));
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const Mat3 h = random_triclinic(rng);
        const Mat3 r = reciprocal_basis(h);
        CHECK((r.transpose() * h - 2.0 * M_PI * Mat3::Identity()).norm() < 1e-12);
    }
    Mat3 left = Mat3::Identity();
    left(0, 0) = -1.0;
    CHECK_THROWS_AS(Cell{left}, CellError);
    CHECK_THROWS_AS(Cell(Mat3::Zero()), CellError);
}

TEST_CASE("cell volume equals det h") {
    std::mt19937_64 rng(4);
    const Mat3 h = random_triclinic(rng);
    const Cell c(h);
    CHECK(c.volume() == doctest::Approx(h.determinant()).epsilon(1e-14));
}

TEST_CASE("minimum image") {
    const Cell c = Cell::cubic(10.0);
    CHECK(c.minimum_image(Vec3::Zero()).norm() == 0.0);
    CHECK((c.minimum_image(Vec3(9.5, 0, 0)) - Vec3(-0.5, 0, 0)).norm() < 1e-14);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-20.0, 20.0);
    for (int t = 0; t < 200; ++t) {
        const Cell cell(random_triclinic(rng));
        const Vec3 dr(U(rng), U(rng), U(rng));
        const Vec3 mi = cell.minimum_image(dr);
        const Vec3 f = cell.to_fractional(mi);
        CHECK(f.maxCoeff() < 0.5 + 1e-12);
        CHECK(f.minCoeff() >= -0.5 - 1e-12);
        // the brute-force shortest image, whenever it is shorter than half the minimum width
        double best = 1e300;
        for (int a = -2; a <= 2; ++a)
            for (int b = -2; b <= 2; ++b)
                for (int d = -2; d <= 2; ++d) {
                    const Vec3 img = cell.minimum_image(dr) + cell.h() * Vec3(a, b, d);
                    best = std::min(best, img.norm());
                }
        if (best < 0.5 * cell.min_width()) CHECK(mi.norm() == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("wrapping is idempotent and lands in the primary cell") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-30.0, 30.0);
    const Cell cell(random_triclinic(rng));
    for (int t = 0; t < 100; ++t) {
        const Vec3 w = cell.wrap(Vec3(U(rng), U(rng), U(rng)));
        const Vec3 f = cell.to_fractional(w);
        CHECK(f.minCoeff() >= 0.0);
        CHECK(f.maxCoeff() < 1.0);
        CHECK((cell.wrap(w) - w).norm() == 0.0);
    }
}

TEST_CASE("particle system validation") {
    ParticleSystem s;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = esp::test::pair_system(5.0, Vec3(1, 1, 1), Vec3(2, 2, 2));
    CHECK_NOTHROW(s.validate());
    s.masses[1] = 0.0;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s.masses[1] = 1.0;
    s.charges.pop_back();
    CHECK_THROWS_AS(s.validate(), ParameterError);
}

TEST_CASE("cell list examples") {
    const double rc = 2.0;
    auto near = esp::test::pair_system(10.0, Vec3(1, 1, 1), Vec3(1 + 0.5 * rc, 1, 1));
    CHECK(build_cell_list(near, rc).pairs.size() == 1);
    auto far = esp::test::pair_system(10.0, Vec3(1, 1, 1), Vec3(1 + 1.5 * rc, 1, 1));
    CHECK(build_cell_list(far, rc).pairs.empty());
    // across the periodic boundary
    auto wrapped = esp::test::pair_system(10.0, Vec3(0.2, 5, 5), Vec3(9.5, 5, 5));
    CHECK(build_cell_list(wrapped, rc).pairs.size() == 1);
    CHECK_THROWS_AS(build_cell_list(near, 5.0), GeometryError);

    ParticleSystem one;
    one.cell = Cell::cubic(5.0);
    one.positions = {Vec3(1, 1, 1)};
    one.charges = {1.0};
    one.masses = {1.0};
    CHECK(build_cell_list(one, 1.0).pairs.empty());
}

TEST_CASE("cell list equals the all-pairs scan") {
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 20 + 280 * t / 49;
        ParticleSystem s = t % 2 ? esp::test::random_charges(n, 9.0, 100 + t, true, 0.0)
                                 : esp::test::random_charges(n, Mat3(Vec3(8.0, 9.0, 11.0).asDiagonal()), 100 + t, true, 0.0);
        const double rc = 2.7, skin = (t % 3) * 0.2;
        const NeighborList a = build_cell_list(s, rc, skin);
        const NeighborList b = build_all_pairs(s, rc, skin);
        CHECK(pair_set(a) == pair_set(b));
        CHECK(pair_set(a).size() == a.pairs.size());
        for (auto [i, j] : a.pairs) {
            CHECK(i < j);
            CHECK(s.cell.minimum_image(s.positions[i] - s.positions[j]).norm() <= rc + skin + 1e-12);
        }
    }
    std::mt19937_64 rng(3);
    ParticleSystem tri = esp::test::random_charges(150, random_triclinic(rng), 5, true, 0.0);
    CHECK(pair_set(build_cell_list(tri, 2.5)) == pair_set(build_all_pairs(tri, 2.5)));
}

TEST_CASE("rebuild trigger") {
    ParticleSystem s = esp::test::random_charges(40, 8.0, 2, true, 0.0);
    const NeighborList nl = build_cell_list(s, 2.0, 0.4);
    CHECK_FALSE(needs_rebuild(nl, s));
    s.positions[3] += Vec3(0.15, 0, 0);
    CHECK_FALSE(needs_rebuild(nl, s));
    s.positions[3] += Vec3(0.1, 0, 0);
    CHECK(needs_rebuild(nl, s));
}
