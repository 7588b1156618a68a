#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "framecast/synth/dataset.hpp"

using namespace framecast;
using namespace framecast::synth;

namespace {

FrameParams base_params() {
    FrameParams p;
    p.lx = 1000;
    p.ly = 800;
    p.t = 1.0;
    p.h = 0.0;
    return p;
}

bool close4(double value, double expected) {
    return std::abs(value - expected) <= 5e-4 * std::abs(expected);
}

} // namespace

TEST_CASE("oracle reproduces the flat-plate worked example") {
    auto p = base_params();
    REQUIRE(close4(effective_inertia(p), 66.667));
    auto t = oracle_targets(p);
    REQUIRE(close4(t.mass, 6.280));
    REQUIRE(close4(t.deflection, 1488.1));
    REQUIRE(close4(t.stress, 1875.0));
}

TEST_CASE("oracle reproduces the single-rib worked example") {
    auto p = base_params();
    p.rib_depths = {20.0};
    p.rib_width = 30.0;
    REQUIRE(close4(effective_inertia(p), 80066.67));
    auto t = oracle_targets(p);
    REQUIRE(close4(t.mass, 6.531));
    REQUIRE(close4(t.deflection, 1.239));
    REQUIRE(close4(t.stress, 64.0));
}

TEST_CASE("outer fiber distance is exactly t/2 without ribs") {
    auto p = base_params();
    auto t = oracle_targets(p);
    // stress = (P lx / 4) * c / I  =>  c = stress * I / (P lx / 4)
    const double c = t.stress * effective_inertia(p) / (p.load * p.lx / 4.0);
    REQUIRE(c == Catch::Approx(p.t / 2.0).margin(1e-12));
}

TEST_CASE("oracle is a pure function") {
    auto p = base_params();
    p.rib_depths = {12.0, 31.5};
    p.h = 22.0;
    auto a = oracle_targets(p);
    auto b = oracle_targets(p);
    REQUIRE(a.mass == b.mass);
    REQUIRE(a.stress == b.stress);
    REQUIRE(a.deflection == b.deflection);
}

TEST_CASE("deepening any rib adds mass and removes deflection") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> depth(8.0, 40.0);
    std::uniform_real_distribution<double> bump(0.1, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        FrameParams p = base_params();
        p.t = 0.8 + (trial % 9) * 0.1;
        const int n = 1 + trial % 6;
        for (int j = 0; j < n; ++j) p.rib_depths.push_back(depth(rng));
        auto before = oracle_targets(p);
        const size_t which = trial % p.rib_depths.size();
        p.rib_depths[which] += bump(rng);
        auto after = oracle_targets(p);
        REQUIRE(after.mass > before.mass);
        REQUIRE(after.deflection < before.deflection);
    }
}

TEST_CASE("removing all ribs strictly increases deflection") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> depth(8.0, 40.0);
    for (int trial = 0; trial < 50; ++trial) {
        FrameParams ribbed = base_params();
        ribbed.rib_depths = {depth(rng), depth(rng)};
        FrameParams bare = ribbed;
        bare.rib_depths.clear();
        REQUIRE(oracle_targets(bare).deflection > oracle_targets(ribbed).deflection);
    }
}

TEST_CASE("gen_frame flat plate renders a uniform-intensity rectangle") {
    auto p = base_params(); // no ribs, no crown
    std::mt19937_64 rng(7);
    auto [mesh, depths] = gen_frame(p, rng);
    REQUIRE_FALSE(mesh.triangles.empty());
    for (double d : depths.depths) REQUIRE(d == 0.0);

    auto img = geometry::render_view(mesh, geometry::View::top);
    int nonzero = 0;
    for (double v : img.pixels) {
        if (v == 0.0) continue;
        ++nonzero;
        REQUIRE(v == 1.0);
    }
    REQUIRE(std::abs(nonzero - 0.8 * 128 * 128) <= 192); // ly/lx = 0.8 footprint
}

TEST_CASE("gen_frame bounding box spans exactly the configured width") {
    std::mt19937_64 rng(11);
    FrameParams p = base_params();
    p.h = 25.0;
    p.rib_depths = {18.0, 24.0};
    auto [mesh, depths] = gen_frame(p, rng);
    auto box = geometry::bounding_box(mesh);
    REQUIRE(box.extent_y() == Catch::Approx(p.ly).margin(1e-6));
    REQUIRE(box.extent_x() == Catch::Approx(p.lx).margin(1e-6));
}

TEST_CASE("a rib crossing the quarter plane shows up in the section depth") {
    FrameParams p = base_params();
    p.h = 10.0;
    p.rib_depths = {20.0, 15.0, 25.0}; // stations at 25%, 50%, 75%
    p.rib_width = 30.0;
    std::mt19937_64 rng(23);
    auto [mesh, depths] = gen_frame(p, rng);
    auto section = geometry::slice_section(mesh, 0.25);
    double zmin = 1e300, zmax = -1e300;
    for (const auto& pt : section.points) {
        zmin = std::min(zmin, pt.z);
        zmax = std::max(zmax, pt.z);
    }
    REQUIRE(zmax - zmin == Catch::Approx(p.t + p.rib_depths[0]).margin(0.5));
}

TEST_CASE("gen_frame rejects infeasible rib packing") {
    FrameParams p = base_params();
    p.rib_depths.assign(6, 10.0);
    p.rib_width = 140.0; // 6 * 140 > 0.9 * 800
    std::mt19937_64 rng(3);
    REQUIRE_THROWS_AS(gen_frame(p, rng), DataError);
}

TEST_CASE("gen_frame is deterministic per seed") {
    FrameParams p = base_params();
    p.h = 12.0;
    p.rib_depths = {22.0};
    std::mt19937_64 rng_a(99), rng_b(99), rng_c(100);
    auto [mesh_a, da] = gen_frame(p, rng_a);
    auto [mesh_b, db] = gen_frame(p, rng_b);
    auto [mesh_c, dc] = gen_frame(p, rng_c);
    REQUIRE(mesh_a.triangles.size() == mesh_b.triangles.size());
    bool identical = true, identical_c = mesh_a.triangles.size() == mesh_c.triangles.size();
    for (size_t i = 0; i < mesh_a.triangles.size(); ++i)
        for (int v = 0; v < 3; ++v) {
            identical &= mesh_a.triangles[i][v].x == mesh_b.triangles[i][v].x &&
                         mesh_a.triangles[i][v].y == mesh_b.triangles[i][v].y &&
                         mesh_a.triangles[i][v].z == mesh_b.triangles[i][v].z;
            if (identical_c)
                identical_c = mesh_a.triangles[i][v].y == mesh_c.triangles[i][v].y;
        }
    REQUIRE(identical);
    REQUIRE_FALSE(identical_c); // different seed jitters differently
}

TEST_CASE("gen_dataset is reproducible and complete") {
    ParamRanges ranges;
    auto a = gen_dataset(12, 2024, ranges, 128);
    auto b = gen_dataset(12, 2024, ranges, 128);
    REQUIRE(a.size() == 12);
    for (size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].id == b[i].id);
        REQUIRE(a[i].top.pixels == b[i].top.pixels);
        REQUIRE(a[i].side.pixels == b[i].side.pixels);
        REQUIRE(a[i].sec25.points.size() == 128);
        REQUIRE(a[i].sec75.points.size() == 128);
        REQUIRE(a[i].depths.depths.size() == geometry::kDefaultDepthLen);
        REQUIRE(a[i].targets.has_value());
        REQUIRE(a[i].targets->mass == b[i].targets->mass);
        REQUIRE(a[i].targets->stress == b[i].targets->stress);
        for (size_t k = 0; k < 128; ++k) {
            REQUIRE(a[i].sec25.points[k].x == b[i].sec25.points[k].x);
            REQUIRE(a[i].sec25.points[k].z == b[i].sec25.points[k].z);
        }
    }
}

TEST_CASE("gen_dataset targets spread over the default ranges") {
    auto records = gen_dataset(40, 7, {}, 64);
    double lo = 1e300, hi = 0;
    for (const auto& r : records) {
        lo = std::min(lo, r.targets->mass);
        hi = std::max(hi, r.targets->mass);
    }
    REQUIRE(hi / lo > 1.5);
}

TEST_CASE("plane-clear rib counts exclude layouts touching the slicing planes") {
    // 3 stations put ribs exactly at 25% and 75%; 7 stations as well
    REQUIRE(rib_count_crosses_planes(3, 30.0, 800.0));
    REQUIRE(rib_count_crosses_planes(7, 30.0, 800.0));
    REQUIRE_FALSE(rib_count_crosses_planes(1, 30.0, 800.0));
    REQUIRE_FALSE(rib_count_crosses_planes(2, 30.0, 800.0));
    REQUIRE_FALSE(rib_count_crosses_planes(4, 30.0, 800.0));
    REQUIRE_FALSE(rib_count_crosses_planes(5, 30.0, 800.0));
    REQUIRE_FALSE(rib_count_crosses_planes(6, 30.0, 800.0));

    ParamRanges clear;
    clear.avoid_plane_ribs = true;
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = draw_params(clear, rng);
        const int n = p.rib_count();
        REQUIRE((n != 3 && n != 7));
    }
}
