#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <random>
#include <set>

#include "framecast/geometry/record.hpp"
#include "framecast/geometry/stl_io.hpp"
#include "test_support.hpp"

using namespace framecast;
using namespace framecast::geometry;
using test_support::make_box_mesh;

namespace {

std::string binary_stl_bytes(const std::vector<Triangle>& tris,
                             std::optional<uint32_t> declared = std::nullopt) {
    std::string bytes(80, '\0');
    const uint32_t count = declared.value_or(static_cast<uint32_t>(tris.size()));
    bytes.append(reinterpret_cast<const char*>(&count), 4);
    for (const auto& tri : tris) {
        float rec[12] = {0, 0, 0};
        for (int v = 0; v < 3; ++v) {
            rec[3 + v * 3 + 0] = static_cast<float>(tri[v].x);
            rec[3 + v * 3 + 1] = static_cast<float>(tri[v].y);
            rec[3 + v * 3 + 2] = static_cast<float>(tri[v].z);
        }
        bytes.append(reinterpret_cast<const char*>(rec), 48);
        bytes.append(2, '\0');
    }
    return bytes;
}

double chain_length(const CrossSection& s) {
    double len = 0;
    for (size_t i = 1; i < s.points.size(); ++i) {
        const double dx = s.points[i].x - s.points[i - 1].x;
        const double dz = s.points[i].z - s.points[i - 1].z;
        len += std::sqrt(dx * dx + dz * dz);
    }
    return len;
}

} // namespace

TEST_CASE("parse_stl decodes a one-triangle binary file") {
    const Triangle tri{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    auto mesh = parse_stl(binary_stl_bytes({tri}), "t");
    REQUIRE(mesh.triangles.size() == 1);
    REQUIRE(mesh.triangles[0][1].x == 1.0);
    REQUIRE(mesh.triangles[0][2].y == 1.0);
}

TEST_CASE("parse_stl decodes the same triangle from ASCII") {
    const std::string ascii =
        "solid t\n"
        " facet normal 0 0 1\n"
        "  outer loop\n"
        "   vertex 0 0 0\n"
        "   vertex 1 0 0\n"
        "   vertex 0 1 0\n"
        "  endloop\n"
        " endfacet\n"
        "endsolid t\n";
    auto mesh = parse_stl(ascii, "t");
    auto ref = parse_stl(binary_stl_bytes({{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}}}));
    REQUIRE(mesh.triangles.size() == 1);
    for (int v = 0; v < 3; ++v) {
        REQUIRE(mesh.triangles[0][v].x == ref.triangles[0][v].x);
        REQUIRE(mesh.triangles[0][v].y == ref.triangles[0][v].y);
        REQUIRE(mesh.triangles[0][v].z == ref.triangles[0][v].z);
    }
}

TEST_CASE("parse_stl reports truncation with the byte offset") {
    const Triangle tri{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    auto bytes = binary_stl_bytes({tri}, 2); // declares 2, contains 1
    try {
        parse_stl(bytes);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("134") != std::string::npos); // actual end
        REQUIRE(std::string(e.what()).find("184") != std::string::npos); // expected size
    }
}

TEST_CASE("parse_stl rejects garbage and bad ASCII grammar") {
    REQUIRE_THROWS_AS(parse_stl("short"), DataError);
    REQUIRE_THROWS_AS(parse_stl("solid t\n facet normal 0 0 1\n endsolid"), DataError);
    try {
        parse_stl("solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0\n");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("parse_stl accepts binary files whose header begins with 'solid'") {
    const Triangle tri{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}};
    auto bytes = binary_stl_bytes({tri});
    std::memcpy(bytes.data(), "solid", 5);
    REQUIRE(parse_stl(bytes).triangles.size() == 1);
}

TEST_CASE("stl file round trip") {
    auto mesh = make_box_mesh({0, 0, 0}, {2, 3, 1});
    const std::string path = "roundtrip.stl";
    write_binary_stl(mesh, path);
    auto back = read_stl_file(path);
    REQUIRE(back.triangles.size() == mesh.triangles.size());
    REQUIRE(back.id == "roundtrip");
    std::remove(path.c_str());
}

TEST_CASE("bounding_box examples") {
    auto cube = make_box_mesh({0, 0, 0}, {1, 1, 1});
    auto box = bounding_box(cube);
    REQUIRE(box.min.x == 0.0);
    REQUIRE(box.max.z == 1.0);

    TriangleMesh tri;
    tri.id = "tri";
    tri.triangles.push_back({Vec3{0, 0, 0}, Vec3{2, 0, 0}, Vec3{0, 3, 1}});
    auto b2 = bounding_box(tri);
    REQUIRE(b2.min.x == 0.0);
    REQUIRE(b2.max.x == 2.0);
    REQUIRE(b2.max.y == 3.0);
    REQUIRE(b2.max.z == 1.0);

    for (auto& t : tri.triangles)
        for (auto& v : t) v = v + Vec3{5, 5, 5};
    auto b3 = bounding_box(tri);
    REQUIRE(b3.min.x == 5.0);
    REQUIRE(b3.max.y == 8.0);

    TriangleMesh empty;
    REQUIRE_THROWS_AS(bounding_box(empty), DataError);
}

TEST_CASE("unit cube section at fraction 0.25 is the exact unit-square perimeter") {
    auto cube = make_box_mesh({0, 0, 0}, {1, 1, 1});
    auto section = slice_section(cube, 0.25);
    REQUIRE(section.points.size() >= 5);
    // every point lies exactly on the square boundary
    for (const auto& p : section.points) {
        const bool on_edge = (p.x == 0.0 || p.x == 1.0 || p.z == 0.0 || p.z == 1.0);
        REQUIRE(on_edge);
        REQUIRE(p.x >= 0.0);
        REQUIRE(p.x <= 1.0);
        REQUIRE(p.z >= 0.0);
        REQUIRE(p.z <= 1.0);
    }
    // a single closed loop tracing the whole perimeter has length exactly 4
    REQUIRE(chain_length(section) == Catch::Approx(4.0).margin(1e-12));
    REQUIRE(section.points.front().x == section.points.back().x);
    REQUIRE(section.points.front().z == section.points.back().z);
}

TEST_CASE("single triangle sliced at its mid-plane yields one two-point segment") {
    TriangleMesh mesh;
    mesh.id = "tri";
    mesh.triangles.push_back({Vec3{0, 0, 0}, Vec3{0, 2, 0}, Vec3{0, 2, 2}});
    auto section = slice_section(mesh, 0.5); // plane y = 1
    REQUIRE(section.points.size() == 2);
    for (const auto& p : section.points) REQUIRE(p.x == 0.0);
    std::vector<double> zs{section.points[0].z, section.points[1].z};
    std::sort(zs.begin(), zs.end());
    REQUIRE(zs[0] == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(zs[1] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("slice_section rejects out-of-range fractions and degenerate meshes") {
    auto cube = make_box_mesh({0, 0, 0}, {1, 1, 1});
    REQUIRE_THROWS_AS(slice_section(cube, 1.5), UsageError);
    REQUIRE_THROWS_AS(slice_section(cube, -0.1), UsageError);

    TriangleMesh flat;
    flat.id = "flat";
    flat.triangles.push_back({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 0, 1}});
    REQUIRE_THROWS_AS(slice_section(flat, 0.5), DataError);
}

TEST_CASE("slice_section matches the brute-force oracle on random meshes") {
    std::mt19937_64 rng(409);
    for (int trial = 0; trial < 25; ++trial) {
        auto mesh = test_support::random_mesh(rng, 1 + trial * 8);
        const double fraction = 0.1 + 0.8 * (trial / 25.0);
        std::vector<Vec3> oracle;
        try {
            oracle = test_support::brute_force_section_points(mesh, fraction);
        } catch (...) {
            continue;
        }
        CrossSection section;
        try {
            section = slice_section(mesh, fraction);
        } catch (const DataError&) {
            REQUIRE(oracle.empty());
            continue;
        }
        // plane residual of re-embedded points
        double ymin = 1e300, ymax = -1e300;
        for (const auto& t : mesh.triangles)
            for (const auto& v : t) {
                ymin = std::min(ymin, v.y);
                ymax = std::max(ymax, v.y);
            }
        const double yp = ymin + fraction * (ymax - ymin);
        for (const auto& p : oracle) REQUIRE(std::abs(p.y - yp) <= 1e-9);

        // two-way set match within 1e-9
        for (const auto& sp : section.points) {
            double best = 1e300;
            for (const auto& op : oracle)
                best = std::min(best, std::hypot(sp.x - op.x, sp.z - op.z));
            REQUIRE(best <= 1e-9);
        }
        for (const auto& op : oracle) {
            double best = 1e300;
            for (const auto& sp : section.points)
                best = std::min(best, std::hypot(sp.x - op.x, sp.z - op.z));
            REQUIRE(best <= 1e-9);
        }
    }
}

TEST_CASE("resample_pad replicates boundary windows below target length") {
    CrossSection s;
    s.fraction = 0.25;
    for (int i = 0; i < 100; ++i) s.points.push_back({double(i), double(-i)});
    auto out = resample_pad(s, 120);
    REQUIRE(out.points.size() == 120);
    REQUIRE(out.fraction == 0.25);
    for (int i = 0; i < 10; ++i) REQUIRE(out.points[i].x == double(i)); // head copy
    for (int i = 0; i < 100; ++i) REQUIRE(out.points[10 + i].x == double(i));
    for (int i = 0; i < 10; ++i) REQUIRE(out.points[110 + i].x == double(90 + i));
    REQUIRE(out.points.front().x == s.points.front().x);
    REQUIRE(out.points.back().x == s.points.back().x);
}

TEST_CASE("resample_pad identity and subsampling rules") {
    CrossSection s;
    for (int i = 0; i < 64; ++i) s.points.push_back({double(i), 0.0});
    auto same = resample_pad(s, 64);
    REQUIRE(same.points.size() == 64);
    for (int i = 0; i < 64; ++i) REQUIRE(same.points[i].x == double(i));

    CrossSection big;
    for (int i = 0; i < 1024; ++i) big.points.push_back({double(i), 0.0});
    auto down = resample_pad(big, 512);
    REQUIRE(down.points.size() == 512);
    for (int i = 0; i < 512; ++i)
        REQUIRE(down.points[i].x == double(static_cast<int64_t>(i) * 1023 / 511));
    REQUIRE(down.points.front().x == 0.0);
    REQUIRE(down.points.back().x == 1023.0);
}

TEST_CASE("resample_pad length always exact and endpoints preserved") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> n_dist(2, 900);
    std::uniform_int_distribution<int> l_dist(4, 700);
    for (int trial = 0; trial < 200; ++trial) {
        CrossSection s;
        const int n = n_dist(rng);
        for (int i = 0; i < n; ++i) s.points.push_back({double(i) * 0.37, double(i)});
        const int L = l_dist(rng);
        auto out = resample_pad(s, L);
        REQUIRE(static_cast<int>(out.points.size()) == L);
        REQUIRE(out.points.front().x == s.points.front().x);
        REQUIRE(out.points.back().x == s.points.back().x);
    }
}

TEST_CASE("resample_pad error cases") {
    CrossSection s;
    s.points.push_back({0, 0});
    REQUIRE_THROWS_AS(resample_pad(s, 16), DataError);
    s.points.push_back({1, 1});
    REQUIRE_THROWS_AS(resample_pad(s, 3), UsageError);
}

TEST_CASE("render_view background is exactly zero and plate renders uniform 1") {
    // flat plate spanning half the image height in the top view
    auto plate = make_box_mesh({0, 0, 0}, {4, 2, 0.0001}, "plate");
    // keep it genuinely flat: rebuild as two triangles at z = 0
    TriangleMesh flat;
    flat.id = "flat";
    flat.triangles.push_back({Vec3{0, 0, 0}, Vec3{4, 0, 0}, Vec3{4, 2, 0}});
    flat.triangles.push_back({Vec3{0, 0, 0}, Vec3{4, 2, 0}, Vec3{0, 2, 0}});
    auto img = render_view(flat, View::top);
    int nonzero = 0;
    for (double p : img.pixels) {
        if (p == 0.0) continue;
        ++nonzero;
        REQUIRE(p == 1.0); // single depth -> near value
    }
    REQUIRE(nonzero == Catch::Approx(0.5 * 128 * 128).margin(128));
    (void)plate;
}

TEST_CASE("render_view coverage tracks footprint area fraction") {
    for (double f : {0.25, 0.5, 0.75}) {
        auto box = make_box_mesh({0, 0, 0}, {100, 100 * f, 3}, "cover");
        auto img = render_view(box, View::top);
        int nonzero = 0;
        for (double p : img.pixels) nonzero += p > 0.0;
        REQUIRE(std::abs(nonzero - f * 128 * 128) <= 128);
    }
}

TEST_CASE("render_view is deterministic and translation invariant") {
    auto box = make_box_mesh({0, 0, 0}, {2, 1, 0.5}, "b");
    auto a = render_view(box, View::top);
    auto b = render_view(box, View::top);
    REQUIRE(a.pixels == b.pixels);

    auto moved = box;
    for (auto& t : moved.triangles)
        for (auto& v : t) v = v + Vec3{5, 5, 5};
    auto c = render_view(moved, View::top);
    REQUIRE(a.pixels == c.pixels);

    auto side_a = render_view(box, View::side);
    auto side_b = render_view(moved, View::side);
    REQUIRE(side_a.pixels == side_b.pixels);
}

TEST_CASE("render_view grades depth from near 1 to far intensity floor") {
    // two plates: one at z=10 (near, viewer at +z), one at z=0 (far)
    TriangleMesh mesh;
    mesh.id = "steps";
    auto add_quad = [&](double x0, double x1, double z) {
        mesh.triangles.push_back({Vec3{x0, 0, z}, Vec3{x1, 0, z}, Vec3{x1, 4, z}});
        mesh.triangles.push_back({Vec3{x0, 0, z}, Vec3{x1, 4, z}, Vec3{x0, 4, z}});
    };
    add_quad(0, 4, 10);
    add_quad(4, 8, 0);
    auto img = render_view(mesh, View::top);
    std::set<double> values;
    for (double p : img.pixels)
        if (p > 0) values.insert(p);
    REQUIRE(values.size() == 2);
    REQUIRE(*values.begin() == Catch::Approx(0.05));  // farthest visible surface
    REQUIRE(*values.rbegin() == Catch::Approx(1.0));  // nearest
}

TEST_CASE("render_view rejects degenerate footprints") {
    TriangleMesh wall; // zero x-extent: degenerate for both views
    wall.id = "wall";
    wall.triangles.push_back({Vec3{0, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 1, 1}});
    REQUIRE_THROWS_AS(render_view(wall, View::top), DataError);
}

TEST_CASE("load_depths pads with zeros and validates") {
    auto d = load_depths(std::vector<double>{12.0, 8.5, 20.0}, 16);
    REQUIRE(d.depths.size() == 16);
    REQUIRE(d.depths[0] == 12.0);
    REQUIRE(d.depths[2] == 20.0);
    for (int i = 3; i < 16; ++i) REQUIRE(d.depths[i] == 0.0);

    auto empty = load_depths(std::vector<double>{}, 16);
    for (double v : empty.depths) REQUIRE(v == 0.0);

    std::vector<double> too_many(17, 1.0);
    REQUIRE_THROWS_AS(load_depths(too_many, 16), DataError);
    REQUIRE_THROWS_AS(load_depths(std::vector<double>{-1.0}, 16), DataError);
}

TEST_CASE("assemble_record composes the full pipeline") {
    auto box = make_box_mesh({0, 0, 0}, {1000, 800, 40}, "frame-1");
    auto depths = load_depths(std::vector<double>{10.0}, 16);
    auto record = assemble_record(box, depths, TargetTriple{100, 5, 2}, 64);
    REQUIRE(record.id == "frame-1");
    REQUIRE(record.sec25.points.size() == 64);
    REQUIRE(record.sec75.points.size() == 64);
    REQUIRE(record.sec25.fraction == 0.25);
    REQUIRE(record.sec75.fraction == 0.75);
    REQUIRE(record.targets.has_value());
    REQUIRE(record.targets->mass == 5.0);

    auto no_targets = assemble_record(box, depths, std::nullopt, 64);
    REQUIRE_FALSE(no_targets.targets.has_value());
}

TEST_CASE("assemble_record attaches the record id to pipeline failures") {
    TriangleMesh flat; // flat in y: slicing plane degenerate
    flat.id = "flat-y";
    flat.triangles.push_back({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 0, 1}});
    try {
        assemble_record(flat, load_depths(std::vector<double>{}, 16), std::nullopt, 32);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        REQUIRE(std::string(e.what()).find("flat-y") != std::string::npos);
    }
}
