#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "framecast/geometry/mesh.hpp"

namespace framecast::geometry {

static_assert(std::endian::native == std::endian::little,
              "STL and checkpoint codecs assume a little-endian host");

namespace detail {

inline float read_f32(const unsigned char* p) {
    float v;
    std::memcpy(&v, p, 4);
    return v;
}

inline uint32_t read_u32(const unsigned char* p) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

inline TriangleMesh parse_binary_stl(std::string_view bytes, const std::string& id) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const uint32_t declared = read_u32(p + 80);
    const size_t expected = 84 + static_cast<size_t>(declared) * 50;
    if (bytes.size() != expected)
        throw DataError("binary STL declares " + std::to_string(declared) +
                        " triangles (" + std::to_string(expected) + " bytes) but ends at byte " +
                        std::to_string(bytes.size()));
    TriangleMesh mesh;
    mesh.id = id;
    mesh.triangles.reserve(declared);
    for (uint32_t t = 0; t < declared; ++t) {
        const unsigned char* rec = p + 84 + static_cast<size_t>(t) * 50;
        Triangle tri;
        for (int v = 0; v < 3; ++v) {
            const unsigned char* vp = rec + 12 + v * 12; // skip the normal
            tri[v] = Vec3{read_f32(vp), read_f32(vp + 4), read_f32(vp + 8)};
            if (!tri[v].finite())
                throw DataError("binary STL: non-finite vertex in triangle " +
                                std::to_string(t) + " at byte offset " +
                                std::to_string(rec + 12 + v * 12 - p));
        }
        mesh.triangles.push_back(tri);
    }
    return mesh;
}

inline TriangleMesh parse_ascii_stl(std::string_view bytes, const std::string& id) {
    std::istringstream in{std::string(bytes)};
    std::string line;
    size_t line_no = 0;
    TriangleMesh mesh;
    mesh.id = id;

    auto fail = [&](const std::string& what) -> void {
        throw DataError("ASCII STL grammar violation at line " + std::to_string(line_no) +
                        ": " + what);
    };
    auto next_tokens = [&](std::vector<std::string>& toks) {
        toks.clear();
        while (std::getline(in, line)) {
            ++line_no;
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) toks.push_back(tok);
            if (!toks.empty()) return true;
        }
        return false;
    };

    std::vector<std::string> toks;
    if (!next_tokens(toks) || toks[0] != "solid") fail("expected 'solid'");
    bool closed = false;
    while (next_tokens(toks)) {
        if (toks[0] == "endsolid") {
            closed = true;
            break;
        }
        if (toks[0] != "facet" || toks.size() < 2 || toks[1] != "normal")
            fail("expected 'facet normal' or 'endsolid', got '" + toks[0] + "'");
        if (!next_tokens(toks) || toks[0] != "outer" || toks.size() < 2 || toks[1] != "loop")
            fail("expected 'outer loop'");
        Triangle tri;
        for (int v = 0; v < 3; ++v) {
            if (!next_tokens(toks) || toks[0] != "vertex" || toks.size() != 4)
                fail("expected 'vertex x y z'");
            double coords[3];
            for (int c = 0; c < 3; ++c) {
                try {
                    size_t used = 0;
                    coords[c] = std::stod(toks[c + 1], &used);
                    if (used != toks[c + 1].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    fail("cannot parse coordinate '" + toks[c + 1] + "'");
                }
            }
            // match the single-float precision of the binary format
            tri[v] = Vec3{static_cast<float>(coords[0]), static_cast<float>(coords[1]),
                          static_cast<float>(coords[2])};
            if (!tri[v].finite()) fail("non-finite vertex");
        }
        if (!next_tokens(toks) || toks[0] != "endloop") fail("expected 'endloop'");
        if (!next_tokens(toks) || toks[0] != "endfacet") fail("expected 'endfacet'");
        mesh.triangles.push_back(tri);
    }
    if (!closed) fail("missing 'endsolid'");
    return mesh;
}

} // namespace detail

/// Decodes binary (80-byte header, little-endian records) or ASCII STL.
/// Binary is recognized by an exact size match against the declared triangle
/// count, which also disambiguates binary files whose header begins "solid".
inline TriangleMesh parse_stl(std::string_view bytes, const std::string& id = "mesh") {
    const bool says_solid = bytes.substr(0, 5) == "solid";
    if (bytes.size() >= 84) {
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
        const uint32_t declared = detail::read_u32(p + 80);
        const size_t expected = 84 + static_cast<size_t>(declared) * 50;
        if (expected == bytes.size()) {
            TriangleMesh mesh = detail::parse_binary_stl(bytes, id);
            if (mesh.triangles.empty())
                throw DataError("STL '" + id + "' contains no triangles");
            return mesh;
        }
        if (!says_solid) return detail::parse_binary_stl(bytes, id); // reports truncation
    }
    if (!says_solid)
        throw DataError("not an STL: too short for binary (" + std::to_string(bytes.size()) +
                        " bytes < 84) and does not start with 'solid'");
    TriangleMesh mesh = detail::parse_ascii_stl(bytes, id);
    if (mesh.triangles.empty())
        throw DataError("STL '" + id + "' contains no triangles");
    return mesh;
}

inline TriangleMesh read_stl_file(const std::string& path, const std::string& id = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open STL file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string name = id;
    if (name.empty()) {
        const size_t slash = path.find_last_of("/\\");
        name = slash == std::string::npos ? path : path.substr(slash + 1);
        const size_t dot = name.find_last_of('.');
        if (dot != std::string::npos) name = name.substr(0, dot);
    }
    return parse_stl(buf.str(), name);
}

inline void write_binary_stl(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    char header[80] = {};
    std::snprintf(header, sizeof(header), "framecast mesh %s", mesh.id.c_str());
    out.write(header, 80);
    const uint32_t count = static_cast<uint32_t>(mesh.triangles.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& tri : mesh.triangles) {
        const Vec3 e1 = tri[1] - tri[0], e2 = tri[2] - tri[0];
        Vec3 n{e1.y * e2.z - e1.z * e2.y, e1.z * e2.x - e1.x * e2.z,
               e1.x * e2.y - e1.y * e2.x};
        const double len = n.norm();
        if (len > 0) n = n * (1.0 / len);
        float rec[12] = {static_cast<float>(n.x), static_cast<float>(n.y),
                         static_cast<float>(n.z)};
        for (int v = 0; v < 3; ++v) {
            rec[3 + v * 3 + 0] = static_cast<float>(tri[v].x);
            rec[3 + v * 3 + 1] = static_cast<float>(tri[v].y);
            rec[3 + v * 3 + 2] = static_cast<float>(tri[v].z);
        }
        out.write(reinterpret_cast<const char*>(rec), 48);
        const uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
    if (!out) throw DataError("write failed: " + path);
}

} // namespace framecast::geometry
