#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "framecast/core.hpp"

namespace framecast::geometry {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct Vec2 {
    double x = 0, z = 0;
};

using Triangle = std::array<Vec3, 3>;

/// Triangle soup in millimeter coordinates.
struct TriangleMesh {
    std::string id;
    std::vector<Triangle> triangles;
};

struct BoundingBox {
    Vec3 min, max;

    double extent_x() const { return max.x - min.x; }
    double extent_y() const { return max.y - min.y; }
    double extent_z() const { return max.z - min.z; }
};

inline BoundingBox bounding_box(const TriangleMesh& mesh) {
    if (mesh.triangles.empty())
        throw DataError("bounding_box: mesh '" + mesh.id + "' has no triangles");
    constexpr double inf = std::numeric_limits<double>::infinity();
    BoundingBox box{{inf, inf, inf}, {-inf, -inf, -inf}};
    for (const auto& tri : mesh.triangles) {
        for (const auto& v : tri) {
            box.min.x = std::min(box.min.x, v.x);
            box.min.y = std::min(box.min.y, v.y);
            box.min.z = std::min(box.min.z, v.z);
            box.max.x = std::max(box.max.x, v.x);
            box.max.y = std::max(box.max.y, v.y);
            box.max.z = std::max(box.max.z, v.z);
        }
    }
    return box;
}

} // namespace framecast::geometry
