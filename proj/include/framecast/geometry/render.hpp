#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "framecast/geometry/mesh.hpp"

namespace framecast::geometry {

enum class View { top, side };

inline constexpr int kImageSize = 128;

/// Grayscale orthographic depth map, 128x128, intensities in [0,1] with
/// background exactly 0. Row 0 is the top of the image.
struct ViewImage {
    View view = View::top;
    std::vector<double> pixels = std::vector<double>(kImageSize * kImageSize, 0.0);

    double at(int row, int col) const { return pixels[row * kImageSize + col]; }
};

/// Renders an aspect-preserving orthographic depth map. Top view projects on
/// x-y with depth along z; side view on x-z with depth along y (viewer on the
/// positive axis). Intensity is 1 at the nearest surface and falls linearly to
/// 0.05 at the farthest, so every covered pixel stays above background 0.
inline ViewImage render_view(const TriangleMesh& mesh, View view) {
    constexpr double kFarIntensity = 0.05;
    const BoundingBox box = bounding_box(mesh);

    auto project = [view](const Vec3& v) {
        // (u, v, depth) with depth increasing toward the viewer
        return view == View::top ? Vec3{v.x, v.y, v.z} : Vec3{v.x, v.z, v.y};
    };
    const Vec3 lo = project(box.min), hi = project(box.max);
    const double u_ext = hi.x - lo.x, v_ext = hi.y - lo.y, d_ext = hi.z - lo.z;
    if (u_ext <= 0.0 || v_ext <= 0.0)
        throw DataError("render_view: mesh '" + mesh.id +
                        "' has a degenerate footprint in the " +
                        (view == View::top ? std::string("top") : std::string("side")) +
                        " view");

    const double pixel = std::max(u_ext, v_ext) / kImageSize;
    const double u0 = lo.x - (kImageSize * pixel - u_ext) / 2.0;
    const double v1 = hi.y + (kImageSize * pixel - v_ext) / 2.0; // top edge of row 0

    std::vector<double> depth(kImageSize * kImageSize,
                              -std::numeric_limits<double>::infinity());
    for (const auto& tri : mesh.triangles) {
        const Vec3 p0 = project(tri[0]), p1 = project(tri[1]), p2 = project(tri[2]);
        const double area =
            (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
        if (std::abs(area) < 1e-18) continue; // edge-on triangle

        const double min_u = std::min({p0.x, p1.x, p2.x});
        const double max_u = std::max({p0.x, p1.x, p2.x});
        const double min_v = std::min({p0.y, p1.y, p2.y});
        const double max_v = std::max({p0.y, p1.y, p2.y});
        int col_lo = std::max(0, static_cast<int>(std::ceil((min_u - u0) / pixel - 0.5)));
        int col_hi = std::min(kImageSize - 1,
                              static_cast<int>(std::floor((max_u - u0) / pixel - 0.5)));
        int row_lo = std::max(0, static_cast<int>(std::ceil((v1 - max_v) / pixel - 0.5)));
        int row_hi = std::min(kImageSize - 1,
                              static_cast<int>(std::floor((v1 - min_v) / pixel - 0.5)));

        const double inv_area = 1.0 / area;
        for (int row = row_lo; row <= row_hi; ++row) {
            const double vc = v1 - (row + 0.5) * pixel;
            for (int col = col_lo; col <= col_hi; ++col) {
                const double uc = u0 + (col + 0.5) * pixel;
                const double w0 = ((p1.x - uc) * (p2.y - vc) - (p2.x - uc) * (p1.y - vc)) *
                                  inv_area;
                const double w1 = ((p2.x - uc) * (p0.y - vc) - (p0.x - uc) * (p2.y - vc)) *
                                  inv_area;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;
                const double d = w0 * p0.z + w1 * p1.z + w2 * p2.z;
                double& cell = depth[row * kImageSize + col];
                cell = std::max(cell, d);
            }
        }
    }

    ViewImage image;
    image.view = view;
    for (int i = 0; i < kImageSize * kImageSize; ++i) {
        if (!std::isfinite(depth[i])) continue; // background
        if (d_ext <= 1e-12) {
            image.pixels[i] = 1.0; // single-depth mesh maps to the near value
        } else {
            const double from_near = (hi.z - depth[i]) / d_ext;
            image.pixels[i] = 1.0 - (1.0 - kFarIntensity) * from_near;
        }
    }
    return image;
}

} // namespace framecast::geometry
