#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "framecast/geometry/record.hpp"

namespace framecast::synth {

using geometry::DepthVector;
using geometry::TriangleMesh;
using geometry::Vec3;

/// Parametric hood-frame stand-in: a crowned panel with downward rib channels.
struct FrameParams {
    double lx = 1000.0;      // length, mm
    double ly = 800.0;       // width, mm
    double t = 1.0;          // panel thickness, mm
    double h = 0.0;          // crown height, mm
    std::vector<double> rib_depths; // mm, one per rib
    double rib_width = 30.0; // mm
    double rho = 7.85e-6;    // density, kg/mm^3
    double e_mod = 210000.0; // Young's modulus, MPa
    double load = 1000.0;    // N

    int rib_count() const { return static_cast<int>(rib_depths.size()); }

    void validate(int max_ribs = geometry::kDefaultDepthLen) const {
        if (!(lx > 0 && ly > 0 && t > 0 && rib_width > 0))
            throw UsageError("frame params: lx, ly, t and rib width must be positive");
        if (h < 0) throw UsageError("frame params: crown height must be >= 0");
        if (rib_count() > max_ribs)
            throw UsageError("frame params: rib count exceeds the depth-vector capacity");
        for (double d : rib_depths)
            if (!(d > 0)) throw UsageError("frame params: rib depths must be positive");
    }
};

struct OracleTargets {
    double stress = 0.0;     // MPa
    double mass = 0.0;       // kg
    double deflection = 0.0; // mm
};

/// Ly t^3/12 panel term plus w d^3/3 per rib channel.
inline double effective_inertia(const FrameParams& p) {
    double inertia = p.ly * p.t * p.t * p.t / 12.0;
    for (double d : p.rib_depths) inertia += p.rib_width * d * d * d / 3.0;
    return inertia;
}

/// Closed-form simply-supported-beam targets standing in for the FEA ground
/// truth. Deterministic in the parameters; rib depths enter through the
/// effective inertia, so deepening any rib adds mass and removes deflection.
inline OracleTargets oracle_targets(const FrameParams& p) {
    p.validate();
    const double panel_area = p.lx * p.ly * (1.0 + 0.5 * (p.h / p.ly) * (p.h / p.ly));
    const double rib_run = 0.8 * p.lx;
    const double inertia = effective_inertia(p);
    double rib_area = 0.0;
    double max_depth = 0.0;
    for (double d : p.rib_depths) {
        rib_area += 2.0 * d * rib_run;
        max_depth = std::max(max_depth, d);
    }
    const double fiber = p.t / 2.0 + max_depth;

    OracleTargets out;
    out.mass = p.rho * p.t * (panel_area + rib_area);
    out.deflection = p.load * p.lx * p.lx * p.lx / (48.0 * p.e_mod * inertia);
    out.stress = (p.load * p.lx / 4.0) * fiber / inertia;
    return out;
}

namespace detail {

inline double crown_z(const FrameParams& p, double y) {
    const double s = y / p.ly;
    return p.h * 4.0 * s * (1.0 - s);
}

// Sorted grid line set: jittered uniform lines plus exact feature boundaries.
inline std::vector<double> grid_lines(double lo, double hi, int base_cells,
                                      const std::vector<double>& boundaries,
                                      std::mt19937_64& rng, double jitter) {
    std::vector<double> lines;
    const double step = (hi - lo) / base_cells;
    std::uniform_real_distribution<double> uni(-jitter, jitter);
    lines.push_back(lo);
    for (int i = 1; i < base_cells; ++i) lines.push_back(lo + i * step + uni(rng) * step);
    lines.push_back(hi);
    lines.insert(lines.end(), boundaries.begin(), boundaries.end());
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                lines.end());
    return lines;
}

} // namespace detail

/// Triangulates the parametric frame: crowned top surface, bottom surface with
/// rectangular rib channels extruded downward at evenly spaced width stations
/// (each spanning 0.8 lx), vertical channel walls, and perimeter walls. Grid
/// interiors are jittered from `rng` so facet layouts vary per seed while the
/// surfaces stay exact at feature boundaries.
inline std::pair<TriangleMesh, DepthVector> gen_frame(const FrameParams& p,
                                                      std::mt19937_64& rng,
                                                      int max_ribs = geometry::kDefaultDepthLen) {
    p.validate(max_ribs);
    const int n = p.rib_count();
    if (n > 0 && n * p.rib_width > 0.9 * p.ly)
        throw DataError("gen_frame: rib spacing infeasible, " + std::to_string(n) +
                        " ribs of width " + std::to_string(p.rib_width) +
                        " exceed 90% of width " + std::to_string(p.ly));

    const double xa = 0.1 * p.lx, xb = 0.9 * p.lx;
    std::vector<double> stations, x_bounds, y_bounds;
    for (int j = 0; j < n; ++j) stations.push_back(p.ly * (j + 1) / (n + 1));
    if (n > 0) {
        x_bounds = {xa, xb};
        for (double s : stations) {
            y_bounds.push_back(s - p.rib_width / 2.0);
            y_bounds.push_back(s + p.rib_width / 2.0);
        }
    }
    const auto xs = detail::grid_lines(0.0, p.lx, 40, x_bounds, rng, 0.3);
    const auto ys = detail::grid_lines(0.0, p.ly, 28, y_bounds, rng, 0.3);

    auto rib_at = [&](double x, double y) -> double {
        if (x <= xa || x >= xb) return 0.0;
        for (int j = 0; j < n; ++j)
            if (y > stations[j] - p.rib_width / 2.0 && y < stations[j] + p.rib_width / 2.0)
                return p.rib_depths[j];
        return 0.0;
    };

    TriangleMesh mesh;
    auto quad = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
    };

    for (size_t i = 0; i + 1 < xs.size(); ++i) {
        for (size_t j = 0; j + 1 < ys.size(); ++j) {
            const double x0 = xs[i], x1 = xs[i + 1], y0 = ys[j], y1 = ys[j + 1];
            const double z00 = detail::crown_z(p, y0), z01 = detail::crown_z(p, y1);
            quad({x0, y0, z00}, {x1, y0, z00}, {x1, y1, z01}, {x0, y1, z01});
            const double drop = rib_at((x0 + x1) / 2.0, (y0 + y1) / 2.0);
            quad({x0, y0, z00 - p.t - drop}, {x1, y0, z00 - p.t - drop},
                 {x1, y1, z01 - p.t - drop}, {x0, y1, z01 - p.t - drop});
        }
    }

    // rib channel walls
    for (int j = 0; j < n; ++j) {
        const double d = p.rib_depths[j];
        for (double yb : {stations[j] - p.rib_width / 2.0, stations[j] + p.rib_width / 2.0}) {
            const double z = detail::crown_z(p, yb) - p.t;
            quad({xa, yb, z}, {xb, yb, z}, {xb, yb, z - d}, {xa, yb, z - d});
        }
        const double y_lo = stations[j] - p.rib_width / 2.0;
        const double y_hi = stations[j] + p.rib_width / 2.0;
        for (double xw : {xa, xb}) {
            for (size_t k = 0; k + 1 < ys.size(); ++k) {
                const double y0 = std::max(ys[k], y_lo), y1 = std::min(ys[k + 1], y_hi);
                if (y1 <= y0) continue;
                const double za = detail::crown_z(p, y0) - p.t;
                const double zb = detail::crown_z(p, y1) - p.t;
                quad({xw, y0, za}, {xw, y1, zb}, {xw, y1, zb - d}, {xw, y0, za - d});
            }
        }
    }

    // perimeter walls: panel thickness at x = 0, lx and y = 0, ly
    for (double xw : {0.0, p.lx}) {
        for (size_t k = 0; k + 1 < ys.size(); ++k) {
            const double za = detail::crown_z(p, ys[k]), zb = detail::crown_z(p, ys[k + 1]);
            quad({xw, ys[k], za}, {xw, ys[k + 1], zb}, {xw, ys[k + 1], zb - p.t},
                 {xw, ys[k], za - p.t});
        }
    }
    for (double yw : {0.0, p.ly}) {
        const double z = detail::crown_z(p, yw);
        for (size_t k = 0; k + 1 < xs.size(); ++k)
            quad({xs[k], yw, z}, {xs[k + 1], yw, z}, {xs[k + 1], yw, z - p.t},
                 {xs[k], yw, z - p.t});
    }

    DepthVector depths = geometry::load_depths(p.rib_depths, max_ribs);
    return {std::move(mesh), std::move(depths)};
}

} // namespace framecast::synth
