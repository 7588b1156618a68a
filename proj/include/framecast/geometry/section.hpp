#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "framecast/geometry/mesh.hpp"

namespace framecast::geometry {

/// Ordered (x, z) polyline extracted at a fractional width location.
struct CrossSection {
    double fraction = 0.0;
    std::vector<Vec2> points;
};

namespace detail {

struct Segment {
    Vec2 a, b;
};

// Intersects one triangle with the plane y = y_plane. Signed distances decide
// the case; vertices exactly on the plane are handled explicitly so watertight
// meshes do not drop touching edges.
inline bool plane_triangle_segment(const Triangle& tri, double y_plane, Segment& out) {
    const double d0 = tri[0].y - y_plane;
    const double d1 = tri[1].y - y_plane;
    const double d2 = tri[2].y - y_plane;
    const int s0 = d0 > 0 ? 1 : d0 < 0 ? -1 : 0;
    const int s1 = d1 > 0 ? 1 : d1 < 0 ? -1 : 0;
    const int s2 = d2 > 0 ? 1 : d2 < 0 ? -1 : 0;
    const int on_count = (s0 == 0) + (s1 == 0) + (s2 == 0);

    auto cross_point = [&](int i, int j) {
        const double di = tri[i].y - y_plane, dj = tri[j].y - y_plane;
        const double t = di / (di - dj);
        const Vec3 p = tri[i] + (tri[j] - tri[i]) * t;
        return Vec2{p.x, p.z};
    };
    auto as2d = [&](int i) { return Vec2{tri[i].x, tri[i].z}; };

    if (on_count == 3) return false; // coplanar: edges come from neighbors
    if (on_count == 2) {
        int a = s0 == 0 ? 0 : 1;
        int b = s2 == 0 ? 2 : 1;
        out = {as2d(a), as2d(b)};
        return true;
    }
    if (on_count == 1) {
        const int on = s0 == 0 ? 0 : s1 == 0 ? 1 : 2;
        const int u = (on + 1) % 3, v = (on + 2) % 3;
        const int su = u == 0 ? s0 : u == 1 ? s1 : s2;
        const int sv = v == 0 ? s0 : v == 1 ? s1 : s2;
        if (su == sv) return false; // plane only touches the vertex
        out = {as2d(on), cross_point(u, v)};
        return true;
    }
    if (s0 == s1 && s1 == s2) return false;
    // exactly one vertex sits on the other side of the plane
    int lone = (s1 == s2) ? 0 : (s0 == s2) ? 1 : 2;
    const int u = (lone + 1) % 3, v = (lone + 2) % 3;
    out = {cross_point(lone, u), cross_point(lone, v)};
    return true;
}

inline double dist2(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x, dz = a.z - b.z;
    return dx * dx + dz * dz;
}

inline bool lex_less(const Vec2& a, const Vec2& b) {
    return a.x != b.x ? a.x < b.x : a.z < b.z;
}

// Merges segment endpoints within `tol` into nodes and returns per-segment
// node pairs. First-seen coordinates represent each node so chained points
// stay (up to fp noise) exact plane-triangle intersections.
class EndpointIndex {
public:
    explicit EndpointIndex(double tol) : tol_(tol), inv_cell_(1.0 / tol) {}

    int lookup_or_insert(const Vec2& p, std::vector<Vec2>& nodes) {
        const int64_t cx = static_cast<int64_t>(std::floor(p.x * inv_cell_));
        const int64_t cz = static_cast<int64_t>(std::floor(p.z * inv_cell_));
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dz = -1; dz <= 1; ++dz) {
                auto it = grid_.find({cx + dx, cz + dz});
                if (it == grid_.end()) continue;
                for (int idx : it->second)
                    if (dist2(nodes[idx], p) <= tol_ * tol_) return idx;
            }
        nodes.push_back(p);
        grid_[{cx, cz}].push_back(static_cast<int>(nodes.size()) - 1);
        return static_cast<int>(nodes.size()) - 1;
    }

private:
    double tol_, inv_cell_;
    std::map<std::pair<int64_t, int64_t>, std::vector<int>> grid_;
};

} // namespace detail

/// Slices the mesh with the plane y = ymin + fraction * (ymax - ymin) and
/// chains the intersection segments into ordered polylines (endpoint matching
/// tolerance 1e-6 mm). Disconnected chains are concatenated in order of
/// ascending minimum x; closed loops repeat their start point at the end.
inline CrossSection slice_section(const TriangleMesh& mesh, double fraction) {
    if (fraction < 0.0 || fraction > 1.0)
        throw UsageError("slice_section: fraction " + std::to_string(fraction) +
                         " outside [0,1]");
    const BoundingBox box = bounding_box(mesh);
    if (box.extent_y() <= 0.0)
        throw DataError("slice_section: mesh '" + mesh.id +
                        "' is flat in y, slicing plane is degenerate");
    const double y_plane = box.min.y + fraction * box.extent_y();

    std::vector<detail::Segment> segments;
    detail::Segment seg;
    for (const auto& tri : mesh.triangles)
        if (detail::plane_triangle_segment(tri, y_plane, seg) &&
            detail::dist2(seg.a, seg.b) > 1e-24)
            segments.push_back(seg);
    if (segments.empty())
        throw DataError("slice_section: empty section at fraction " +
                        std::to_string(fraction));

    constexpr double kTol = 1e-6;
    std::vector<Vec2> nodes;
    detail::EndpointIndex index(kTol);
    std::vector<std::pair<int, int>> edges;
    edges.reserve(segments.size());
    for (const auto& s : segments) {
        const int a = index.lookup_or_insert(s.a, nodes);
        const int b = index.lookup_or_insert(s.b, nodes);
        if (a != b) edges.emplace_back(a, b);
    }

    // connected components over the node graph
    std::vector<std::vector<int>> adjacency(nodes.size());
    for (size_t e = 0; e < edges.size(); ++e) {
        adjacency[edges[e].first].push_back(static_cast<int>(e));
        adjacency[edges[e].second].push_back(static_cast<int>(e));
    }
    std::vector<int> component(nodes.size(), -1);
    int n_comp = 0;
    for (size_t start = 0; start < nodes.size(); ++start) {
        if (component[start] >= 0) continue;
        std::vector<int> stack{static_cast<int>(start)};
        component[start] = n_comp;
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            for (int e : adjacency[n]) {
                const int other = edges[e].first == n ? edges[e].second : edges[e].first;
                if (component[other] < 0) {
                    component[other] = n_comp;
                    stack.push_back(other);
                }
            }
        }
        ++n_comp;
    }
    std::vector<double> comp_min_x(n_comp, std::numeric_limits<double>::infinity());
    for (size_t n = 0; n < nodes.size(); ++n)
        comp_min_x[component[n]] = std::min(comp_min_x[component[n]], nodes[n].x);
    std::vector<int> comp_order(n_comp);
    for (int c = 0; c < n_comp; ++c) comp_order[c] = c;
    std::sort(comp_order.begin(), comp_order.end(),
              [&](int a, int b) { return comp_min_x[a] != comp_min_x[b]
                                             ? comp_min_x[a] < comp_min_x[b]
                                             : a < b; });

    CrossSection section;
    section.fraction = fraction;
    std::vector<char> edge_used(edges.size(), 0);

    auto walk_from = [&](int start_node) {
        std::vector<Vec2> chain{nodes[start_node]};
        int current = start_node;
        while (true) {
            int next_edge = -1, next_node = -1;
            for (int e : adjacency[current]) {
                if (edge_used[e]) continue;
                const int other = edges[e].first == current ? edges[e].second
                                                            : edges[e].first;
                if (next_edge < 0 || detail::lex_less(nodes[other], nodes[next_node])) {
                    next_edge = e;
                    next_node = other;
                }
            }
            if (next_edge < 0) break;
            edge_used[next_edge] = 1;
            chain.push_back(nodes[next_node]);
            current = next_node;
        }
        return chain;
    };

    for (int c : comp_order) {
        while (true) {
            // prefer odd-degree (chain end) nodes, lexicographically smallest
            int start = -1;
            bool start_odd = false;
            for (size_t n = 0; n < nodes.size(); ++n) {
                if (component[n] != c) continue;
                int unused = 0;
                for (int e : adjacency[n]) unused += !edge_used[e];
                if (unused == 0) continue;
                const bool odd = unused % 2 == 1;
                if (start < 0 || (odd && !start_odd) ||
                    (odd == start_odd && detail::lex_less(nodes[n], nodes[start]))) {
                    start = static_cast<int>(n);
                    start_odd = odd;
                }
            }
            if (start < 0) break;
            auto chain = walk_from(start);
            section.points.insert(section.points.end(), chain.begin(), chain.end());
        }
    }
    return section;
}

/// Fits a polyline to exactly `target_len` points. Short inputs replicate the
/// first/last ceil(0.1 n) points alternately at head and tail; long inputs are
/// uniformly subsampled keeping both endpoints; equal length is the identity.
inline CrossSection resample_pad(const CrossSection& section, int target_len) {
    if (target_len < 4) throw UsageError("resample_pad: target length must be >= 4");
    const auto& pts = section.points;
    const int n = static_cast<int>(pts.size());
    if (n < 2) throw DataError("resample_pad: section has fewer than 2 points");

    CrossSection out;
    out.fraction = section.fraction;
    if (n == target_len) {
        out.points = pts;
        return out;
    }
    if (n > target_len) {
        out.points.reserve(target_len);
        for (int i = 0; i < target_len; ++i) {
            const int64_t idx = static_cast<int64_t>(i) * (n - 1) / (target_len - 1);
            out.points.push_back(pts[idx]);
        }
        return out;
    }

    const int window = static_cast<int>(std::ceil(0.1 * n));
    std::vector<Vec2> head(pts.begin(), pts.begin() + window);
    std::vector<Vec2> tail(pts.end() - window, pts.end());
    std::vector<Vec2> front, back;
    int remaining = target_len - n;
    bool at_head = true;
    while (remaining > 0) {
        const int take = std::min(window, remaining);
        if (at_head) {
            // prepend a copy of the head window (trimmed from its end so the
            // overall first point stays the original first point)
            front.insert(front.end(), head.begin(), head.begin() + take);
        } else {
            back.insert(back.end(), tail.end() - take, tail.end());
        }
        remaining -= take;
        at_head = !at_head;
    }
    out.points.reserve(target_len);
    out.points.insert(out.points.end(), front.begin(), front.end());
    out.points.insert(out.points.end(), pts.begin(), pts.end());
    out.points.insert(out.points.end(), back.begin(), back.end());
    return out;
}

} // namespace framecast::geometry
