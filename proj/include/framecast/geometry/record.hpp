#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "framecast/geometry/render.hpp"
#include "framecast/geometry/section.hpp"

namespace framecast::geometry {

inline constexpr int kDefaultSectionLen = 512; // points per cross-section
inline constexpr int kDefaultDepthLen = 16;    // maximum rib count

/// Fixed-length rib-depth vector, zero-padded past the actual rib count.
struct DepthVector {
    std::vector<double> depths;
};

inline DepthVector load_depths(std::span<const double> values, int k = kDefaultDepthLen) {
    if (static_cast<int>(values.size()) > k)
        throw DataError("load_depths: " + std::to_string(values.size()) +
                        " depths exceed the configured maximum " + std::to_string(k));
    DepthVector out;
    out.depths.assign(k, 0.0);
    for (size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0))
            throw DataError("load_depths: negative depth at position " + std::to_string(i));
        out.depths[i] = values[i];
    }
    return out;
}

/// Performance targets in original units.
struct TargetTriple {
    double stress = 0.0;     // MPa
    double mass = 0.0;       // kg
    double deflection = 0.0; // mm
};

/// One design in all three modalities.
struct FrameRecord {
    std::string id;
    ViewImage top, side;
    CrossSection sec25, sec75;
    DepthVector depths;
    std::optional<TargetTriple> targets;
};

/// Runs the full extraction pipeline on one mesh: two rendered views, the two
/// resampled cross-sections, and the depth vector. Constituent failures are
/// rethrown with the record id attached.
inline FrameRecord assemble_record(const TriangleMesh& mesh, DepthVector depths,
                                   std::optional<TargetTriple> targets = std::nullopt,
                                   int section_len = kDefaultSectionLen) {
    FrameRecord record;
    record.id = mesh.id;
    record.depths = std::move(depths);
    record.targets = targets;
    try {
        record.top = render_view(mesh, View::top);
        record.side = render_view(mesh, View::side);
        record.sec25 = resample_pad(slice_section(mesh, 0.25), section_len);
        record.sec75 = resample_pad(slice_section(mesh, 0.75), section_len);
    } catch (const DataError& e) {
        throw DataError("record '" + mesh.id + "': " + e.what());
    }
    return record;
}

} // namespace framecast::geometry
