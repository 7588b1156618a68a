#pragma once

#include <cstdio>
#include <random>
#include <vector>

#include "framecast/synth/frame.hpp"

namespace framecast::synth {

using geometry::FrameRecord;

/// Independent uniform draw ranges for the generated dataset.
struct ParamRanges {
    double lx_min = 900.0, lx_max = 1100.0;
    double ly_min = 700.0, ly_max = 900.0;
    double t_min = 0.8, t_max = 1.6;
    double h_min = 0.0, h_max = 30.0;
    int ribs_min = 1, ribs_max = 6;
    double depth_min = 8.0, depth_max = 40.0;
    double width_min = 20.0, width_max = 36.0;
    // Restrict rib counts to those whose evenly spaced stations stay clear of
    // the 25% / 75% slicing planes, so depth information reaches the model
    // only through the parametric modality.
    bool avoid_plane_ribs = false;

    void validate() const {
        auto ordered = [](double lo, double hi) { return lo <= hi && lo > 0; };
        if (!ordered(lx_min, lx_max) || !ordered(ly_min, ly_max) ||
            !ordered(t_min, t_max) || !ordered(width_min, width_max) ||
            !(depth_min <= depth_max && depth_min > 0) ||
            !(h_min >= 0 && h_min <= h_max) ||
            !(ribs_min >= 0 && ribs_min <= ribs_max))
            throw UsageError("param ranges: empty or negative interval");
    }
};

/// True when some evenly spaced station of an n-rib layout can put a rib of
/// half-width w/2 over the 25% or 75% width fractions.
inline bool rib_count_crosses_planes(int n, double width_max, double ly) {
    const double reach = (width_max / 2.0 + 0.01 * ly) / ly;
    for (int j = 0; j < n; ++j) {
        const double s = static_cast<double>(j + 1) / (n + 1);
        if (std::abs(s - 0.25) <= reach || std::abs(s - 0.75) <= reach) return true;
    }
    return false;
}

inline FrameParams draw_params(const ParamRanges& r, std::mt19937_64& rng,
                               int max_ribs = geometry::kDefaultDepthLen) {
    auto uni = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    FrameParams p;
    p.lx = uni(r.lx_min, r.lx_max);
    p.ly = uni(r.ly_min, r.ly_max);
    p.t = uni(r.t_min, r.t_max);
    p.h = uni(r.h_min, r.h_max);
    p.rib_width = uni(r.width_min, r.width_max);

    std::vector<int> counts;
    for (int n = r.ribs_min; n <= std::min(r.ribs_max, max_ribs); ++n)
        if (!r.avoid_plane_ribs || !rib_count_crosses_planes(n, r.width_max, r.ly_min))
            counts.push_back(n);
    if (counts.empty())
        throw DataError("param ranges: no admissible rib count in [" +
                        std::to_string(r.ribs_min) + "," + std::to_string(r.ribs_max) + "]");
    const int n = counts[std::uniform_int_distribution<size_t>(0, counts.size() - 1)(rng)];
    for (int j = 0; j < n; ++j) p.rib_depths.push_back(uni(r.depth_min, r.depth_max));
    while (n > 0 && n * p.rib_width > 0.9 * p.ly) p.rib_width *= 0.5;
    return p;
}

/// Seeded synthetic dataset: every record carries all three modalities plus
/// oracle targets. Per-record generators derive from (seed, index), so the
/// output is reproducible bitwise and records could be produced in parallel.
inline std::vector<FrameRecord> gen_dataset(int count, uint64_t seed,
                                            const ParamRanges& ranges = {},
                                            int section_len = geometry::kDefaultSectionLen,
                                            int max_ribs = geometry::kDefaultDepthLen) {
    if (count < 1) throw UsageError("gen_dataset: count must be >= 1");
    ranges.validate();
    std::vector<FrameRecord> records;
    records.reserve(count);
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(i + 1)));
        char name[32];
        std::snprintf(name, sizeof(name), "frame-%05d", i);
        try {
            const FrameParams params = draw_params(ranges, rng, max_ribs);
            auto [mesh, depths] = gen_frame(params, rng, max_ribs);
            mesh.id = name;
            const OracleTargets targets = oracle_targets(params);
            records.push_back(geometry::assemble_record(
                mesh, std::move(depths),
                geometry::TargetTriple{targets.stress, targets.mass, targets.deflection},
                section_len));
        } catch (const DataError& e) {
            throw DataError("gen_dataset: record '" + std::string(name) + "': " + e.what());
        }
    }
    return records;
}

} // namespace framecast::synth
