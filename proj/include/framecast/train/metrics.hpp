#pragma once

#include <span>
#include <vector>

#include "framecast/model/network.hpp"
#include "framecast/train/normalize.hpp"

namespace framecast::train {

struct SamplePrediction {
    std::string id;
    geometry::TargetTriple actual, predicted;
};

/// Per-target average percentage errors over an evaluation set.
struct MetricsReport {
    std::array<double, 3> error_pct{0, 0, 0}; // stress, mass, deflection
    std::vector<SamplePrediction> residuals;

    int n() const { return static_cast<int>(residuals.size()); }
    double stress_pct() const { return error_pct[0]; }
    double mass_pct() const { return error_pct[1]; }
    double deflection_pct() const { return error_pct[2]; }
};

/// error% = 100 * mean |pred - actual| / |actual|, in original units.
inline MetricsReport compute_metrics(std::span<const SamplePrediction> samples) {
    if (samples.empty()) throw DataError("metrics: no samples to evaluate");
    MetricsReport report;
    for (const auto& s : samples) {
        const std::array<double, 3> actual{s.actual.stress, s.actual.mass,
                                           s.actual.deflection};
        const std::array<double, 3> pred{s.predicted.stress, s.predicted.mass,
                                         s.predicted.deflection};
        for (int c = 0; c < 3; ++c) {
            if (actual[c] == 0.0)
                throw DataError("metrics: record '" + s.id + "' has a zero actual in column " +
                                std::to_string(c) + ", relative error undefined");
            report.error_pct[c] += std::abs(pred[c] - actual[c]) / std::abs(actual[c]);
        }
        report.residuals.push_back(s);
    }
    for (int c = 0; c < 3; ++c)
        report.error_pct[c] *= 100.0 / static_cast<double>(samples.size());
    return report;
}

/// Runs the model over the records in eval mode and reports percentage errors
/// in original units (normalizer inverted).
inline MetricsReport evaluate(model::FusedModel& fused,
                              std::span<const geometry::FrameRecord> records,
                              const TargetNormalizer& normalizer, int batch_size = 16) {
    if (records.empty()) throw DataError("evaluate: no records");
    std::vector<SamplePrediction> samples;
    samples.reserve(records.size());
    for (size_t start = 0; start < records.size(); start += batch_size) {
        const size_t count = std::min<size_t>(batch_size, records.size() - start);
        auto batch = model::make_batch(records.subspan(start, count), fused.config,
                                       fused.modality);
        auto out = fused.forward(nullptr, batch, ad::RunMode::eval);
        for (size_t i = 0; i < count; ++i) {
            const auto& rec = records[start + i];
            if (!rec.targets)
                throw DataError("evaluate: record '" + rec.id + "' has no targets");
            SamplePrediction s;
            s.id = rec.id;
            s.actual = *rec.targets;
            s.predicted = normalizer.invert(
                {out->data[i * 3 + 0], out->data[i * 3 + 1], out->data[i * 3 + 2]});
            samples.push_back(std::move(s));
        }
    }
    return compute_metrics(samples);
}

} // namespace framecast::train
