#pragma once

#include "framecast/train/loop.hpp"

namespace framecast::train {

/// Per-target error% for one model on one split.
struct CompareCell {
    double stress = 0, mass = 0, deflection = 0;

    static CompareCell from(const MetricsReport& report) {
        return {report.stress_pct(), report.mass_pct(), report.deflection_pct()};
    }
    CompareCell operator-(const CompareCell& o) const {
        return {stress - o.stress, mass - o.mass, deflection - o.deflection};
    }
};

struct CompareReport {
    CompareCell test_unimodal, test_multimodal;
    CompareCell holdout_unimodal, holdout_multimodal;

    CompareCell test_delta() const { return test_multimodal - test_unimodal; }
    CompareCell holdout_delta() const { return holdout_multimodal - holdout_unimodal; }
};

/// Trains the multimodal model and the image-only baseline on identical
/// splits, seeds and schedules, then evaluates both on the test and holdout
/// splits.
inline CompareReport compare_modalities(std::span<const geometry::FrameRecord> records,
                                        const model::ModelConfig& model_config,
                                        const TrainConfig& train_config,
                                        LossTrace* multimodal_trace = nullptr,
                                        LossTrace* unimodal_trace = nullptr) {
    const DatasetSplit split = split_dataset(records, train_config.seed);
    const auto index = detail::index_records(records);
    std::vector<geometry::TargetTriple> train_targets;
    for (const auto& id : split.train_ids) {
        const auto* rec = index.at(id);
        if (!rec->targets) throw DataError("compare: record '" + id + "' has no targets");
        train_targets.push_back(*rec->targets);
    }
    const auto normalizer = TargetNormalizer::fit(train_targets);

    auto holdout_records = [&] {
        std::vector<geometry::FrameRecord> out;
        for (const auto& id : split.holdout_ids) out.push_back(*index.at(id));
        return out;
    }();
    auto test_records = [&] {
        std::vector<geometry::FrameRecord> out;
        for (const auto& id : split.test_ids) out.push_back(*index.at(id));
        return out;
    }();

    CompareReport report;
    for (const auto modality : {model::Modality::multimodal, model::Modality::image_only}) {
        auto fused = model::FusedModel::build(model_config, modality);
        model::init_params(fused, model_config.seed);
        auto trace = train(fused, records, split, normalizer, train_config);
        const auto test_metrics = evaluate(fused, test_records, normalizer,
                                           train_config.batch_size);
        const auto holdout_metrics = evaluate(fused, holdout_records, normalizer,
                                              train_config.batch_size);
        if (modality == model::Modality::multimodal) {
            report.test_multimodal = CompareCell::from(test_metrics);
            report.holdout_multimodal = CompareCell::from(holdout_metrics);
            if (multimodal_trace) *multimodal_trace = std::move(trace);
        } else {
            report.test_unimodal = CompareCell::from(test_metrics);
            report.holdout_unimodal = CompareCell::from(holdout_metrics);
            if (unimodal_trace) *unimodal_trace = std::move(trace);
        }
    }
    return report;
}

} // namespace framecast::train
