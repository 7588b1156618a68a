#pragma once

#include <map>
#include <random>
#include <span>

#include "framecast/train/metrics.hpp"
#include "framecast/train/optimizer.hpp"
#include "framecast/train/schedule.hpp"
#include "framecast/train/split.hpp"

namespace framecast::train {

struct TrainConfig {
    double initial_lr = 1e-5;
    int epochs = 100;
    int batch_size = 16;
    int plateau_patience = 5;
    double plateau_factor = 0.5;
    double min_lr = 1e-7;
    double min_delta = 1e-4;
    double l2_lambda = 1e-4;
    uint64_t seed = 0;

    void validate() const {
        if (initial_lr <= 0) throw UsageError("train config: initial_lr must be > 0");
        if (plateau_factor <= 0 || plateau_factor >= 1)
            throw UsageError("train config: plateau_factor must be in (0,1)");
        if (epochs < 1 || batch_size < 2)
            throw UsageError("train config: epochs >= 1 and batch_size >= 2 required");
        if (l2_lambda < 0) throw UsageError("train config: l2_lambda must be >= 0");
    }
};

struct EpochStats {
    double train_loss = 0; // data mse over the epoch, normalized target space
    double test_loss = 0;  // eval-mode mse on the test split
    double lr = 0;         // rate used during this epoch
};

using LossTrace = std::vector<EpochStats>;

namespace detail {

inline std::map<std::string, const geometry::FrameRecord*>
index_records(std::span<const geometry::FrameRecord> records) {
    std::map<std::string, const geometry::FrameRecord*> index;
    for (const auto& r : records) {
        if (!index.emplace(r.id, &r).second)
            throw DataError("duplicate record id '" + r.id + "'");
    }
    return index;
}

inline ad::TensorPtr normalized_targets(std::span<const geometry::FrameRecord* const> recs,
                                        const TargetNormalizer& norm) {
    auto t = ad::make_tensor(ad::Shape{static_cast<int64_t>(recs.size()), 3});
    for (size_t i = 0; i < recs.size(); ++i) {
        if (!recs[i]->targets)
            throw DataError("record '" + recs[i]->id + "' has no targets");
        const auto v = norm.apply(*recs[i]->targets);
        std::copy(v.begin(), v.end(), t->data.begin() + i * 3);
    }
    return t;
}

inline double eval_mse(model::FusedModel& fused,
                       const std::vector<const geometry::FrameRecord*>& recs,
                       const TargetNormalizer& norm, int batch_size) {
    double total = 0;
    for (size_t start = 0; start < recs.size(); start += batch_size) {
        const size_t count = std::min<size_t>(batch_size, recs.size() - start);
        auto batch = model::make_batch(
            std::span<const geometry::FrameRecord* const>(recs).subspan(start, count),
            fused.config, fused.modality);
        auto out = fused.forward(nullptr, batch, ad::RunMode::eval);
        auto targets = normalized_targets(
            std::span<const geometry::FrameRecord* const>(recs).subspan(start, count), norm);
        for (size_t i = 0; i < out->data.size(); ++i) {
            const double d = out->data[i] - targets->data[i];
            total += d * d;
        }
    }
    return total / (3.0 * static_cast<double>(recs.size()));
}

} // namespace detail

/// Minibatch training with Adam and plateau-scheduled decay. The scheduler
/// monitors the test loss; the parameters with the best test loss are restored
/// into the model before returning. Single-threaded and deterministic for a
/// fixed seed.
inline LossTrace train(model::FusedModel& fused,
                       std::span<const geometry::FrameRecord> records,
                       const DatasetSplit& split, const TargetNormalizer& normalizer,
                       const TrainConfig& config) {
    config.validate();
    if (split.train_ids.size() < 2)
        throw DataError("train: need at least 2 training records");

    const auto index = detail::index_records(records);
    auto resolve = [&](const std::vector<std::string>& ids) {
        std::vector<const geometry::FrameRecord*> out;
        out.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = index.find(id);
            if (it == index.end()) throw DataError("train: unknown record id '" + id + "'");
            out.push_back(it->second);
        }
        return out;
    };
    const auto train_recs = resolve(split.train_ids);
    const auto test_recs = resolve(split.test_ids);
    if (test_recs.empty()) throw DataError("train: empty test split");

    AdamOptimizer optimizer(fused.store.trainable_tensors());
    PlateauScheduler scheduler(config.initial_lr, config.plateau_patience,
                               config.plateau_factor, config.min_lr, config.min_delta);
    const auto l2_weights = fused.store.penalized_weights();
    std::mt19937_64 shuffle_rng(config.seed);

    LossTrace trace;
    trace.reserve(config.epochs);
    double best_test = std::numeric_limits<double>::infinity();
    std::map<std::string, std::vector<double>> best_params;

    std::vector<size_t> order(train_recs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = scheduler.lr();
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        // batch boundaries; a trailing singleton folds into the previous batch
        std::vector<size_t> bounds{0};
        while (bounds.back() + config.batch_size < order.size())
            bounds.push_back(bounds.back() + config.batch_size);
        bounds.push_back(order.size());
        if (bounds.size() >= 3 && bounds[bounds.size() - 1] - bounds[bounds.size() - 2] < 2)
            bounds.erase(bounds.end() - 2);

        double epoch_sse = 0;
        for (size_t bi = 0; bi + 1 < bounds.size(); ++bi) {
            std::vector<geometry::FrameRecord> view;
            std::vector<const geometry::FrameRecord*> ptrs;
            for (size_t k = bounds[bi]; k < bounds[bi + 1]; ++k) {
                view.push_back(*train_recs[order[k]]);
                ptrs.push_back(train_recs[order[k]]);
            }
            auto batch = model::make_batch(view, fused.config, fused.modality);
            batch.targets = detail::normalized_targets(ptrs, normalizer);

            ad::Tape tape;
            auto pred = fused.forward(&tape, batch, ad::RunMode::train);
            auto data_term = ad::mse_loss(&tape, pred, batch.targets);
            auto loss = config.l2_lambda > 0
                            ? ad::add(&tape, data_term,
                                      ad::l2_penalty(&tape, l2_weights, config.l2_lambda))
                            : data_term;
            if (!std::isfinite(loss->data[0]))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(bi + 1));
            optimizer.zero_grads();
            ad::backward(loss, tape);
            optimizer.step(lr);
            epoch_sse += data_term->data[0] * 3.0 * static_cast<double>(view.size());
        }

        EpochStats stats;
        stats.lr = lr;
        stats.train_loss = epoch_sse / (3.0 * static_cast<double>(train_recs.size()));
        stats.test_loss = detail::eval_mse(fused, test_recs, normalizer, config.batch_size);
        if (!std::isfinite(stats.test_loss))
            throw NumericError("non-finite test loss at epoch " + std::to_string(epoch + 1));
        trace.push_back(stats);

        if (stats.test_loss < best_test) {
            best_test = stats.test_loss;
            best_params.clear();
            for (const auto& [name, tensor] : fused.store.entries())
                best_params[name] = tensor->data;
        }
        scheduler.observe(stats.test_loss);
    }

    for (const auto& [name, values] : best_params)
        fused.store.at(name)->data = values;
    return trace;
}

} // namespace framecast::train
