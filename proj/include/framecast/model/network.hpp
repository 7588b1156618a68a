#pragma once

#include <array>
#include <optional>
#include <span>

#include "framecast/ad/ops.hpp"
#include "framecast/geometry/record.hpp"
#include "framecast/model/store.hpp"

namespace framecast::model {

using ad::RunMode;
using ad::Tape;
using ad::TensorPtr;

enum class EncoderPreset { resnet50, mini };
enum class Modality { multimodal, image_only };

inline constexpr int kEmbeddingWidth = 128;

inline std::string to_string(EncoderPreset p) {
    return p == EncoderPreset::resnet50 ? "resnet50" : "mini";
}
inline std::string to_string(Modality m) {
    return m == Modality::multimodal ? "multimodal" : "image_only";
}
inline EncoderPreset preset_from_string(const std::string& s) {
    if (s == "resnet50") return EncoderPreset::resnet50;
    if (s == "mini") return EncoderPreset::mini;
    throw UsageError("unknown encoder preset '" + s + "' (expected resnet50 or mini)");
}
inline Modality modality_from_string(const std::string& s) {
    if (s == "multimodal" || s == "multi") return Modality::multimodal;
    if (s == "image_only" || s == "image-only") return Modality::image_only;
    throw UsageError("unknown modality '" + s + "' (expected multi or image-only)");
}

struct ModelConfig {
    EncoderPreset encoder_preset = EncoderPreset::resnet50;
    int section_len = geometry::kDefaultSectionLen;
    int depth_len = geometry::kDefaultDepthLen;
    std::array<double, 3> dropout_rates{0.5, 0.4, 0.3};
    double l2_lambda = 1e-4;
    uint64_t seed = 0;

    void validate() const {
        for (double r : dropout_rates)
            if (r < 0.0 || r >= 1.0) throw UsageError("dropout rates must lie in [0,1)");
        if (section_len < 4) throw UsageError("section_len must be >= 4");
        if (depth_len < 1) throw UsageError("depth_len must be >= 1");
        if (l2_lambda < 0) throw UsageError("l2_lambda must be >= 0");
    }
};

namespace layers {

struct Dense {
    TensorPtr w, b;

    static Dense create(ParameterStore& store, const std::string& prefix, int in, int out,
                        bool penalized = false) {
        Dense layer{store.create(prefix + ".w", ad::Shape{in, out}, true),
                    store.create(prefix + ".b", ad::Shape{out}, true)};
        if (penalized) store.mark_penalized(prefix + ".w");
        return layer;
    }
    TensorPtr forward(Tape* tape, const TensorPtr& x) const {
        return ad::dense_affine(tape, x, w, b);
    }
};

struct BatchNorm {
    TensorPtr gamma, beta, run_mean, run_var;

    static BatchNorm create(ParameterStore& store, const std::string& prefix, int width) {
        return BatchNorm{store.create(prefix + ".gamma", ad::Shape{width}, true),
                         store.create(prefix + ".beta", ad::Shape{width}, true),
                         store.create(prefix + ".run_mean", ad::Shape{width}, false),
                         store.create(prefix + ".run_var", ad::Shape{width}, false)};
    }
    TensorPtr forward(Tape* tape, const TensorPtr& x, RunMode mode) const {
        return ad::batch_norm(tape, x, gamma, beta, mode, run_mean, run_var);
    }
};

struct Conv {
    TensorPtr kernel;
    int stride = 1, pad = 0;

    static Conv create(ParameterStore& store, const std::string& prefix, int in_ch,
                       int out_ch, int ksize, int stride, int pad) {
        return Conv{store.create(prefix + ".kernel", ad::Shape{out_ch, in_ch, ksize, ksize},
                                 true),
                    stride, pad};
    }
    TensorPtr forward(Tape* tape, const TensorPtr& x) const {
        return ad::conv2d(tape, x, kernel, stride, pad);
    }
};

struct ConvBn {
    Conv conv;
    BatchNorm bn;
    bool relu_after = true;

    static ConvBn create(ParameterStore& store, const std::string& prefix, int in_ch,
                         int out_ch, int ksize, int stride, int pad, bool relu_after) {
        return ConvBn{Conv::create(store, prefix, in_ch, out_ch, ksize, stride, pad),
                      BatchNorm::create(store, prefix + ".bn", out_ch), relu_after};
    }
    TensorPtr forward(Tape* tape, const TensorPtr& x, RunMode mode) const {
        auto y = bn.forward(tape, conv.forward(tape, x), mode);
        return relu_after ? ad::relu(tape, y) : y;
    }
};

/// Residual block: bottleneck (1x1 reduce, 3x3, 1x1 expand) or basic
/// (3x3, 3x3), with an optional 1x1 projection shortcut.
struct ResidualBlock {
    std::vector<ConvBn> path;
    std::optional<ConvBn> projection;

    static ResidualBlock bottleneck(ParameterStore& store, const std::string& prefix,
                                    int in_ch, int mid_ch, int out_ch, int stride) {
        ResidualBlock block;
        block.path.push_back(ConvBn::create(store, prefix + ".conv1", in_ch, mid_ch, 1,
                                            stride, 0, true));
        block.path.push_back(ConvBn::create(store, prefix + ".conv2", mid_ch, mid_ch, 3,
                                            1, 1, true));
        block.path.push_back(ConvBn::create(store, prefix + ".conv3", mid_ch, out_ch, 1,
                                            1, 0, false));
        if (stride != 1 || in_ch != out_ch)
            block.projection = ConvBn::create(store, prefix + ".shortcut", in_ch, out_ch, 1,
                                              stride, 0, false);
        return block;
    }

    static ResidualBlock basic(ParameterStore& store, const std::string& prefix, int in_ch,
                               int out_ch, int stride) {
        ResidualBlock block;
        block.path.push_back(ConvBn::create(store, prefix + ".conv1", in_ch, out_ch, 3,
                                            stride, 1, true));
        block.path.push_back(ConvBn::create(store, prefix + ".conv2", out_ch, out_ch, 3,
                                            1, 1, false));
        if (stride != 1 || in_ch != out_ch)
            block.projection = ConvBn::create(store, prefix + ".shortcut", in_ch, out_ch, 1,
                                              stride, 0, false);
        return block;
    }

    TensorPtr forward(Tape* tape, const TensorPtr& x, RunMode mode) const {
        TensorPtr y = x;
        for (const auto& unit : path) y = unit.forward(tape, y, mode);
        const TensorPtr shortcut = projection ? projection->forward(tape, x, mode) : x;
        return ad::relu(tape, ad::add(tape, y, shortcut));
    }
};

} // namespace layers

/// Residual convolutional encoder for one 1x128x128 view. Both presets share
/// the pooled head: global average pool, dense to 128, relu, batch norm.
struct ImageBranch {
    EncoderPreset preset = EncoderPreset::mini;
    layers::ConvBn stem;
    bool stem_pool = false;
    std::vector<layers::ResidualBlock> blocks;
    layers::Dense head;
    layers::BatchNorm head_bn;

    static ImageBranch build(ParameterStore& store, const std::string& prefix,
                             EncoderPreset preset) {
        ImageBranch branch;
        branch.preset = preset;
        if (preset == EncoderPreset::resnet50) {
            branch.stem = layers::ConvBn::create(store, prefix + ".stem", 1, 64, 7, 2, 3, true);
            branch.stem_pool = true;
            struct StageSpec { int mid, out, blocks, stride; };
            const StageSpec stages[4] = {{64, 256, 3, 1},
                                         {128, 512, 4, 2},
                                         {256, 1024, 6, 2},
                                         {512, 2048, 3, 2}};
            int in_ch = 64;
            for (int s = 0; s < 4; ++s) {
                for (int b = 0; b < stages[s].blocks; ++b) {
                    const std::string name =
                        prefix + ".stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
                    branch.blocks.push_back(layers::ResidualBlock::bottleneck(
                        store, name, in_ch, stages[s].mid, stages[s].out,
                        b == 0 ? stages[s].stride : 1));
                    in_ch = stages[s].out;
                }
            }
            branch.head = layers::Dense::create(store, prefix + ".head", 2048, kEmbeddingWidth);
        } else {
            branch.stem = layers::ConvBn::create(store, prefix + ".stem", 1, 8, 3, 1, 1, true);
            branch.stem_pool = false;
            const int widths[3] = {8, 16, 32};
            int in_ch = 8;
            for (int s = 0; s < 3; ++s) {
                for (int b = 0; b < 2; ++b) {
                    const std::string name =
                        prefix + ".stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
                    const int stride = (b == 0 && s > 0) ? 2 : 1;
                    branch.blocks.push_back(
                        layers::ResidualBlock::basic(store, name, in_ch, widths[s], stride));
                    in_ch = widths[s];
                }
            }
            branch.head = layers::Dense::create(store, prefix + ".head", 32, kEmbeddingWidth);
        }
        branch.head_bn = layers::BatchNorm::create(store, prefix + ".head_bn", kEmbeddingWidth);
        return branch;
    }

    TensorPtr forward(Tape* tape, const TensorPtr& image, RunMode mode,
                      ad::Shape* prepool_shape = nullptr) const {
        TensorPtr x = stem.forward(tape, image, mode);
        if (stem_pool) x = ad::max_pool2d(tape, x, 3, 2, 1);
        for (const auto& block : blocks) x = block.forward(tape, x, mode);
        if (prepool_shape) *prepool_shape = x->shape;
        x = ad::global_avg_pool(tape, x);
        x = ad::relu(tape, head.forward(tape, x));
        return head_bn.forward(tape, x, mode);
    }
};

/// Dense encoder for cross-section or depth inputs: a relu MLP with batch
/// norm in front of the 128-wide output embedding.
struct MlpBranch {
    std::vector<layers::Dense> hidden;
    layers::BatchNorm out_bn;

    static MlpBranch build(ParameterStore& store, const std::string& prefix, int in_width,
                           std::span<const int> widths) {
        MlpBranch branch;
        int in = in_width;
        for (size_t i = 0; i < widths.size(); ++i) {
            branch.hidden.push_back(layers::Dense::create(
                store, prefix + ".fc" + std::to_string(i + 1), in, widths[i]));
            in = widths[i];
        }
        branch.out_bn = layers::BatchNorm::create(store, prefix + ".out_bn", in);
        return branch;
    }

    TensorPtr forward(Tape* tape, const TensorPtr& input, RunMode mode) const {
        TensorPtr x = input;
        for (const auto& layer : hidden) x = ad::relu(tape, layer.forward(tape, x));
        return out_bn.forward(tape, x, mode);
    }
};

inline MlpBranch build_section_branch(ParameterStore& store, const std::string& prefix,
                                      int section_len) {
    if (section_len < 4) throw UsageError("section branch: section length must be >= 4");
    const int widths[] = {128, 256, 512, 1024, 512, 128};
    return MlpBranch::build(store, prefix, 2 * section_len, widths);
}

inline MlpBranch build_param_branch(ParameterStore& store, const std::string& prefix,
                                    int depth_len) {
    if (depth_len < 1) throw UsageError("param branch: depth length must be >= 1");
    const int widths[] = {128, 256, 512, 128};
    return MlpBranch::build(store, prefix, depth_len, widths);
}

/// Prediction head over the concatenated embeddings: dense 128/64/32/16/3,
/// relu after each hidden layer, dropout after the 128/64/32 layers, linear
/// output. Every dense weight carries the L2 penalty.
struct FusionHead {
    layers::Dense fc1, fc2, fc3, fc4, out;
    std::array<double, 3> rates{0.5, 0.4, 0.3};

    static FusionHead build(ParameterStore& store, const std::string& prefix, int in_width,
                            std::array<double, 3> rates) {
        if (in_width != 5 * kEmbeddingWidth && in_width != 2 * kEmbeddingWidth)
            throw UsageError("fusion head: unsupported input width " +
                             std::to_string(in_width));
        FusionHead head;
        head.fc1 = layers::Dense::create(store, prefix + ".fc1", in_width, 128, true);
        head.fc2 = layers::Dense::create(store, prefix + ".fc2", 128, 64, true);
        head.fc3 = layers::Dense::create(store, prefix + ".fc3", 64, 32, true);
        head.fc4 = layers::Dense::create(store, prefix + ".fc4", 32, 16, true);
        head.out = layers::Dense::create(store, prefix + ".out", 16, 3, true);
        head.rates = rates;
        return head;
    }

    TensorPtr forward(Tape* tape, const TensorPtr& fused, RunMode mode,
                      std::mt19937_64& rng) const {
        TensorPtr x = ad::relu(tape, fc1.forward(tape, fused));
        x = ad::dropout(tape, x, rates[0], mode, rng);
        x = ad::relu(tape, fc2.forward(tape, x));
        x = ad::dropout(tape, x, rates[1], mode, rng);
        x = ad::relu(tape, fc3.forward(tape, x));
        x = ad::dropout(tape, x, rates[2], mode, rng);
        x = ad::relu(tape, fc4.forward(tape, x));
        return out.forward(tape, x);
    }
};

/// One training/eval batch in tensor form. Section tensors interleave (x, z)
/// per point; unused modalities stay null for the image-only model.
struct Batch {
    std::vector<std::string> ids;
    TensorPtr top, side, sec25, sec75, depths;
    TensorPtr targets; // normalized target space; null for prediction

    int64_t size() const { return top ? top->shape[0] : 0; }
};

inline Batch make_batch(std::span<const geometry::FrameRecord* const> records,
                        const ModelConfig& config, Modality modality) {
    if (records.empty()) throw UsageError("make_batch: empty record span");
    const int b = static_cast<int>(records.size());
    constexpr int px = geometry::kImageSize;

    Batch batch;
    batch.top = ad::make_tensor(ad::Shape{b, 1, px, px});
    batch.side = ad::make_tensor(ad::Shape{b, 1, px, px});
    if (modality == Modality::multimodal) {
        batch.sec25 = ad::make_tensor(ad::Shape{b, 2 * config.section_len});
        batch.sec75 = ad::make_tensor(ad::Shape{b, 2 * config.section_len});
        batch.depths = ad::make_tensor(ad::Shape{b, config.depth_len});
    }
    for (int i = 0; i < b; ++i) {
        const auto& rec = *records[i];
        batch.ids.push_back(rec.id);
        if (static_cast<int>(rec.top.pixels.size()) != px * px ||
            static_cast<int>(rec.side.pixels.size()) != px * px)
            throw DataError("record '" + rec.id + "': missing or malformed view images");
        std::copy(rec.top.pixels.begin(), rec.top.pixels.end(),
                  batch.top->data.begin() + static_cast<size_t>(i) * px * px);
        std::copy(rec.side.pixels.begin(), rec.side.pixels.end(),
                  batch.side->data.begin() + static_cast<size_t>(i) * px * px);
        if (modality != Modality::multimodal) continue;

        for (const auto* sec : {&rec.sec25, &rec.sec75}) {
            if (static_cast<int>(sec->points.size()) != config.section_len)
                throw DataError("record '" + rec.id + "': cross-section has " +
                                std::to_string(sec->points.size()) + " points, expected " +
                                std::to_string(config.section_len));
        }
        if (static_cast<int>(rec.depths.depths.size()) != config.depth_len)
            throw DataError("record '" + rec.id + "': depth vector has " +
                            std::to_string(rec.depths.depths.size()) + " entries, expected " +
                            std::to_string(config.depth_len));
        for (int k = 0; k < config.section_len; ++k) {
            const size_t base = (static_cast<size_t>(i) * config.section_len + k) * 2;
            batch.sec25->data[base] = rec.sec25.points[k].x;
            batch.sec25->data[base + 1] = rec.sec25.points[k].z;
            batch.sec75->data[base] = rec.sec75.points[k].x;
            batch.sec75->data[base + 1] = rec.sec75.points[k].z;
        }
        std::copy(rec.depths.depths.begin(), rec.depths.depths.end(),
                  batch.depths->data.begin() + static_cast<size_t>(i) * config.depth_len);
    }
    return batch;
}

inline Batch make_batch(std::span<const geometry::FrameRecord> records,
                        const ModelConfig& config, Modality modality) {
    std::vector<const geometry::FrameRecord*> ptrs;
    ptrs.reserve(records.size());
    for (const auto& r : records) ptrs.push_back(&r);
    return make_batch(ptrs, config, modality);
}

/// The fused predictor: two image encoders always, plus the two cross-section
/// encoders and the depth encoder in multimodal mode, concatenated (top, side,
/// sec25, sec75, depths) into the fusion head.
class FusedModel {
public:
    ModelConfig config;
    Modality modality = Modality::multimodal;
    ParameterStore store;
    ImageBranch top_branch, side_branch;
    std::optional<MlpBranch> sec25_branch, sec75_branch, depth_branch;
    FusionHead head;
    std::mt19937_64 dropout_rng{0};

    static FusedModel build(const ModelConfig& config,
                            Modality modality = Modality::multimodal) {
        config.validate();
        FusedModel m;
        m.config = config;
        m.modality = modality;
        m.top_branch = ImageBranch::build(m.store, "top", config.encoder_preset);
        m.side_branch = ImageBranch::build(m.store, "side", config.encoder_preset);
        if (modality == Modality::multimodal) {
            m.sec25_branch = build_section_branch(m.store, "sec25", config.section_len);
            m.sec75_branch = build_section_branch(m.store, "sec75", config.section_len);
            m.depth_branch = build_param_branch(m.store, "depths", config.depth_len);
        }
        m.head = FusionHead::build(m.store, "head", static_cast<int>(m.fused_width()),
                                   config.dropout_rates);
        m.dropout_rng.seed(config.seed + 0x5eedd09);
        return m;
    }

    int64_t fused_width() const {
        return (modality == Modality::multimodal ? 5 : 2) * kEmbeddingWidth;
    }

    TensorPtr forward(Tape* tape, const Batch& batch, RunMode mode,
                      ad::Shape* prepool_shape = nullptr) {
        std::vector<TensorPtr> embeddings;
        embeddings.push_back(top_branch.forward(tape, batch.top, mode, prepool_shape));
        embeddings.push_back(side_branch.forward(tape, batch.side, mode));
        if (modality == Modality::multimodal) {
            if (!batch.sec25 || !batch.sec75 || !batch.depths)
                throw DataError("multimodal forward: batch is missing section or depth "
                                "tensors (records incomplete)");
            embeddings.push_back(sec25_branch->forward(tape, batch.sec25, mode));
            embeddings.push_back(sec75_branch->forward(tape, batch.sec75, mode));
            embeddings.push_back(depth_branch->forward(tape, batch.depths, mode));
        }
        auto fused = ad::concat_features(tape, embeddings);
        return head.forward(tape, fused, mode, dropout_rng);
    }
};

inline FusedModel build_unimodal_baseline(const ModelConfig& config) {
    return FusedModel::build(config, Modality::image_only);
}

/// He-normal initialization for conv kernels and dense weights, zeros for
/// biases and beta, ones for gamma and running variance. Deterministic per
/// seed through the store's name ordering.
inline void init_params(FusedModel& model, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto ends_with = [](const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() &&
               s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    for (const auto& [name, tensor] : model.store.entries()) {
        if (ends_with(name, ".kernel")) {
            const double fan_in = static_cast<double>(tensor->shape[1] * tensor->shape[2] *
                                                      tensor->shape[3]);
            const double std_dev = std::sqrt(2.0 / fan_in);
            for (auto& v : tensor->data) v = normal(rng) * std_dev;
        } else if (ends_with(name, ".w")) {
            const double std_dev = std::sqrt(2.0 / static_cast<double>(tensor->shape[0]));
            for (auto& v : tensor->data) v = normal(rng) * std_dev;
        } else if (ends_with(name, ".gamma") || ends_with(name, ".run_var")) {
            std::fill(tensor->data.begin(), tensor->data.end(), 1.0);
        } else {
            std::fill(tensor->data.begin(), tensor->data.end(), 0.0);
        }
    }
}

} // namespace framecast::model
