#pragma once

#include <cstring>
#include <fstream>
#include <optional>

#include "framecast/model/network.hpp"
#include "framecast/train/normalize.hpp"

namespace framecast::train {

inline constexpr char kCheckpointMagic[8] = {'F', 'R', 'A', 'M', 'E', 'C', 'P', '\0'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct LoadedModel {
    model::FusedModel fused;
    TargetNormalizer normalizer = TargetNormalizer::from_stats({0, 0, 0}, {1, 1, 1});
};

namespace detail {

class ByteWriter {
public:
    explicit ByteWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw DataError("checkpoint: cannot open for writing: " + path);
    }
    void raw(const void* p, size_t n) { out_.write(static_cast<const char*>(p), n); }
    template <typename T> void pod(T v) { raw(&v, sizeof(T)); }
    void str(const std::string& s) {
        pod<uint32_t>(static_cast<uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void done(const std::string& path) {
        out_.flush();
        if (!out_) throw DataError("checkpoint: write failed: " + path);
    }

private:
    std::ofstream out_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw DataError("checkpoint: cannot open: " + path);
    }
    void raw(void* p, size_t n) {
        in_.read(static_cast<char*>(p), n);
        if (static_cast<size_t>(in_.gcount()) != n)
            throw DataError("checkpoint: truncated at byte offset " +
                            std::to_string(offset_ + in_.gcount()));
        offset_ += n;
    }
    template <typename T> T pod() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }
    std::string str() {
        const uint32_t n = pod<uint32_t>();
        if (n > (1u << 20)) throw DataError("checkpoint: implausible string length");
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

private:
    std::ifstream in_;
    size_t offset_ = 0;
};

} // namespace detail

/// Versioned binary container: magic, version, config echo, normalizer stats,
/// then length-prefixed named tensor records (doubles, little-endian). A round
/// trip reproduces predictions bitwise.
inline void save_checkpoint(const model::FusedModel& fused,
                            const TargetNormalizer& normalizer, const std::string& path) {
    detail::ByteWriter w(path);
    w.raw(kCheckpointMagic, 8);
    w.pod<uint32_t>(kCheckpointVersion);
    w.pod<uint8_t>(fused.modality == model::Modality::multimodal ? 0 : 1);
    w.pod<uint8_t>(fused.config.encoder_preset == model::EncoderPreset::resnet50 ? 0 : 1);
    w.pod<uint32_t>(static_cast<uint32_t>(fused.config.section_len));
    w.pod<uint32_t>(static_cast<uint32_t>(fused.config.depth_len));
    for (double r : fused.config.dropout_rates) w.pod<double>(r);
    w.pod<double>(fused.config.l2_lambda);
    w.pod<uint64_t>(fused.config.seed);
    for (double v : normalizer.mean()) w.pod<double>(v);
    for (double v : normalizer.stddev()) w.pod<double>(v);

    w.pod<uint64_t>(fused.store.entries().size());
    for (const auto& [name, tensor] : fused.store.entries()) {
        w.str(name);
        w.pod<uint32_t>(static_cast<uint32_t>(tensor->shape.rank()));
        for (int64_t d : tensor->shape.dims) w.pod<uint64_t>(static_cast<uint64_t>(d));
        w.pod<uint64_t>(static_cast<uint64_t>(tensor->data.size()));
        w.raw(tensor->data.data(), tensor->data.size() * sizeof(double));
    }
    w.done(path);
}

/// Rebuilds the model from the config echo and fills every named tensor.
/// `expect` lets callers refuse a checkpoint trained in the other modality.
inline LoadedModel load_checkpoint(const std::string& path,
                                   std::optional<model::Modality> expect = std::nullopt) {
    detail::ByteReader r(path);
    char magic[8];
    r.raw(magic, 8);
    if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError("checkpoint: bad magic in " + path);
    const uint32_t version = r.pod<uint32_t>();
    if (version != kCheckpointVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));

    const uint8_t modality_tag = r.pod<uint8_t>();
    if (modality_tag > 1) throw DataError("checkpoint: bad modality tag");
    const auto modality =
        modality_tag == 0 ? model::Modality::multimodal : model::Modality::image_only;
    if (expect && *expect != modality)
        throw DataError("checkpoint: mode mismatch, file holds a " +
                        model::to_string(modality) + " model but a " +
                        model::to_string(*expect) + " model was requested");

    model::ModelConfig config;
    const uint8_t preset_tag = r.pod<uint8_t>();
    if (preset_tag > 1) throw DataError("checkpoint: bad encoder preset tag");
    config.encoder_preset =
        preset_tag == 0 ? model::EncoderPreset::resnet50 : model::EncoderPreset::mini;
    config.section_len = static_cast<int>(r.pod<uint32_t>());
    config.depth_len = static_cast<int>(r.pod<uint32_t>());
    for (double& rate : config.dropout_rates) rate = r.pod<double>();
    config.l2_lambda = r.pod<double>();
    config.seed = r.pod<uint64_t>();

    std::array<double, 3> mean, sd;
    for (double& v : mean) v = r.pod<double>();
    for (double& v : sd) v = r.pod<double>();

    LoadedModel loaded{model::FusedModel::build(config, modality),
                       TargetNormalizer::from_stats(mean, sd)};

    const uint64_t count = r.pod<uint64_t>();
    if (count != loaded.fused.store.entries().size())
        throw DataError("checkpoint: tensor count " + std::to_string(count) +
                        " does not match the rebuilt model (" +
                        std::to_string(loaded.fused.store.entries().size()) + ")");
    for (uint64_t i = 0; i < count; ++i) {
        const std::string name = r.str();
        if (!loaded.fused.store.contains(name))
            throw DataError("checkpoint: unknown tensor '" + name + "'");
        auto tensor = loaded.fused.store.at(name);
        const uint32_t rank = r.pod<uint32_t>();
        std::vector<int64_t> dims(rank);
        for (auto& d : dims) d = static_cast<int64_t>(r.pod<uint64_t>());
        if (!(ad::Shape{dims} == tensor->shape))
            throw DataError("checkpoint: tensor '" + name + "' has shape " +
                            ad::Shape{dims}.str() + ", model expects " +
                            tensor->shape.str());
        const uint64_t n = r.pod<uint64_t>();
        if (n != tensor->data.size())
            throw DataError("checkpoint: tensor '" + name + "' length mismatch");
        r.raw(tensor->data.data(), n * sizeof(double));
    }
    return loaded;
}

} // namespace framecast::train
