#pragma once

#include <array>
#include <cmath>
#include <span>

#include "framecast/geometry/record.hpp"

namespace framecast::train {

/// Per-target standardization fitted on the training split only.
class TargetNormalizer {
public:
    static TargetNormalizer fit(std::span<const geometry::TargetTriple> train_targets) {
        if (train_targets.size() < 2)
            throw DataError("normalizer: need at least 2 training targets");
        TargetNormalizer norm;
        const double n = static_cast<double>(train_targets.size());
        for (const auto& t : train_targets) {
            const std::array<double, 3> v = {t.stress, t.mass, t.deflection};
            for (int c = 0; c < 3; ++c) norm.mean_[c] += v[c];
        }
        for (int c = 0; c < 3; ++c) norm.mean_[c] /= n;
        for (const auto& t : train_targets) {
            const std::array<double, 3> v = {t.stress, t.mass, t.deflection};
            for (int c = 0; c < 3; ++c) {
                const double d = v[c] - norm.mean_[c];
                norm.std_[c] += d * d;
            }
        }
        for (int c = 0; c < 3; ++c) {
            norm.std_[c] = std::sqrt(norm.std_[c] / n);
            if (norm.std_[c] <= 0.0)
                throw DataError("normalizer: target column " + std::to_string(c) +
                                " has zero variance in the training split");
        }
        return norm;
    }

    static TargetNormalizer from_stats(std::array<double, 3> mean, std::array<double, 3> sd) {
        TargetNormalizer norm;
        norm.mean_ = mean;
        norm.std_ = sd;
        return norm;
    }

    std::array<double, 3> apply(const geometry::TargetTriple& t) const {
        return {(t.stress - mean_[0]) / std_[0], (t.mass - mean_[1]) / std_[1],
                (t.deflection - mean_[2]) / std_[2]};
    }
    geometry::TargetTriple invert(const std::array<double, 3>& v) const {
        return {v[0] * std_[0] + mean_[0], v[1] * std_[1] + mean_[1],
                v[2] * std_[2] + mean_[2]};
    }

    const std::array<double, 3>& mean() const { return mean_; }
    const std::array<double, 3>& stddev() const { return std_; }

private:
    std::array<double, 3> mean_{0, 0, 0};
    std::array<double, 3> std_{0, 0, 0};
};

} // namespace framecast::train
