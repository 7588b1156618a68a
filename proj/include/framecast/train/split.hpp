#pragma once

#include <algorithm>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "framecast/geometry/record.hpp"

namespace framecast::train {

/// Disjoint id sets. The holdout is reserved for final reporting and never
/// touches training or normalizer fitting.
struct DatasetSplit {
    std::vector<std::string> train_ids, test_ids, holdout_ids;
};

/// Seeded shuffle, then: 20 records to the holdout (ceil(20%) capped at 20 for
/// sets under 100), remainder split 80/20 into train/test.
inline DatasetSplit split_dataset(std::span<const geometry::FrameRecord> records,
                                  uint64_t seed) {
    const int n = static_cast<int>(records.size());
    if (n < 25)
        throw DataError("split_dataset: need at least 25 records, got " + std::to_string(n));

    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& r : records) ids.push_back(r.id);
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);

    const int holdout =
        n >= 100 ? 20 : std::min(20, static_cast<int>(std::ceil(0.2 * n)));
    const int remainder = n - holdout;
    const int train = static_cast<int>(0.8 * remainder);

    DatasetSplit split;
    split.holdout_ids.assign(ids.begin(), ids.begin() + holdout);
    split.train_ids.assign(ids.begin() + holdout, ids.begin() + holdout + train);
    split.test_ids.assign(ids.begin() + holdout + train, ids.end());
    return split;
}

} // namespace framecast::train
