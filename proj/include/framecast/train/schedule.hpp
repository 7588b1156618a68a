#pragma once

#include <limits>

#include "framecast/core.hpp"

namespace framecast::train {

/// Plateau-triggered learning-rate decay. When the monitored loss fails to
/// improve by more than min_delta for `patience` consecutive observations the
/// rate is multiplied by `factor` (floored at min_lr) and the counter resets.
class PlateauScheduler {
public:
    PlateauScheduler(double initial_lr, int patience, double factor, double min_lr,
                     double min_delta)
        : lr_(initial_lr), patience_(patience), factor_(factor), min_lr_(min_lr),
          min_delta_(min_delta) {
        if (initial_lr <= 0) throw UsageError("scheduler: initial lr must be > 0");
        if (factor <= 0 || factor >= 1) throw UsageError("scheduler: factor must be in (0,1)");
        if (patience < 1) throw UsageError("scheduler: patience must be >= 1");
    }

    /// Feeds one epoch's monitored loss; returns the lr for the next epoch.
    double observe(double loss) {
        if (loss < best_ - min_delta_) {
            best_ = loss;
            stalled_ = 0;
        } else if (++stalled_ >= patience_) {
            lr_ = std::max(lr_ * factor_, min_lr_);
            stalled_ = 0;
        }
        return lr_;
    }

    double lr() const { return lr_; }

private:
    double lr_;
    int patience_;
    double factor_, min_lr_, min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int stalled_ = 0;
};

} // namespace framecast::train
