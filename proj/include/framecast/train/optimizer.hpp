#pragma once

#include <cmath>
#include <vector>

#include "framecast/ad/tensor.hpp"

namespace framecast::train {

/// Adaptive moment estimation over a fixed parameter list. Moment buffers are
/// keyed by list position, so the list order must not change between steps.
class AdamOptimizer {
public:
    explicit AdamOptimizer(std::vector<ad::TensorPtr> params, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i]->data.size(), 0.0);
            v_[i].assign(params_[i]->data.size(), 0.0);
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& p = *params_[i];
            if (p.grad.empty()) continue;
            for (size_t j = 0; j < p.data.size(); ++j) {
                const double g = p.grad[j];
                m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
                v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
                const double m_hat = m_[i][j] / bc1;
                const double v_hat = v_[i][j] / bc2;
                p.data[j] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
            }
        }
    }

    void zero_grads() {
        for (auto& p : params_) p->zero_grad();
    }

private:
    std::vector<ad::TensorPtr> params_;
    double beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

} // namespace framecast::train
