#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "framecast/core.hpp"

namespace framecast::ad {

struct Shape {
    std::vector<int64_t> dims;

    Shape() = default;
    Shape(std::initializer_list<int64_t> d) : dims(d) { validate(); }
    explicit Shape(std::vector<int64_t> d) : dims(std::move(d)) { validate(); }

    int64_t numel() const {
        return std::accumulate(dims.begin(), dims.end(), int64_t{1},
                               std::multiplies<int64_t>());
    }
    size_t rank() const { return dims.size(); }
    int64_t operator[](size_t i) const { return dims[i]; }
    bool operator==(const Shape& other) const { return dims == other.dims; }

    std::string str() const {
        std::ostringstream os;
        os << '[';
        for (size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
        os << ']';
        return os.str();
    }

private:
    void validate() const {
        for (int64_t d : dims)
            if (d < 1) throw UsageError("shape extents must be >= 1, got " + str());
    }
};

/// Dense double-precision n-d array with an optional gradient buffer.
/// `trainable` marks optimizer-owned leaves; `needs_grad` additionally covers
/// tape-produced intermediates so backward skips pure inputs.
class Tensor {
public:
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;   // empty until backward touches this tensor
    bool trainable = false;
    bool needs_grad = false;

    explicit Tensor(Shape s, bool train = false)
        : shape(std::move(s)), data(static_cast<size_t>(shape.numel()), 0.0),
          trainable(train), needs_grad(train) {}
    Tensor(Shape s, std::vector<double> values, bool train = false)
        : shape(std::move(s)), data(std::move(values)), trainable(train), needs_grad(train) {
        if (static_cast<int64_t>(data.size()) != shape.numel())
            throw UsageError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape.str());
    }

    int64_t numel() const { return shape.numel(); }

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    }
    void release_grad() {
        std::vector<double>().swap(grad);
    }
};

using TensorPtr = std::shared_ptr<Tensor>;

inline TensorPtr make_tensor(Shape s, bool trainable = false) {
    return std::make_shared<Tensor>(std::move(s), trainable);
}
inline TensorPtr make_tensor(Shape s, std::vector<double> values, bool trainable = false) {
    return std::make_shared<Tensor>(std::move(s), std::move(values), trainable);
}
inline TensorPtr make_tensor(Shape s, std::initializer_list<double> values,
                             bool trainable = false) {
    return make_tensor(std::move(s), std::vector<double>(values), trainable);
}
inline TensorPtr full_like_value(Shape s, double v) {
    auto t = make_tensor(std::move(s));
    std::fill(t->data.begin(), t->data.end(), v);
    return t;
}

/// Record of one executed op: the produced tensor plus a closure that scatters
/// output.grad into the inputs' grads. Steps are appended in execution order,
/// so walking the list backwards is a reverse-topological sweep.
class Tape {
public:
    struct Step {
        TensorPtr output;
        std::function<void()> backward;
    };

    void record(TensorPtr output, std::function<void()> backward_fn) {
        output->needs_grad = true;
        steps_.push_back(Step{std::move(output), std::move(backward_fn)});
    }
    void clear() { steps_.clear(); }
    size_t size() const { return steps_.size(); }
    const std::vector<Step>& steps() const { return steps_; }

private:
    std::vector<Step> steps_;
};

/// Reverse-topological gradient accumulation. Seeds d(loss)/d(loss) = 1 and
/// runs every recorded step backwards. Grad buffers of non-trainable
/// intermediates are released once their producing step has run; trainable
/// leaves keep accumulating across repeated calls.
inline void backward(const TensorPtr& loss, Tape& tape) {
    if (!loss || loss->numel() != 1)
        throw UsageError("backward requires a scalar loss tensor");
    if (!loss->needs_grad)
        throw UsageError("backward requires a loss produced through the tape");
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    const auto& steps = tape.steps();
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
        if (!it->output->grad.empty()) it->backward();
        if (!it->output->trainable) it->output->release_grad();
    }
}

} // namespace framecast::ad
