#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "framecast/ad/tensor.hpp"

namespace framecast::model {

/// Named parameter registry: trainable weights plus batch-norm running stats.
/// Names are unique and shapes immutable after creation; map ordering gives
/// every consumer (init, optimizer, checkpoints) one deterministic iteration
/// order.
class ParameterStore {
public:
    ad::TensorPtr create(const std::string& name, ad::Shape shape, bool trainable) {
        if (entries_.count(name))
            throw UsageError("parameter store: duplicate name '" + name + "'");
        auto tensor = ad::make_tensor(std::move(shape), trainable);
        entries_.emplace(name, tensor);
        return tensor;
    }

    void mark_penalized(const std::string& name) {
        if (!entries_.count(name))
            throw UsageError("parameter store: cannot penalize unknown '" + name + "'");
        penalized_.insert(name);
    }

    const ad::TensorPtr& at(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end())
            throw UsageError("parameter store: unknown parameter '" + name + "'");
        return it->second;
    }

    bool contains(const std::string& name) const { return entries_.count(name) > 0; }
    const std::map<std::string, ad::TensorPtr>& entries() const { return entries_; }

    std::vector<ad::TensorPtr> trainable_tensors() const {
        std::vector<ad::TensorPtr> out;
        for (const auto& [name, t] : entries_)
            if (t->trainable) out.push_back(t);
        return out;
    }

    std::vector<std::pair<std::string, ad::TensorPtr>> trainable_named() const {
        std::vector<std::pair<std::string, ad::TensorPtr>> out;
        for (const auto& [name, t] : entries_)
            if (t->trainable) out.emplace_back(name, t);
        return out;
    }

    std::vector<ad::TensorPtr> penalized_weights() const {
        std::vector<ad::TensorPtr> out;
        for (const auto& name : penalized_) out.push_back(at(name));
        return out;
    }

    int64_t trainable_count(const std::string& prefix = "") const {
        int64_t count = 0;
        for (const auto& [name, t] : entries_)
            if (t->trainable && name.rfind(prefix, 0) == 0) count += t->numel();
        return count;
    }

private:
    std::map<std::string, ad::TensorPtr> entries_;
    std::set<std::string> penalized_;
};

} // namespace framecast::model
