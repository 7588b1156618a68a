#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "framecast/ad/ops.hpp"

namespace framecast::ad {

struct GradCheckOptions {
    double step = 1e-5;
    // Relative error uses |a-b| / max(floor, |a|+|b|); the floor keeps
    // finite-difference noise on true-zero gradients from registering.
    double denom_floor = 1e-6;
    // Optional exclusion of nondifferentiable probe points, e.g. relu kinks.
    std::function<bool(const std::string& name, size_t index, double value)> exclude;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    size_t checked = 0;
    std::vector<size_t> excluded;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;

    bool passes(double tol) const { return max_rel_err <= tol; }
};

/// Compares tape gradients against central finite differences
/// (f(x+h) - f(x-h)) / 2h per parameter entry. `f` must rebuild the scalar
/// loss on the given tape and be a pure function of the parameter values.
inline GradCheckReport grad_check(
    const std::function<TensorPtr(Tape&)>& f,
    const std::vector<std::pair<std::string, TensorPtr>>& params,
    const GradCheckOptions& opt = {}) {
    if (opt.step <= 0) throw UsageError("grad_check: step must be > 0");

    Tape tape;
    auto loss = f(tape);
    if (loss->numel() != 1) throw UsageError("grad_check: f must be scalar-valued");
    for (auto& [name, p] : params) p->zero_grad();
    backward(loss, tape);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& [name, p] : params) {
        p->ensure_grad();
        analytic.push_back(p->grad);
    }

    auto eval = [&f]() {
        Tape t;
        return f(t)->data[0];
    };

    GradCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        const auto& [name, p] = params[pi];
        GradCheckEntry entry;
        entry.name = name;
        for (size_t i = 0; i < p->data.size(); ++i) {
            if (opt.exclude && opt.exclude(name, i, p->data[i])) {
                entry.excluded.push_back(i);
                continue;
            }
            const double saved = p->data[i];
            p->data[i] = saved + opt.step;
            const double up = eval();
            p->data[i] = saved - opt.step;
            const double down = eval();
            p->data[i] = saved;
            const double numeric = (up - down) / (2.0 * opt.step);
            const double a = analytic[pi][i];
            const double denom = std::max(opt.denom_floor, std::abs(a) + std::abs(numeric));
            entry.max_rel_err = std::max(entry.max_rel_err, std::abs(a - numeric) / denom);
            ++entry.checked;
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace framecast::ad
