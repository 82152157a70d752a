#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fognet/tensor.hpp"

namespace fognet {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;
    double h = 0.0;
    double tol = 0.0;
    bool pass = true;
};

/// Compares the reverse-mode gradient of a scalar-valued function against
/// central differences (f(p+h) - f(p-h)) / 2h for every entry of every listed
/// parameter. Relative error is |a-b| / max(|a|, |b|, 1e-8). The function is
/// re-evaluated from scratch on each probe, so the recorded tape never
/// outlives a single forward pass.
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double h = 1e-5, double tol = 1e-4);

} // namespace fognet
