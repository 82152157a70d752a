#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fognet {

struct ComponentCheck {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradSuiteReport {
    std::vector<ComponentCheck> components;
    double max_rel_err = 0.0;
    double tol = 0.0;
    double h = 0.0;
    bool pass = true;
};

/// Finite-difference verification of every loss-bearing path on tiny random
/// instances (T=3, d=4, B=2, C=3): selection, enhancement, alignment loss,
/// both InfoNCE directions, the frame encoder, and the composed total loss.
GradSuiteReport run_gradcheck_suite(std::uint64_t seed, double tol = 1e-4, double h = 1e-5);

} // namespace fognet
