#pragma once

#include "muygps/kernels.hpp"

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace muygps {

enum class OptimizerMethod {
    quasi_newton,  // projected BFGS on forward finite-difference gradients
    golden,        // golden-section search, single free parameter only
};

OptimizerMethod parse_optimizer_method(std::string_view name);
std::string_view to_string(OptimizerMethod method);

struct OptimizerOptions {
    OptimizerMethod method = OptimizerMethod::quasi_newton;
    int max_iterations = 100;
    double rel_tol = 1e-8;   // stop on relative objective change below this
    double fd_step = 1e-6;   // relative finite-difference step
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    std::vector<double> trace;  // objective after each accepted iterate, starting with x0
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Minimizes `f` over the box `bounds`. The start point is clamped into the
/// box. A non-finite objective value aborts with NumericalError.
MinimizeResult minimize_bounded(const Objective& f, std::vector<double> x0, std::span<const Bounds> bounds,
                                const OptimizerOptions& options = {});

}  // namespace muygps
