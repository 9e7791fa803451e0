#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dds/autodiff.hpp"

namespace dds {

/// Builds a scalar on a fresh tape from leaf vars holding `inputs`.
using ScalarBuilder = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
    double max_rel_error = 0;
    std::size_t compared = 0;
    /// Coordinates whose +/-eps evaluations switched a ReLU piece.
    std::size_t skipped = 0;
};

struct GradCheckOptions {
    double eps = 1e-3;
    /// Five-point stencil (-f(x+2e) + 8f(x+e) - 8f(x-e) + f(x-2e)) / 12e,
    /// truncation error O(eps^4). false uses the two-point central difference.
    bool five_point = true;
    /// Denominator floor for the relative error |a-n| / max(|a|, |n|, floor).
    double floor = 1e-7;
    /// Upper bound on coordinates probed per input (0 = all). Probed
    /// coordinates are evenly strided.
    std::size_t max_coords_per_input = 0;
};

/// Compares reverse-mode gradients against central finite differences for
/// every coordinate of every input.
/// Throws std::invalid_argument unless eps is in (0, 1e-2].
GradCheckReport grad_check(const ScalarBuilder& builder,
                           const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace dds
