#include "dds/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dds {

namespace {

struct Evaluation {
    Real value;
    std::uint64_t kinks;
};

Evaluation evaluate(const ScalarBuilder& builder, const std::vector<Tensor>& inputs) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const auto& t : inputs) vars.push_back(tape.leaf(t, false));
    Var out = builder(tape, vars);
    return {out.value().item(), tape.kink_signature()};
}

}  // namespace

GradCheckReport grad_check(const ScalarBuilder& builder,
                           const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
    if (!(options.eps > 0 && options.eps <= 1e-2)) {
        throw std::invalid_argument("grad_check eps must lie in (0, 1e-2]");
    }
    std::vector<Tensor> analytic;
    std::uint64_t base_kinks = 0;
    {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& t : inputs) vars.push_back(tape.leaf(t, true));
        Var out = builder(tape, vars);
        base_kinks = tape.kink_signature();
        tape.backward(out);
        for (const auto& v : vars) {
            const Tensor* g = tape.grad(v);
            analytic.push_back(g ? *g : Tensor::zeros(v.shape()));
        }
    }

    GradCheckReport report;
    std::vector<Tensor> probe = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const std::size_t n = inputs[k].size();
        std::size_t stride = 1;
        if (options.max_coords_per_input > 0 && n > options.max_coords_per_input) {
            stride = (n + options.max_coords_per_input - 1) / options.max_coords_per_input;
        }
        for (std::size_t i = 0; i < n; i += stride) {
            const Real x0 = inputs[k][i];
            auto at = [&](Real offset) {
                probe[k][i] = x0 + offset;
                return evaluate(builder, probe);
            };
            const Real h = options.eps;
            std::vector<Evaluation> evals = {at(h), at(-h)};
            if (options.five_point) {
                evals.push_back(at(2 * h));
                evals.push_back(at(-2 * h));
            }
            probe[k][i] = x0;
            const bool kinked = std::any_of(evals.begin(), evals.end(), [&](const Evaluation& e) {
                return e.kinks != base_kinks;
            });
            if (kinked) {
                ++report.skipped;
                continue;
            }
            const double numeric =
                options.five_point
                    ? (8 * (evals[0].value - evals[1].value) - (evals[2].value - evals[3].value)) /
                          (12 * h)
                    : (evals[0].value - evals[1].value) / (2 * h);
            const double a = analytic[k][i];
            const double denom =
                std::max({std::abs(a), std::abs(numeric), options.floor});
            report.max_rel_error =
                std::max(report.max_rel_error, std::abs(a - numeric) / denom);
            ++report.compared;
        }
    }
    return report;
}

}  // namespace dds
