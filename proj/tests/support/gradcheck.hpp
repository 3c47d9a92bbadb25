#pragma once

// Central finite-difference gradient oracle shared by the unit and acceptance tests.

#include "pats/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace pats::testing {

using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheck {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
};

inline double evaluate(const LossBuilder& build, const std::vector<Tensor>& inputs)
{
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) {
        vars.push_back(tape.constant(t));
    }
    return build(tape, vars).value().item();
}

/// Compares backward() against (f(x+h) - f(x-h)) / 2h for every input coordinate.
/// Relative error uses max(|analytic|, |numeric|, floor) as denominator so
/// vanishing gradients are judged on an absolute scale.
inline GradCheck check_gradients(const LossBuilder& build, std::vector<Tensor> inputs, double h = 1e-5,
                                 double floor = 1e-6)
{
    Tape tape;
    std::vector<Var> vars;
    for (const auto& t : inputs) {
        vars.push_back(tape.variable(t));
    }
    tape.backward(build(tape, vars));

    GradCheck result;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto analytic = tape.grad(vars[k]);
        for (std::size_t j = 0; j < inputs[k].size(); ++j) {
            const double saved = inputs[k][j];
            inputs[k][j] = saved + h;
            const double up = evaluate(build, inputs);
            inputs[k][j] = saved - h;
            const double down = evaluate(build, inputs);
            inputs[k][j] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double abs_err = std::abs(analytic[j] - numeric);
            const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), floor});
            result.max_abs_error = std::max(result.max_abs_error, abs_err);
            result.max_rel_error = std::max(result.max_rel_error, abs_err / denom);
            ++result.checked;
        }
    }
    return result;
}

} // namespace pats::testing
