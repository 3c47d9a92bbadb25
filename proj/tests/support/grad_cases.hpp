#pragma once

// Randomized gradient-check cases covering every differentiable op and both toy models.

#include "pats/model.hpp"
#include "pats/rng.hpp"
#include "pats/task.hpp"

#include "support/gradcheck.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pats::testing {

struct GradCase {
    std::string name;
    LossBuilder build;
    std::vector<Tensor> inputs;
};

inline Tensor random_tensor(Shape shape, Draws& draws, double scale = 1.0)
{
    Tensor t(std::move(shape));
    for (auto& v : t.values()) {
        v = scale * draws.next_normal();
    }
    return t;
}

// Keeps relu inputs away from the kink so central differences never straddle it.
inline Tensor away_from_zero(Tensor t)
{
    for (auto& v : t.values()) {
        if (std::abs(v) < 0.05) {
            v = v < 0 ? -0.05 - std::abs(v) : 0.05 + v;
        }
    }
    return t;
}

inline std::vector<GradCase> op_cases(std::uint64_t seed)
{
    Draws draws(RngStream(seed).substream("op-grad", 0, Purpose::data));
    const Tensor a = random_tensor({3, 4}, draws);
    const Tensor b = random_tensor({3, 4}, draws);
    const Tensor w = random_tensor({4, 2}, draws);
    const Tensor row = random_tensor({4}, draws);
    const Tensor weights = random_tensor({3, 2}, draws);
    const Tensor s = random_tensor({}, draws);
    const Tensor r = away_from_zero(random_tensor({3, 4}, draws));
    const Tensor at = Tensor::matrix(4, 3, std::vector<double>(a.values().begin(), a.values().end()));
    const std::vector<int> labels{static_cast<int>(draws.next_below(2)), static_cast<int>(draws.next_below(2)),
                                  static_cast<int>(draws.next_below(2))};
    const std::vector<int> index{2, 0, 2, 1};

    using Inputs = std::vector<Var>;
    auto weighted = [weights](Tape& tape, Var out) { return sum(mul(out, tape.constant(weights))); };
    auto against = [b](Tape& tape, Var out) { return sum(mul(out, tape.constant(b))); };
    return {
        {"matmul", [=](Tape& t, const Inputs& v) { return weighted(t, matmul(v[0], v[1])); }, {a, w}},
        {"add", [](Tape&, const Inputs& v) { return sum(mul(add(v[0], v[1]), v[1])); }, {a, b}},
        {"sub", [](Tape&, const Inputs& v) { return sum(mul(sub(v[0], v[1]), v[0])); }, {a, b}},
        {"mul", [](Tape&, const Inputs& v) { return sum(mul(v[0], v[1])); }, {a, b}},
        {"scalar-broadcast", [](Tape&, const Inputs& v) { return sum(tanh(mul(v[0], v[1]))); }, {a, s}},
        {"scale", [](Tape&, const Inputs& v) { return sum(tanh(scale(v[0], -2.5))); }, {a}},
        {"tanh", [](Tape&, const Inputs& v) { return sum(mul(tanh(v[0]), v[0])); }, {a}},
        {"relu", [](Tape&, const Inputs& v) { return sum(mul(relu(v[0]), v[0])); }, {r}},
        {"elementwise", [](Tape&, const Inputs& v) {
             const Var pair[] = {v[0], v[1]};
             const Var prod[] = {elementwise(Elementwise::add, pair), v[1]};
             const Var one[] = {elementwise(Elementwise::mul, prod)};
             return sum(elementwise(Elementwise::tanh, one));
         }, {a, b}},
        {"mean", [](Tape&, const Inputs& v) { return mean(mul(v[0], v[0])); }, {a}},
        {"add_rowwise", [](Tape&, const Inputs& v) { return sum(tanh(add_rowwise(v[0], v[1]))); }, {a, row}},
        {"mul_rowwise", [](Tape&, const Inputs& v) { return sum(tanh(mul_rowwise(v[0], v[1]))); }, {a, row}},
        {"transpose", [=](Tape& t, const Inputs& v) { return weighted(t, matmul(transpose(v[0]), v[1])); }, {at, w}},
        {"softmax_rows", [=](Tape& t, const Inputs& v) { return against(t, softmax_rows(v[0])); }, {a}},
        {"layer_norm_rows", [=](Tape& t, const Inputs& v) { return against(t, layer_norm_rows(v[0])); }, {a}},
        {"gather_rows", [=](Tape&, const Inputs& v) { return sum(tanh(gather_rows(v[0], index))); }, {a}},
        {"slice_rows", [](Tape&, const Inputs& v) { return sum(tanh(slice_rows(v[0], 1, 2))); }, {a}},
        {"slice_cols", [](Tape&, const Inputs& v) { return sum(tanh(slice_cols(v[0], 1, 2))); }, {a}},
        {"concat_rows", [](Tape&, const Inputs& v) {
             const Var parts[] = {v[0], v[1]};
             return sum(tanh(concat_rows(parts)));
         }, {a, b}},
        {"concat_cols", [](Tape&, const Inputs& v) {
             const Var parts[] = {v[1], v[0]};
             return sum(tanh(concat_cols(parts)));
         }, {a, b}},
        {"softmax_cross_entropy",
         [=](Tape&, const Inputs& v) { return softmax_cross_entropy(matmul(v[0], v[1]), labels); }, {a, w}},
    };
}

/// Gradient check of the model's cross-entropy loss with respect to every parameter group.
/// The model's own forward/backward supplies the analytic side.
inline GradCheck model_gradcheck(const Model& model, const Batch& batch)
{
    std::vector<Tensor> inputs;
    for (const auto& g : model.groups()) {
        inputs.push_back(g.weights);
    }
    auto build = [&model, &batch](Tape& tape, const std::vector<Var>& vars) {
        Model scratch = model;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            scratch.groups()[k].weights = vars[k].value();
        }
        Tape inner;
        const Var loss = softmax_cross_entropy(scratch.forward(inner, batch), batch.labels);
        inner.backward(loss);
        // Re-expose the inner loss on the outer tape with the model's gradients as its local rule.
        std::vector<std::size_t> ids;
        std::vector<std::vector<double>> grads;
        for (std::size_t k = 0; k < vars.size(); ++k) {
            ids.push_back(vars[k].id());
            const auto g = scratch.groups()[k].weights.grad();
            grads.emplace_back(g.begin(), g.end());
        }
        return tape.record(loss.value(), ids, [ids, grads](Tape& t, std::size_t self) {
            const double up = t.grad_buffer(self)[0];
            for (std::size_t k = 0; k < ids.size(); ++k) {
                auto buf = t.grad_buffer(ids[k]);
                for (std::size_t j = 0; j < buf.size(); ++j) {
                    buf[j] += up * grads[k][j];
                }
            }
        });
    };
    return check_gradients(build, inputs);
}

inline ModelSpec small_transformer_spec()
{
    ModelSpec spec;
    spec.kind = ModelKind::tiny_transformer;
    spec.vocab = 12;
    spec.seq_len = 5;
    spec.embed_dim = 8;
    spec.heads = 2;
    spec.ffn_dim = 12;
    spec.num_classes = 3;
    return spec;
}

/// Gradient checks of both toy models at a seed-dependent point, LayerNorm
/// parameters nudged off their initial values.
inline std::vector<std::pair<std::string, GradCheck>> model_cases(std::uint64_t seed)
{
    std::vector<std::pair<std::string, GradCheck>> out;
    {
        ModelSpec spec;
        spec.layer_sizes = {4, 6, 5, 2};
        TaskSpec task;
        task.input_dim = 4;
        task.num_classes = 2;
        task.n_train = 6;
        task.n_dev = 2;
        task.seed = seed;
        out.emplace_back("mlp", model_gradcheck(build_model(spec, seed), generate_task(task).source.train.all()));
    }
    {
        const ModelSpec spec = small_transformer_spec();
        Model model = build_model(spec, seed);
        Draws draws(RngStream(seed).substream("nudge", 0, Purpose::data));
        for (auto& g : model.groups()) {
            for (auto& v : g.weights.values()) {
                v += 0.05 * draws.next_normal();
            }
        }
        TaskSpec task;
        task.generator = Generator::token_pattern;
        task.vocab = spec.vocab;
        task.seq_len = spec.seq_len;
        task.num_classes = spec.num_classes;
        task.n_train = 4;
        task.n_dev = 2;
        task.seed = seed;
        out.emplace_back("tiny_transformer", model_gradcheck(model, generate_task(task).source.train.all()));
    }
    return out;
}

} // namespace pats::testing
