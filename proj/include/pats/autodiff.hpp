#pragma once

#include "pats/tensor.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pats {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while its tape lives.
class Var {
public:
    Var() = default;

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode recording of a single forward pass.
///
/// Nodes are appended in evaluation order, so every node's inputs precede it.
/// backward() walks the nodes in exact reverse order once; a second call without
/// a fresh tape is a StateError.
class Tape {
public:
    /// Local backward rule. Receives the tape and the id of the node being visited;
    /// reads the node's output gradient and accumulates into its inputs' gradients.
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf that never receives a gradient (data, masks).
    Var constant(Tensor value);
    /// Leaf whose gradient is kept on the tape and readable through grad().
    Var variable(Tensor value);
    /// Leaf bound to an external tensor; backward() accumulates into bound.grad().
    /// The bound tensor must outlive the backward pass.
    Var parameter(Tensor& bound);

    /// Appends an operation node. Inputs must already be on this tape.
    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    /// Gradient buffer of a node during or after backward(); empty for constants.
    std::span<double> grad_buffer(std::size_t id) { return nodes_.at(id).grad; }
    std::span<const double> grad(Var v) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    bool backward_done() const noexcept { return backward_done_; }

    /// Seeds d(loss)/d(loss) = 1 and propagates to every node requiring a gradient.
    void backward(Var loss);

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        std::vector<double> grad;
        Tensor* bound = nullptr;
        bool requires_grad = false;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

// Differentiable operations. All inputs must live on the same tape.

Var matmul(Var a, Var b);
/// Equal shapes, or one side a one-element tensor broadcast against the other.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var relu(Var a);
Var sum(Var a);
Var mean(Var a);

enum class Elementwise { add, mul, tanh, relu };
/// Dispatches to the unary (tanh, relu) or binary (add, mul) elementwise operation.
Var elementwise(Elementwise op, std::span<const Var> args);

/// x[m x n] + row[n] for every row.
Var add_rowwise(Var x, Var row);
/// x[m x n] * row[n] for every row.
Var mul_rowwise(Var x, Var row);
Var transpose(Var a);
Var softmax_rows(Var a);
/// Normalizes each row to zero mean and unit variance (no affine part).
Var layer_norm_rows(Var x, double eps = 1e-5);
/// Row lookup: out[i] = table[indices[i]].
Var gather_rows(Var table, std::span<const int> indices);
Var slice_rows(Var x, std::size_t start, std::size_t count);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// Mean negative log-likelihood of integer labels under row-wise softmax of logits[b x c].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

} // namespace pats
