#include "pats/autodiff.hpp"

#include "pats/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pats {

const Tensor& Var::value() const
{
    return tape_->value(id_);
}

Var Tape::push(Node node)
{
    if (backward_done_) {
        throw StateError("tape already consumed by backward(); record a new forward pass");
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value)
{
    Node node;
    node.value = std::move(value);
    return push(std::move(node));
}

Var Tape::variable(Tensor value)
{
    Node node;
    node.value = std::move(value);
    node.requires_grad = true;
    return push(std::move(node));
}

Var Tape::parameter(Tensor& bound)
{
    Node node;
    node.value = Tensor(bound.shape(), std::vector<double>(bound.values().begin(), bound.values().end()));
    node.bound = &bound;
    node.requires_grad = true;
    return push(std::move(node));
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward)
{
    Node node;
    node.value = std::move(value);
    for (std::size_t in : inputs) {
        if (in >= nodes_.size()) {
            throw StateError("operation input " + std::to_string(in) + " is not on the tape");
        }
        node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
    }
    node.inputs = std::move(inputs);
    if (node.requires_grad) {
        node.backward = std::move(backward);
    }
    return push(std::move(node));
}

std::span<const double> Tape::grad(Var v) const
{
    if (!backward_done_) {
        throw StateError("gradients requested before backward()");
    }
    return nodes_.at(v.id()).grad;
}

void Tape::backward(Var loss)
{
    if (backward_done_) {
        throw StateError("backward() called twice on the same forward pass");
    }
    if (loss.tape_ != this) {
        throw StateError("loss does not belong to this tape");
    }
    Node& root = nodes_.at(loss.id());
    if (root.value.size() != 1) {
        throw DimensionError("backward() needs a scalar loss, got shape " + shape_to_string(root.value.shape()));
    }
    for (Node& node : nodes_) {
        if (node.requires_grad) {
            node.grad.assign(node.value.size(), 0.0);
        }
    }
    backward_done_ = true;
    if (!root.requires_grad) {
        return;
    }
    root.grad[0] = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (node.requires_grad && node.backward) {
            node.backward(*this, id);
        }
    }
    for (Node& node : nodes_) {
        if (node.bound == nullptr) {
            continue;
        }
        if (!node.bound->has_grad()) {
            node.bound->zero_grad();
        }
        auto g = node.bound->grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += node.grad[i];
        }
    }
}

namespace {

void check_same_tape(Var a, Var b)
{
    if (&a.tape() != &b.tape()) {
        throw StateError("operands recorded on different tapes");
    }
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b)
{
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a) + " and " +
                         shape_to_string(b));
}

void require_matrix(const char* op, const Tensor& t)
{
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got shape " + shape_to_string(t.shape()));
    }
}

enum class Broadcast { none, left_scalar, right_scalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b)
{
    if (a.shape() == b.shape()) {
        return Broadcast::none;
    }
    if (a.is_scalar()) {
        return Broadcast::left_scalar;
    }
    if (b.is_scalar()) {
        return Broadcast::right_scalar;
    }
    shape_mismatch(op, a.shape(), b.shape());
}

template <class Fn>
Var unary_map(Var a, Fn fn, Tape::BackwardFn backward)
{
    const Tensor& x = a.value();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = fn(x[i]);
    }
    return a.tape().record(std::move(out), {a.id()}, std::move(backward));
}

} // namespace

Var matmul(Var a, Var b)
{
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    require_matrix("matmul", x);
    require_matrix("matmul", y);
    if (x.cols() != y.rows()) {
        shape_mismatch("matmul", x.shape(), y.shape());
    }
    const std::size_t m = x.rows();
    const std::size_t k = x.cols();
    const std::size_t n = y.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double xv = x[i * k + p];
            for (std::size_t j = 0; j < n; ++j) {
                out[i * n + j] += xv * y[p * n + j];
            }
        }
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        const Tensor& xa = tape.value(ia);
        const Tensor& xb = tape.value(ib);
        if (tape.requires_grad(ia)) {
            auto ga = tape.grad_buffer(ia);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += g[i * n + j] * xb[p * n + j];
                    }
                    ga[i * k + p] += acc;
                }
            }
        }
        if (tape.requires_grad(ib)) {
            auto gb = tape.grad_buffer(ib);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = xa[i * k + p];
                    for (std::size_t j = 0; j < n; ++j) {
                        gb[p * n + j] += av * g[i * n + j];
                    }
                }
            }
        }
    });
}

Var add(Var a, Var b)
{
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    const Broadcast kind = broadcast_kind("add", x, y);
    Tensor out(kind == Broadcast::left_scalar ? y.shape() : x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[kind == Broadcast::left_scalar ? 0 : i] + y[kind == Broadcast::right_scalar ? 0 : i];
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [ia, ib, kind](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        if (tape.requires_grad(ia)) {
            auto ga = tape.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[kind == Broadcast::left_scalar ? 0 : i] += g[i];
            }
        }
        if (tape.requires_grad(ib)) {
            auto gb = tape.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[kind == Broadcast::right_scalar ? 0 : i] += g[i];
            }
        }
    });
}

Var sub(Var a, Var b)
{
    return add(a, scale(b, -1.0));
}

Var mul(Var a, Var b)
{
    check_same_tape(a, b);
    const Tensor& x = a.value();
    const Tensor& y = b.value();
    const Broadcast kind = broadcast_kind("mul", x, y);
    Tensor out(kind == Broadcast::left_scalar ? y.shape() : x.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = x[kind == Broadcast::left_scalar ? 0 : i] * y[kind == Broadcast::right_scalar ? 0 : i];
    }
    const std::size_t ia = a.id();
    const std::size_t ib = b.id();
    return a.tape().record(std::move(out), {ia, ib}, [ia, ib, kind](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        const Tensor& xa = tape.value(ia);
        const Tensor& xb = tape.value(ib);
        const std::size_t ra = kind == Broadcast::left_scalar ? 0 : 1;
        const std::size_t rb = kind == Broadcast::right_scalar ? 0 : 1;
        if (tape.requires_grad(ia)) {
            auto ga = tape.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i * ra] += g[i] * xb[i * rb];
            }
        }
        if (tape.requires_grad(ib)) {
            auto gb = tape.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i * rb] += g[i] * xa[i * ra];
            }
        }
    });
}

Var scale(Var a, double factor)
{
    const std::size_t ia = a.id();
    return unary_map(
        a, [factor](double v) { return v * factor; },
        [ia, factor](Tape& tape, std::size_t self) {
            auto g = tape.grad_buffer(self);
            auto ga = tape.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * factor;
            }
        });
}

Var tanh(Var a)
{
    const std::size_t ia = a.id();
    return unary_map(
        a, [](double v) { return std::tanh(v); },
        [ia](Tape& tape, std::size_t self) {
            auto g = tape.grad_buffer(self);
            const Tensor& y = tape.value(self);
            auto ga = tape.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * (1.0 - y[i] * y[i]);
            }
        });
}

Var relu(Var a)
{
    const std::size_t ia = a.id();
    return unary_map(
        a, [](double v) { return v > 0.0 ? v : 0.0; },
        [ia](Tape& tape, std::size_t self) {
            auto g = tape.grad_buffer(self);
            const Tensor& x = tape.value(ia);
            auto ga = tape.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (x[i] > 0.0) {
                    ga[i] += g[i];
                }
            }
        });
}

Var sum(Var a)
{
    const Tensor& x = a.value();
    double total = 0.0;
    for (double v : x.values()) {
        total += v;
    }
    const std::size_t ia = a.id();
    return a.tape().record(Tensor::scalar(total), {ia}, [ia](Tape& tape, std::size_t self) {
        const double g = tape.grad_buffer(self)[0];
        for (double& v : tape.grad_buffer(ia)) {
            v += g;
        }
    });
}

Var mean(Var a)
{
    const std::size_t n = a.value().size();
    if (n == 0) {
        throw DimensionError("mean of an empty tensor");
    }
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var elementwise(Elementwise op, std::span<const Var> args)
{
    const std::size_t arity = (op == Elementwise::add || op == Elementwise::mul) ? 2 : 1;
    if (args.size() != arity) {
        throw InputError("elementwise: expected " + std::to_string(arity) + " operands, got " +
                         std::to_string(args.size()));
    }
    switch (op) {
    case Elementwise::add:
        return add(args[0], args[1]);
    case Elementwise::mul:
        return mul(args[0], args[1]);
    case Elementwise::tanh:
        return tanh(args[0]);
    case Elementwise::relu:
        return relu(args[0]);
    }
    throw InputError("elementwise: unknown operation");
}

namespace {

void check_row_operand(const char* op, const Tensor& x, const Tensor& row)
{
    require_matrix(op, x);
    if (row.rank() != 1 || row.size() != x.cols()) {
        shape_mismatch(op, x.shape(), row.shape());
    }
}

} // namespace

Var add_rowwise(Var x, Var row)
{
    check_same_tape(x, row);
    const Tensor& xv = x.value();
    const Tensor& rv = row.value();
    check_row_operand("add_rowwise", xv, rv);
    const std::size_t m = xv.rows();
    const std::size_t n = xv.cols();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = xv[i * n + j] + rv[j];
        }
    }
    const std::size_t ix = x.id();
    const std::size_t ir = row.id();
    return x.tape().record(std::move(out), {ix, ir}, [ix, ir, m, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        if (tape.requires_grad(ix)) {
            auto gx = tape.grad_buffer(ix);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i];
            }
        }
        if (tape.requires_grad(ir)) {
            auto gr = tape.grad_buffer(ir);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    gr[j] += g[i * n + j];
                }
            }
        }
    });
}

Var mul_rowwise(Var x, Var row)
{
    check_same_tape(x, row);
    const Tensor& xv = x.value();
    const Tensor& rv = row.value();
    check_row_operand("mul_rowwise", xv, rv);
    const std::size_t m = xv.rows();
    const std::size_t n = xv.cols();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = xv[i * n + j] * rv[j];
        }
    }
    const std::size_t ix = x.id();
    const std::size_t ir = row.id();
    return x.tape().record(std::move(out), {ix, ir}, [ix, ir, m, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        const Tensor& x0 = tape.value(ix);
        const Tensor& r0 = tape.value(ir);
        if (tape.requires_grad(ix)) {
            auto gx = tape.grad_buffer(ix);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    gx[i * n + j] += g[i * n + j] * r0[j];
                }
            }
        }
        if (tape.requires_grad(ir)) {
            auto gr = tape.grad_buffer(ir);
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    gr[j] += g[i * n + j] * x0[i * n + j];
                }
            }
        }
    });
}

Var transpose(Var a)
{
    const Tensor& x = a.value();
    require_matrix("transpose", x);
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out[j * m + i] = x[i * n + j];
        }
    }
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {ia}, [ia, m, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        auto ga = tape.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                ga[i * n + j] += g[j * m + i];
            }
        }
    });
}

Var softmax_rows(Var a)
{
    const Tensor& x = a.value();
    require_matrix("softmax_rows", x);
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    Tensor out(x.shape());
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = &x[i * n];
        const double peak = *std::max_element(row, row + n);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = std::exp(row[j] - peak);
            total += out[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] /= total;
        }
    }
    const std::size_t ia = a.id();
    return a.tape().record(std::move(out), {ia}, [ia, m, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        const Tensor& y = tape.value(self);
        auto ga = tape.grad_buffer(ia);
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                dot += g[i * n + j] * y[i * n + j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                ga[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
            }
        }
    });
}

Var layer_norm_rows(Var x, double eps)
{
    const Tensor& xv = x.value();
    require_matrix("layer_norm_rows", xv);
    const std::size_t m = xv.rows();
    const std::size_t n = xv.cols();
    Tensor out(xv.shape());
    std::vector<double> inv_std(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mu += xv[i * n + j];
        }
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = xv[i * n + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = (xv[i * n + j] - mu) * inv_std[i];
        }
    }
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), {ix},
                           [ix, m, n, inv_std = std::move(inv_std)](Tape& tape, std::size_t self) {
                               auto g = tape.grad_buffer(self);
                               const Tensor& y = tape.value(self);
                               auto gx = tape.grad_buffer(ix);
                               const double dn = static_cast<double>(n);
                               for (std::size_t i = 0; i < m; ++i) {
                                   double g_mean = 0.0;
                                   double gy_mean = 0.0;
                                   for (std::size_t j = 0; j < n; ++j) {
                                       g_mean += g[i * n + j];
                                       gy_mean += g[i * n + j] * y[i * n + j];
                                   }
                                   g_mean /= dn;
                                   gy_mean /= dn;
                                   for (std::size_t j = 0; j < n; ++j) {
                                       gx[i * n + j] +=
                                           inv_std[i] * (g[i * n + j] - g_mean - y[i * n + j] * gy_mean);
                                   }
                               }
                           });
}

Var gather_rows(Var table, std::span<const int> indices)
{
    const Tensor& t = table.value();
    require_matrix("gather_rows", t);
    const std::size_t rows = t.rows();
    const std::size_t n = t.cols();
    std::vector<int> idx(indices.begin(), indices.end());
    Tensor out({idx.size(), n});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) {
            throw InputError("gather_rows: index " + std::to_string(idx[i]) + " outside [0, " +
                             std::to_string(rows) + ")");
        }
        std::copy_n(&t[static_cast<std::size_t>(idx[i]) * n], n, &out[i * n]);
    }
    const std::size_t it = table.id();
    return table.tape().record(std::move(out), {it}, [it, n, idx = std::move(idx)](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        auto gt = tape.grad_buffer(it);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const std::size_t r = static_cast<std::size_t>(idx[i]);
            for (std::size_t j = 0; j < n; ++j) {
                gt[r * n + j] += g[i * n + j];
            }
        }
    });
}

Var slice_rows(Var x, std::size_t start, std::size_t count)
{
    const Tensor& xv = x.value();
    require_matrix("slice_rows", xv);
    if (start + count > xv.rows()) {
        throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                             ") outside shape " + shape_to_string(xv.shape()));
    }
    const std::size_t n = xv.cols();
    Tensor out({count, n}, std::vector<double>(xv.values().begin() + static_cast<std::ptrdiff_t>(start * n),
                                               xv.values().begin() + static_cast<std::ptrdiff_t>((start + count) * n)));
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, start, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        auto gx = tape.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[start * n + i] += g[i];
        }
    });
}

Var slice_cols(Var x, std::size_t start, std::size_t count)
{
    const Tensor& xv = x.value();
    require_matrix("slice_cols", xv);
    if (start + count > xv.cols()) {
        throw DimensionError("slice_cols: cols [" + std::to_string(start) + ", " + std::to_string(start + count) +
                             ") outside shape " + shape_to_string(xv.shape()));
    }
    const std::size_t m = xv.rows();
    const std::size_t n = xv.cols();
    Tensor out({m, count});
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(&xv[i * n + start], count, &out[i * count]);
    }
    const std::size_t ix = x.id();
    return x.tape().record(std::move(out), {ix}, [ix, start, count, m, n](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        auto gx = tape.grad_buffer(ix);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < count; ++j) {
                gx[i * n + start + j] += g[i * count + j];
            }
        }
    });
}

Var concat_rows(std::span<const Var> parts)
{
    if (parts.empty()) {
        throw DimensionError("concat_rows: no operands");
    }
    const std::size_t n = parts[0].value().cols();
    std::size_t total = 0;
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        check_same_tape(parts[0], p);
        if (p.value().cols() != n) {
            shape_mismatch("concat_rows", parts[0].shape(), p.shape());
        }
        total += p.value().rows();
        ids.push_back(p.id());
    }
    Tensor out({total, n});
    std::size_t offset = 0;
    for (const Var& p : parts) {
        std::copy(p.value().values().begin(), p.value().values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += p.value().size();
    }
    return parts[0].tape().record(std::move(out), ids, [ids](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            const std::size_t len = tape.value(id).size();
            if (tape.requires_grad(id)) {
                auto gp = tape.grad_buffer(id);
                for (std::size_t i = 0; i < len; ++i) {
                    gp[i] += g[offset + i];
                }
            }
            offset += len;
        }
    });
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty()) {
        throw DimensionError("concat_cols: no operands");
    }
    const std::size_t m = parts[0].value().rows();
    std::size_t total = 0;
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        check_same_tape(parts[0], p);
        if (p.value().rows() != m) {
            shape_mismatch("concat_cols", parts[0].shape(), p.shape());
        }
        total += p.value().cols();
        ids.push_back(p.id());
    }
    Tensor out({m, total});
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const std::size_t c = p.value().cols();
        for (std::size_t i = 0; i < m; ++i) {
            std::copy_n(&p.value()[i * c], c, &out[i * total + offset]);
        }
        offset += c;
    }
    return parts[0].tape().record(std::move(out), ids, [ids, m, total](Tape& tape, std::size_t self) {
        auto g = tape.grad_buffer(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
            const std::size_t c = tape.value(id).cols();
            if (tape.requires_grad(id)) {
                auto gp = tape.grad_buffer(id);
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        gp[i * c + j] += g[i * total + offset + j];
                    }
                }
            }
            offset += c;
        }
    });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels)
{
    const Tensor& z = logits.value();
    require_matrix("softmax_cross_entropy", z);
    const std::size_t b = z.rows();
    const std::size_t c = z.cols();
    if (b == 0) {
        throw InputError("softmax_cross_entropy: empty batch");
    }
    if (labels.size() != b) {
        throw InputError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(b) + " rows");
    }
    std::vector<int> y(labels.begin(), labels.end());
    std::vector<double> probs(b * c);
    double loss = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= c) {
            throw InputError("softmax_cross_entropy: label " + std::to_string(y[i]) + " outside [0, " +
                             std::to_string(c) + ")");
        }
        const double* row = &z[i * c];
        const double peak = *std::max_element(row, row + c);
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs[i * c + j] = std::exp(row[j] - peak);
            total += probs[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) {
            probs[i * c + j] /= total;
        }
        const std::size_t target = static_cast<std::size_t>(y[i]);
        loss -= row[target] - peak - std::log(total);
    }
    loss /= static_cast<double>(b);
    const std::size_t iz = logits.id();
    return logits.tape().record(
        Tensor::scalar(loss), {iz},
        [iz, b, c, y = std::move(y), probs = std::move(probs)](Tape& tape, std::size_t self) {
            const double g = tape.grad_buffer(self)[0] / static_cast<double>(b);
            auto gz = tape.grad_buffer(iz);
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    const double onehot = static_cast<std::size_t>(y[i]) == j ? 1.0 : 0.0;
                    gz[i * c + j] += g * (probs[i * c + j] - onehot);
                }
            }
        });
}

} // namespace pats
