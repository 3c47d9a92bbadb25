#include "pats/tensor.hpp"

#include "pats/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace pats {

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += "x";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values))
{
    if (shape_size(shape_) != values_.size()) {
        throw DimensionError("tensor shape " + shape_to_string(shape_) + " does not match " +
                             std::to_string(values_.size()) + " values");
    }
}

Tensor Tensor::filled(Shape shape, double value)
{
    Tensor t(std::move(shape));
    std::fill(t.values_.begin(), t.values_.end(), value);
    return t;
}

Tensor Tensor::vector(std::vector<double> values)
{
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
{
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const
{
    if (rank() != 2) {
        throw DimensionError("expected a matrix, got shape " + shape_to_string(shape_));
    }
    return shape_[0];
}

std::size_t Tensor::cols() const
{
    if (rank() != 2) {
        throw DimensionError("expected a matrix, got shape " + shape_to_string(shape_));
    }
    return shape_[1];
}

double Tensor::item() const
{
    if (values_.size() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_to_string(shape_));
    }
    return values_[0];
}

std::span<double> Tensor::grad()
{
    if (!grad_) {
        throw StateError("tensor has no gradient");
    }
    return *grad_;
}

std::span<const double> Tensor::grad() const
{
    if (!grad_) {
        throw StateError("tensor has no gradient");
    }
    return *grad_;
}

void Tensor::zero_grad()
{
    if (!grad_) {
        grad_.emplace(values_.size(), 0.0);
    } else {
        std::fill(grad_->begin(), grad_->end(), 0.0);
    }
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

} // namespace pats
