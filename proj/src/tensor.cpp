#include "phaseat/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "phaseat/error.hpp"

namespace phaseat {

namespace {

std::size_t extent_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (extent_product(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape product " +
                         std::to_string(extent_product(shape_)));
    }
    require_finite(data_, "tensor");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    const std::size_t n = extent_product(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::row_size() const {
    if (shape_.size() <= 1) return shape_.empty() ? 0 : 1;
    return std::accumulate(shape_.begin() + 1, shape_.end(), std::size_t{1},
                           std::multiplies<>());
}

std::span<const double> Tensor::row(std::size_t i) const {
    const std::size_t n = row_size();
    return std::span<const double>(data_).subspan(i * n, n);
}

std::span<double> Tensor::row(std::size_t i) {
    const std::size_t n = row_size();
    return std::span<double>(data_).subspan(i * n, n);
}

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(what) + " contains a non-finite value");
        }
    }
}

}  // namespace phaseat
