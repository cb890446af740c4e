#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phaseat {

/// Dense row-major array of doubles with an explicit shape.
///
/// Construction through the checked factories rejects NaN/Inf and shape
/// mismatches; element access is unchecked.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    /// Extent of the leading dimension (row count for matrices).
    std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
    /// Product of all trailing extents.
    std::size_t row_size() const;

    std::span<const double> row(std::size_t i) const;
    std::span<double> row(std::size_t i);

    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    operator std::span<const double>() const { return data_; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Throws NumericError when any entry is NaN or infinite.
void require_finite(std::span<const double> values, const char* what);

}  // namespace phaseat
