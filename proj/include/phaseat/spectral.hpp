#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "phaseat/dataset.hpp"
#include "phaseat/tensor.hpp"

namespace phaseat {

struct FilterConfig {
    double variance = 3.0;
    std::size_t max_points = 2048;
    std::uint64_t seed = 0;  // subsample choice

    void validate() const;
};

/// low_j = sum_m v_m G(x_j - x_m) / sum_m G(x_j - x_m), G(u) = exp(-|u|^2 / (2 variance)).
Tensor gaussian_low_pass(const Tensor& points, const Tensor& values, const FilterConfig& cfg);

struct SpectrumReport {
    std::optional<double> e_low;   // nullopt when the low-part denominator is zero
    std::optional<double> e_high;  // likewise for the high part
    std::vector<std::size_t> indices;  // rows of the dataset that were analysed
    Tensor label_low, label_high, output_low, output_high;
};

/// Maps one input row to the value compared with the labels (softmax
/// probabilities for classification, raw outputs for regression).
using OutputFunction = std::function<std::vector<double>(std::span<const double> x)>;

/// Relative low/high-frequency errors between labels and outputs. Uses
/// one-hot labels unless the dataset carries regression targets and
/// `use_targets` is set.
SpectrumReport frequency_errors(const OutputFunction& model, const Dataset& data,
                                const FilterConfig& cfg, bool use_targets = false);

/// Reusable form: the kernel and the label split are computed once.
class SpectralAnalyzer {
public:
    SpectralAnalyzer(const Tensor& points, const Tensor& labels, const FilterConfig& cfg);
    SpectralAnalyzer(const Dataset& data, const FilterConfig& cfg, bool use_targets = false);

    /// `outputs` has one row per analysed point (same order as indices()).
    SpectrumReport analyze(const Tensor& outputs) const;
    SpectrumReport analyze(const OutputFunction& model) const;

    const std::vector<std::size_t>& indices() const { return indices_; }
    const Tensor& points() const { return points_; }

private:
    Tensor low_pass(const Tensor& values) const;

    std::vector<std::size_t> indices_;
    Tensor points_;
    Tensor labels_;
    std::vector<double> weights_;  // row-normalised kernel, n x n
    Tensor label_low_, label_high_;
};

/// Analysed row indices: all rows when n <= max_points, otherwise a seeded
/// sorted sample of max_points rows.
std::vector<std::size_t> spectral_subsample(std::size_t n, const FilterConfig& cfg);

}  // namespace phaseat
