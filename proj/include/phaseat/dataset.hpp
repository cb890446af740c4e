#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "phaseat/tensor.hpp"

namespace phaseat {

/// Box constraint on valid inputs; perturbed inputs are clamped into it.
struct InputRange {
    double lo = 0.0;
    double hi = 1.0;

    double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
    friend bool operator==(const InputRange&, const InputRange&) = default;
};

/// Labelled samples. `targets` holds raw regression values when present
/// (one row per sample); classification always uses `labels`.
struct Dataset {
    Tensor inputs;  // N x d
    std::vector<std::size_t> labels;
    Tensor targets;  // N x t, or empty
    std::size_t num_classes = 2;
    InputRange range;

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.row_size(); }
    std::span<const double> input(std::size_t i) const { return inputs.row(i); }

    Dataset subset(std::span<const std::size_t> indices) const;
    /// One-hot label rows (N x num_classes).
    Tensor one_hot() const;
    void validate() const;
};

enum class DatasetKind { sine_mix, rings, image_binary };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::rings;
    std::size_t n = 1000;
    std::size_t dim = 2;
    double noise = 0.0;
    std::uint64_t seed = 0;
    std::filesystem::path path;               // image-binary only
    std::vector<double> frequencies{1, 3, 5};  // sine-mix
    std::vector<double> direction;            // sine-mix; empty = first axis
    std::size_t height = 32, width = 32, channels = 3;
    std::size_t num_classes = 10;  // image-binary

    void validate() const;
};

/// Sine-mix value sum_h sin(2 pi f_h (x . u)).
double sine_mix_value(std::span<const double> x, std::span<const double> direction,
                      std::span<const double> frequencies);

Dataset gen_dataset(const DatasetSpec& spec);

/// Parses label-first records of height*width*channels bytes, rescaled to [0, 1].
Dataset read_image_binary(std::span<const unsigned char> bytes, std::size_t height, std::size_t width,
                          std::size_t channels, std::size_t num_classes);
Dataset read_image_binary_file(const std::filesystem::path& path, std::size_t height,
                               std::size_t width, std::size_t channels, std::size_t num_classes);

/// CSV with columns label,target...,x0..x{d-1}.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace phaseat
