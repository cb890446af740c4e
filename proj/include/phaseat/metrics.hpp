#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phaseat/trainer.hpp"

namespace phaseat {

/// One line of metrics.csv.
struct MetricsRow {
    std::size_t epoch = 0;
    std::string split;
    double clean_acc = 0.0;
    double robust_acc = 0.0;
    std::string attack_name;
    std::optional<double> e_low;  // empty field when undefined
    std::optional<double> e_high;
    double loss = 0.0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

MetricsRow to_row(const EpochMetrics& m);

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);
/// Inverse of metrics_csv_line; FormatError on malformed input.
MetricsRow parse_metrics_line(const std::string& line);

/// Reads a whole metrics.csv, checking the header.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Appends rows to a metrics file, writing the header on creation.
class MetricsWriter {
public:
    explicit MetricsWriter(std::filesystem::path path);
    void append(const MetricsRow& row);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace phaseat
