#include "phaseat/metrics.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "phaseat/error.hpp"
#include "phaseat/format.hpp"

namespace phaseat {

namespace {

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

MetricsRow to_row(const EpochMetrics& m) {
    return {m.epoch, m.split, m.clean_accuracy, m.robust_accuracy, m.attack_name, m.e_low, m.e_high, m.loss};
}

std::string metrics_csv_header() { return "epoch,split,clean_acc,robust_acc,attack_name,e_low,e_high,loss"; }

std::string metrics_csv_line(const MetricsRow& r) {
    std::string s = std::to_string(r.epoch);
    s += ',' + r.split;
    s += ',' + format_double(r.clean_acc);
    s += ',' + format_double(r.robust_acc);
    s += ',' + r.attack_name;
    s += ',' + optional_field(r.e_low);
    s += ',' + optional_field(r.e_high);
    s += ',' + format_double(r.loss);
    return s;
}

MetricsRow parse_metrics_line(const std::string& line) {
    const auto f = split_fields(line);
    if (f.size() != 8) throw FormatError("metrics row needs 8 fields: '" + line + "'");
    MetricsRow r;
    auto res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.epoch);
    if (res.ec != std::errc() || res.ptr != f[0].data() + f[0].size()) {
        throw FormatError("bad epoch field '" + f[0] + "'");
    }
    r.split = f[1];
    r.clean_acc = parse_double(f[2]);
    r.robust_acc = parse_double(f[3]);
    r.attack_name = f[4];
    if (!f[5].empty()) r.e_low = parse_double(f[5]);
    if (!f[6].empty()) r.e_high = parse_double(f[6]);
    r.loss = parse_double(f[7]);
    return r;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot read metrics file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != metrics_csv_header()) {
        throw FormatError("metrics file has an unexpected header");
    }
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty()) rows.push_back(parse_metrics_line(line));
    }
    return rows;
}

MetricsWriter::MetricsWriter(std::filesystem::path path) : path_(std::move(path)) {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw Error("cannot create metrics file '" + path_.string() + "'");
    out << metrics_csv_header() << '\n';
}

void MetricsWriter::append(const MetricsRow& row) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error("cannot append to '" + path_.string() + "'");
    out << metrics_csv_line(row) << '\n';
}

}  // namespace phaseat
