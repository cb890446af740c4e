#include "phaseat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include "phaseat/error.hpp"
#include "phaseat/format.hpp"
#include "phaseat/rng.hpp"

namespace phaseat {

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    const std::size_t d = dim();
    std::vector<double> x;
    x.reserve(indices.size() * d);
    std::vector<std::size_t> y;
    y.reserve(indices.size());
    std::vector<double> t;
    const std::size_t tw = targets.empty() ? 0 : targets.row_size();
    for (std::size_t i : indices) {
        if (i >= size()) throw IndexError("subset index out of range");
        auto r = input(i);
        x.insert(x.end(), r.begin(), r.end());
        y.push_back(labels[i]);
        if (tw) {
            auto tr = targets.row(i);
            t.insert(t.end(), tr.begin(), tr.end());
        }
    }
    Dataset out;
    out.inputs = Tensor::matrix(indices.size(), d, std::move(x));
    out.labels = std::move(y);
    if (tw) out.targets = Tensor::matrix(indices.size(), tw, std::move(t));
    out.num_classes = num_classes;
    out.range = range;
    return out;
}

Tensor Dataset::one_hot() const {
    std::vector<double> v(size() * num_classes, 0.0);
    for (std::size_t i = 0; i < size(); ++i) v[i * num_classes + labels[i]] = 1.0;
    return Tensor::matrix(size(), num_classes, std::move(v));
}

void Dataset::validate() const {
    if (inputs.rank() != 2) throw ShapeError("dataset inputs must be N x d");
    if (labels.size() != size()) throw ShapeError("label count does not match sample count");
    if (num_classes < 2) throw ShapeError("classification needs at least two classes");
    for (std::size_t y : labels) {
        if (y >= num_classes) throw IndexError("label out of range");
    }
    if (!targets.empty() && targets.rows() != size()) throw ShapeError("target rows do not match samples");
    if (!(range.lo < range.hi)) throw ShapeError("input range is empty");
}

std::string to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::sine_mix: return "sine-mix";
        case DatasetKind::rings: return "rings";
        case DatasetKind::image_binary: return "image-binary";
    }
    return "rings";
}

DatasetKind dataset_kind_from_string(const std::string& name) {
    if (name == "sine-mix") return DatasetKind::sine_mix;
    if (name == "rings") return DatasetKind::rings;
    if (name == "image-binary") return DatasetKind::image_binary;
    throw ConfigError("unknown dataset kind '" + name + "'");
}

void DatasetSpec::validate() const {
    if (kind != DatasetKind::image_binary && n < 2) throw ConfigError("dataset needs n >= 2");
    if (noise < 0.0) throw ConfigError("noise must be non-negative");
    switch (kind) {
        case DatasetKind::sine_mix:
            if (dim == 0) throw ConfigError("sine-mix needs dim >= 1");
            if (frequencies.empty()) throw ConfigError("sine-mix needs at least one frequency");
            if (!direction.empty() && direction.size() != dim) {
                throw ConfigError("sine-mix direction length must equal dim");
            }
            break;
        case DatasetKind::rings:
            if (dim != 2) throw ConfigError("rings dataset is two-dimensional");
            break;
        case DatasetKind::image_binary:
            if (path.empty()) throw ConfigError("image-binary needs a file path");
            if (height == 0 || width == 0 || channels == 0) throw ConfigError("image extents must be positive");
            if (num_classes < 2 || num_classes > 256) throw ConfigError("image-binary num_classes must be in [2, 256]");
            break;
    }
}

double sine_mix_value(std::span<const double> x, std::span<const double> direction,
                      std::span<const double> frequencies) {
    double proj = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) proj += x[i] * direction[i];
    double g = 0.0;
    for (double f : frequencies) g += std::sin(2.0 * std::numbers::pi * f * proj);
    return g;
}

namespace {

Dataset gen_sine_mix(const DatasetSpec& spec) {
    std::vector<double> u = spec.direction;
    if (u.empty()) {
        u.assign(spec.dim, 0.0);
        u[0] = 1.0;
    }
    double nu = 0.0;
    for (double v : u) nu += v * v;
    nu = std::sqrt(nu);
    if (nu == 0.0) throw ConfigError("sine-mix direction must be nonzero");
    for (double& v : u) v /= nu;

    Rng rng(spec.seed);
    std::vector<double> x(spec.n * spec.dim);
    std::vector<double> t(spec.n);
    std::vector<std::size_t> y(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t k = 0; k < spec.dim; ++k) x[i * spec.dim + k] = rng.uniform(-1.0, 1.0);
        double g = sine_mix_value(std::span<const double>(x).subspan(i * spec.dim, spec.dim), u,
                                  spec.frequencies);
        if (spec.noise > 0.0) g += rng.normal(0.0, spec.noise);
        t[i] = g;
        y[i] = g > 0.0 ? 1 : 0;
    }
    Dataset d;
    d.inputs = Tensor::matrix(spec.n, spec.dim, std::move(x));
    d.targets = Tensor::matrix(spec.n, 1, std::move(t));
    d.labels = std::move(y);
    d.num_classes = 2;
    d.range = {-1.0, 1.0};
    return d;
}

// Two concentric annuli centred in the unit square; labels alternate so the
// classes are exactly balanced.
Dataset gen_rings(const DatasetSpec& spec) {
    constexpr double kCentre = 0.5;
    constexpr double kInner[2] = {0.10, 0.20};
    constexpr double kOuter[2] = {0.30, 0.40};
    Rng rng(spec.seed);
    std::vector<double> x(spec.n * 2);
    std::vector<std::size_t> y(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t label = i % 2;
        const double* band = label == 0 ? kInner : kOuter;
        const double r = rng.uniform(band[0], band[1]);
        const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
        double px = kCentre + r * std::cos(a);
        double py = kCentre + r * std::sin(a);
        if (spec.noise > 0.0) {
            px += rng.normal(0.0, spec.noise);
            py += rng.normal(0.0, spec.noise);
        }
        x[2 * i] = std::clamp(px, 0.0, 1.0);
        x[2 * i + 1] = std::clamp(py, 0.0, 1.0);
        y[i] = label;
    }
    Dataset d;
    d.inputs = Tensor::matrix(spec.n, 2, std::move(x));
    d.labels = std::move(y);
    d.num_classes = 2;
    d.range = {0.0, 1.0};
    return d;
}

}  // namespace

Dataset gen_dataset(const DatasetSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case DatasetKind::sine_mix: return gen_sine_mix(spec);
        case DatasetKind::rings: return gen_rings(spec);
        case DatasetKind::image_binary:
            return read_image_binary_file(spec.path, spec.height, spec.width, spec.channels,
                                          spec.num_classes);
    }
    throw ConfigError("unhandled dataset kind");
}

Dataset read_image_binary(std::span<const unsigned char> bytes, std::size_t height, std::size_t width,
                          std::size_t channels, std::size_t num_classes) {
    const std::size_t pixels = height * width * channels;
    const std::size_t record = pixels + 1;
    if (bytes.empty() || bytes.size() % record != 0) {
        throw FormatError("image-binary length " + std::to_string(bytes.size()) +
                          " is not a positive multiple of the record size " + std::to_string(record));
    }
    const std::size_t n = bytes.size() / record;
    std::vector<double> x(n * pixels);
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + i * record;
        if (rec[0] >= num_classes) {
            throw FormatError("record " + std::to_string(i) + " has label " + std::to_string(rec[0]) +
                              " outside [0, " + std::to_string(num_classes) + ")");
        }
        y[i] = rec[0];
        for (std::size_t p = 0; p < pixels; ++p) x[i * pixels + p] = rec[1 + p] / 255.0;
    }
    Dataset d;
    d.inputs = Tensor::matrix(n, pixels, std::move(x));
    d.labels = std::move(y);
    d.num_classes = num_classes;
    d.range = {0.0, 1.0};
    return d;
}

Dataset read_image_binary_file(const std::filesystem::path& path, std::size_t height,
                               std::size_t width, std::size_t channels, std::size_t num_classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image-binary file '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_image_binary(bytes, height, width, channels, num_classes);
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
    const std::size_t tw = data.targets.empty() ? 0 : data.targets.row_size();
    out << "label";
    for (std::size_t t = 0; t < tw; ++t) out << ",target" << t;
    for (std::size_t k = 0; k < data.dim(); ++k) out << ",x" << k;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.labels[i];
        if (tw) {
            for (double v : data.targets.row(i)) out << ',' << format_double(v);
        }
        for (double v : data.input(i)) out << ',' << format_double(v);
        out << '\n';
    }
}

}  // namespace phaseat
