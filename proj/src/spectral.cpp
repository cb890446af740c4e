#include "phaseat/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phaseat/error.hpp"
#include "phaseat/rng.hpp"

namespace phaseat {

void FilterConfig::validate() const {
    if (!(variance > 0.0) || !std::isfinite(variance)) throw ConfigError("filter variance must be positive");
    if (max_points < 2) throw ConfigError("filter subsample cap must be at least 2");
}

namespace {

std::vector<double> kernel_weights(const Tensor& points, double variance) {
    const std::size_t n = points.rows();
    const std::size_t d = points.row_size();
    std::vector<double> w(n * n);
    const double scale = -1.0 / (2.0 * variance);
    for (std::size_t j = 0; j < n; ++j) {
        const auto xj = points.row(j);
        for (std::size_t m = j; m < n; ++m) {
            const auto xm = points.row(m);
            double dist2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double u = xj[k] - xm[k];
                dist2 += u * u;
            }
            const double g = std::exp(dist2 * scale);
            w[j * n + m] = g;
            w[m * n + j] = g;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        double* row = w.data() + j * n;
        const double c = std::accumulate(row, row + n, 0.0);
        for (std::size_t m = 0; m < n; ++m) row[m] /= c;
    }
    return w;
}

Tensor apply_weights(const std::vector<double>& w, const Tensor& values) {
    const std::size_t n = values.rows();
    const std::size_t c = values.row_size();
    std::vector<double> out(n * c, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double* wr = w.data() + j * n;
        double* o = out.data() + j * c;
        for (std::size_t m = 0; m < n; ++m) {
            const double g = wr[m];
            const auto v = values.row(m);
            for (std::size_t k = 0; k < c; ++k) o[k] += g * v[k];
        }
    }
    return Tensor::matrix(n, c, std::move(out));
}

Tensor minus(const Tensor& a, const Tensor& b) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] - b[i];
    return Tensor(a.shape(), std::move(v));
}

std::optional<double> relative_error(const Tensor& reference, const Tensor& approx) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const double diff = reference[i] - approx[i];
        num += diff * diff;
        den += reference[i] * reference[i];
    }
    // Rounding residue of an exactly-zero part (e.g. constant labels) counts as zero.
    if (den <= 1e-24 * static_cast<double>(reference.size())) return std::nullopt;
    return std::sqrt(num / den);
}

Tensor as_matrix(const Tensor& t) {
    if (t.rank() == 2) return t;
    if (t.rank() == 1) return Tensor::matrix(t.size(), 1, t.data());
    throw ShapeError("expected a vector or matrix");
}

}  // namespace

Tensor gaussian_low_pass(const Tensor& points, const Tensor& values, const FilterConfig& cfg) {
    cfg.validate();
    const Tensor p = as_matrix(points);
    const Tensor v = as_matrix(values);
    if (p.rows() == 0 || p.rows() != v.rows()) throw ShapeError("points and values must be equal, nonzero length");
    return apply_weights(kernel_weights(p, cfg.variance), v);
}

std::vector<std::size_t> spectral_subsample(std::size_t n, const FilterConfig& cfg) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= cfg.max_points) return idx;
    Rng rng(cfg.seed);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(cfg.max_points);
    std::sort(idx.begin(), idx.end());
    return idx;
}

SpectralAnalyzer::SpectralAnalyzer(const Tensor& points, const Tensor& labels, const FilterConfig& cfg) {
    cfg.validate();
    const Tensor p = as_matrix(points);
    const Tensor l = as_matrix(labels);
    if (p.rows() == 0 || p.rows() != l.rows()) throw ShapeError("points and labels must be equal, nonzero length");
    indices_ = spectral_subsample(p.rows(), cfg);
    if (indices_.size() == p.rows()) {
        points_ = p;
        labels_ = l;
    } else {
        std::vector<double> pv, lv;
        for (std::size_t i : indices_) {
            auto pr = p.row(i);
            auto lr = l.row(i);
            pv.insert(pv.end(), pr.begin(), pr.end());
            lv.insert(lv.end(), lr.begin(), lr.end());
        }
        points_ = Tensor::matrix(indices_.size(), p.row_size(), std::move(pv));
        labels_ = Tensor::matrix(indices_.size(), l.row_size(), std::move(lv));
    }
    weights_ = kernel_weights(points_, cfg.variance);
    label_low_ = apply_weights(weights_, labels_);
    label_high_ = minus(labels_, label_low_);
}

SpectralAnalyzer::SpectralAnalyzer(const Dataset& data, const FilterConfig& cfg, bool use_targets)
    : SpectralAnalyzer(data.inputs, use_targets && !data.targets.empty() ? data.targets : data.one_hot(),
                       cfg) {}

Tensor SpectralAnalyzer::low_pass(const Tensor& values) const { return apply_weights(weights_, values); }

SpectrumReport SpectralAnalyzer::analyze(const Tensor& outputs) const {
    const Tensor o = as_matrix(outputs);
    if (o.rows() != labels_.rows() || o.row_size() != labels_.row_size()) {
        throw ShapeError("outputs do not match the analysed labels");
    }
    SpectrumReport r;
    r.indices = indices_;
    r.label_low = label_low_;
    r.label_high = label_high_;
    r.output_low = low_pass(o);
    r.output_high = minus(o, r.output_low);
    r.e_low = relative_error(r.label_low, r.output_low);
    r.e_high = relative_error(r.label_high, r.output_high);
    return r;
}

SpectrumReport SpectralAnalyzer::analyze(const OutputFunction& model) const {
    std::vector<double> out;
    out.reserve(labels_.size());
    for (std::size_t j = 0; j < points_.rows(); ++j) {
        const auto y = model(points_.row(j));
        if (y.size() != labels_.row_size()) throw ShapeError("model output width does not match labels");
        out.insert(out.end(), y.begin(), y.end());
    }
    return analyze(Tensor::matrix(points_.rows(), labels_.row_size(), std::move(out)));
}

SpectrumReport frequency_errors(const OutputFunction& model, const Dataset& data,
                                const FilterConfig& cfg, bool use_targets) {
    return SpectralAnalyzer(data, cfg, use_targets).analyze(model);
}

}  // namespace phaseat
