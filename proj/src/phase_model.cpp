#include "phaseat/phase_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "phaseat/error.hpp"

namespace phaseat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

void ProjectionSpec::validate() const {
    if (direction.empty()) throw StateError("projection direction is empty");
    if (std::abs(norm2(direction) - 1.0) > 1e-9) throw StateError("projection direction is not unit norm");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw StateError("projection scale must be positive");
}

FrequencyAssignment FrequencyAssignment::zeros(std::size_t heads) {
    return FrequencyAssignment{std::vector<int>(heads, 0)};
}

bool FrequencyAssignment::all_zero() const {
    return std::all_of(omegas.begin(), omegas.end(), [](int w) { return w == 0; });
}

PhaseModel::PhaseModel(ParameterSet extractor, std::vector<PhaseHead> heads, ProjectionSpec projection)
    : extractor_(std::move(extractor)), heads_(std::move(heads)), projection_(std::move(projection)) {
    validate();
}

PhaseModel PhaseModel::create(const ModelShape& shape, ProjectionSpec projection, Rng& rng) {
    if (shape.heads < 1) throw ConfigError("a phase model needs at least one head");
    if (shape.input_dim == 0 || shape.num_classes < 2) throw ConfigError("bad model shape");

    std::vector<std::size_t> widths{shape.input_dim};
    widths.insert(widths.end(), shape.hidden.begin(), shape.hidden.end());
    const std::vector<Activation> acts(shape.hidden.size(), shape.hidden_activation);
    ParameterSet extractor;
    if (shape.hidden.empty()) {
        // Identity feature map, expressed as a fixed identity layer.
        Layer id;
        id.in = id.out = shape.input_dim;
        id.weight.assign(id.in * id.out, 0.0);
        for (std::size_t i = 0; i < id.in; ++i) id.weight[i * id.in + i] = 1.0;
        id.bias.assign(id.out, 0.0);
        extractor = ParameterSet({id});
    } else {
        extractor = ParameterSet::init(widths, acts, rng);
    }

    const std::size_t feat = extractor.output_dim();
    const std::size_t head_widths[] = {feat, shape.num_classes};
    const Activation head_act[] = {Activation::identity};
    std::vector<PhaseHead> heads;
    heads.reserve(shape.heads);
    for (std::size_t m = 0; m < shape.heads; ++m) {
        PhaseHead h;
        h.real = ParameterSet::init(head_widths, head_act, rng);
        h.imag = ParameterSet::init(head_widths, head_act, rng);
        heads.push_back(std::move(h));
    }
    return PhaseModel(std::move(extractor), std::move(heads), std::move(projection));
}

std::size_t PhaseModel::num_classes() const {
    return heads_.empty() ? 0 : heads_.front().real.output_dim();
}

void PhaseModel::validate() const {
    if (heads_.empty()) throw ShapeError("phase model has no heads");
    extractor_.validate();
    const std::size_t feat = extractor_.output_dim();
    const std::size_t classes = heads_.front().real.output_dim();
    for (const auto& h : heads_) {
        h.real.validate();
        h.imag.validate();
        if (h.real.input_dim() != feat || h.imag.input_dim() != feat) {
            throw ShapeError("head input does not match feature dimension");
        }
        if (h.real.output_dim() != classes || h.imag.output_dim() != classes) {
            throw ShapeError("heads disagree on class count");
        }
    }
    projection_.validate();
    if (projection_.direction.size() != extractor_.input_dim()) {
        throw ShapeError("projection direction does not match input dimension");
    }
}

void PhaseModel::apply_gradient(const PhaseGradient& grads, double lr) {
    if (grads.real.size() != heads_.size() || grads.imag.size() != heads_.size()) {
        throw ShapeError("gradient head count does not match model");
    }
    extractor_ = sgd_step(extractor_, grads.extractor, lr);
    for (std::size_t m = 0; m < heads_.size(); ++m) {
        heads_[m].real = sgd_step(heads_[m].real, grads.real[m], lr);
        heads_[m].imag = sgd_step(heads_[m].imag, grads.imag[m], lr);
    }
    ++revision_;
}

std::vector<double> PhaseModel::flatten() const {
    std::vector<double> flat = extractor_.flatten();
    for (const auto& h : heads_) {
        auto r = h.real.flatten();
        auto i = h.imag.flatten();
        flat.insert(flat.end(), r.begin(), r.end());
        flat.insert(flat.end(), i.begin(), i.end());
    }
    return flat;
}

std::size_t PhaseModel::parameter_count() const {
    std::size_t n = extractor_.parameter_count();
    for (const auto& h : heads_) n += h.real.parameter_count() + h.imag.parameter_count();
    return n;
}

void PhaseModel::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ShapeError("flat parameter vector has wrong length");
    std::size_t pos = 0;
    auto take = [&](ParameterSet& p) {
        const std::size_t n = p.parameter_count();
        p.assign(flat.subspan(pos, n));
        pos += n;
    };
    take(extractor_);
    for (auto& h : heads_) {
        take(h.real);
        take(h.imag);
    }
    ++revision_;
}

PhaseGradient PhaseGradient::zeros_like(const PhaseModel& model) {
    PhaseGradient g;
    g.extractor = GradientSet::zeros_like(model.extractor());
    for (const auto& h : model.heads()) {
        g.real.push_back(GradientSet::zeros_like(h.real));
        g.imag.push_back(GradientSet::zeros_like(h.imag));
    }
    return g;
}

void PhaseGradient::add_scaled(const PhaseGradient& other, double s) {
    extractor.add_scaled(other.extractor, s);
    for (std::size_t m = 0; m < real.size(); ++m) {
        real[m].add_scaled(other.real[m], s);
        imag[m].add_scaled(other.imag[m], s);
    }
}

void PhaseGradient::scale(double factor) {
    extractor.scale(factor);
    for (std::size_t m = 0; m < real.size(); ++m) {
        real[m].scale(factor);
        imag[m].scale(factor);
    }
}

std::vector<double> PhaseGradient::flatten() const {
    std::vector<double> flat = extractor.flatten();
    for (std::size_t m = 0; m < real.size(); ++m) {
        auto r = real[m].flatten();
        auto i = imag[m].flatten();
        flat.insert(flat.end(), r.begin(), r.end());
        flat.insert(flat.end(), i.begin(), i.end());
    }
    return flat;
}

ProjectionSpec compute_first_pc(const Tensor& samples, std::size_t iters, std::uint64_t seed,
                                double scale) {
    if (samples.rank() != 2) throw ShapeError("samples must be an N x d matrix");
    const std::size_t n = samples.rows();
    const std::size_t d = samples.row_size();
    if (n < 2) throw ShapeError("principal component needs at least two samples");
    if (d == 0) throw ShapeError("samples have zero dimension");

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = samples.row(i);
        for (std::size_t k = 0; k < d; ++k) mean[k] += r[k];
    }
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<double> centred(n * d);
    double total_variance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = samples.row(i);
        for (std::size_t k = 0; k < d; ++k) {
            const double c = r[k] - mean[k];
            centred[i * d + k] = c;
            total_variance += c * c;
        }
    }
    if (total_variance == 0.0) throw DegeneracyError("dataset has zero variance");

    // Covariance is applied implicitly: C v = X^T (X v) / (n - 1).
    auto apply_cov = [&](const std::vector<double>& v, std::vector<double>& out) {
        out.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = centred.data() + i * d;
            double proj = 0.0;
            for (std::size_t k = 0; k < d; ++k) proj += row[k] * v[k];
            for (std::size_t k = 0; k < d; ++k) out[k] += proj * row[k];
        }
        for (double& o : out) o /= static_cast<double>(n - 1);
    };

    Rng rng(seed);
    std::vector<double> v(d);
    for (double& x : v) x = rng.normal();
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    std::vector<double> next;
    for (std::size_t it = 0; it < iters; ++it) {
        apply_cov(v, next);
        nv = norm2(next);
        if (nv == 0.0) throw DegeneracyError("power iteration collapsed to zero");
        for (std::size_t k = 0; k < d; ++k) v[k] = next[k] / nv;
    }

    std::size_t peak = 0;
    for (std::size_t k = 1; k < d; ++k) {
        if (std::abs(v[k]) > std::abs(v[peak])) peak = k;
    }
    if (v[peak] < 0.0) {
        for (double& x : v) x = -x;
    }
    // Renormalise so the unit-norm invariant holds to rounding.
    nv = norm2(v);
    for (double& x : v) x /= nv;

    ProjectionSpec spec{std::move(v), scale};
    spec.validate();
    return spec;
}

double project(std::span<const double> x, const ProjectionSpec& spec) {
    if (x.size() != spec.direction.size()) throw ShapeError("projection dimension mismatch");
    const double nx = norm2(x);
    if (nx == 0.0) return 0.0;
    return spec.scale * dot(x, spec.direction) / nx;
}

std::vector<double> project_gradient(std::span<const double> x, const ProjectionSpec& spec) {
    if (x.size() != spec.direction.size()) throw ShapeError("projection dimension mismatch");
    std::vector<double> g(x.size(), 0.0);
    const double nx = norm2(x);
    if (nx == 0.0) return g;
    const double xp = dot(x, spec.direction);
    const double inv = 1.0 / nx;
    const double inv3 = inv * inv * inv;
    for (std::size_t k = 0; k < x.size(); ++k) {
        g[k] = spec.scale * (spec.direction[k] * inv - xp * x[k] * inv3);
    }
    return g;
}

PhaseForward phase_forward_at(const PhaseModel& model, const FrequencyAssignment& freqs,
                              std::span<const double> x, double z) {
    if (freqs.size() != model.head_count()) {
        throw ShapeError("frequency assignment has " + std::to_string(freqs.size()) +
                         " entries for " + std::to_string(model.head_count()) + " heads");
    }
    if (x.size() != model.input_dim()) throw ShapeError("input dimension mismatch");

    PhaseForward out;
    PhaseTrace& t = out.trace;
    t.revision = model.revision();
    t.freqs = freqs;
    t.x.assign(x.begin(), x.end());
    t.z = z;
    t.z_from_projection = false;

    auto feat = forward(model.extractor(), x);
    t.features = std::move(feat.trace);
    const auto f = feat.output.values();

    const std::size_t m_count = model.head_count();
    const std::size_t classes = model.num_classes();
    t.real.resize(m_count);
    t.imag.resize(m_count);
    t.real_out.resize(m_count);
    t.imag_out.resize(m_count);
    t.cos_w.resize(m_count);
    t.sin_w.resize(m_count);
    out.logits.assign(classes, 0.0);

    for (std::size_t m = 0; m < m_count; ++m) {
        const auto& head = model.heads()[m];
        auto re = forward(head.real, f);
        t.real[m] = std::move(re.trace);
        t.real_out[m] = re.output.data();
        const int w = freqs.omegas[m];
        if (w == 0) {
            t.cos_w[m] = 1.0;
            t.sin_w[m] = 0.0;
            for (std::size_t c = 0; c < classes; ++c) out.logits[c] += t.real_out[m][c];
            continue;
        }
        const double phase = kTwoPi * static_cast<double>(w) * z;
        t.cos_w[m] = std::cos(phase);
        t.sin_w[m] = std::sin(phase);
        auto im = forward(head.imag, f);
        t.imag[m] = std::move(im.trace);
        t.imag_out[m] = im.output.data();
        for (std::size_t c = 0; c < classes; ++c) {
            out.logits[c] += t.cos_w[m] * t.real_out[m][c] - t.sin_w[m] * t.imag_out[m][c];
        }
    }
    return out;
}

PhaseForward phase_forward(const PhaseModel& model, const FrequencyAssignment& freqs,
                           std::span<const double> x) {
    auto out = phase_forward_at(model, freqs, x, project(x, model.projection()));
    out.trace.z_from_projection = true;
    return out;
}

std::vector<double> phase_logits(const PhaseModel& model, const FrequencyAssignment& freqs,
                                 std::span<const double> x) {
    if (freqs.size() != model.head_count()) throw ShapeError("frequency assignment length mismatch");
    const auto f = evaluate(model.extractor(), x);
    const std::size_t classes = model.num_classes();
    std::vector<double> logits(classes, 0.0);
    double z = 0.0;
    const bool shifted = !freqs.all_zero();
    if (shifted) z = project(x, model.projection());
    for (std::size_t m = 0; m < model.head_count(); ++m) {
        const auto re = evaluate(model.heads()[m].real, f);
        const int w = freqs.omegas[m];
        if (w == 0) {
            for (std::size_t c = 0; c < classes; ++c) logits[c] += re[c];
            continue;
        }
        const double phase = kTwoPi * static_cast<double>(w) * z;
        const double cw = std::cos(phase);
        const double sw = std::sin(phase);
        const auto im = evaluate(model.heads()[m].imag, f);
        for (std::size_t c = 0; c < classes; ++c) logits[c] += cw * re[c] - sw * im[c];
    }
    return logits;
}

std::vector<double> base_forward(const PhaseModel& model, std::span<const double> x) {
    return phase_logits(model, FrequencyAssignment::zeros(model.head_count()), x);
}

std::vector<double> phase_backward_into(const PhaseModel& model, const PhaseTrace& trace,
                                        std::span<const double> logit_grad, PhaseGradient& grads) {
    if (trace.revision != model.revision()) {
        throw StateError("phase trace is stale: model parameters changed since the forward pass");
    }
    if (trace.freqs.size() != model.head_count() || trace.real.size() != model.head_count()) {
        throw StateError("phase trace does not belong to this model");
    }
    const std::size_t classes = model.num_classes();
    if (logit_grad.size() != classes) throw ShapeError("logit gradient has wrong length");

    std::vector<double> grad_f(model.feature_dim(), 0.0);
    std::vector<double> head_grad(classes);
    double grad_z = 0.0;
    for (std::size_t m = 0; m < model.head_count(); ++m) {
        const auto& head = model.heads()[m];
        const double cw = trace.cos_w[m];
        const double sw = trace.sin_w[m];
        for (std::size_t c = 0; c < classes; ++c) head_grad[c] = cw * logit_grad[c];
        auto gf = backward_into(head.real, trace.real[m], head_grad, grads.real[m]);
        for (std::size_t k = 0; k < gf.size(); ++k) grad_f[k] += gf[k];

        const int w = trace.freqs.omegas[m];
        if (w == 0) continue;
        for (std::size_t c = 0; c < classes; ++c) head_grad[c] = -sw * logit_grad[c];
        gf = backward_into(head.imag, trace.imag[m], head_grad, grads.imag[m]);
        for (std::size_t k = 0; k < gf.size(); ++k) grad_f[k] += gf[k];

        // d/dz [cos R - sin I] = -2 pi w (sin R + cos I)
        const double rate = kTwoPi * static_cast<double>(w);
        for (std::size_t c = 0; c < classes; ++c) {
            grad_z += logit_grad[c] * (-rate) *
                      (sw * trace.real_out[m][c] + cw * trace.imag_out[m][c]);
        }
    }

    auto grad_x = backward_into(model.extractor(), trace.features, grad_f, grads.extractor);
    if (grad_z != 0.0 && trace.z_from_projection) {
        const auto dz = project_gradient(trace.x, model.projection());
        for (std::size_t k = 0; k < grad_x.size(); ++k) grad_x[k] += grad_z * dz[k];
    }
    return grad_x;
}

PhaseBackward phase_backward(const PhaseModel& model, const PhaseTrace& trace,
                             std::span<const double> logit_grad) {
    PhaseBackward out{PhaseGradient::zeros_like(model), {}};
    out.grad_x = phase_backward_into(model, trace, logit_grad, out.grads);
    return out;
}

}  // namespace phaseat
