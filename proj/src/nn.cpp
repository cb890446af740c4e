#include "phaseat/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phaseat/error.hpp"

namespace phaseat {

std::string_view to_string(Activation act) {
    switch (act) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

double activate(Activation act, double v) {
    switch (act) {
        case Activation::relu: return v > 0.0 ? v : 0.0;
        case Activation::tanh: return std::tanh(v);
        case Activation::identity: return v;
    }
    return v;
}

// Derivative from the pre-activation; relu'(0) = 0.
double activate_derivative(Activation act, double pre) {
    switch (act) {
        case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

void affine(const Layer& layer, std::span<const double> in, std::vector<double>& out) {
    out.resize(layer.out);
    const double* w = layer.weight.data();
    for (std::size_t o = 0; o < layer.out; ++o) {
        double acc = layer.bias[o];
        const double* row = w + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

std::vector<std::size_t> signature_of(const ParameterSet& params) {
    std::vector<std::size_t> sig;
    if (params.layers().empty()) return sig;
    sig.push_back(params.layers().front().in);
    for (const auto& l : params.layers()) sig.push_back(l.out);
    return sig;
}

}  // namespace

ParameterSet::ParameterSet(std::vector<Layer> layers) : layers_(std::move(layers)) {
    validate();
}

ParameterSet ParameterSet::init(std::span<const std::size_t> widths,
                                std::span<const Activation> activations, Rng& rng) {
    if (widths.size() != activations.size() + 1 || activations.empty()) {
        throw ShapeError("need one more width than activations");
    }
    std::vector<Layer> layers;
    layers.reserve(activations.size());
    for (std::size_t k = 0; k < activations.size(); ++k) {
        Layer l;
        l.in = widths[k];
        l.out = widths[k + 1];
        l.activation = activations[k];
        const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        l.weight.resize(l.in * l.out);
        for (double& w : l.weight) w = rng.uniform(-limit, limit);
        l.bias.assign(l.out, 0.0);
        layers.push_back(std::move(l));
    }
    return ParameterSet(std::move(layers));
}

std::size_t ParameterSet::input_dim() const {
    return layers_.empty() ? 0 : layers_.front().in;
}

std::size_t ParameterSet::output_dim() const {
    return layers_.empty() ? 0 : layers_.back().out;
}

std::size_t ParameterSet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<double> ParameterSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.weight.begin(), l.weight.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void ParameterSet::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) {
        throw ShapeError("flat parameter vector has wrong length");
    }
    std::size_t pos = 0;
    for (auto& l : layers_) {
        std::copy_n(flat.begin() + pos, l.weight.size(), l.weight.begin());
        pos += l.weight.size();
        std::copy_n(flat.begin() + pos, l.bias.size(), l.bias.begin());
        pos += l.bias.size();
    }
}

void ParameterSet::validate() const {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& l = layers_[k];
        if (l.in == 0 || l.out == 0) throw ShapeError("layer with zero extent");
        if (l.weight.size() != l.in * l.out || l.bias.size() != l.out) {
            throw ShapeError("layer " + std::to_string(k) + " storage does not match its extents");
        }
        if (k > 0 && layers_[k - 1].out != l.in) {
            throw ShapeError("layer " + std::to_string(k) + " input does not chain with previous output");
        }
        require_finite(l.weight, "layer weight");
        require_finite(l.bias, "layer bias");
    }
}

GradientSet GradientSet::zeros_like(const ParameterSet& params) {
    GradientSet g;
    g.layers_.reserve(params.layers().size());
    for (const auto& l : params.layers()) {
        g.layers_.push_back({std::vector<double>(l.weight.size(), 0.0),
                             std::vector<double>(l.bias.size(), 0.0)});
    }
    return g;
}

bool GradientSet::congruent(const ParameterSet& params) const {
    if (layers_.size() != params.layers().size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        if (layers_[k].weight.size() != params.layers()[k].weight.size() ||
            layers_[k].bias.size() != params.layers()[k].bias.size()) {
            return false;
        }
    }
    return true;
}

void GradientSet::add_scaled(const GradientSet& other, double scale) {
    if (other.layers_.size() != layers_.size()) throw ShapeError("gradient sets differ in depth");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        auto& dst = layers_[k];
        const auto& src = other.layers_[k];
        if (dst.weight.size() != src.weight.size() || dst.bias.size() != src.bias.size()) {
            throw ShapeError("gradient sets differ in layer shape");
        }
        for (std::size_t i = 0; i < dst.weight.size(); ++i) dst.weight[i] += scale * src.weight[i];
        for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += scale * src.bias[i];
    }
}

void GradientSet::scale(double factor) {
    for (auto& l : layers_) {
        for (double& v : l.weight) v *= factor;
        for (double& v : l.bias) v *= factor;
    }
}

std::vector<double> GradientSet::flatten() const {
    std::vector<double> flat;
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.weight.begin(), l.weight.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

bool GradientSet::all_zero() const {
    for (const auto& l : layers_) {
        for (double v : l.weight) if (v != 0.0) return false;
        for (double v : l.bias) if (v != 0.0) return false;
    }
    return true;
}

ForwardResult forward(const ParameterSet& params, std::span<const double> x) {
    if (params.layers().empty()) throw ShapeError("forward on an empty parameter set");
    if (x.size() != params.input_dim()) {
        throw ShapeError("input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(params.input_dim()));
    }
    Trace trace;
    trace.signature = signature_of(params);
    const auto& layers = params.layers();
    trace.inputs.resize(layers.size());
    trace.pre_activations.resize(layers.size());
    std::vector<double> current(x.begin(), x.end());
    for (std::size_t k = 0; k < layers.size(); ++k) {
        trace.inputs[k] = current;
        affine(layers[k], current, trace.pre_activations[k]);
        current.resize(layers[k].out);
        for (std::size_t o = 0; o < layers[k].out; ++o) {
            current[o] = activate(layers[k].activation, trace.pre_activations[k][o]);
        }
    }
    const std::size_t n = current.size();
    return {Tensor({n}, std::move(current)), std::move(trace)};
}

std::vector<double> evaluate(const ParameterSet& params, std::span<const double> x) {
    if (x.size() != params.input_dim()) throw ShapeError("input dimension mismatch");
    std::vector<double> current(x.begin(), x.end());
    std::vector<double> pre;
    for (const auto& layer : params.layers()) {
        affine(layer, current, pre);
        current.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) current[o] = activate(layer.activation, pre[o]);
    }
    return current;
}

std::vector<double> backward_into(const ParameterSet& params, const Trace& trace,
                                  std::span<const double> grad_output, GradientSet& grads) {
    const auto& layers = params.layers();
    if (trace.signature != signature_of(params) || trace.inputs.size() != layers.size()) {
        throw StateError("trace was not produced by these parameters");
    }
    if (!grads.congruent(params)) throw ShapeError("gradient set is not congruent with parameters");
    if (grad_output.size() != params.output_dim()) throw ShapeError("grad_output has wrong length");

    std::vector<double> upstream(grad_output.begin(), grad_output.end());
    std::vector<double> delta;
    for (std::size_t k = layers.size(); k-- > 0;) {
        const Layer& layer = layers[k];
        const auto& pre = trace.pre_activations[k];
        const auto& in = trace.inputs[k];
        delta.resize(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            delta[o] = upstream[o] * activate_derivative(layer.activation, pre[o]);
        }
        auto& g = grads.layers()[k];
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            g.bias[o] += d;
            if (d == 0.0) continue;
            double* grow = g.weight.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) grow[i] += d * in[i];
        }
        upstream.assign(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* wrow = layer.weight.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) upstream[i] += wrow[i] * d;
        }
    }
    return upstream;
}

BackwardResult backward(const ParameterSet& params, const Trace& trace,
                        std::span<const double> grad_output) {
    GradientSet grads = GradientSet::zeros_like(params);
    std::vector<double> gx = backward_into(params, trace, grad_output, grads);
    const std::size_t n = gx.size();
    return {std::move(grads), Tensor({n}, std::move(gx))};
}

Tensor softmax(std::span<const double> logits) {
    if (logits.empty()) throw ShapeError("softmax of an empty vector");
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return Tensor::vector(std::move(out));
}

CrossEntropy cross_entropy(std::span<const double> logits, std::size_t label) {
    if (label >= logits.size()) {
        throw IndexError("label " + std::to_string(label) + " out of range for " +
                         std::to_string(logits.size()) + " classes");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - peak);
    const double log_norm = peak + std::log(total);
    CrossEntropy ce;
    ce.loss = log_norm - logits[label];
    ce.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) ce.grad[i] = std::exp(logits[i] - log_norm);
    ce.grad[label] -= 1.0;
    return ce;
}

ParameterSet sgd_step(const ParameterSet& params, const GradientSet& grads, double lr) {
    if (!grads.congruent(params)) throw ShapeError("gradient set is not congruent with parameters");
    ParameterSet next = params;
    for (std::size_t k = 0; k < next.layers().size(); ++k) {
        auto& l = next.layers()[k];
        const auto& g = grads.layers()[k];
        for (std::size_t i = 0; i < l.weight.size(); ++i) l.weight[i] -= lr * g.weight[i];
        for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] -= lr * g.bias[i];
    }
    return next;
}

}  // namespace phaseat
