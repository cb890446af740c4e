#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "phaseat/rng.hpp"
#include "phaseat/tensor.hpp"

namespace phaseat {

enum class Activation { relu, tanh, identity };

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

/// One dense layer: out = act(W in + b), W stored row-major (out x in).
struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weight;
    std::vector<double> bias;
    Activation activation = Activation::identity;

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Trainable weights of a feed-forward stack. Consecutive layers chain.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(std::vector<Layer> layers);

    /// Glorot-uniform weights, zero biases. `widths` has one more entry than
    /// `activations`.
    static ParameterSet init(std::span<const std::size_t> widths,
                             std::span<const Activation> activations, Rng& rng);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    /// All weights then biases, layer by layer.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    /// Throws ShapeError/NumericError when the chain or finiteness invariants fail.
    void validate() const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<Layer> layers_;
};

struct LayerGradient {
    std::vector<double> weight;
    std::vector<double> bias;
};

/// Partial derivatives shaped like a ParameterSet.
class GradientSet {
public:
    GradientSet() = default;
    static GradientSet zeros_like(const ParameterSet& params);

    const std::vector<LayerGradient>& layers() const { return layers_; }
    std::vector<LayerGradient>& layers() { return layers_; }

    bool congruent(const ParameterSet& params) const;
    void add_scaled(const GradientSet& other, double scale);
    void scale(double factor);
    std::vector<double> flatten() const;
    bool all_zero() const;

private:
    std::vector<LayerGradient> layers_;
};

/// Everything backward needs from a forward pass.
struct Trace {
    std::vector<std::vector<double>> inputs;          // input to layer k
    std::vector<std::vector<double>> pre_activations;  // W_k a + b_k
    std::vector<std::size_t> signature;                // widths, for mismatch checks
};

struct ForwardResult {
    Tensor output;
    Trace trace;
};

struct BackwardResult {
    GradientSet grads;
    Tensor grad_input;
};

ForwardResult forward(const ParameterSet& params, std::span<const double> x);
/// Forward without keeping a trace.
std::vector<double> evaluate(const ParameterSet& params, std::span<const double> x);

BackwardResult backward(const ParameterSet& params, const Trace& trace,
                        std::span<const double> grad_output);
/// Accumulating variant: adds into `grads` and returns dL/dx.
std::vector<double> backward_into(const ParameterSet& params, const Trace& trace,
                                  std::span<const double> grad_output, GradientSet& grads);

Tensor softmax(std::span<const double> logits);

struct CrossEntropy {
    double loss = 0.0;
    std::vector<double> grad;  // dloss/dlogits
};

CrossEntropy cross_entropy(std::span<const double> logits, std::size_t label);

/// Returns params - lr * grads.
ParameterSet sgd_step(const ParameterSet& params, const GradientSet& grads, double lr);

}  // namespace phaseat
