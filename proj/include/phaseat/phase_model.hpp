#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "phaseat/nn.hpp"
#include "phaseat/rng.hpp"
#include "phaseat/tensor.hpp"

namespace phaseat {

/// Direction and scale used to reduce an input to the scalar phase coordinate.
struct ProjectionSpec {
    std::vector<double> direction;  // unit norm
    double scale = 1.0;

    /// Throws StateError when the direction is not unit norm or scale <= 0.
    void validate() const;

    friend bool operator==(const ProjectionSpec&, const ProjectionSpec&) = default;
};

/// Integer shift frequency per head; slot 0 is always the zero-frequency head.
struct FrequencyAssignment {
    std::vector<int> omegas;

    static FrequencyAssignment zeros(std::size_t heads);
    std::size_t size() const { return omegas.size(); }
    bool all_zero() const;

    friend bool operator==(const FrequencyAssignment&, const FrequencyAssignment&) = default;
};

/// A frequency-dedicated classifier: real and imaginary sub-heads.
struct PhaseHead {
    ParameterSet real;
    ParameterSet imag;

    friend bool operator==(const PhaseHead&, const PhaseHead&) = default;
};

struct ModelShape {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden{64, 64};
    Activation hidden_activation = Activation::tanh;
    std::size_t num_classes = 2;
    std::size_t heads = 3;
};

class PhaseGradient;

/// Shared feature extractor plus M phase-shifted heads.
///
/// logits(x) = Re( sum_m exp(2 pi i w_m z) (H_m^re(f) + i H_m^im(f)) ),
/// f = extractor(x), z = project(x). Head 0 is the zero-frequency head.
class PhaseModel {
public:
    PhaseModel() = default;
    PhaseModel(ParameterSet extractor, std::vector<PhaseHead> heads, ProjectionSpec projection);

    static PhaseModel create(const ModelShape& shape, ProjectionSpec projection, Rng& rng);

    const ParameterSet& extractor() const { return extractor_; }
    const std::vector<PhaseHead>& heads() const { return heads_; }
    const ProjectionSpec& projection() const { return projection_; }

    std::size_t head_count() const { return heads_.size(); }
    std::size_t input_dim() const { return extractor_.input_dim(); }
    std::size_t feature_dim() const { return extractor_.output_dim(); }
    std::size_t num_classes() const;

    /// Incremented by every parameter update; traces remember it.
    std::uint64_t revision() const { return revision_; }

    void apply_gradient(const PhaseGradient& grads, double lr);

    /// Extractor parameters, then for each head real then imag.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);
    std::size_t parameter_count() const;

    void validate() const;

    friend bool operator==(const PhaseModel& a, const PhaseModel& b) {
        return a.extractor_ == b.extractor_ && a.heads_ == b.heads_ &&
               a.projection_ == b.projection_;
    }

private:
    ParameterSet extractor_;
    std::vector<PhaseHead> heads_;
    ProjectionSpec projection_;
    std::uint64_t revision_ = 0;
};

class PhaseGradient {
public:
    static PhaseGradient zeros_like(const PhaseModel& model);

    GradientSet extractor;
    std::vector<GradientSet> real;
    std::vector<GradientSet> imag;

    void add_scaled(const PhaseGradient& other, double scale);
    void scale(double factor);
    std::vector<double> flatten() const;
};

/// Principal direction of mean-centred rows by fixed-count power iteration.
/// The largest-magnitude component of the result is positive.
ProjectionSpec compute_first_pc(const Tensor& samples, std::size_t iters, std::uint64_t seed,
                                double scale = 1.0);

/// z = scale * (x / |x|) . p, and 0 for x = 0.
double project(std::span<const double> x, const ProjectionSpec& spec);
/// dz/dx; zero vector at x = 0.
std::vector<double> project_gradient(std::span<const double> x, const ProjectionSpec& spec);

struct PhaseTrace {
    std::uint64_t revision = 0;
    FrequencyAssignment freqs;
    std::vector<double> x;
    double z = 0.0;
    bool z_from_projection = true;
    Trace features;
    std::vector<Trace> real;
    std::vector<Trace> imag;  // empty trace for zero-frequency heads
    std::vector<std::vector<double>> real_out;
    std::vector<std::vector<double>> imag_out;
    std::vector<double> cos_w;
    std::vector<double> sin_w;
};

struct PhaseForward {
    std::vector<double> logits;
    PhaseTrace trace;
};

struct PhaseBackward {
    PhaseGradient grads;
    std::vector<double> grad_x;
};

PhaseForward phase_forward(const PhaseModel& model, const FrequencyAssignment& freqs,
                           std::span<const double> x);
/// Same as phase_forward with the phase coordinate supplied instead of projected.
PhaseForward phase_forward_at(const PhaseModel& model, const FrequencyAssignment& freqs,
                              std::span<const double> x, double z);
/// Logits only.
std::vector<double> phase_logits(const PhaseModel& model, const FrequencyAssignment& freqs,
                                 std::span<const double> x);
/// The zero-frequency model T_0: phase_logits with all frequencies zero.
std::vector<double> base_forward(const PhaseModel& model, std::span<const double> x);

PhaseBackward phase_backward(const PhaseModel& model, const PhaseTrace& trace,
                             std::span<const double> logit_grad);
/// Accumulates parameter gradients into `grads`; returns dL/dx.
std::vector<double> phase_backward_into(const PhaseModel& model, const PhaseTrace& trace,
                                        std::span<const double> logit_grad, PhaseGradient& grads);

}  // namespace phaseat
