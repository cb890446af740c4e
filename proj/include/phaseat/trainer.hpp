#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phaseat/attacks.hpp"
#include "phaseat/dataset.hpp"
#include "phaseat/error.hpp"
#include "phaseat/freq_select.hpp"
#include "phaseat/phase_model.hpp"
#include "phaseat/spectral.hpp"

namespace phaseat {

enum class Variant { phaseat, phaseat_iterative, standard_at, clean };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct TrainConfig {
    Variant variant = Variant::phaseat;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double lr = 0.1;
    AttackConfig attack;   // train-time; steps is the inner PGD count P for phaseat_iterative
    std::size_t heads = 3;  // phaseat variants only; baselines use a single head
    std::size_t k_max = 64;
    double decay = 0.9;
    double scale = 1.0;     // projection constant C
    std::size_t pc_iters = 100;
    std::vector<std::size_t> hidden{64, 64};
    Activation hidden_activation = Activation::tanh;
    std::uint64_t seed = 0;

    // Per-epoch evaluation.
    AttackConfig eval_attack{0.031, 0.031 / 4.0, 10, 0, false, 0};
    InferenceMode eval_mode = InferenceMode::fixed_seed;
    std::size_t eval_max_samples = 500;
    std::size_t analysis_every = 1;  // epochs between spectral reports; 0 disables
    FilterConfig filter;
    bool analyze_adversarial = false;  // spectral analysis on perturbed inputs
    InferenceMode analysis_mode = InferenceMode::zero;  // fixed_seed: one pinned assignment for all points

    bool record_events = false;

    void validate() const;
    std::size_t model_heads() const;
};

/// Named sub-streams of the experiment seed.
struct SeedStreams {
    std::uint64_t init, data, attack, frequency, eval;
    static SeedStreams from(std::uint64_t master);
};

struct EpochMetrics {
    std::size_t epoch = 0;
    std::string split;  // "train" or "test"
    double loss = 0.0;
    double clean_accuracy = 0.0;
    double robust_accuracy = 0.0;
    std::string attack_name;
    std::optional<double> e_low;
    std::optional<double> e_high;
    std::vector<std::size_t> frequency_histogram;  // sampled omegas (heads >= 1) this epoch
};

enum class EventKind { init_delta, sign_step, clip, discrepancy_update, frequency_sampling, parameter_step };

struct TrainEvent {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    EventKind kind = EventKind::init_delta;
    bool phase_target = false;  // sign_step only: attacked T (true) or T_0 (false)
};

struct BatchLog {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    bool phase_target = false;
    FrequencyAssignment freqs;  // used for this batch's parameter step
    double loss = 0.0;
    double regularizer_min = 0.0;
    double regularizer_max = 0.0;
    double regularizer_mean = 0.0;
};

struct TrainResult {
    PhaseModel model;
    FrequencyState state;
    FrequencyAssignment freqs;
    std::vector<EpochMetrics> metrics;
    std::vector<BatchLog> batches;
    std::vector<TrainEvent> events;
};

struct AdvLoss {
    double loss = 0.0;
    double cross_entropy = 0.0;
    double regularizer = 0.0;  // |cos(softmax T, softmax T_0)|
};

/// ce(T(x), y) + |cos(softmax T(x), softmax T_0(x))| at an already perturbed x.
AdvLoss adv_loss(const PhaseModel& model, const FrequencyAssignment& freqs, std::span<const double> x,
                 std::size_t label);
/// Same, accumulating scale * gradient into `grads`.
AdvLoss adv_loss_gradient(const PhaseModel& model, const FrequencyAssignment& freqs,
                          std::span<const double> x, std::size_t label, double scale,
                          PhaseGradient& grads);

/// Thrown when the training objective becomes non-finite.
class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(std::size_t epoch, const std::string& what) : NumericError(what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

/// Called after every epoch with the metrics just computed; returning false
/// stops training.
using EpochCallback = std::function<bool(const TrainResult&, std::size_t epoch)>;

/// Dispatches on cfg.variant.
TrainResult train(const TrainConfig& cfg, const Dataset& train_data, const Dataset* test_data = nullptr,
                  const EpochCallback& on_epoch = {});

/// Non-iterative PhaseAT: FGSM with alternating T / T_0 targets.
TrainResult train_phaseat(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data = nullptr,
                          const EpochCallback& on_epoch = {});
/// Inner loop of cfg.attack.steps PGD updates per batch.
TrainResult train_phaseat_iterative(TrainConfig cfg, const Dataset& train_data,
                                    const Dataset* test_data = nullptr, const EpochCallback& on_epoch = {});
/// Single-head model, FGSM examples, plain cross-entropy.
TrainResult train_standard_at(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data = nullptr,
                              const EpochCallback& on_epoch = {});
/// Single-head model, no perturbation.
TrainResult train_clean(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data = nullptr,
                        const EpochCallback& on_epoch = {});

/// Metrics row for one split; spectral errors when `analyzer` is given.
EpochMetrics evaluate_split(const TrainConfig& cfg, const PhaseModel& model, const FrequencyState& state,
                            const Dataset& data, const SpectralAnalyzer* analyzer, std::size_t epoch,
                            const std::string& split);

/// Initial model for a configuration: projection from the training inputs,
/// Glorot-initialised extractor and heads.
PhaseModel initial_model(const TrainConfig& cfg, const Dataset& train_data);

}  // namespace phaseat
