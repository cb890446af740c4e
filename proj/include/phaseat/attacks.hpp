#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "phaseat/dataset.hpp"
#include "phaseat/freq_select.hpp"
#include "phaseat/phase_model.hpp"
#include "phaseat/rng.hpp"
#include "phaseat/tensor.hpp"

namespace phaseat {

struct AttackConfig {
    double epsilon = 0.031;
    double alpha = 0.039;
    int steps = 1;  // 1 = FGSM
    int eot_samples = 0;
    bool mimic_frequency = false;
    std::uint64_t seed = 0;

    void validate() const;
    /// "fgsm", "pgd10", "pgd50+eot", "pgd50+eot+frequency", ...
    std::string name() const;
};

struct Perturbation {
    Tensor delta;
    double linf() const;
};

struct LossGradient {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d x
};

/// White-box access to a (possibly stochastic) classifier: cross-entropy and
/// its input gradient at x. Stochastic targets draw from `rng`.
using AttackTarget = std::function<LossGradient(std::span<const double> x, std::size_t label, Rng& rng)>;

using FrequencySampler = std::function<FrequencyAssignment(Rng& rng)>;

/// A phase model whose frequency assignment is drawn afresh on every call.
class StochasticModel {
public:
    StochasticModel(const PhaseModel& model, FrequencySampler sampler, bool deterministic = false);

    const PhaseModel& model() const { return *model_; }
    bool deterministic() const { return deterministic_; }

    FrequencyAssignment draw(Rng& rng) const { return sampler_(rng); }
    std::vector<double> logits(std::span<const double> x, Rng& rng) const;
    LossGradient loss_gradient(std::span<const double> x, std::size_t label, Rng& rng) const;

private:
    const PhaseModel* model_;
    FrequencySampler sampler_;
    bool deterministic_;
};

/// Cross-entropy and input gradient of the model under a fixed assignment.
LossGradient model_loss_gradient(const PhaseModel& model, const FrequencyAssignment& freqs,
                                 std::span<const double> x, std::size_t label);

StochasticModel fixed_frequency_model(const PhaseModel& model, FrequencyAssignment freqs);
StochasticModel zero_frequency_model(const PhaseModel& model);
/// Heads >= 1 draw uniformly from [0, k_max): the attacker knows the model is
/// randomised but not how.
StochasticModel uniform_frequency_sampler(const PhaseModel& model, std::size_t k_max);
/// Draws from the defender's own multinomial over the discrepancy.
StochasticModel mimic_frequency_sampler(const FrequencyState& state, const PhaseModel& model);

/// Mean loss and mean input gradient over n frequency draws.
LossGradient eot_gradient(const StochasticModel& sampler, std::span<const double> x,
                          std::size_t label, int n, Rng& rng);

/// Wraps a sampler as an attack target using n EOT draws (n <= 1: one draw).
AttackTarget make_target(StochasticModel sampler, int eot_samples);

/// Target used by evaluation for a given configuration:
///   no EOT, no mimic -> zero-frequency model
///   EOT, no mimic    -> EOT over uniform frequency draws
///   mimic            -> defender's multinomial (EOT when eot_samples > 0)
AttackTarget evaluation_target(const PhaseModel& model, const FrequencyState& state,
                               const AttackConfig& cfg);

struct AttackResult {
    Perturbation final_delta;
    Perturbation best_delta;
    double final_loss = 0.0;
    double best_loss = 0.0;
};

/// Uniform start in the eps-box, `steps` signed-gradient steps of size alpha,
/// each followed by projection to the eps-box and the input range. The best
/// iterate is the one with the highest target loss among iterates 1..steps.
AttackResult pgd(const AttackTarget& target, std::span<const double> x, std::size_t label,
                 const AttackConfig& cfg, const InputRange& range, Rng& rng);
/// pgd with steps = 1.
AttackResult fgsm(const AttackTarget& target, std::span<const double> x, std::size_t label,
                  const AttackConfig& cfg, const InputRange& range, Rng& rng);

/// The perturbation only (no final loss evaluation); shared by the trainers.
std::vector<double> perturb(const AttackTarget& target, std::span<const double> x, std::size_t label,
                            double epsilon, double alpha, int steps, const InputRange& range, Rng& rng);

enum class InferenceMode { sampled, zero, fixed_seed };

std::string to_string(InferenceMode mode);
InferenceMode inference_mode_from_string(const std::string& name);

inline constexpr std::uint64_t kPinnedInferenceSeed = 0x5eed5eedULL;

/// Logits under an inference mode. sampled draws from `rng`; fixed_seed
/// draws from a fresh stream seeded with `pinned_seed`; zero is T_0.
std::vector<double> inference_logits(const PhaseModel& model, const FrequencyState& state,
                                     std::span<const double> x, InferenceMode mode, Rng& rng,
                                     std::uint64_t pinned_seed = kPinnedInferenceSeed);
std::size_t inference(const PhaseModel& model, const FrequencyState& state, std::span<const double> x,
                      InferenceMode mode, Rng& rng, std::uint64_t pinned_seed = kPinnedInferenceSeed);

std::size_t argmax(std::span<const double> v);

struct AttackRecord {
    std::size_t sample_id = 0;
    bool clean_correct = false;
    bool adv_correct = false;
    double final_loss = 0.0;
    double linf = 0.0;
};

struct RobustEvaluation {
    double clean_accuracy = 0.0;
    double robust_accuracy = 0.0;
    std::vector<AttackRecord> records;
};

/// Attacks every sample (best-loss iterate) and classifies clean and
/// perturbed inputs under `mode`. Per-sample streams derive from cfg.seed
/// (attack) and eval_seed (inference).
RobustEvaluation evaluate_robust_accuracy(const PhaseModel& model, const FrequencyState& state,
                                          const Dataset& data, const AttackConfig& cfg,
                                          InferenceMode mode, std::uint64_t eval_seed);

std::string attack_csv_header();
std::string attack_csv_row(const AttackRecord& r);

}  // namespace phaseat
