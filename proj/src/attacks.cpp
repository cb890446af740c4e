#include "phaseat/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "phaseat/error.hpp"
#include "phaseat/format.hpp"

namespace phaseat {

void AttackConfig::validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("attack epsilon must be >= 0");
    if (steps < 1) throw ConfigError("attack steps must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("attack alpha must be > 0");
    if (eot_samples < 0) throw ConfigError("eot_samples must be >= 0");
}

std::string AttackConfig::name() const {
    std::string n = steps == 1 ? "fgsm" : "pgd" + std::to_string(steps);
    if (eot_samples > 0) n += "+eot";
    if (mimic_frequency) n += "+frequency";
    return n;
}

double Perturbation::linf() const {
    double m = 0.0;
    for (double v : delta.values()) m = std::max(m, std::abs(v));
    return m;
}

LossGradient model_loss_gradient(const PhaseModel& model, const FrequencyAssignment& freqs,
                                 std::span<const double> x, std::size_t label) {
    auto fwd = phase_forward(model, freqs, x);
    auto ce = cross_entropy(fwd.logits, label);
    auto back = phase_backward(model, fwd.trace, ce.grad);
    return {ce.loss, std::move(back.grad_x)};
}

StochasticModel::StochasticModel(const PhaseModel& model, FrequencySampler sampler, bool deterministic)
    : model_(&model), sampler_(std::move(sampler)), deterministic_(deterministic) {}

std::vector<double> StochasticModel::logits(std::span<const double> x, Rng& rng) const {
    return phase_logits(*model_, sampler_(rng), x);
}

LossGradient StochasticModel::loss_gradient(std::span<const double> x, std::size_t label, Rng& rng) const {
    return model_loss_gradient(*model_, sampler_(rng), x, label);
}

StochasticModel fixed_frequency_model(const PhaseModel& model, FrequencyAssignment freqs) {
    if (freqs.size() != model.head_count()) throw ShapeError("frequency assignment length mismatch");
    return StochasticModel(model, [freqs = std::move(freqs)](Rng&) { return freqs; }, true);
}

StochasticModel zero_frequency_model(const PhaseModel& model) {
    return fixed_frequency_model(model, FrequencyAssignment::zeros(model.head_count()));
}

StochasticModel uniform_frequency_sampler(const PhaseModel& model, std::size_t k_max) {
    const std::size_t heads = model.head_count();
    if (k_max == 0) throw ConfigError("k_max must be positive");
    return StochasticModel(
        model,
        [heads, k_max](Rng& rng) {
            auto f = FrequencyAssignment::zeros(heads);
            for (std::size_t m = 1; m < heads; ++m) f.omegas[m] = static_cast<int>(rng.index(k_max));
            return f;
        },
        heads == 1);
}

StochasticModel mimic_frequency_sampler(const FrequencyState& state, const PhaseModel& model) {
    const std::size_t heads = model.head_count();
    const auto dist = sampling_distribution(state);
    const bool deterministic =
        heads == 1 || std::count_if(dist.begin(), dist.end(), [](double p) { return p > 0.0; }) == 1;
    return StochasticModel(
        model, [state, heads](Rng& rng) { return sample_frequencies(state, heads, rng); }, deterministic);
}

LossGradient eot_gradient(const StochasticModel& sampler, std::span<const double> x,
                          std::size_t label, int n, Rng& rng) {
    if (n < 1) throw ConfigError("EOT needs at least one sample");
    LossGradient mean{0.0, std::vector<double>(x.size(), 0.0)};
    for (int s = 0; s < n; ++s) {
        auto lg = sampler.loss_gradient(x, label, rng);
        mean.loss += lg.loss;
        for (std::size_t k = 0; k < x.size(); ++k) mean.grad[k] += lg.grad[k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    mean.loss *= inv;
    for (double& g : mean.grad) g *= inv;
    return mean;
}

AttackTarget make_target(StochasticModel sampler, int eot_samples) {
    if (eot_samples <= 1) {
        return [sampler = std::move(sampler)](std::span<const double> x, std::size_t y, Rng& rng) {
            return sampler.loss_gradient(x, y, rng);
        };
    }
    return [sampler = std::move(sampler), eot_samples](std::span<const double> x, std::size_t y, Rng& rng) {
        return eot_gradient(sampler, x, y, eot_samples, rng);
    };
}

AttackTarget evaluation_target(const PhaseModel& model, const FrequencyState& state,
                               const AttackConfig& cfg) {
    if (cfg.mimic_frequency) return make_target(mimic_frequency_sampler(state, model), cfg.eot_samples);
    if (cfg.eot_samples > 0) return make_target(uniform_frequency_sampler(model, state.k_max), cfg.eot_samples);
    return make_target(zero_frequency_model(model), 0);
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// One signed step, then projection onto the eps-box and the input range.
void step_and_project(std::vector<double>& delta, std::span<const double> x, std::span<const double> grad,
                      double epsilon, double alpha, const InputRange& range) {
    for (std::size_t k = 0; k < delta.size(); ++k) {
        double d = delta[k] + alpha * sign(grad[k]);
        d = std::max(std::min(d, epsilon), -epsilon);
        delta[k] = range.clamp(x[k] + d) - x[k];
    }
}

std::vector<double> uniform_start(std::span<const double> x, double epsilon, const InputRange& range,
                                  Rng& rng) {
    std::vector<double> delta(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = epsilon * rng.uniform(-1.0, 1.0);
        delta[k] = range.clamp(x[k] + d) - x[k];
    }
    return delta;
}

std::vector<double> shifted(std::span<const double> x, const std::vector<double>& delta) {
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] + delta[k];
    return out;
}

}  // namespace

std::vector<double> perturb(const AttackTarget& target, std::span<const double> x, std::size_t label,
                            double epsilon, double alpha, int steps, const InputRange& range, Rng& rng) {
    auto delta = uniform_start(x, epsilon, range, rng);
    for (int s = 0; s < steps; ++s) {
        const auto lg = target(shifted(x, delta), label, rng);
        step_and_project(delta, x, lg.grad, epsilon, alpha, range);
    }
    return delta;
}

AttackResult pgd(const AttackTarget& target, std::span<const double> x, std::size_t label,
                 const AttackConfig& cfg, const InputRange& range, Rng& rng) {
    cfg.validate();
    auto delta = uniform_start(x, cfg.epsilon, range, rng);
    AttackResult result;
    bool have_best = false;
    auto consider = [&](double loss) {
        if (!have_best || loss > result.best_loss) {
            result.best_loss = loss;
            result.best_delta.delta = Tensor::vector(delta);
            have_best = true;
        }
    };
    for (int s = 0; s < cfg.steps; ++s) {
        const auto lg = target(shifted(x, delta), label, rng);
        if (s > 0) consider(lg.loss);  // loss of iterate s
        step_and_project(delta, x, lg.grad, cfg.epsilon, cfg.alpha, range);
    }
    const auto last = target(shifted(x, delta), label, rng);
    consider(last.loss);
    result.final_loss = last.loss;
    result.final_delta.delta = Tensor::vector(std::move(delta));
    return result;
}

AttackResult fgsm(const AttackTarget& target, std::span<const double> x, std::size_t label,
                  const AttackConfig& cfg, const InputRange& range, Rng& rng) {
    AttackConfig one = cfg;
    one.steps = 1;
    return pgd(target, x, label, one, range, rng);
}

std::string to_string(InferenceMode mode) {
    switch (mode) {
        case InferenceMode::sampled: return "sampled";
        case InferenceMode::zero: return "zero";
        case InferenceMode::fixed_seed: return "fixed-seed";
    }
    return "zero";
}

InferenceMode inference_mode_from_string(const std::string& name) {
    if (name == "sampled") return InferenceMode::sampled;
    if (name == "zero") return InferenceMode::zero;
    if (name == "fixed-seed") return InferenceMode::fixed_seed;
    throw ConfigError("unknown inference mode '" + name + "'");
}

std::vector<double> inference_logits(const PhaseModel& model, const FrequencyState& state,
                                     std::span<const double> x, InferenceMode mode, Rng& rng,
                                     std::uint64_t pinned_seed) {
    switch (mode) {
        case InferenceMode::zero: return base_forward(model, x);
        case InferenceMode::sampled:
            return phase_logits(model, sample_frequencies(state, model.head_count(), rng), x);
        case InferenceMode::fixed_seed: {
            Rng pinned(pinned_seed);
            return phase_logits(model, sample_frequencies(state, model.head_count(), pinned), x);
        }
    }
    return base_forward(model, x);
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t inference(const PhaseModel& model, const FrequencyState& state, std::span<const double> x,
                      InferenceMode mode, Rng& rng, std::uint64_t pinned_seed) {
    return argmax(inference_logits(model, state, x, mode, rng, pinned_seed));
}

RobustEvaluation evaluate_robust_accuracy(const PhaseModel& model, const FrequencyState& state,
                                          const Dataset& data, const AttackConfig& cfg,
                                          InferenceMode mode, std::uint64_t eval_seed) {
    if (data.size() == 0) throw ShapeError("robust accuracy of an empty dataset");
    cfg.validate();
    const AttackTarget target = evaluation_target(model, state, cfg);
    RobustEvaluation out;
    out.records.reserve(data.size());
    std::size_t clean_hits = 0, adv_hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.input(i);
        const std::size_t y = data.labels[i];
        const std::uint64_t pin = derive_seed(eval_seed, i);

        Rng predict_rng(pin);
        const bool clean_ok = inference(model, state, x, mode, predict_rng, pin) == y;

        Rng attack_rng(derive_seed(cfg.seed, i));
        const auto res = pgd(target, x, y, cfg, data.range, attack_rng);
        const auto adv = [&] {
            std::vector<double> v(x.begin(), x.end());
            for (std::size_t k = 0; k < v.size(); ++k) v[k] += res.best_delta.delta[k];
            return v;
        }();
        Rng predict_adv_rng(pin);
        const bool adv_ok = inference(model, state, adv, mode, predict_adv_rng, pin) == y;

        clean_hits += clean_ok;
        adv_hits += adv_ok;
        out.records.push_back({i, clean_ok, adv_ok, res.best_loss, res.best_delta.linf()});
    }
    out.clean_accuracy = static_cast<double>(clean_hits) / static_cast<double>(data.size());
    out.robust_accuracy = static_cast<double>(adv_hits) / static_cast<double>(data.size());
    return out;
}

std::string attack_csv_header() { return "sample_id,clean_correct,adv_correct,final_loss,linf"; }

std::string attack_csv_row(const AttackRecord& r) {
    return std::to_string(r.sample_id) + ',' + (r.clean_correct ? "1" : "0") + ',' +
           (r.adv_correct ? "1" : "0") + ',' + format_double(r.final_loss) + ',' + format_double(r.linf);
}

}  // namespace phaseat
