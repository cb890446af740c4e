#include "phaseat/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phaseat/error.hpp"
#include "phaseat/rng.hpp"

namespace phaseat {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::phaseat: return "phaseat";
        case Variant::phaseat_iterative: return "phaseat_iterative";
        case Variant::standard_at: return "standard_at";
        case Variant::clean: return "clean";
    }
    return "phaseat";
}

Variant variant_from_string(const std::string& name) {
    if (name == "phaseat") return Variant::phaseat;
    if (name == "phaseat_iterative") return Variant::phaseat_iterative;
    if (name == "standard_at") return Variant::standard_at;
    if (name == "clean") return Variant::clean;
    throw ConfigError("unknown training variant '" + name + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be > 0");
    if (heads < 1) throw ConfigError("model.heads must be >= 1");
    if (k_max < 1) throw ConfigError("freq.k_max must be >= 1");
    if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("freq.decay must lie in [0, 1)");
    if (!(scale > 0.0)) throw ConfigError("model.scale must be > 0");
    if (pc_iters < 1) throw ConfigError("model.pc_iters must be >= 1");
    for (std::size_t h : hidden) {
        if (h == 0) throw ConfigError("hidden widths must be positive");
    }
    attack.validate();
    eval_attack.validate();
    filter.validate();
    if (eval_max_samples < 1) throw ConfigError("eval.max_samples must be >= 1");
}

std::size_t TrainConfig::model_heads() const {
    return (variant == Variant::phaseat || variant == Variant::phaseat_iterative) ? heads : 1;
}

SeedStreams SeedStreams::from(std::uint64_t master) {
    return {derive_seed(master, "init"), derive_seed(master, "data"), derive_seed(master, "attack"),
            derive_seed(master, "frequency-sampling"), derive_seed(master, "eval")};
}

namespace {

// Softmax Jacobian-vector product: J^T v with J = diag(s) - s s^T.
std::vector<double> softmax_vjp(std::span<const double> s, std::span<const double> v) {
    double sv = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sv += s[i] * v[i];
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] * (v[i] - sv);
    return out;
}

struct CosineParts {
    double value = 0.0;
    std::vector<double> grad_a;  // d|cos|/da
    std::vector<double> grad_b;
};

CosineParts abs_cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    const double na = std::sqrt(aa), nb = std::sqrt(bb);
    const double cosv = ab / (na * nb);
    const double sgn = cosv < 0.0 ? -1.0 : 1.0;
    CosineParts out;
    out.value = std::min(1.0, std::abs(cosv));  // rounding can land an ulp above 1
    out.grad_a.resize(a.size());
    out.grad_b.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.grad_a[i] = sgn * (b[i] / (na * nb) - cosv * a[i] / aa);
        out.grad_b[i] = sgn * (a[i] / (na * nb) - cosv * b[i] / bb);
    }
    return out;
}

}  // namespace

AdvLoss adv_loss(const PhaseModel& model, const FrequencyAssignment& freqs, std::span<const double> x,
                 std::size_t label) {
    const auto logits = phase_logits(model, freqs, x);
    const auto logits0 = base_forward(model, x);
    const auto ce = cross_entropy(logits, label);
    const auto s = softmax(logits);
    const auto s0 = softmax(logits0);
    const double reg = abs_cosine(s.values(), s0.values()).value;
    return {ce.loss + reg, ce.loss, reg};
}

AdvLoss adv_loss_gradient(const PhaseModel& model, const FrequencyAssignment& freqs,
                          std::span<const double> x, std::size_t label, double scale,
                          PhaseGradient& grads) {
    const auto fwd = phase_forward(model, freqs, x);
    const auto fwd0 = phase_forward(model, FrequencyAssignment::zeros(model.head_count()), x);
    const auto ce = cross_entropy(fwd.logits, label);
    const auto s = softmax(fwd.logits);
    const auto s0 = softmax(fwd0.logits);
    const auto cosp = abs_cosine(s.values(), s0.values());

    auto g = softmax_vjp(s.values(), cosp.grad_a);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = scale * (g[c] + ce.grad[c]);
    auto g0 = softmax_vjp(s0.values(), cosp.grad_b);
    for (double& v : g0) v *= scale;

    phase_backward_into(model, fwd.trace, g, grads);
    phase_backward_into(model, fwd0.trace, g0, grads);
    return {ce.loss + cosp.value, ce.loss, cosp.value};
}

PhaseModel initial_model(const TrainConfig& cfg, const Dataset& train_data) {
    const SeedStreams streams = SeedStreams::from(cfg.seed);
    ProjectionSpec projection = compute_first_pc(train_data.inputs, cfg.pc_iters, streams.init, cfg.scale);
    ModelShape shape;
    shape.input_dim = train_data.dim();
    shape.hidden = cfg.hidden;
    shape.hidden_activation = cfg.hidden_activation;
    shape.num_classes = train_data.num_classes;
    shape.heads = cfg.model_heads();
    Rng rng(derive_seed(streams.init, "weights"));
    return PhaseModel::create(shape, std::move(projection), rng);
}

namespace {

std::vector<std::size_t> eval_indices(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= cap) return idx;
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

EpochMetrics evaluate_split(const TrainConfig& cfg, const PhaseModel& model, const FrequencyState& state,
                            const Dataset& data, const SpectralAnalyzer* analyzer, std::size_t epoch,
                            const std::string& split) {
    const SeedStreams streams = SeedStreams::from(cfg.seed);
    const std::uint64_t split_seed = derive_seed(streams.eval, split);

    EpochMetrics m;
    m.epoch = epoch;
    m.split = split;
    m.attack_name = cfg.eval_attack.name();

    AttackConfig attack = cfg.eval_attack;
    attack.seed = derive_seed(split_seed, "attack");
    const auto rows = eval_indices(data.size(), cfg.eval_max_samples, derive_seed(split_seed, "subset"));
    const Dataset subset = data.subset(rows);
    const auto eval = evaluate_robust_accuracy(model, state, subset, attack, cfg.eval_mode,
                                               derive_seed(split_seed, "inference"));
    m.clean_accuracy = eval.clean_accuracy;
    m.robust_accuracy = eval.robust_accuracy;

    double loss = 0.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        Rng rng(derive_seed(split_seed, i));
        const auto logits = inference_logits(model, state, subset.input(i), cfg.eval_mode, rng,
                                             derive_seed(derive_seed(split_seed, "inference"), i));
        loss += cross_entropy(logits, subset.labels[i]).loss;
    }
    m.loss = loss / static_cast<double>(subset.size());

    if (analyzer != nullptr) {
        const auto outputs = [&](std::span<const double> x) {
            Rng unused(kPinnedInferenceSeed);
            return softmax(inference_logits(model, state, x, cfg.analysis_mode, unused)).data();
        };
        SpectrumReport report;
        if (cfg.analyze_adversarial) {
            const AttackTarget target = evaluation_target(model, state, cfg.eval_attack);
            const AttackConfig& fg = cfg.eval_attack;
            Rng rng(derive_seed(split_seed, "spectral-attack"));
            report = analyzer->analyze([&](std::span<const double> x) {
                const auto delta = perturb(target, x, argmax(base_forward(model, x)), fg.epsilon, fg.alpha,
                                           1, data.range, rng);
                std::vector<double> adv(x.begin(), x.end());
                for (std::size_t k = 0; k < adv.size(); ++k) adv[k] += delta[k];
                return outputs(adv);
            });
        } else {
            report = analyzer->analyze(outputs);
        }
        m.e_low = report.e_low;
        m.e_high = report.e_high;
    }
    return m;
}

namespace {

struct LoopSettings {
    bool phase = false;     // multi-head, frequency selection, regularised objective
    bool attack = true;     // perturb inputs
    int inner_steps = 1;
};

TrainResult run_training(const TrainConfig& cfg, const LoopSettings& loop, const Dataset& train_data,
                         const Dataset* test_data, const EpochCallback& on_epoch) {
    cfg.validate();
    train_data.validate();
    if (train_data.size() == 0) throw ConfigError("training set is empty");
    if (test_data != nullptr) {
        test_data->validate();
        if (test_data->dim() != train_data.dim()) throw ConfigError("test and train inputs differ in dimension");
    }

    const SeedStreams streams = SeedStreams::from(cfg.seed);
    Rng data_rng(streams.data);
    Rng attack_rng(streams.attack);
    Rng freq_rng(streams.frequency);

    TrainResult result;
    result.model = initial_model(cfg, train_data);
    PhaseModel& model = result.model;
    const std::size_t heads = model.head_count();
    result.state = FrequencyState::create(cfg.k_max, model.num_classes(), cfg.decay);
    result.freqs = FrequencyAssignment::zeros(heads);

    std::optional<SpectralAnalyzer> train_analyzer, test_analyzer;
    if (cfg.analysis_every > 0) {
        FilterConfig fc = cfg.filter;
        fc.seed = derive_seed(streams.eval, "spectral-train");
        train_analyzer.emplace(train_data, fc);
        if (test_data != nullptr) {
            fc.seed = derive_seed(streams.eval, "spectral-test");
            test_analyzer.emplace(*test_data, fc);
        }
    }

    const std::size_t n = train_data.size();
    const std::size_t dim = train_data.dim();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    auto log_event = [&](std::size_t epoch, std::size_t batch, EventKind kind, bool phase_target = false) {
        if (cfg.record_events) result.events.push_back({epoch, batch, kind, phase_target});
    };

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        try {
            std::shuffle(order.begin(), order.end(), data_rng.engine());
            std::vector<std::size_t> histogram(cfg.k_max, 0);
            double epoch_loss = 0.0;
            std::size_t batch_index = 0;

            for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
                const std::size_t stop = std::min(n, start + cfg.batch_size);
                const std::size_t b = stop - start;
                std::vector<double> clean(b * dim), adv(b * dim);
                std::vector<std::size_t> labels(b);
                for (std::size_t j = 0; j < b; ++j) {
                    const auto x = train_data.input(order[start + j]);
                    std::copy(x.begin(), x.end(), clean.begin() + static_cast<long>(j * dim));
                    labels[j] = train_data.labels[order[start + j]];
                }

                // Even batches attack the phase-shifted model, odd batches T_0.
                const bool phase_target = loop.phase && batch_index % 2 == 0;
                BatchLog blog;
                blog.epoch = epoch;
                blog.batch = batch_index;
                blog.phase_target = phase_target;

                if (loop.attack) {
                    const FrequencyAssignment target_freqs =
                        phase_target ? result.freqs : FrequencyAssignment::zeros(heads);
                    const AttackTarget target = make_target(fixed_frequency_model(model, target_freqs), 0);
                    log_event(epoch, batch_index, EventKind::init_delta);
                    for (int s = 0; s < loop.inner_steps; ++s) {
                        log_event(epoch, batch_index, EventKind::sign_step, phase_target);
                        log_event(epoch, batch_index, EventKind::clip);
                    }
                    for (std::size_t j = 0; j < b; ++j) {
                        const std::span<const double> x(clean.data() + j * dim, dim);
                        const auto delta = perturb(target, x, labels[j], cfg.attack.epsilon, cfg.attack.alpha,
                                                   loop.inner_steps, train_data.range, attack_rng);
                        for (std::size_t k = 0; k < dim; ++k) adv[j * dim + k] = x[k] + delta[k];
                    }
                } else {
                    adv = clean;
                }

                const Tensor clean_batch = Tensor::matrix(b, dim, clean);
                const Tensor adv_batch = Tensor::matrix(b, dim, adv);

                if (loop.phase) {
                    result.state = update_discrepancy(result.state, clean_batch, adv_batch, model, result.freqs);
                    log_event(epoch, batch_index, EventKind::discrepancy_update);
                    result.freqs = sample_frequencies(result.state, heads, freq_rng);
                    log_event(epoch, batch_index, EventKind::frequency_sampling);
                    for (std::size_t m = 1; m < heads; ++m) ++histogram[static_cast<std::size_t>(result.freqs.omegas[m])];
                }

                PhaseGradient grads = PhaseGradient::zeros_like(model);
                const double scale = 1.0 / static_cast<double>(b);
                double batch_loss = 0.0;
                double reg_min = 1.0, reg_max = 0.0, reg_sum = 0.0;
                for (std::size_t j = 0; j < b; ++j) {
                    const std::span<const double> x(adv.data() + j * dim, dim);
                    if (loop.phase) {
                        const auto l = adv_loss_gradient(model, result.freqs, x, labels[j], scale, grads);
                        batch_loss += l.loss;
                        reg_min = std::min(reg_min, l.regularizer);
                        reg_max = std::max(reg_max, l.regularizer);
                        reg_sum += l.regularizer;
                    } else {
                        auto fwd = phase_forward(model, result.freqs, x);
                        auto ce = cross_entropy(fwd.logits, labels[j]);
                        for (double& g : ce.grad) g *= scale;
                        phase_backward_into(model, fwd.trace, ce.grad, grads);
                        batch_loss += ce.loss;
                    }
                }
                batch_loss *= scale;
                if (!std::isfinite(batch_loss)) {
                    throw TrainingDiverged(epoch, "non-finite training loss in epoch " + std::to_string(epoch) +
                                                      ", batch " + std::to_string(batch_index));
                }
                model.apply_gradient(grads, cfg.lr);
                log_event(epoch, batch_index, EventKind::parameter_step);

                blog.freqs = result.freqs;
                blog.loss = batch_loss;
                if (loop.phase) {
                    blog.regularizer_min = reg_min;
                    blog.regularizer_max = reg_max;
                    blog.regularizer_mean = reg_sum * scale;
                }
                result.batches.push_back(std::move(blog));
                epoch_loss += batch_loss * static_cast<double>(b);
            }

            const bool analyze = cfg.analysis_every > 0 && (epoch % cfg.analysis_every == 0 || epoch == cfg.epochs);
            EpochMetrics train_metrics = evaluate_split(cfg, model, result.state, train_data,
                                                        analyze ? &*train_analyzer : nullptr, epoch, "train");
            train_metrics.loss = epoch_loss / static_cast<double>(n);
            train_metrics.frequency_histogram = histogram;
            result.metrics.push_back(std::move(train_metrics));
            if (test_data != nullptr) {
                EpochMetrics test_metrics = evaluate_split(cfg, model, result.state, *test_data,
                                                           analyze ? &*test_analyzer : nullptr, epoch, "test");
                test_metrics.frequency_histogram = histogram;
                result.metrics.push_back(std::move(test_metrics));
            }
        } catch (const TrainingDiverged&) {
            throw;
        } catch (const NumericError& e) {
            throw TrainingDiverged(epoch, std::string("numeric failure in epoch ") + std::to_string(epoch) +
                                              ": " + e.what());
        }
        if (on_epoch && !on_epoch(result, epoch)) break;
    }
    return result;
}

}  // namespace

TrainResult train_phaseat(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data,
                          const EpochCallback& on_epoch) {
    cfg.variant = Variant::phaseat;
    return run_training(cfg, {true, true, 1}, train_data, test_data, on_epoch);
}

TrainResult train_phaseat_iterative(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data,
                                    const EpochCallback& on_epoch) {
    cfg.variant = Variant::phaseat_iterative;
    return run_training(cfg, {true, true, cfg.attack.steps}, train_data, test_data, on_epoch);
}

TrainResult train_standard_at(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data,
                              const EpochCallback& on_epoch) {
    cfg.variant = Variant::standard_at;
    return run_training(cfg, {false, true, 1}, train_data, test_data, on_epoch);
}

TrainResult train_clean(TrainConfig cfg, const Dataset& train_data, const Dataset* test_data,
                        const EpochCallback& on_epoch) {
    cfg.variant = Variant::clean;
    return run_training(cfg, {false, false, 1}, train_data, test_data, on_epoch);
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_data, const Dataset* test_data,
                  const EpochCallback& on_epoch) {
    switch (cfg.variant) {
        case Variant::phaseat: return train_phaseat(cfg, train_data, test_data, on_epoch);
        case Variant::phaseat_iterative: return train_phaseat_iterative(cfg, train_data, test_data, on_epoch);
        case Variant::standard_at: return train_standard_at(cfg, train_data, test_data, on_epoch);
        case Variant::clean: return train_clean(cfg, train_data, test_data, on_epoch);
    }
    throw ConfigError("unhandled variant");
}

}  // namespace phaseat
