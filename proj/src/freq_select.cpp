#include "phaseat/freq_select.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "phaseat/error.hpp"
#include "phaseat/format.hpp"

namespace phaseat {

FrequencyState FrequencyState::create(std::size_t k_max, std::size_t num_classes, double decay) {
    FrequencyState s;
    s.k_max = k_max;
    s.num_classes = num_classes;
    s.decay = decay;
    s.ema_clean.assign(k_max * num_classes, Complex{});
    s.ema_adv.assign(k_max * num_classes, Complex{});
    s.discrepancy.assign(k_max, 0.0);
    s.validate();
    return s;
}

void FrequencyState::validate() const {
    if (k_max == 0) throw ConfigError("k_max must be positive");
    if (num_classes == 0) throw ConfigError("frequency state needs at least one class");
    if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("EMA decay must lie in [0, 1)");
    if (ema_clean.size() != k_max * num_classes || ema_adv.size() != k_max * num_classes ||
        discrepancy.size() != k_max) {
        throw ShapeError("frequency state vectors have inconsistent lengths");
    }
    for (double d : discrepancy) {
        if (!(d >= 0.0) || !std::isfinite(d)) throw NumericError("discrepancy must be finite and non-negative");
    }
}

std::vector<Complex> fourier_coefficient(const Tensor& outputs, std::span<const double> zs, long k) {
    const std::size_t batch = outputs.rows();
    if (batch == 0) throw ShapeError("fourier coefficient of an empty batch");
    if (zs.size() != batch) throw ShapeError("outputs and projections differ in batch length");
    const std::size_t classes = outputs.rank() == 1 ? 1 : outputs.row_size();
    std::vector<Complex> coeff(classes, Complex{});
    for (std::size_t j = 0; j < batch; ++j) {
        const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) * zs[j];
        const Complex w = k == 0 ? Complex(1.0, 0.0) : std::polar(1.0, phase);
        const auto row = outputs.row(j);
        for (std::size_t c = 0; c < classes; ++c) coeff[c] += row[c] * w;
    }
    return coeff;
}

std::vector<double> discrepancy_from(std::span<const Complex> clean, std::span<const Complex> adv,
                                     std::size_t k_max, std::size_t num_classes) {
    std::vector<double> d(k_max, 0.0);
    for (std::size_t k = 0; k < k_max; ++k) {
        for (std::size_t c = 0; c < num_classes; ++c) {
            d[k] += std::abs(clean[k * num_classes + c] - adv[k * num_classes + c]);
        }
    }
    return d;
}

FrequencyState update_discrepancy_from_outputs(const FrequencyState& state,
                                               const Tensor& clean_outputs,
                                               std::span<const double> clean_z,
                                               const Tensor& adv_outputs,
                                               std::span<const double> adv_z) {
    state.validate();
    if (clean_outputs.rows() != adv_outputs.rows()) throw ShapeError("clean and adversarial batches differ in length");
    const std::size_t classes = state.num_classes;
    if (clean_outputs.row_size() != classes || adv_outputs.row_size() != classes) {
        throw ShapeError("output width does not match frequency state class count");
    }
    FrequencyState next = state;
    const double keep = state.decay;
    const double take = 1.0 - state.decay;
    for (std::size_t k = 0; k < state.k_max; ++k) {
        const auto fc = fourier_coefficient(clean_outputs, clean_z, static_cast<long>(k));
        const auto fa = fourier_coefficient(adv_outputs, adv_z, static_cast<long>(k));
        for (std::size_t c = 0; c < classes; ++c) {
            auto& ec = next.ema_clean[k * classes + c];
            auto& ea = next.ema_adv[k * classes + c];
            ec = keep * ec + take * fc[c];
            ea = keep * ea + take * fa[c];
        }
    }
    next.discrepancy = discrepancy_from(next.ema_clean, next.ema_adv, next.k_max, classes);
    ++next.updates;
    return next;
}

FrequencyState update_discrepancy(const FrequencyState& state, const Tensor& clean_batch,
                                  const Tensor& adv_batch, const PhaseModel& model,
                                  const FrequencyAssignment& freqs) {
    try {
        model.projection().validate();
    } catch (const StateError& e) {
        throw StateError(std::string("discrepancy update needs a projection: ") + e.what());
    }
    if (clean_batch.rows() != adv_batch.rows() || clean_batch.row_size() != adv_batch.row_size()) {
        throw ShapeError("clean and adversarial batches are not aligned");
    }
    const std::size_t batch = clean_batch.rows();
    const std::size_t classes = model.num_classes();
    std::vector<double> clean_out(batch * classes), adv_out(batch * classes);
    std::vector<double> clean_z(batch), adv_z(batch);
    for (std::size_t j = 0; j < batch; ++j) {
        const auto xc = clean_batch.row(j);
        const auto xa = adv_batch.row(j);
        const auto lc = phase_logits(model, freqs, xc);
        const auto la = phase_logits(model, freqs, xa);
        std::copy(lc.begin(), lc.end(), clean_out.begin() + static_cast<long>(j * classes));
        std::copy(la.begin(), la.end(), adv_out.begin() + static_cast<long>(j * classes));
        clean_z[j] = project(xc, model.projection());
        adv_z[j] = project(xa, model.projection());
    }
    return update_discrepancy_from_outputs(state, Tensor::matrix(batch, classes, std::move(clean_out)),
                                           clean_z, Tensor::matrix(batch, classes, std::move(adv_out)),
                                           adv_z);
}

std::vector<double> sampling_distribution(const FrequencyState& state) {
    const double total = std::accumulate(state.discrepancy.begin(), state.discrepancy.end(), 0.0);
    std::vector<double> p(state.k_max);
    if (!(total > 0.0)) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(state.k_max));
        return p;
    }
    for (std::size_t k = 0; k < state.k_max; ++k) p[k] = state.discrepancy[k] / total;
    return p;
}

FrequencyAssignment sample_frequencies(const FrequencyState& state, std::size_t heads, Rng& rng) {
    FrequencyAssignment out = FrequencyAssignment::zeros(heads);
    if (heads <= 1) return out;
    const double total = std::accumulate(state.discrepancy.begin(), state.discrepancy.end(), 0.0);
    if (total > 0.0) {
        std::discrete_distribution<int> dist(state.discrepancy.begin(), state.discrepancy.end());
        for (std::size_t m = 1; m < heads; ++m) out.omegas[m] = dist(rng.engine());
    } else {
        for (std::size_t m = 1; m < heads; ++m) out.omegas[m] = static_cast<int>(rng.index(state.k_max));
    }
    return out;
}

std::string discrepancy_csv_header(std::size_t k_max) {
    std::string line;
    for (std::size_t k = 0; k < k_max; ++k) {
        if (k) line += ',';
        line += 'k';
        line += std::to_string(k);
    }
    return line;
}

std::string discrepancy_csv_row(const FrequencyState& state) {
    std::string line;
    for (std::size_t k = 0; k < state.discrepancy.size(); ++k) {
        if (k) line += ',';
        line += format_double(state.discrepancy[k]);
    }
    return line;
}

}  // namespace phaseat
