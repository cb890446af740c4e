#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phaseat/phase_model.hpp"
#include "phaseat/rng.hpp"
#include "phaseat/tensor.hpp"

namespace phaseat {

using Complex = std::complex<double>;

/// Running Fourier statistics of clean and adversarial model outputs along
/// the projection, and the discrepancy they induce.
struct FrequencyState {
    std::size_t k_max = 64;
    std::size_t num_classes = 0;
    double decay = 0.9;
    std::vector<Complex> ema_clean;  // k_max x num_classes, row-major by k
    std::vector<Complex> ema_adv;
    std::vector<double> discrepancy;  // k_max
    std::uint64_t updates = 0;

    static FrequencyState create(std::size_t k_max, std::size_t num_classes, double decay = 0.9);
    void validate() const;

    friend bool operator==(const FrequencyState&, const FrequencyState&) = default;
};

/// F_k = sum_j outputs_j exp(-2 pi i k z_j), one complex value per class.
std::vector<Complex> fourier_coefficient(const Tensor& outputs, std::span<const double> zs, long k);

/// d_k = sum_c |a_{k,c} - b_{k,c}|.
std::vector<double> discrepancy_from(std::span<const Complex> clean, std::span<const Complex> adv,
                                     std::size_t k_max, std::size_t num_classes);

/// EMA update from already-evaluated outputs and their projections.
FrequencyState update_discrepancy_from_outputs(const FrequencyState& state,
                                               const Tensor& clean_outputs,
                                               std::span<const double> clean_z,
                                               const Tensor& adv_outputs,
                                               std::span<const double> adv_z);

/// Evaluates the phase-shifted model on both batches (rows of N x d tensors)
/// and applies the EMA update.
FrequencyState update_discrepancy(const FrequencyState& state, const Tensor& clean_batch,
                                  const Tensor& adv_batch, const PhaseModel& model,
                                  const FrequencyAssignment& freqs);

/// Slot 0 is zero; the remaining heads draw i.i.d. from d / sum(d), or
/// uniformly over [0, k_max) when sum(d) = 0.
FrequencyAssignment sample_frequencies(const FrequencyState& state, std::size_t heads, Rng& rng);

/// Target distribution used by sample_frequencies for slots >= 1.
std::vector<double> sampling_distribution(const FrequencyState& state);

std::string discrepancy_csv_header(std::size_t k_max);
std::string discrepancy_csv_row(const FrequencyState& state);

}  // namespace phaseat
