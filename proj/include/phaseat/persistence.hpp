#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "phaseat/freq_select.hpp"
#include "phaseat/phase_model.hpp"

namespace phaseat {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// A model plus the frequency state needed for sampled inference.
struct SavedModel {
    PhaseModel model;
    std::optional<FrequencyState> state;
};

/// "PHAT", u32 version, architecture descriptor, little-endian f64 parameters,
/// then an optional frequency-state block.
std::vector<unsigned char> serialize_model(const PhaseModel& model, const FrequencyState* state = nullptr);
/// Throws FormatError on bad magic, unknown version, truncation or trailing bytes.
SavedModel deserialize_model(std::span<const unsigned char> bytes);

void save_model(const std::filesystem::path& path, const PhaseModel& model,
                const FrequencyState* state = nullptr);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace phaseat
