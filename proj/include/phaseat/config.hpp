#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "phaseat/attacks.hpp"
#include "phaseat/dataset.hpp"
#include "phaseat/trainer.hpp"

namespace phaseat {

/// Everything one experiment needs; parsed from `section.key = value` lines.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    DatasetSpec data;
    std::size_t test_n = 0;        // generated kinds; 0 = n / 4
    double test_fraction = 0.2;    // image-binary: trailing share held out

    TrainConfig train;

    std::vector<AttackConfig> eval_attacks;  // final evaluation on the test split
    int eval_eot_samples = 10;               // EOT draws for "+eot" attacks

    void validate() const;
    /// Propagates the experiment seed into the train config.
    void apply_seed(std::uint64_t master);
};

/// Parses "fgsm", "pgd50", "pgd50+eot", "pgd50+eot+frequency", "pgd50+frequency".
AttackConfig parse_attack_name(const std::string& name, double epsilon, double alpha, int eot_samples);

/// Throws ConfigError naming the offending line on any invalid or unknown key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Raw key/value pairs in file order, for diagnostics.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace phaseat
