#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phaseat/attacks.hpp"
#include "phaseat/config.hpp"
#include "phaseat/dataset.hpp"
#include "phaseat/metrics.hpp"
#include "phaseat/persistence.hpp"
#include "phaseat/trainer.hpp"

namespace phaseat {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitInvalid = 2, kExitDiverged = 3 };

struct SplitData {
    Dataset train;
    Dataset test;
};

/// Generates or reads the configured data and splits it. Throws ConfigError
/// or FormatError before anything is written.
SplitData load_datasets(const ExperimentConfig& cfg);

struct ExperimentResult {
    TrainResult training;
    std::vector<MetricsRow> eval_rows;  // split "eval", one per configured attack
};

/// Trains, evaluates and writes metrics.csv, checkpoints/, model.phat and
/// summary.txt under cfg.output_dir. Exceptions propagate.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Loads the config, applies overrides, runs, and maps failures to exit codes
/// with a diagnostic on `err`.
int run_experiment_file(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                        std::optional<std::filesystem::path> out, std::ostream& err);

/// Config loading with relative dataset paths resolved against the config's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// train.csv and test.csv under `out`.
SplitData generate_data(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Attacks the test split of `cfg` with `attack`; writes attack_report.csv.
RobustEvaluation attack_model(const ExperimentConfig& cfg, const SavedModel& saved, const AttackConfig& attack,
                              const std::filesystem::path& out);

/// Per-point low/high split of labels and zero-mode softmax outputs on the
/// test split; writes spectrum.csv and returns the report.
SpectrumReport analyze_model(const ExperimentConfig& cfg, const SavedModel& saved,
                             const std::filesystem::path& out);

/// curves.csv and curves.svg (accuracy and e_low/e_high against epoch).
void write_report(const std::vector<MetricsRow>& rows, const std::filesystem::path& out);

/// A fixed-size SVG line chart for the report.
std::string render_curves_svg(const std::vector<MetricsRow>& rows, const std::string& split);

}  // namespace phaseat
