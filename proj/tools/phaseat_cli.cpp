// phaseat: command-line front end (gen-data, train, attack, analyze, report).

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "phaseat/config.hpp"
#include "phaseat/error.hpp"
#include "phaseat/experiment.hpp"
#include "phaseat/format.hpp"
#include "phaseat/persistence.hpp"

namespace fs = std::filesystem;
using namespace phaseat;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

ExperimentConfig prepare(const Common& c) {
    ExperimentConfig cfg = load_experiment_config(c.config);
    if (c.seed) cfg.apply_seed(*c.seed);
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: training diverged at epoch " << e.epoch() << '\n';
        return kExitDiverged;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-shifted adversarial training toolkit"};
    app.require_subcommand(1);

    Common gen, tr, at, an;
    std::string rep_metrics, rep_out, rep_config;

    auto* gen_cmd = app.add_subcommand("gen-data", "Generate or read the configured dataset and write CSV splits");
    gen_cmd->add_option("--config", gen.config, "Experiment config")->required();
    gen_cmd->add_option("--out", gen.out, "Output directory (default: experiment.output_dir)");
    gen_cmd->add_option("--seed", gen.seed, "Override experiment.seed");

    auto* train_cmd = app.add_subcommand("train", "Run a full experiment");
    train_cmd->add_option("--config", tr.config, "Experiment config")->required();
    train_cmd->add_option("--out", tr.out, "Output directory");
    train_cmd->add_option("--seed", tr.seed, "Override experiment.seed");

    std::string model_path, method = "pgd";
    std::optional<int> steps, eot;
    std::optional<double> epsilon, alpha;
    bool mimic = false;
    auto* attack_cmd = app.add_subcommand("attack", "Attack a saved model on the test split");
    attack_cmd->add_option("--config", at.config, "Experiment config")->required();
    attack_cmd->add_option("--model", model_path, "Saved model (.phat)")->required();
    attack_cmd->add_option("--out", at.out, "Output directory");
    attack_cmd->add_option("--seed", at.seed, "Override experiment.seed");
    attack_cmd->add_option("--method", method, "fgsm or pgd")->check(CLI::IsMember({"fgsm", "pgd"}));
    attack_cmd->add_option("--steps", steps, "PGD steps (default eval.steps)");
    attack_cmd->add_option("--eot", eot, "EOT samples (0 = none)");
    attack_cmd->add_flag("--mimic-frequency", mimic, "Sample frequencies like the defender");
    attack_cmd->add_option("--epsilon", epsilon, "L-infinity budget (default eval.epsilon)");
    attack_cmd->add_option("--alpha", alpha, "Step size (default eval.alpha)");

    std::string an_model;
    auto* analyze_cmd = app.add_subcommand("analyze", "Low/high frequency split of a saved model's outputs");
    analyze_cmd->add_option("--config", an.config, "Experiment config")->required();
    analyze_cmd->add_option("--model", an_model, "Saved model (.phat)")->required();
    analyze_cmd->add_option("--out", an.out, "Output directory");
    analyze_cmd->add_option("--seed", an.seed, "Override experiment.seed");

    auto* report_cmd = app.add_subcommand("report", "Plot-ready curves from metrics.csv");
    report_cmd->add_option("--metrics", rep_metrics, "metrics.csv (default: <output_dir>/metrics.csv)");
    report_cmd->add_option("--config", rep_config, "Experiment config, to locate the output directory");
    report_cmd->add_option("--out", rep_out, "Output directory (default: next to metrics.csv)");

    CLI11_PARSE(app, argc, argv);

    if (*gen_cmd) {
        return guarded([&] {
            const auto cfg = prepare(gen);
            const auto data = generate_data(cfg, cfg.output_dir);
            std::cout << "wrote " << data.train.size() << " train and " << data.test.size() << " test samples to "
                      << cfg.output_dir.string() << '\n';
            return 0;
        });
    }
    if (*train_cmd) {
        std::optional<fs::path> out;
        if (!tr.out.empty()) out = tr.out;
        const int code = run_experiment_file(tr.config, tr.seed, out, std::cerr);
        if (code == kExitOk) std::cout << "training finished\n";
        return code;
    }
    if (*attack_cmd) {
        return guarded([&] {
            const auto cfg = prepare(at);
            const SavedModel saved = load_model(model_path);
            AttackConfig a = cfg.train.eval_attack;
            if (epsilon) a.epsilon = *epsilon;
            if (alpha) a.alpha = *alpha;
            else if (epsilon) a.alpha = *epsilon / 4.0;
            a.steps = method == "fgsm" ? 1 : (steps ? *steps : a.steps);
            if (eot) a.eot_samples = *eot;
            a.mimic_frequency = mimic;
            a.seed = derive_seed(SeedStreams::from(cfg.train.seed).eval, "cli-attack");
            a.validate();
            const auto eval = attack_model(cfg, saved, a, cfg.output_dir);
            std::cout << a.name() << ": clean " << format_double(eval.clean_accuracy) << ", robust "
                      << format_double(eval.robust_accuracy) << '\n';
            return 0;
        });
    }
    if (*analyze_cmd) {
        return guarded([&] {
            const auto cfg = prepare(an);
            const SavedModel saved = load_model(an_model);
            const auto report = analyze_model(cfg, saved, cfg.output_dir);
            std::cout << "e_low " << (report.e_low ? format_double(*report.e_low) : "undefined") << ", e_high "
                      << (report.e_high ? format_double(*report.e_high) : "undefined") << '\n';
            return 0;
        });
    }
    if (*report_cmd) {
        return guarded([&] {
            fs::path metrics = rep_metrics;
            if (metrics.empty()) {
                if (rep_config.empty()) throw ConfigError("report needs --metrics or --config");
                metrics = load_experiment_config(rep_config).output_dir / "metrics.csv";
            }
            const fs::path out = rep_out.empty() ? metrics.parent_path() : fs::path(rep_out);
            write_report(read_metrics_csv(metrics), out);
            std::cout << "wrote curves.csv and curves.svg to " << out.string() << '\n';
            return 0;
        });
    }
    return 0;
}
