#include "phaseat/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "phaseat/error.hpp"
#include "phaseat/format.hpp"

namespace phaseat {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

std::vector<std::size_t> iota_range(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> v;
    for (std::size_t i = lo; i < hi; ++i) v.push_back(i);
    return v;
}

std::string checkpoint_name(std::size_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03zu.phat", epoch);
    return buf;
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : "undefined"; }

}  // namespace

SplitData load_datasets(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.data.kind == DatasetKind::image_binary) {
        const Dataset all = read_image_binary_file(cfg.data.path, cfg.data.height, cfg.data.width,
                                                   cfg.data.channels, cfg.data.num_classes);
        const auto n = all.size();
        auto n_test = static_cast<std::size_t>(static_cast<double>(n) * cfg.test_fraction);
        if (n < 2 || n_test == 0 || n_test >= n) {
            throw ConfigError("image-binary file has too few records to split (" + std::to_string(n) + ")");
        }
        const auto train_idx = iota_range(0, n - n_test);
        const auto test_idx = iota_range(n - n_test, n);
        return {all.subset(train_idx), all.subset(test_idx)};
    }
    SplitData out;
    out.train = gen_dataset(cfg.data);
    DatasetSpec test_spec = cfg.data;
    test_spec.n = cfg.test_n == 0 ? std::max<std::size_t>(2, cfg.data.n / 4) : cfg.test_n;
    test_spec.seed = derive_seed(cfg.data.seed, "test");
    out.test = gen_dataset(test_spec);
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const SplitData data = load_datasets(cfg);

    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir / "checkpoints");
    write_text(dir / "config.txt", to_config_text(cfg));
    MetricsWriter metrics(dir / "metrics.csv");

    ExperimentResult result;
    auto on_epoch = [&](const TrainResult& r, std::size_t epoch) {
        for (const auto& m : r.metrics) {
            if (m.epoch == epoch) metrics.append(to_row(m));
        }
        save_model(dir / "checkpoints" / checkpoint_name(epoch), r.model, &r.state);
        return true;
    };
    result.training = train(cfg.train, data.train, &data.test, on_epoch);
    const TrainResult& tr = result.training;
    save_model(dir / "model.phat", tr.model, &tr.state);

    const SeedStreams streams = SeedStreams::from(cfg.train.seed);
    for (std::size_t a = 0; a < cfg.eval_attacks.size(); ++a) {
        const AttackConfig& attack = cfg.eval_attacks[a];
        std::vector<std::size_t> rows = iota_range(0, std::min(data.test.size(), cfg.train.eval_max_samples));
        const Dataset subset = data.test.subset(rows);
        const auto eval = evaluate_robust_accuracy(tr.model, tr.state, subset, attack, cfg.train.eval_mode,
                                                   derive_seed(streams.eval, "final-inference"));
        MetricsRow row;
        row.epoch = cfg.train.epochs;
        row.split = "eval";
        row.clean_acc = eval.clean_accuracy;
        row.robust_acc = eval.robust_accuracy;
        row.attack_name = attack.name();
        double loss = 0.0;
        for (const auto& rec : eval.records) loss += rec.final_loss;
        row.loss = eval.records.empty() ? 0.0 : loss / static_cast<double>(eval.records.size());
        metrics.append(row);
        result.eval_rows.push_back(row);
    }

    std::ostringstream s;
    s << "variant: " << to_string(cfg.train.variant) << '\n';
    s << "seed: " << cfg.seed << '\n';
    s << "epochs: " << cfg.train.epochs << '\n';
    s << "train_samples: " << data.train.size() << '\n';
    s << "test_samples: " << data.test.size() << '\n';
    for (auto it = tr.metrics.rbegin(); it != tr.metrics.rend(); ++it) {
        if (it->epoch != tr.metrics.back().epoch) break;
        const std::string p = it->split + "_";
        s << p << "clean_acc: " << format_double(it->clean_accuracy) << '\n';
        s << p << "robust_acc: " << format_double(it->robust_accuracy) << " (" << it->attack_name << ")\n";
        s << p << "e_low: " << optional_text(it->e_low) << '\n';
        s << p << "e_high: " << optional_text(it->e_high) << '\n';
        s << p << "loss: " << format_double(it->loss) << '\n';
    }
    for (const auto& row : result.eval_rows) {
        s << "eval " << row.attack_name << ": clean " << format_double(row.clean_acc) << ", robust "
          << format_double(row.robust_acc) << '\n';
    }
    write_text(dir / "summary.txt", s.str());
    return result;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    ExperimentConfig cfg = load_config(path);
    if (!cfg.data.path.empty() && cfg.data.path.is_relative()) {
        cfg.data.path = path.parent_path() / cfg.data.path;
    }
    return cfg;
}

int run_experiment_file(const fs::path& config_path, std::optional<std::uint64_t> seed,
                        std::optional<fs::path> out, std::ostream& err) {
    ExperimentConfig cfg;
    try {
        cfg = load_experiment_config(config_path);
        if (seed) cfg.apply_seed(*seed);
        if (out) cfg.output_dir = *out;
        cfg.validate();
        load_datasets(cfg);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    try {
        run_experiment(cfg);
    } catch (const TrainingDiverged& e) {
        err << "error: training diverged at epoch " << e.epoch() << ": " << e.what() << '\n';
        return kExitDiverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

SplitData generate_data(const ExperimentConfig& cfg, const fs::path& out) {
    SplitData data = load_datasets(cfg);
    fs::create_directories(out);
    write_dataset_csv(data.train, out / "train.csv");
    write_dataset_csv(data.test, out / "test.csv");
    return data;
}

RobustEvaluation attack_model(const ExperimentConfig& cfg, const SavedModel& saved, const AttackConfig& attack,
                              const fs::path& out) {
    const SplitData data = load_datasets(cfg);
    if (data.test.dim() != saved.model.input_dim()) throw ConfigError("model and dataset dimensions differ");
    const FrequencyState state = saved.state ? *saved.state
                                             : FrequencyState::create(cfg.train.k_max, saved.model.num_classes(),
                                                                      cfg.train.decay);
    const SeedStreams streams = SeedStreams::from(cfg.train.seed);
    const auto eval = evaluate_robust_accuracy(saved.model, state, data.test, attack, cfg.train.eval_mode,
                                               derive_seed(streams.eval, "final-inference"));
    fs::create_directories(out);
    std::ostringstream csv;
    csv << attack_csv_header() << '\n';
    for (const auto& r : eval.records) csv << attack_csv_row(r) << '\n';
    write_text(out / "attack_report.csv", csv.str());
    return eval;
}

SpectrumReport analyze_model(const ExperimentConfig& cfg, const SavedModel& saved, const fs::path& out) {
    const SplitData data = load_datasets(cfg);
    if (data.test.dim() != saved.model.input_dim()) throw ConfigError("model and dataset dimensions differ");
    FilterConfig fc = cfg.train.filter;
    fc.seed = derive_seed(SeedStreams::from(cfg.train.seed).eval, "spectral-test");
    const SpectralAnalyzer analyzer(data.test, fc);
    const PhaseModel& model = saved.model;
    SpectrumReport report =
        analyzer.analyze([&](std::span<const double> x) { return softmax(base_forward(model, x)).data(); });

    const std::size_t d = data.test.dim();
    const std::size_t c = report.label_low.row_size();
    std::ostringstream csv;
    csv << "index";
    for (std::size_t k = 0; k < d; ++k) csv << ",x" << k;
    for (const char* part : {"label_low", "label_high", "output_low", "output_high"}) {
        for (std::size_t k = 0; k < c; ++k) csv << ',' << part << k;
    }
    csv << '\n';
    for (std::size_t j = 0; j < report.indices.size(); ++j) {
        csv << report.indices[j];
        for (double v : analyzer.points().row(j)) csv << ',' << format_double(v);
        for (const Tensor* t : {&report.label_low, &report.label_high, &report.output_low, &report.output_high}) {
            for (double v : t->row(j)) csv << ',' << format_double(v);
        }
        csv << '\n';
    }
    fs::create_directories(out);
    write_text(out / "spectrum.csv", csv.str());
    write_text(out / "spectrum_summary.txt",
               "e_low: " + optional_text(report.e_low) + "\ne_high: " + optional_text(report.e_high) + "\n");
    return report;
}

std::string render_curves_svg(const std::vector<MetricsRow>& rows, const std::string& split) {
    constexpr double W = 640, H = 400, L = 50, R = 130, T = 20, B = 40;
    std::vector<const MetricsRow*> pts;
    for (const auto& r : rows) {
        if (r.split == split) pts.push_back(&r);
    }
    double max_epoch = 1, max_y = 1;
    for (const auto* r : pts) {
        max_epoch = std::max(max_epoch, static_cast<double>(r->epoch));
        if (r->e_low) max_y = std::max(max_y, *r->e_low);
        if (r->e_high) max_y = std::max(max_y, *r->e_high);
    }
    auto sx = [&](double e) { return L + (W - L - R) * e / max_epoch; };
    auto sy = [&](double v) { return H - B - (H - T - B) * v / max_y; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << (W - R) / 2 << "\" y=\"" << H - 8 << "\" font-size=\"12\">epoch (" << split << ")</text>\n";
    o << "<text x=\"4\" y=\"" << T + 4 << "\" font-size=\"10\">" << format_double(max_y) << "</text>\n";
    o << "<text x=\"4\" y=\"" << H - B << "\" font-size=\"10\">0</text>\n";

    struct Series {
        const char* name;
        const char* colour;
        std::optional<double> (*get)(const MetricsRow&);
    };
    const Series series[] = {
        {"clean_acc", "#1f77b4", [](const MetricsRow& r) { return std::optional<double>(r.clean_acc); }},
        {"robust_acc", "#d62728", [](const MetricsRow& r) { return std::optional<double>(r.robust_acc); }},
        {"e_low", "#2ca02c", [](const MetricsRow& r) { return r.e_low; }},
        {"e_high", "#9467bd", [](const MetricsRow& r) { return r.e_high; }},
    };
    double legend_y = T + 10;
    for (const auto& s : series) {
        std::ostringstream poly;
        for (const auto* r : pts) {
            if (const auto v = s.get(*r)) poly << sx(static_cast<double>(r->epoch)) << ',' << sy(*v) << ' ';
        }
        o << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"2\" points=\"" << poly.str()
          << "\"/>\n";
        o << "<text x=\"" << W - R + 10 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\"" << s.colour
          << "\">" << s.name << "</text>\n";
        legend_y += 16;
    }
    o << "</svg>\n";
    return o.str();
}

void write_report(const std::vector<MetricsRow>& rows, const fs::path& out) {
    fs::create_directories(out);
    std::ostringstream csv;
    csv << "split,epoch,clean_acc,robust_acc,e_low,e_high,loss\n";
    for (const auto& r : rows) {
        if (r.split == "eval") continue;
        csv << r.split << ',' << r.epoch << ',' << format_double(r.clean_acc) << ',' << format_double(r.robust_acc)
            << ',' << (r.e_low ? format_double(*r.e_low) : "") << ',' << (r.e_high ? format_double(*r.e_high) : "")
            << ',' << format_double(r.loss) << '\n';
    }
    write_text(out / "curves.csv", csv.str());
    const bool has_test = std::any_of(rows.begin(), rows.end(), [](const MetricsRow& r) { return r.split == "test"; });
    write_text(out / "curves.svg", render_curves_svg(rows, has_test ? "test" : "train"));
}

}  // namespace phaseat
