#include "phaseat/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "phaseat/error.hpp"
#include "phaseat/format.hpp"

namespace phaseat {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

int to_int(const std::string& v) {
    int out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw ConfigError("expected an integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& v) {
    try {
        const double d = parse_double(v);
        if (!std::isfinite(d)) throw ConfigError("expected a finite number, got '" + v + "'");
        return d;
    } catch (const FormatError&) {
        throw ConfigError("expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected true/false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(item));
    return out;
}

std::vector<std::size_t> to_sizes(const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) out.push_back(to_size(item));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(items[i]);
        } else {
            out += std::to_string(items[i]);
        }
    }
    return out;
}

struct Pending {
    std::vector<std::string> attack_names;
    bool alpha_set = false;
    bool eval_alpha_set = false;
};

using Setter = std::function<void(ExperimentConfig&, Pending&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.seed", [](auto& c, auto&, const auto& v) { c.seed = to_u64(v); }},
        {"experiment.output_dir", [](auto& c, auto&, const auto& v) { c.output_dir = v; }},

        {"data.kind", [](auto& c, auto&, const auto& v) { c.data.kind = dataset_kind_from_string(v); }},
        {"data.n", [](auto& c, auto&, const auto& v) { c.data.n = to_size(v); }},
        {"data.test_n", [](auto& c, auto&, const auto& v) { c.test_n = to_size(v); }},
        {"data.test_fraction", [](auto& c, auto&, const auto& v) { c.test_fraction = to_double(v); }},
        {"data.dim", [](auto& c, auto&, const auto& v) { c.data.dim = to_size(v); }},
        {"data.noise", [](auto& c, auto&, const auto& v) { c.data.noise = to_double(v); }},
        {"data.frequencies", [](auto& c, auto&, const auto& v) { c.data.frequencies = to_doubles(v); }},
        {"data.direction", [](auto& c, auto&, const auto& v) { c.data.direction = to_doubles(v); }},
        {"data.path", [](auto& c, auto&, const auto& v) { c.data.path = v; }},
        {"data.height", [](auto& c, auto&, const auto& v) { c.data.height = to_size(v); }},
        {"data.width", [](auto& c, auto&, const auto& v) { c.data.width = to_size(v); }},
        {"data.channels", [](auto& c, auto&, const auto& v) { c.data.channels = to_size(v); }},
        {"data.num_classes", [](auto& c, auto&, const auto& v) { c.data.num_classes = to_size(v); }},

        {"model.hidden", [](auto& c, auto&, const auto& v) { c.train.hidden = to_sizes(v); }},
        {"model.activation",
         [](auto& c, auto&, const auto& v) { c.train.hidden_activation = activation_from_string(v); }},
        {"model.heads", [](auto& c, auto&, const auto& v) { c.train.heads = to_size(v); }},
        {"model.scale", [](auto& c, auto&, const auto& v) { c.train.scale = to_double(v); }},
        {"model.pc_iters", [](auto& c, auto&, const auto& v) { c.train.pc_iters = to_size(v); }},

        {"train.variant", [](auto& c, auto&, const auto& v) { c.train.variant = variant_from_string(v); }},
        {"train.epochs", [](auto& c, auto&, const auto& v) { c.train.epochs = to_size(v); }},
        {"train.batch_size", [](auto& c, auto&, const auto& v) { c.train.batch_size = to_size(v); }},
        {"train.lr", [](auto& c, auto&, const auto& v) { c.train.lr = to_double(v); }},
        {"train.epsilon", [](auto& c, auto&, const auto& v) { c.train.attack.epsilon = to_double(v); }},
        {"train.alpha",
         [](auto& c, auto& p, const auto& v) {
             c.train.attack.alpha = to_double(v);
             p.alpha_set = true;
         }},
        {"train.steps", [](auto& c, auto&, const auto& v) { c.train.attack.steps = to_int(v); }},

        {"freq.k_max", [](auto& c, auto&, const auto& v) { c.train.k_max = to_size(v); }},
        {"freq.decay", [](auto& c, auto&, const auto& v) { c.train.decay = to_double(v); }},

        {"eval.epsilon", [](auto& c, auto&, const auto& v) { c.train.eval_attack.epsilon = to_double(v); }},
        {"eval.alpha",
         [](auto& c, auto& p, const auto& v) {
             c.train.eval_attack.alpha = to_double(v);
             p.eval_alpha_set = true;
         }},
        {"eval.steps", [](auto& c, auto&, const auto& v) { c.train.eval_attack.steps = to_int(v); }},
        {"eval.eot", [](auto& c, auto&, const auto& v) { c.train.eval_attack.eot_samples = to_int(v); }},
        {"eval.mimic_frequency",
         [](auto& c, auto&, const auto& v) { c.train.eval_attack.mimic_frequency = to_bool(v); }},
        {"eval.mode", [](auto& c, auto&, const auto& v) { c.train.eval_mode = inference_mode_from_string(v); }},
        {"eval.max_samples", [](auto& c, auto&, const auto& v) { c.train.eval_max_samples = to_size(v); }},
        {"eval.attacks", [](auto&, auto& p, const auto& v) { p.attack_names = split_list(v); }},
        {"eval.eot_samples", [](auto& c, auto&, const auto& v) { c.eval_eot_samples = to_int(v); }},

        {"analysis.every", [](auto& c, auto&, const auto& v) { c.train.analysis_every = to_size(v); }},
        {"analysis.variance", [](auto& c, auto&, const auto& v) { c.train.filter.variance = to_double(v); }},
        {"analysis.max_points", [](auto& c, auto&, const auto& v) { c.train.filter.max_points = to_size(v); }},
        {"analysis.mode",
         [](auto& c, auto&, const auto& v) { c.train.analysis_mode = inference_mode_from_string(v); }},
        {"analysis.adversarial",
         [](auto& c, auto&, const auto& v) { c.train.analyze_adversarial = to_bool(v); }},
    };
    return table;
}

}  // namespace

AttackConfig parse_attack_name(const std::string& name, double epsilon, double alpha, int eot_samples) {
    AttackConfig a;
    a.epsilon = epsilon;
    a.alpha = alpha;
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(name);
    while (std::getline(in, part, '+')) parts.push_back(trim(part));
    if (parts.empty()) throw ConfigError("empty attack name");
    if (parts[0] == "fgsm") {
        a.steps = 1;
    } else if (parts[0].rfind("pgd", 0) == 0 && parts[0].size() > 3) {
        a.steps = to_int(parts[0].substr(3));
    } else {
        throw ConfigError("unknown attack '" + name + "'");
    }
    for (std::size_t i = 1; i < parts.size(); ++i) {
        if (parts[i] == "eot") {
            a.eot_samples = eot_samples;
        } else if (parts[i] == "frequency") {
            a.mimic_frequency = true;
        } else {
            throw ConfigError("unknown attack modifier '" + parts[i] + "' in '" + name + "'");
        }
    }
    a.validate();
    return a;
}

void ExperimentConfig::validate() const {
    data.validate();
    if (data.kind != DatasetKind::image_binary && test_n == 1) throw ConfigError("data.test_n must be 0 or >= 2");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in (0, 1)");
    train.validate();
    if (eval_eot_samples < 1) throw ConfigError("eval.eot_samples must be >= 1");
    for (const auto& a : eval_attacks) a.validate();
    if (output_dir.empty()) throw ConfigError("experiment.output_dir is empty");
}

void ExperimentConfig::apply_seed(std::uint64_t master) {
    seed = master;
    train.seed = master;
    const SeedStreams streams = SeedStreams::from(master);
    data.seed = derive_seed(streams.data, "generate");
    std::uint64_t i = 0;
    for (auto& a : eval_attacks) a.seed = derive_seed(derive_seed(streams.eval, "final-attacks"), i++);
}

namespace {

struct Entry {
    std::size_t line;
    std::string key;
    std::string value;
};

std::vector<Entry> entries(const std::string& text) {
    std::vector<Entry> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
        }
        std::string key = trim(std::string_view(t).substr(0, eq));
        std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.find('.') == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' has no section");
        }
        out.push_back({lineno, std::move(key), std::move(value)});
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto& e : entries(text)) out.emplace_back(std::move(e.key), std::move(e.value));
    return out;
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    Pending pending;
    const auto& table = setters();
    std::map<std::string, bool> seen;
    for (const auto& [line, key, value] : entries(text)) {
        const std::string where = "line " + std::to_string(line) + ": ";
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError(where + "unknown config key '" + key + "'");
        if (seen[key]) throw ConfigError(where + "duplicate config key '" + key + "'");
        seen[key] = true;
        try {
            it->second(cfg, pending, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    if (!pending.eval_alpha_set) cfg.train.eval_attack.alpha = cfg.train.eval_attack.epsilon / 4.0;
    if (cfg.train.eval_attack.epsilon == 0.0 && !pending.eval_alpha_set) cfg.train.eval_attack.alpha = 1e-3;

    const double eval_alpha = cfg.train.eval_attack.alpha;
    for (const auto& name : pending.attack_names) {
        cfg.eval_attacks.push_back(
            parse_attack_name(name, cfg.train.eval_attack.epsilon, eval_alpha, cfg.eval_eot_samples));
    }
    cfg.apply_seed(cfg.seed);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "experiment.seed = " << c.seed << '\n';
    o << "experiment.output_dir = " << c.output_dir.string() << '\n';
    o << "data.kind = " << to_string(c.data.kind) << '\n';
    o << "data.n = " << c.data.n << '\n';
    o << "data.test_n = " << c.test_n << '\n';
    o << "data.test_fraction = " << format_double(c.test_fraction) << '\n';
    o << "data.dim = " << c.data.dim << '\n';
    o << "data.noise = " << format_double(c.data.noise) << '\n';
    o << "data.frequencies = " << join(c.data.frequencies) << '\n';
    if (!c.data.direction.empty()) o << "data.direction = " << join(c.data.direction) << '\n';
    if (!c.data.path.empty()) o << "data.path = " << c.data.path.string() << '\n';
    o << "data.height = " << c.data.height << '\n';
    o << "data.width = " << c.data.width << '\n';
    o << "data.channels = " << c.data.channels << '\n';
    o << "data.num_classes = " << c.data.num_classes << '\n';
    o << "model.hidden = " << join(c.train.hidden) << '\n';
    o << "model.activation = " << to_string(c.train.hidden_activation) << '\n';
    o << "model.heads = " << c.train.heads << '\n';
    o << "model.scale = " << format_double(c.train.scale) << '\n';
    o << "model.pc_iters = " << c.train.pc_iters << '\n';
    o << "train.variant = " << to_string(c.train.variant) << '\n';
    o << "train.epochs = " << c.train.epochs << '\n';
    o << "train.batch_size = " << c.train.batch_size << '\n';
    o << "train.lr = " << format_double(c.train.lr) << '\n';
    o << "train.epsilon = " << format_double(c.train.attack.epsilon) << '\n';
    o << "train.alpha = " << format_double(c.train.attack.alpha) << '\n';
    o << "train.steps = " << c.train.attack.steps << '\n';
    o << "freq.k_max = " << c.train.k_max << '\n';
    o << "freq.decay = " << format_double(c.train.decay) << '\n';
    o << "eval.epsilon = " << format_double(c.train.eval_attack.epsilon) << '\n';
    o << "eval.alpha = " << format_double(c.train.eval_attack.alpha) << '\n';
    o << "eval.steps = " << c.train.eval_attack.steps << '\n';
    o << "eval.eot = " << c.train.eval_attack.eot_samples << '\n';
    o << "eval.mimic_frequency = " << (c.train.eval_attack.mimic_frequency ? "true" : "false") << '\n';
    o << "eval.mode = " << to_string(c.train.eval_mode) << '\n';
    o << "eval.max_samples = " << c.train.eval_max_samples << '\n';
    o << "eval.eot_samples = " << c.eval_eot_samples << '\n';
    if (!c.eval_attacks.empty()) {
        o << "eval.attacks = ";
        for (std::size_t i = 0; i < c.eval_attacks.size(); ++i) o << (i ? ", " : "") << c.eval_attacks[i].name();
        o << '\n';
    }
    o << "analysis.every = " << c.train.analysis_every << '\n';
    o << "analysis.variance = " << format_double(c.train.filter.variance) << '\n';
    o << "analysis.max_points = " << c.train.filter.max_points << '\n';
    o << "analysis.mode = " << to_string(c.train.analysis_mode) << '\n';
    o << "analysis.adversarial = " << (c.train.analyze_adversarial ? "true" : "false") << '\n';
    return o.str();
}

}  // namespace phaseat
