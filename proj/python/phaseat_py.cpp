#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "phaseat/experiment.hpp"

namespace py = pybind11;
using namespace phaseat;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_matrix(const Array& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
    const auto* p = a.data();
    return Tensor::matrix(a.shape(0), a.shape(1), std::vector<double>(p, p + a.size()));
}

Array to_array(const Tensor& t) {
    Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(t.rows()), static_cast<py::ssize_t>(t.row_size())});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

Array to_array(const std::vector<double>& v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::object optional_float(const std::optional<double>& v) { return v ? py::object(py::float_(*v)) : py::none(); }

struct PyModel {
    PhaseModel model;
    FrequencyState state;
    bool has_state = false;

    Array logits(const Array& x, std::optional<std::vector<int>> omegas) const {
        const Tensor xs = to_matrix(x);
        FrequencyAssignment f = omegas ? FrequencyAssignment{*omegas} : FrequencyAssignment::zeros(model.head_count());
        std::vector<double> flat;
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            const auto l = phase_logits(model, f, xs.row(i));
            flat.insert(flat.end(), l.begin(), l.end());
        }
        return to_array(Tensor::matrix(xs.rows(), model.num_classes(), flat));
    }

    py::array_t<std::size_t> predict(const Array& x, const std::string& mode, std::uint64_t seed) const {
        const Tensor xs = to_matrix(x);
        const InferenceMode m = inference_mode_from_string(mode);
        Rng rng(seed);
        py::array_t<std::size_t> out(static_cast<py::ssize_t>(xs.rows()));
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            out.mutable_data()[i] = inference(model, state, xs.row(i), m, rng, seed);
        }
        return out;
    }
};

Dataset dataset_from_arrays(const Array& x, const std::vector<std::size_t>& y, std::size_t num_classes, double lo,
                            double hi) {
    Dataset d;
    d.inputs = to_matrix(x);
    d.labels = y;
    d.num_classes = num_classes;
    d.range = InputRange{lo, hi};
    d.validate();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Phase-shifted adversarial training (C++ core).";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<StateError>(m, "StateError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());

    m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&derive_seed), py::arg("master"),
          py::arg("name"));

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&dataset_from_arrays), py::arg("x"), py::arg("y"), py::arg("num_classes") = 2,
             py::arg("lo") = 0.0, py::arg("hi") = 1.0)
        .def_property_readonly("x", [](const Dataset& d) { return to_array(d.inputs); })
        .def_property_readonly("y", [](const Dataset& d) { return d.labels; })
        .def_property_readonly("targets", [](const Dataset& d) { return d.targets.empty() ? py::object(py::none()) : py::object(to_array(d.targets)); })
        .def_readonly("num_classes", &Dataset::num_classes)
        .def("__len__", &Dataset::size);

    m.def(
        "make_dataset",
        [](const std::string& kind, std::size_t n, std::size_t dim, std::uint64_t seed,
           std::vector<double> frequencies, double noise) {
            DatasetSpec spec;
            spec.kind = dataset_kind_from_string(kind);
            spec.n = n;
            spec.dim = dim;
            spec.seed = seed;
            spec.frequencies = std::move(frequencies);
            spec.noise = noise;
            return gen_dataset(spec);
        },
        py::arg("kind"), py::arg("n"), py::arg("dim") = 2, py::arg("seed") = 0,
        py::arg("frequencies") = std::vector<double>{1, 3, 5}, py::arg("noise") = 0.0);

    m.def(
        "fourier_coefficient",
        [](const Array& outputs, const std::vector<double>& zs, long k) {
            return fourier_coefficient(to_matrix(outputs), zs, k);
        },
        py::arg("outputs"), py::arg("zs"), py::arg("k"));

    m.def(
        "gaussian_low_pass",
        [](const Array& points, const Array& values, double variance) {
            return to_array(gaussian_low_pass(to_matrix(points), to_matrix(values), FilterConfig{variance}));
        },
        py::arg("points"), py::arg("values"), py::arg("variance"));

    m.def(
        "frequency_errors",
        [](const Array& points, const Array& labels, const Array& outputs, double variance) {
            const SpectralAnalyzer analyzer(to_matrix(points), to_matrix(labels),
                                            FilterConfig{variance, static_cast<std::size_t>(points.shape(0))});
            const auto r = analyzer.analyze(to_matrix(outputs));
            py::dict d;
            d["e_low"] = optional_float(r.e_low);
            d["e_high"] = optional_float(r.e_high);
            return d;
        },
        py::arg("points"), py::arg("labels"), py::arg("outputs"), py::arg("variance"));

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("heads", [](const PyModel& p) { return p.model.head_count(); })
        .def_property_readonly("input_dim", [](const PyModel& p) { return p.model.input_dim(); })
        .def_property_readonly("num_classes", [](const PyModel& p) { return p.model.num_classes(); })
        .def_property_readonly("parameters", [](const PyModel& p) { return to_array(p.model.flatten()); })
        .def_property_readonly("discrepancy",
                               [](const PyModel& p) { return p.has_state ? py::object(to_array(p.state.discrepancy)) : py::object(py::none()); })
        .def("logits", &PyModel::logits, py::arg("x"), py::arg("omegas") = std::nullopt)
        .def("predict", &PyModel::predict, py::arg("x"), py::arg("mode") = "zero",
             py::arg("seed") = kPinnedInferenceSeed)
        .def(
            "robust_accuracy",
            [](const PyModel& p, const Dataset& data, const std::string& attack, double epsilon, int eot_samples,
               const std::string& mode, std::uint64_t seed) {
                if (!p.has_state) throw StateError("model has no frequency state");
                auto cfg = parse_attack_name(attack, epsilon, epsilon / 4.0, eot_samples);
                cfg.seed = seed;
                const auto r = evaluate_robust_accuracy(p.model, p.state, data, cfg, inference_mode_from_string(mode),
                                                        derive_seed(seed, "inference"));
                return py::make_tuple(r.clean_accuracy, r.robust_accuracy);
            },
            py::arg("data"), py::arg("attack") = "pgd10", py::arg("epsilon") = 0.031, py::arg("eot_samples") = 10,
            py::arg("mode") = "fixed-seed", py::arg("seed") = 0)
        .def("save", [](const PyModel& p, const std::filesystem::path& path) {
            save_model(path, p.model, p.has_state ? &p.state : nullptr);
        });

    m.def(
        "load_model",
        [](const std::filesystem::path& path) {
            auto saved = load_model(path);
            PyModel p{std::move(saved.model), {}, saved.state.has_value()};
            if (saved.state) p.state = std::move(*saved.state);
            return p;
        },
        py::arg("path"));

    m.def(
        "sampling_distribution",
        [](const PyModel& p) {
            if (!p.has_state) throw StateError("model has no frequency state");
            return to_array(sampling_distribution(p.state));
        },
        py::arg("model"));

    m.def(
        "train",
        [](const Dataset& data, const std::string& variant, std::size_t epochs, double lr, std::size_t batch_size,
           std::vector<std::size_t> hidden, const std::string& activation, std::size_t heads, std::size_t k_max,
           double epsilon, std::uint64_t seed, std::size_t analysis_every) {
            TrainConfig cfg;
            cfg.variant = variant_from_string(variant);
            cfg.epochs = epochs;
            cfg.lr = lr;
            cfg.batch_size = batch_size;
            cfg.hidden = std::move(hidden);
            cfg.hidden_activation = activation_from_string(activation);
            cfg.heads = heads;
            cfg.k_max = k_max;
            cfg.attack.epsilon = epsilon;
            cfg.attack.alpha = 1.25 * epsilon;
            cfg.eval_max_samples = std::min<std::size_t>(data.size(), 100);
            cfg.analysis_every = analysis_every;
            cfg.seed = seed;
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(cfg, data);
            }
            py::list metrics;
            for (const auto& em : r.metrics) {
                py::dict d;
                d["epoch"] = em.epoch;
                d["split"] = em.split;
                d["loss"] = em.loss;
                d["clean_accuracy"] = em.clean_accuracy;
                d["robust_accuracy"] = em.robust_accuracy;
                d["e_low"] = optional_float(em.e_low);
                d["e_high"] = optional_float(em.e_high);
                metrics.append(d);
            }
            return py::make_tuple(PyModel{std::move(r.model), std::move(r.state), true}, metrics);
        },
        py::arg("data"), py::arg("variant") = "phaseat", py::arg("epochs") = 10, py::arg("lr") = 0.05,
        py::arg("batch_size") = 32, py::arg("hidden") = std::vector<std::size_t>{64, 64},
        py::arg("activation") = "relu", py::arg("heads") = 3, py::arg("k_max") = 64, py::arg("epsilon") = 0.031,
        py::arg("seed") = 0, py::arg("analysis_every") = 0);

    m.def(
        "run_experiment",
        [](const std::filesystem::path& config, std::optional<std::uint64_t> seed,
           std::optional<std::filesystem::path> out) {
            std::ostringstream err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_experiment_file(config, seed, out, err);
            }
            return py::make_tuple(code, err.str());
        },
        py::arg("config"), py::arg("seed") = std::nullopt, py::arg("out") = std::nullopt);
}
