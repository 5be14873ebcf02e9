#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "clab/augment.hpp"
#include "clab/config.hpp"
#include "clab/dataset.hpp"
#include "clab/errors.hpp"
#include "clab/metrics.hpp"
#include "clab/rng.hpp"
#include "clab/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace clab;

namespace {

py::dict report_dict(const MetricsReport& r) {
    py::dict d;
    d["alignment"] = r.alignment;
    d["uniformity"] = r.uniformity;
    d["neighborhood_uniformity_k1"] = r.neighborhood_uniformity_k1;
    d["acc_all"] = r.acc_all;
    d["acc_many"] = r.acc_many ? py::cast(*r.acc_many) : py::none();
    d["acc_median"] = r.acc_median ? py::cast(*r.acc_median) : py::none();
    d["acc_few"] = r.acc_few ? py::cast(*r.acc_few) : py::none();
    return d;
}

py::list history_list(const std::vector<EpochRecord>& history) {
    py::list out;
    for (const auto& rec : history) {
        py::dict row;
        row["epoch"] = rec.epoch;
        row["train_loss"] = rec.train_loss;
        row["train_acc"] = rec.train_acc;
        row["lambda_used"] = rec.lambda_used;
        row["lr"] = rec.lr;
        row["test_acc"] = rec.test_acc;
        out.append(row);
    }
    return out;
}

// In-memory pipeline: parse, validate, train, measure. Writes nothing.
py::dict train_from_config(const std::string& text) {
    auto cfg = parse_config_text(text, "<string>");
    validate_config(cfg);
    const auto data = prepare_data(cfg);
    const auto result = train(cfg, data.train, data.test);
    const auto report =
        evaluate_metrics(result.model, data.test, data.train.class_counts());
    py::dict out;
    out["history"] = history_list(result.history);
    out["metrics"] = report_dict(report);
    out["train_class_counts"] = data.train.class_counts();
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "collapse-lab core: toy training runs, mixing schedules, and "
              "collapse metrics";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("next_double", &Rng::next_double)
        .def("normal", &Rng::normal)
        .def("below", &Rng::below, py::arg("n"))
        .def("permutation", &Rng::permutation, py::arg("n"));

    py::class_<Dataset>(m, "Dataset")
        .def_readonly("name", &Dataset::name)
        .def_readonly("sample_shape", &Dataset::sample_shape)
        .def_readonly("samples", &Dataset::samples)
        .def_readonly("labels", &Dataset::labels)
        .def_readonly("fine_labels", &Dataset::fine_labels)
        .def_readonly("ids", &Dataset::ids)
        .def_readonly("num_classes", &Dataset::num_classes)
        .def("__len__", &Dataset::size)
        .def("sample_dim", &Dataset::sample_dim)
        .def("class_counts", &Dataset::class_counts);

    m.def(
        "gaussian_toy",
        [](std::size_t classes, std::size_t per_class, std::size_t dim, double spread,
           std::uint64_t seed) {
            auto tt = gaussian_toy(classes, per_class, dim, spread, seed);
            return py::make_tuple(std::move(tt.train), std::move(tt.test));
        },
        py::arg("classes"), py::arg("per_class"), py::arg("dim"), py::arg("spread"),
        py::arg("seed"), "returns (train, test) with a stratified 80/20 split");
    m.def("longtail_counts", &longtail_counts, py::arg("classes"), py::arg("n_max"),
          py::arg("imb_factor"));
    m.def("longtail_subsample", &longtail_subsample, py::arg("dataset"),
          py::arg("imb_factor"), py::arg("seed"));
    m.def("apply_coarse", &apply_coarse, py::arg("dataset"), py::arg("fine_to_coarse"));

    m.def("am_lambda", &am_lambda, py::arg("v_acc"), py::arg("beta"),
          "one-sided mixing rate exp(-beta * v_acc)");

    py::class_<FeatureTable>(m, "FeatureTable")
        .def(py::init([](std::vector<double> features, std::size_t dim,
                         std::vector<std::size_t> labels, std::size_t num_classes) {
                 FeatureTable ft;
                 ft.features = std::move(features);
                 ft.dim = dim;
                 ft.labels = std::move(labels);
                 ft.num_classes = num_classes;
                 validate_table(ft);
                 return ft;
             }),
             py::arg("features"), py::arg("dim"), py::arg("labels"),
             py::arg("num_classes"))
        .def_readonly("features", &FeatureTable::features)
        .def_readonly("dim", &FeatureTable::dim)
        .def_readonly("labels", &FeatureTable::labels)
        .def_readonly("num_classes", &FeatureTable::num_classes)
        .def("__len__", &FeatureTable::size);

    m.def("alignment", &alignment, py::arg("table"));
    m.def("sphere_centroids", &sphere_centroids, py::arg("table"));
    m.def("uniformity", &uniformity, py::arg("centroids"), py::arg("num_classes"),
          py::arg("dim"));
    m.def("neighborhood_uniformity", &neighborhood_uniformity, py::arg("centroids"),
          py::arg("num_classes"), py::arg("dim"), py::arg("k"));

    m.def("default_config", [] { return serialize_config(RunConfig{}); },
          "serialized defaults; a valid starting point for train_from_config");
    m.def("check_config", [](const std::string& text) {
        auto cfg = parse_config_text(text, "<string>");
        validate_config(cfg);
    });
    m.def("train_from_config", &train_from_config, py::arg("config_text"),
          "train in memory and return {'history', 'metrics', 'train_class_counts'}");
}
