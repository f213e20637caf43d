// pybind11 module exposing the toolkit's main operations. Matrices map to
// numpy arrays through pybind11/eigen.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlt/dataset.hpp"
#include "mlt/dissect.hpp"
#include "mlt/losses.hpp"
#include "mlt/mcam.hpp"
#include "mlt/metrics.hpp"
#include "mlt/tensor_io.hpp"
#include "mlt/trainer.hpp"

namespace py = pybind11;
using namespace mlt;

namespace {

SyntheticConfig make_config(int classes, int features, int examples, double zipf,
                            double co_label_prob, double noise_std) {
  SyntheticConfig config;
  config.num_classes = classes;
  config.feature_dim = features;
  config.num_examples = examples;
  config.zipf_exponent = zipf;
  config.co_label_prob = co_label_prob;
  config.noise_std = noise_std;
  return config;
}

OptimizerConfig make_optimizer(double lr, double momentum, int epochs, int batch_size,
                               std::uint64_t seed, const std::string& loss,
                               const std::string& weights, int hidden_units) {
  OptimizerConfig config;
  config.learning_rate = lr;
  config.momentum = momentum;
  config.epochs = epochs;
  config.batch_size = batch_size;
  config.seed = seed;
  config.loss = loss_kind_from_string(loss);
  config.weight_scheme = weight_scheme_from_string(weights);
  config.hidden_units = hidden_units;
  return config;
}

std::vector<ActivationMap> maps_from_lists(const std::vector<Eigen::MatrixXd>& grids,
                                           const std::vector<int>& class_ids) {
  if (!class_ids.empty() && class_ids.size() != grids.size()) {
    throw std::invalid_argument("class_ids must be empty or match the map count");
  }
  std::vector<ActivationMap> maps;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    maps.push_back({grids[i], class_ids.empty() ? std::optional<int>(static_cast<int>(i))
                                                : std::optional<int>(class_ids[i])});
  }
  return maps;
}

py::array tensor_to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
  py::array_t<double> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

Tensor array_to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  Tensor t;
  for (py::ssize_t d = 0; d < a.ndim(); ++d) {
    t.dims.push_back(static_cast<std::uint32_t>(a.shape(d)));
  }
  t.data.assign(a.data(), a.data() + a.size());
  return t;
}

}  // namespace

PYBIND11_MODULE(mlt, m) {
  m.doc() = "multi-label learning and interpretation toolkit";

  py::class_<LabelVocabulary>(m, "LabelVocabulary")
      .def_property_readonly("names", &LabelVocabulary::names)
      .def("__len__", &LabelVocabulary::size)
      .def("index_of", &LabelVocabulary::index_of)
      .def("name", &LabelVocabulary::name);

  py::class_<MultiLabelExample>(m, "MultiLabelExample")
      .def(py::init<std::string, Eigen::VectorXd, std::vector<int>>(), py::arg("id"),
           py::arg("features"), py::arg("labels"))
      .def_readonly("id", &MultiLabelExample::id)
      .def_readonly("features", &MultiLabelExample::features)
      .def_readonly("labels", &MultiLabelExample::labels);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<LabelVocabulary, std::vector<MultiLabelExample>>(), py::arg("vocabulary"),
           py::arg("examples"))
      .def_property_readonly("vocabulary", &Dataset::vocabulary)
      .def_property_readonly("examples", &Dataset::examples)
      .def_property_readonly("class_counts", &Dataset::class_counts)
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def_property_readonly("num_examples", &Dataset::num_examples)
      .def_property_readonly("feature_dim", &Dataset::feature_dim);

  py::class_<ClassWeights>(m, "ClassWeights")
      .def(py::init([](Eigen::VectorXd w) { return ClassWeights{std::move(w)}; }),
           py::arg("weights"))
      .def_static("uniform", &ClassWeights::uniform)
      .def_readonly("weights", &ClassWeights::weights);

  py::class_<LossResult>(m, "LossResult")
      .def_readonly("value", &LossResult::value)
      .def_readonly("gradient", &LossResult::gradient);

  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("top1", &MetricsReport::top1)
      .def_readonly("top5", &MetricsReport::top5)
      .def_readonly("micro_map", &MetricsReport::micro_map)
      .def_readonly("macro_map", &MetricsReport::macro_map)
      .def_readonly("per_class_ap", &MetricsReport::per_class_ap);

  py::class_<ModelParameters>(m, "ModelParameters")
      .def_readwrite("head_weight", &ModelParameters::head_weight)
      .def_readwrite("head_bias", &ModelParameters::head_bias)
      .def_readwrite("input_weight", &ModelParameters::input_weight)
      .def_readwrite("input_bias", &ModelParameters::input_bias)
      .def_property_readonly("feature_dim", &ModelParameters::feature_dim)
      .def_property_readonly("num_classes", &ModelParameters::num_classes);

  py::class_<TrainLog>(m, "TrainLog")
      .def_readonly("epoch_mean_loss", &TrainLog::epoch_mean_loss)
      .def("to_csv", &TrainLog::to_csv);

  py::class_<RegionMap>(m, "RegionMap")
      .def_readonly("composite", &RegionMap::composite)
      .def_property_readonly("per_class_masks",
                             [](const RegionMap& r) {
                               py::dict out;
                               for (const auto& [class_id, mask] : r.per_class_masks) {
                                 out[py::int_(class_id)] = mask;
                               }
                               return out;
                             })
      .def_readonly("boundaries", &RegionMap::boundaries);

  py::class_<UnitInterpretation>(m, "UnitInterpretation")
      .def_readonly("unit_id", &UnitInterpretation::unit_id)
      .def_readonly("concept_id", &UnitInterpretation::concept_id)
      .def_property_readonly("category",
                             [](const UnitInterpretation& u) { return to_string(u.category); })
      .def_readonly("iou", &UnitInterpretation::iou)
      .def_readonly("interpretable", &UnitInterpretation::interpretable);

  py::class_<InterpretationReport>(m, "InterpretationReport")
      .def_readonly("units", &InterpretationReport::units)
      .def_readonly("concepts_per_category", &InterpretationReport::concepts_per_category)
      .def_readonly("interpretable_units", &InterpretationReport::interpretable_units)
      .def_readonly("iou_threshold", &InterpretationReport::iou_threshold);

  py::class_<GradientCheckResult>(m, "GradientCheckResult")
      .def_readonly("max_relative_error", &GradientCheckResult::max_relative_error)
      .def_readonly("excluded_coordinates", &GradientCheckResult::excluded_coordinates);

  // core
  m.def("build_vocabulary", &build_vocabulary, py::arg("names"));
  m.def(
      "compute_class_weights",
      [](const Dataset& d, const std::string& scheme) {
        return compute_class_weights(d, weight_scheme_from_string(scheme));
      },
      py::arg("dataset"), py::arg("scheme") = "uniform");
  m.def(
      "generate_synthetic_dataset",
      [](int classes, int features, int examples, double zipf, double co_label_prob,
         double noise_std, std::uint64_t seed) {
        return generate_synthetic_dataset(
            make_config(classes, features, examples, zipf, co_label_prob, noise_std), seed);
      },
      py::arg("classes"), py::arg("features"), py::arg("examples"), py::arg("zipf") = 1.0,
      py::arg("co_label_prob") = 0.0, py::arg("noise_std") = 0.0, py::arg("seed") = 0);
  m.def("load_dataset", &load_dataset, py::arg("path"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));

  // losses
  m.def("bce_loss", &bce_loss, py::arg("scores"), py::arg("labels"), py::arg("weights"));
  m.def("warp_loss", &warp_loss, py::arg("scores"), py::arg("labels"), py::arg("weights"));
  m.def("lsep_loss", &lsep_loss, py::arg("scores"), py::arg("labels"));
  m.def("wlsep_loss", &wlsep_loss, py::arg("scores"), py::arg("labels"), py::arg("weights"));
  m.def(
      "compute_loss",
      [](const std::string& kind, const Eigen::VectorXd& scores, const std::vector<int>& labels,
         const ClassWeights& weights) {
        return compute_loss(loss_kind_from_string(kind), scores, labels, weights);
      },
      py::arg("kind"), py::arg("scores"), py::arg("labels"), py::arg("weights"));
  m.def("rank_of", &rank_of, py::arg("scores"), py::arg("index"));
  m.def("rank_weight", &rank_weight, py::arg("rank"));

  // metrics
  m.def("average_precision", &average_precision, py::arg("scores"), py::arg("positives"));
  m.def("top_k_accuracy", &top_k_accuracy, py::arg("predictions"), py::arg("dataset"),
        py::arg("k"));
  m.def("micro_map", &micro_map, py::arg("predictions"), py::arg("dataset"));
  m.def(
      "macro_map",
      [](const PredictionSet& p, const Dataset& d) { return macro_map(p, d, nullptr); },
      py::arg("predictions"), py::arg("dataset"));
  m.def("compute_metrics", &compute_metrics, py::arg("predictions"), py::arg("dataset"));
  m.def("report_to_json", &report_to_json, py::arg("report"));
  m.def("report_to_csv", &report_to_csv, py::arg("report"));

  // trainer
  m.def("forward", &forward, py::arg("model"), py::arg("features"));
  m.def("init_model", &init_model, py::arg("feature_dim"), py::arg("num_classes"),
        py::arg("hidden_units") = 0, py::arg("seed") = 0);
  m.def(
      "train",
      [](const Dataset& data, double lr, double momentum, int epochs, int batch_size,
         std::uint64_t seed, const std::string& loss, const std::string& weights,
         int hidden_units) {
        auto outcome = train(
            data, make_optimizer(lr, momentum, epochs, batch_size, seed, loss, weights,
                                 hidden_units));
        return py::make_tuple(std::move(outcome.model), std::move(outcome.log));
      },
      py::arg("dataset"), py::arg("lr") = 0.1, py::arg("momentum") = 0.9, py::arg("epochs") = 10,
      py::arg("batch_size") = 32, py::arg("seed") = 0, py::arg("loss") = "wlsep",
      py::arg("weights") = "uniform", py::arg("hidden_units") = 0);
  m.def("evaluate", &evaluate, py::arg("model"), py::arg("dataset"));
  m.def(
      "gradient_check",
      [](const std::string& kind, const Eigen::VectorXd& scores, const std::vector<int>& labels,
         const ClassWeights& weights, double epsilon) {
        return gradient_check(loss_kind_from_string(kind), scores, labels, weights, epsilon);
      },
      py::arg("kind"), py::arg("scores"), py::arg("labels"), py::arg("weights"),
      py::arg("epsilon") = 1e-5);
  m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));

  // mcam
  m.def(
      "compute_cam",
      [](const FeatureStack& features, const Eigen::MatrixXd& head, int class_index) {
        return compute_cam(features, head, class_index).grid;
      },
      py::arg("features"), py::arg("head_weights"), py::arg("class_index"));
  m.def("minmax_normalize", &minmax_normalize, py::arg("grid"));
  m.def(
      "separate_regions",
      [](const std::vector<Eigen::MatrixXd>& grids, const std::vector<int>& class_ids,
         double cosine_threshold, double similarity_delta, double activation_floor) {
        SeparationParams params{cosine_threshold, similarity_delta, activation_floor};
        const auto out = separate_regions(maps_from_lists(grids, class_ids), params);
        std::vector<Eigen::MatrixXd> result;
        for (const auto& map : out) result.push_back(map.grid);
        return result;
      },
      py::arg("grids"), py::arg("class_ids") = std::vector<int>{},
      py::arg("cosine_threshold") = 1e-4, py::arg("similarity_delta") = 0.1,
      py::arg("activation_floor") = 0.2);
  m.def(
      "compose_multi_cam",
      [](const std::vector<Eigen::MatrixXd>& grids, const std::vector<int>& class_ids,
         int kernel_size, double sigma) {
        return compose_multi_cam(maps_from_lists(grids, class_ids), kernel_size, sigma);
      },
      py::arg("grids"), py::arg("class_ids") = std::vector<int>{}, py::arg("kernel_size") = 5,
      py::arg("sigma") = 1.0);
  m.def("gaussian_smooth", &gaussian_smooth, py::arg("grid"), py::arg("kernel_size") = 5,
        py::arg("sigma") = 1.0);

  // dissect
  m.def(
      "unit_threshold",
      [](const std::vector<Eigen::MatrixXd>& images, double quantile) {
        return unit_threshold(UnitActivations{0, images}, quantile);
      },
      py::arg("images"), py::arg("quantile") = 0.005);
  m.def("binarize_and_upsample", &binarize_and_upsample, py::arg("grid"), py::arg("threshold"),
        py::arg("target_h"), py::arg("target_w"));
  m.def("unit_concept_iou", &unit_concept_iou, py::arg("unit_masks"), py::arg("concept_masks"));
  m.def(
      "assign_concepts",
      [](const Eigen::MatrixXd& iou_table,
         const std::vector<std::tuple<int, std::string, std::string>>& concepts,
         double iou_threshold) {
        std::vector<Concept> list;
        for (const auto& [id, name, category] : concepts) {
          list.push_back({id, name, concept_category_from_string(category)});
        }
        return assign_concepts(iou_table, list, iou_threshold);
      },
      py::arg("iou_table"), py::arg("concepts"), py::arg("iou_threshold") = 0.04);
  m.def("probe_unit", &probe_unit, py::arg("model"), py::arg("unit"));

  // tensor files
  m.def(
      "read_tensor", [](const std::string& path) { return tensor_to_array(read_tensor(path)); },
      py::arg("path"));
  m.def(
      "write_tensor",
      [](const std::string& path,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& array) {
        write_tensor(path, array_to_tensor(array));
      },
      py::arg("path"), py::arg("array"));
}
