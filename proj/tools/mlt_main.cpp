// Command-line front end: synthetic data generation, training, evaluation,
// multi-label CAM export, and unit dissection over the documented file
// formats. Exit codes: 0 success, 2 usage/validation, 3 numeric failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "mlt/dataset.hpp"
#include "mlt/dissect.hpp"
#include "mlt/losses.hpp"
#include "mlt/mcam.hpp"
#include "mlt/metrics.hpp"
#include "mlt/pgm.hpp"
#include "mlt/tensor_io.hpp"
#include "mlt/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

struct GenDataArgs {
  mlt::SyntheticConfig config;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& args) {
  const mlt::Dataset dataset = mlt::generate_synthetic_dataset(args.config, args.seed);
  mlt::save_dataset(dataset, args.out);
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string loss = "wlsep";
  std::string weights = "uniform";
  mlt::OptimizerConfig config;
  std::string out_model;
  std::string log_path;
};

int cmd_train(const TrainArgs& args) {
  mlt::OptimizerConfig config = args.config;
  config.loss = mlt::loss_kind_from_string(args.loss);
  config.weight_scheme = mlt::weight_scheme_from_string(args.weights);

  const mlt::Dataset dataset = mlt::load_dataset(args.data);
  mlt::TrainOutcome outcome;
  try {
    outcome = mlt::train(dataset, config);
  } catch (const mlt::TrainingDiverged& e) {
    std::cerr << "mlt train: " << e.what() << "\n";
    return kExitNumeric;
  }
  mlt::save_model(outcome.model, args.out_model);
  if (!args.log_path.empty()) {
    std::ofstream log(args.log_path, std::ios::binary);
    if (!log) throw std::runtime_error("cannot open log for writing: " + args.log_path);
    log << outcome.log.to_csv();
  }
  return 0;
}

struct EvalArgs {
  std::string data;
  std::string model;
  std::string report = "json";
  std::string out;
};

int cmd_eval(const EvalArgs& args) {
  const mlt::Dataset dataset = mlt::load_dataset(args.data);
  const mlt::ModelParameters model = mlt::load_model(args.model);
  if (model.feature_dim() != dataset.feature_dim() ||
      model.num_classes() != dataset.num_classes()) {
    throw std::invalid_argument("model shape " + std::to_string(model.feature_dim()) + "x" +
                                std::to_string(model.num_classes()) + " does not match data " +
                                std::to_string(dataset.feature_dim()) + "x" +
                                std::to_string(dataset.num_classes()));
  }
  const mlt::MetricsReport report = mlt::evaluate(model, dataset);
  const std::string text =
      args.report == "csv" ? mlt::report_to_csv(report) : mlt::report_to_json(report);
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + args.out);
  out << text;
  return 0;
}

struct CamArgs {
  std::string features;
  std::string head;
  std::vector<int> classes;
  mlt::SeparationParams params;
  double sigma = 1.0;
  std::string out_dir;
};

json bounding_box(const mlt::BoolGrid& mask) {
  int r0 = -1, c0 = -1, r1 = -1, c1 = -1;
  for (Eigen::Index r = 0; r < mask.rows(); ++r) {
    for (Eigen::Index c = 0; c < mask.cols(); ++c) {
      if (!mask(r, c)) continue;
      if (r0 < 0) {
        r0 = r1 = static_cast<int>(r);
        c0 = c1 = static_cast<int>(c);
      } else {
        r0 = std::min(r0, static_cast<int>(r));
        r1 = std::max(r1, static_cast<int>(r));
        c0 = std::min(c0, static_cast<int>(c));
        c1 = std::max(c1, static_cast<int>(c));
      }
    }
  }
  if (r0 < 0) return nullptr;
  return json{{"x0", c0}, {"y0", r0}, {"x1", c1}, {"y1", r1}};
}

int cmd_cam(const CamArgs& args) {
  const mlt::Tensor features_tensor = mlt::read_tensor(args.features);
  if (features_tensor.dims.size() != 3) {
    throw std::invalid_argument("--features must be a D x H x W tensor");
  }
  const int depth = static_cast<int>(features_tensor.dims[0]);
  const int height = static_cast<int>(features_tensor.dims[1]);
  const int width = static_cast<int>(features_tensor.dims[2]);
  mlt::FeatureStack stack;
  for (int d = 0; d < depth; ++d) {
    Eigen::MatrixXd map(height, width);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        map(r, c) = features_tensor.data[(static_cast<std::size_t>(d) * height + r) * width + c];
      }
    }
    stack.push_back(std::move(map));
  }
  const Eigen::MatrixXd head = mlt::matrix_from_tensor(mlt::read_tensor(args.head));
  if (head.rows() != depth) {
    throw std::invalid_argument("--head rows must match feature depth");
  }
  if (args.classes.empty()) throw std::invalid_argument("--classes must name at least one class");

  std::vector<mlt::ActivationMap> cams;
  for (int c : args.classes) cams.push_back(mlt::compute_cam(stack, head, c));
  const auto separated = mlt::separate_regions(cams, args.params);
  const mlt::RegionMap region = mlt::compose_multi_cam(separated, 5, args.sigma);

  fs::create_directories(args.out_dir);
  mlt::write_pgm((fs::path(args.out_dir) / "composite.pgm").string(),
                 mlt::gray_from_grid(region.composite));

  json sidecar;
  for (const auto& [class_id, mask] : region.per_class_masks) {
    const std::string name = "mask_" + std::to_string(class_id) + ".pgm";
    mlt::write_pgm((fs::path(args.out_dir) / name).string(), mlt::gray_from_mask(mask));
    json entry;
    entry["pixel_count"] = static_cast<std::int64_t>(mask.count());
    entry["bounding_box"] = bounding_box(mask);
    sidecar[std::to_string(class_id)] = entry;
  }
  std::ofstream out(fs::path(args.out_dir) / "regions.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sidecar in " + args.out_dir);
  out << sidecar.dump(2) << "\n";
  return 0;
}

struct DissectArgs {
  std::string activations;
  std::string masks;
  std::string concepts;
  double quantile = 0.005;
  double iou_threshold = 0.04;
  std::string out;
};

std::vector<mlt::Concept> load_concepts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open concepts file: " + path);
  std::vector<mlt::Concept> concepts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("concept_id", 0) == 0) continue;  // header
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    if (first == std::string::npos || second == std::string::npos) {
      throw std::invalid_argument(path + " line " + std::to_string(line_no) +
                                  ": expected concept_id,name,category");
    }
    mlt::Concept entry;
    entry.id = std::stoi(line.substr(0, first));
    entry.name = line.substr(first + 1, second - first - 1);
    entry.category = mlt::concept_category_from_string(line.substr(second + 1));
    concepts.push_back(std::move(entry));
  }
  if (concepts.empty()) throw std::invalid_argument("no concepts in " + path);
  return concepts;
}

// Mask manifest: {"width": .., "height": .., "images": [ids in activation
// order], "regions": [{image_id, concept_id, x0,y0,x1,y1} | {image_id,
// concept_id, mask_file}]}. Rectangles are inclusive pixel bounds.
void load_masks_json(const std::string& path, mlt::DissectInputs* inputs) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open masks file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": invalid JSON (" + std::string(e.what()) + ")");
  }
  inputs->mask_height = doc.at("height").get<int>();
  inputs->mask_width = doc.at("width").get<int>();
  inputs->image_ids = doc.at("images").get<std::vector<std::string>>();

  const fs::path base = fs::path(path).parent_path();
  for (const auto& region : doc.at("regions")) {
    mlt::ConceptMask mask;
    mask.image_id = region.at("image_id").get<std::string>();
    mask.concept_id = region.at("concept_id").get<int>();
    if (region.contains("mask_file")) {
      mask.mask = mlt::mask_from_gray(
          mlt::read_pgm((base / region.at("mask_file").get<std::string>()).string()));
      if (mask.mask.rows() != inputs->mask_height || mask.mask.cols() != inputs->mask_width) {
        throw std::invalid_argument("mask file shape mismatch for image " + mask.image_id);
      }
    } else {
      const int x0 = region.at("x0").get<int>();
      const int y0 = region.at("y0").get<int>();
      const int x1 = region.at("x1").get<int>();
      const int y1 = region.at("y1").get<int>();
      if (x0 > x1 || y0 > y1 || x0 < 0 || y0 < 0 || x1 >= inputs->mask_width ||
          y1 >= inputs->mask_height) {
        throw std::invalid_argument("rectangle out of bounds for image " + mask.image_id);
      }
      mask.mask = mlt::BoolGrid::Constant(inputs->mask_height, inputs->mask_width, false);
      for (int r = y0; r <= y1; ++r) {
        for (int c = x0; c <= x1; ++c) mask.mask(r, c) = true;
      }
    }
    inputs->masks.push_back(std::move(mask));
  }
}

void load_activations(const std::string& path, mlt::DissectInputs* inputs) {
  const std::size_t image_count = inputs->image_ids.size();
  const auto grid_from = [](const mlt::Tensor& t, std::size_t offset, int h, int w) {
    Eigen::MatrixXd grid(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        grid(r, c) = t.data[offset + static_cast<std::size_t>(r) * w + c];
      }
    }
    return grid;
  };

  if (fs::is_directory(path)) {
    // Per-unit file set: every *.mmtt holds one images x h x w tensor.
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".mmtt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::invalid_argument("no .mmtt files in " + path);
    for (std::size_t u = 0; u < files.size(); ++u) {
      const mlt::Tensor t = mlt::read_tensor(files[u].string());
      if (t.dims.size() != 3 || t.dims[0] != image_count) {
        throw std::invalid_argument(files[u].string() +
                                    ": expected images x h x w aligned with the image set");
      }
      mlt::UnitActivations unit;
      unit.unit_id = static_cast<int>(u);
      const int h = static_cast<int>(t.dims[1]);
      const int w = static_cast<int>(t.dims[2]);
      for (std::size_t img = 0; img < image_count; ++img) {
        unit.images.push_back(grid_from(t, img * static_cast<std::size_t>(h) * w, h, w));
      }
      inputs->units.push_back(std::move(unit));
    }
    return;
  }

  const mlt::Tensor t = mlt::read_tensor(path);
  if (t.dims.size() != 4) {
    throw std::invalid_argument("--activations must be units x images x h x w");
  }
  if (t.dims[1] != image_count) {
    throw std::invalid_argument("activation image axis (" + std::to_string(t.dims[1]) +
                                ") unaligned with mask image set (" +
                                std::to_string(image_count) + ")");
  }
  const int h = static_cast<int>(t.dims[2]);
  const int w = static_cast<int>(t.dims[3]);
  for (std::uint32_t u = 0; u < t.dims[0]; ++u) {
    mlt::UnitActivations unit;
    unit.unit_id = static_cast<int>(u);
    for (std::size_t img = 0; img < image_count; ++img) {
      unit.images.push_back(grid_from(
          t, (static_cast<std::size_t>(u) * image_count + img) * static_cast<std::size_t>(h) * w,
          h, w));
    }
    inputs->units.push_back(std::move(unit));
  }
}

int cmd_dissect(const DissectArgs& args) {
  mlt::DissectInputs inputs;
  inputs.concepts = load_concepts_csv(args.concepts);
  load_masks_json(args.masks, &inputs);
  load_activations(args.activations, &inputs);

  const mlt::DissectResult result = mlt::run_dissection(inputs, args.quantile, args.iou_threshold);

  json doc;
  doc["iou_threshold"] = result.report.iou_threshold;
  doc["interpretable_units"] = result.report.interpretable_units;
  doc["concepts_per_category"] = result.report.concepts_per_category;
  auto& units = doc["units"] = json::array();
  std::unordered_map<int, const mlt::Concept*> by_id;
  for (const auto& entry : inputs.concepts) by_id.emplace(entry.id, &entry);
  for (const auto& unit : result.report.units) {
    units.push_back({{"unit_id", unit.unit_id},
                     {"concept_id", unit.concept_id},
                     {"concept", by_id.at(unit.concept_id)->name},
                     {"category", mlt::to_string(unit.category)},
                     {"iou", unit.iou},
                     {"interpretable", unit.interpretable}});
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + args.out);
  out << doc.dump(2) << "\n";

  // Per-unit CSV next to the JSON report.
  fs::path csv_path(args.out);
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot open for writing: " + csv_path.string());
  csv << "unit_id,concept_id,concept,category,iou,interpretable\n";
  json num;
  for (const auto& unit : result.report.units) {
    num = unit.iou;
    csv << unit.unit_id << "," << unit.concept_id << "," << by_id.at(unit.concept_id)->name << ","
        << mlt::to_string(unit.category) << "," << num.dump() << ","
        << (unit.interpretable ? 1 : 0) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-label learning and interpretation toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "generate a synthetic long-tail dataset");
  gen_cmd->add_option("--classes", gen.config.num_classes, "number of classes (>= 2)");
  gen_cmd->add_option("--features", gen.config.feature_dim, "feature dimension (>= classes)");
  gen_cmd->add_option("--examples", gen.config.num_examples, "number of examples");
  gen_cmd->add_option("--zipf", gen.config.zipf_exponent, "Zipf exponent of class frequencies");
  gen_cmd->add_option("--co-label-prob", gen.config.co_label_prob,
                      "chance of each additional label");
  gen_cmd->add_option("--noise", gen.config.noise_std, "feature noise stddev");
  gen_cmd->add_option("--seed", gen.seed, "RNG seed");
  gen_cmd->add_option("--out", gen.out, "output manifest path")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train a linear classifier");
  train_cmd->add_option("--data", train.data, "dataset manifest")->required();
  train_cmd->add_option("--loss", train.loss, "bce|warp|lsep|wlsep")
      ->check(CLI::IsMember({"bce", "warp", "lsep", "wlsep"}));
  train_cmd->add_option("--weights", train.weights, "uniform|invfreq")
      ->check(CLI::IsMember({"uniform", "invfreq"}));
  train_cmd->add_option("--lr", train.config.learning_rate, "learning rate");
  train_cmd->add_option("--momentum", train.config.momentum, "momentum in [0,1)");
  train_cmd->add_option("--epochs", train.config.epochs, "training epochs");
  train_cmd->add_option("--batch", train.config.batch_size, "mini-batch size");
  train_cmd->add_option("--seed", train.config.seed, "RNG seed");
  train_cmd->add_option("--out-model", train.out_model, "output model tensor")->required();
  train_cmd->add_option("--log", train.log_path, "per-epoch loss CSV");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a dataset");
  eval_cmd->add_option("--data", eval.data, "dataset manifest")->required();
  eval_cmd->add_option("--model", eval.model, "model tensor")->required();
  eval_cmd->add_option("--report", eval.report, "json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  eval_cmd->add_option("--out", eval.out, "report path")->required();

  CamArgs cam;
  auto* cam_cmd = app.add_subcommand("cam", "export multi-label CAM regions");
  cam_cmd->add_option("--features", cam.features, "D x H x W feature tensor")->required();
  cam_cmd->add_option("--head", cam.head, "D x C head weight tensor")->required();
  cam_cmd->add_option("--classes", cam.classes, "class ids to map")->required()->delimiter(',');
  cam_cmd->add_option("--cosine-threshold", cam.params.cosine_threshold,
                      "pairs at or below are treated as one region");
  cam_cmd->add_option("--delta", cam.params.similarity_delta, "pixel similarity window");
  cam_cmd->add_option("--floor", cam.params.activation_floor, "minimum activation to erase");
  cam_cmd->add_option("--sigma", cam.sigma, "Gaussian smoothing sigma");
  cam_cmd->add_option("--out-dir", cam.out_dir, "output directory")->required();

  DissectArgs dissect;
  auto* dissect_cmd = app.add_subcommand("dissect", "match units to concepts by IoU");
  dissect_cmd->add_option("--activations", dissect.activations,
                          "units x images x h x w tensor, or a directory of per-unit tensors")
      ->required();
  dissect_cmd->add_option("--masks", dissect.masks, "concept mask manifest (JSON)")->required();
  dissect_cmd->add_option("--concepts", dissect.concepts, "concept index CSV")->required();
  dissect_cmd->add_option("--quantile", dissect.quantile, "activation quantile");
  dissect_cmd->add_option("--iou-threshold", dissect.iou_threshold, "interpretability cutoff");
  dissect_cmd->add_option("--out", dissect.out, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen);
    if (train_cmd->parsed()) return cmd_train(train);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (cam_cmd->parsed()) return cmd_cam(cam);
    if (dissect_cmd->parsed()) return cmd_dissect(dissect);
  } catch (const std::exception& e) {
    std::cerr << "mlt: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
