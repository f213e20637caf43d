#ifndef MLT_TRAINER_HPP_
#define MLT_TRAINER_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlt/dataset.hpp"
#include "mlt/losses.hpp"
#include "mlt/metrics.hpp"

namespace mlt {

// Linear classifier head, optionally behind one logistic hidden layer.
// head_weight is F x C (or H x C with a hidden layer); the final head is
// also the probe target for unit interpretation.
struct ModelParameters {
  Eigen::MatrixXd head_weight;   // (F or H) x C
  Eigen::VectorXd head_bias;     // C
  Eigen::MatrixXd input_weight;  // F x H, empty when linear
  Eigen::VectorXd input_bias;    // H

  bool has_hidden() const { return input_weight.size() > 0; }
  int feature_dim() const {
    return has_hidden() ? static_cast<int>(input_weight.rows())
                        : static_cast<int>(head_weight.rows());
  }
  int num_classes() const { return static_cast<int>(head_weight.cols()); }
};

struct OptimizerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;  // in [0, 1)
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::kWlsep;
  WeightScheme weight_scheme = WeightScheme::kUniform;
  int hidden_units = 0;  // 0 = linear model
};

struct TrainLog {
  std::vector<double> epoch_mean_loss;
  std::string to_csv() const;  // "epoch,mean_loss" rows
};

struct TrainOutcome {
  ModelParameters model;
  TrainLog log;
};

// Thrown when a batch loss stops being finite.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(int epoch, int batch)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

Eigen::VectorXd forward(const ModelParameters& model, const Eigen::VectorXd& features);

// Seed-deterministic initialization: uniform(-0.05, 0.05) weights, zero biases.
ModelParameters init_model(int feature_dim, int num_classes, int hidden_units, std::uint64_t seed);

// Mean per-example loss and its parameter gradients over a batch. This is
// the exact path the training loop takes, so finite-difference checks of
// these gradients cover training itself.
struct BatchGradients {
  double mean_loss = 0.0;
  ModelParameters grads;  // same shapes as the model
};
BatchGradients batch_gradients(const ModelParameters& model,
                               const std::vector<const MultiLabelExample*>& batch, LossKind loss,
                               const ClassWeights& weights);

// Mini-batch SGD with momentum; deterministic for a given (dataset, config).
TrainOutcome train(const Dataset& dataset, const OptimizerConfig& config);

MetricsReport evaluate(const ModelParameters& model, const Dataset& dataset);

// Central-difference verification of a loss gradient at one instance.
// Relative error per coordinate is |analytic - numeric| / max(1, |a|, |n|).
// For WARP, coordinates whose +-epsilon perturbation can cross a hinge kink
// or a rank tie (both non-differentiable) are excluded and reported.
struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::vector<int> excluded_coordinates;
};
GradientCheckResult gradient_check(LossKind kind, const Eigen::VectorXd& scores,
                                   const std::vector<int>& labels, const ClassWeights& weights,
                                   double epsilon);

// Same check for backpropagated parameter gradients on a small batch.
double parameter_gradient_max_error(const ModelParameters& model,
                                    const std::vector<const MultiLabelExample*>& batch,
                                    LossKind loss, const ClassWeights& weights, double epsilon);

// Model (de)serialization to the tensor file format. Linear models are one
// (F+1) x C tensor whose last row is the bias.
void save_model(const ModelParameters& model, const std::string& path);
ModelParameters load_model(const std::string& path);

}  // namespace mlt

#endif  // MLT_TRAINER_HPP_
