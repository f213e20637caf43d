#include "mlt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mlt/rng.hpp"
#include "mlt/tensor_io.hpp"

namespace mlt {

namespace {

Eigen::VectorXd logistic(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

void check_features(const ModelParameters& model, const Eigen::VectorXd& features) {
  if (static_cast<int>(features.size()) != model.feature_dim()) {
    throw std::invalid_argument("feature length " + std::to_string(features.size()) +
                                " does not match model input " +
                                std::to_string(model.feature_dim()));
  }
}

}  // namespace

Eigen::VectorXd forward(const ModelParameters& model, const Eigen::VectorXd& features) {
  check_features(model, features);
  if (!model.has_hidden()) {
    return model.head_weight.transpose() * features + model.head_bias;
  }
  const Eigen::VectorXd hidden =
      logistic(model.input_weight.transpose() * features + model.input_bias);
  return model.head_weight.transpose() * hidden + model.head_bias;
}

ModelParameters init_model(int feature_dim, int num_classes, int hidden_units,
                           std::uint64_t seed) {
  Rng rng(seed);
  const auto fill = [&rng](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-0.05, 0.05);
  };
  ModelParameters model;
  if (hidden_units > 0) {
    model.input_weight.resize(feature_dim, hidden_units);
    fill(model.input_weight);
    model.input_bias = Eigen::VectorXd::Zero(hidden_units);
    model.head_weight.resize(hidden_units, num_classes);
  } else {
    model.head_weight.resize(feature_dim, num_classes);
  }
  fill(model.head_weight);
  model.head_bias = Eigen::VectorXd::Zero(num_classes);
  return model;
}

BatchGradients batch_gradients(const ModelParameters& model,
                               const std::vector<const MultiLabelExample*>& batch, LossKind loss,
                               const ClassWeights& weights) {
  BatchGradients out;
  out.grads.head_weight = Eigen::MatrixXd::Zero(model.head_weight.rows(), model.head_weight.cols());
  out.grads.head_bias = Eigen::VectorXd::Zero(model.head_bias.size());
  if (model.has_hidden()) {
    out.grads.input_weight =
        Eigen::MatrixXd::Zero(model.input_weight.rows(), model.input_weight.cols());
    out.grads.input_bias = Eigen::VectorXd::Zero(model.input_bias.size());
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (const MultiLabelExample* ex : batch) {
    check_features(model, ex->features);
    Eigen::VectorXd head_input = ex->features;
    Eigen::VectorXd hidden;
    if (model.has_hidden()) {
      hidden = logistic(model.input_weight.transpose() * ex->features + model.input_bias);
      head_input = hidden;
    }
    const Eigen::VectorXd scores = model.head_weight.transpose() * head_input + model.head_bias;
    const LossResult loss_result = compute_loss(loss, scores, ex->labels, weights);

    out.mean_loss += inv_batch * loss_result.value;
    const Eigen::VectorXd g = inv_batch * loss_result.gradient;
    out.grads.head_weight.noalias() += head_input * g.transpose();
    out.grads.head_bias += g;
    if (model.has_hidden()) {
      const Eigen::VectorXd dh = model.head_weight * g;
      const Eigen::VectorXd dpre =
          dh.array() * hidden.array() * (1.0 - hidden.array());  // logistic'
      out.grads.input_weight.noalias() += ex->features * dpre.transpose();
      out.grads.input_bias += dpre;
    }
  }
  return out;
}

TrainOutcome train(const Dataset& dataset, const OptimizerConfig& config) {
  if (dataset.num_examples() == 0) throw std::invalid_argument("train: empty dataset");
  if (config.learning_rate < 0.0) throw std::invalid_argument("train: negative learning rate");
  if (config.momentum < 0.0 || config.momentum >= 1.0) {
    throw std::invalid_argument("train: momentum must be in [0, 1)");
  }
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");

  const ClassWeights weights = compute_class_weights(dataset, config.weight_scheme);
  ModelParameters model = init_model(dataset.feature_dim(), dataset.num_classes(),
                                     config.hidden_units, config.seed);

  ModelParameters velocity;
  velocity.head_weight = Eigen::MatrixXd::Zero(model.head_weight.rows(), model.head_weight.cols());
  velocity.head_bias = Eigen::VectorXd::Zero(model.head_bias.size());
  if (model.has_hidden()) {
    velocity.input_weight =
        Eigen::MatrixXd::Zero(model.input_weight.rows(), model.input_weight.cols());
    velocity.input_bias = Eigen::VectorXd::Zero(model.input_bias.size());
  }

  // Shuffling draws from its own stream; changing the epoch count never
  // perturbs the seed-determined initialization.
  Rng shuffle_rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<int> order(static_cast<std::size_t>(dataset.num_examples()));
  std::iota(order.begin(), order.end(), 0);

  TrainLog log;
  const int n = dataset.num_examples();
  std::vector<const MultiLabelExample*> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (int start = 0; start < n; start += config.batch_size, ++batch_index) {
      const int end = std::min(start + config.batch_size, n);
      batch.clear();
      for (int k = start; k < end; ++k) {
        batch.push_back(&dataset.examples()[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
      }
      const BatchGradients bg = batch_gradients(model, batch, config.loss, weights);
      if (!std::isfinite(bg.mean_loss)) throw TrainingDiverged(epoch, batch_index);
      epoch_loss += bg.mean_loss * static_cast<double>(end - start);

      velocity.head_weight = config.momentum * velocity.head_weight -
                             config.learning_rate * bg.grads.head_weight;
      velocity.head_bias =
          config.momentum * velocity.head_bias - config.learning_rate * bg.grads.head_bias;
      model.head_weight += velocity.head_weight;
      model.head_bias += velocity.head_bias;
      if (model.has_hidden()) {
        velocity.input_weight = config.momentum * velocity.input_weight -
                                config.learning_rate * bg.grads.input_weight;
        velocity.input_bias =
            config.momentum * velocity.input_bias - config.learning_rate * bg.grads.input_bias;
        model.input_weight += velocity.input_weight;
        model.input_bias += velocity.input_bias;
      }
    }
    log.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return TrainOutcome{std::move(model), std::move(log)};
}

MetricsReport evaluate(const ModelParameters& model, const Dataset& dataset) {
  if (dataset.num_examples() == 0) throw std::invalid_argument("evaluate: empty dataset");
  PredictionSet predictions;
  predictions.reserve(static_cast<std::size_t>(dataset.num_examples()));
  for (const auto& ex : dataset.examples()) predictions.push_back(forward(model, ex.features));
  return compute_metrics(predictions, dataset);
}

GradientCheckResult gradient_check(LossKind kind, const Eigen::VectorXd& scores,
                                   const std::vector<int>& labels, const ClassWeights& weights,
                                   double epsilon) {
  if (epsilon <= 0.0 || epsilon > 1e-3) {
    throw std::invalid_argument("gradient_check: epsilon must be in (0, 1e-3]");
  }

  GradientCheckResult result;
  std::vector<char> excluded(static_cast<std::size_t>(scores.size()), 0);
  if (kind == LossKind::kWarp) {
    // A +-epsilon step across a hinge boundary (1 + x_j - x_i = 0) or a rank
    // tie (x_l = x_i for a positive i) makes the central difference invalid.
    std::vector<char> is_positive(static_cast<std::size_t>(scores.size()), 0);
    for (int i : labels) is_positive[static_cast<std::size_t>(i)] = 1;
    for (int i : labels) {
      for (int j = 0; j < scores.size(); ++j) {
        if (!is_positive[static_cast<std::size_t>(j)] &&
            std::abs(1.0 + scores[j] - scores[i]) <= epsilon) {
          excluded[static_cast<std::size_t>(i)] = 1;
          excluded[static_cast<std::size_t>(j)] = 1;
        }
        if (j != i && std::abs(scores[j] - scores[i]) <= epsilon) {
          excluded[static_cast<std::size_t>(i)] = 1;
          excluded[static_cast<std::size_t>(j)] = 1;
        }
      }
    }
  }

  const LossResult analytic = compute_loss(kind, scores, labels, weights);
  Eigen::VectorXd probe = scores;
  for (int k = 0; k < scores.size(); ++k) {
    if (excluded[static_cast<std::size_t>(k)]) {
      result.excluded_coordinates.push_back(k);
      continue;
    }
    probe[k] = scores[k] + epsilon;
    const double up = compute_loss(kind, probe, labels, weights).value;
    probe[k] = scores[k] - epsilon;
    const double down = compute_loss(kind, probe, labels, weights).value;
    probe[k] = scores[k];

    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic.gradient[k];
    const double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    result.max_relative_error = std::max(result.max_relative_error, rel);
  }
  return result;
}

namespace {

double batch_loss_value(const ModelParameters& model,
                        const std::vector<const MultiLabelExample*>& batch, LossKind loss,
                        const ClassWeights& weights) {
  double total = 0.0;
  for (const MultiLabelExample* ex : batch) {
    total += compute_loss(loss, forward(model, ex->features), ex->labels, weights).value;
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

double parameter_gradient_max_error(const ModelParameters& model,
                                    const std::vector<const MultiLabelExample*>& batch,
                                    LossKind loss, const ClassWeights& weights, double epsilon) {
  const BatchGradients analytic = batch_gradients(model, batch, loss, weights);

  double max_rel = 0.0;
  ModelParameters probe = model;
  const auto check_block = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad) {
    for (Eigen::Index r = 0; r < param.rows(); ++r) {
      for (Eigen::Index c = 0; c < param.cols(); ++c) {
        const double saved = param(r, c);
        param(r, c) = saved + epsilon;
        const double up = batch_loss_value(probe, batch, loss, weights);
        param(r, c) = saved - epsilon;
        const double down = batch_loss_value(probe, batch, loss, weights);
        param(r, c) = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = grad(r, c);
        max_rel = std::max(max_rel,
                           std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
      }
    }
  };
  const auto check_vector = [&](Eigen::VectorXd& param, const Eigen::VectorXd& grad) {
    for (Eigen::Index k = 0; k < param.size(); ++k) {
      const double saved = param[k];
      param[k] = saved + epsilon;
      const double up = batch_loss_value(probe, batch, loss, weights);
      param[k] = saved - epsilon;
      const double down = batch_loss_value(probe, batch, loss, weights);
      param[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grad[k];
      max_rel = std::max(max_rel,
                         std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  };

  check_block(probe.head_weight, analytic.grads.head_weight);
  check_vector(probe.head_bias, analytic.grads.head_bias);
  if (model.has_hidden()) {
    check_block(probe.input_weight, analytic.grads.input_weight);
    check_vector(probe.input_bias, analytic.grads.input_bias);
  }
  return max_rel;
}

std::string TrainLog::to_csv() const {
  nlohmann::ordered_json num;
  std::string out = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < epoch_mean_loss.size(); ++e) {
    num = epoch_mean_loss[e];
    out += std::to_string(e) + "," + num.dump() + "\n";
  }
  return out;
}

void save_model(const ModelParameters& model, const std::string& path) {
  if (model.has_hidden()) {
    throw std::invalid_argument("model files hold linear models only");
  }
  const Eigen::Index f = model.head_weight.rows();
  const Eigen::Index c = model.head_weight.cols();
  Eigen::MatrixXd packed(f + 1, c);
  packed.topRows(f) = model.head_weight;
  packed.row(f) = model.head_bias.transpose();
  write_tensor(path, tensor_from_matrix(packed));
}

ModelParameters load_model(const std::string& path) {
  const Eigen::MatrixXd packed = matrix_from_tensor(read_tensor(path));
  if (packed.rows() < 2) throw std::runtime_error("model tensor too small: " + path);
  ModelParameters model;
  model.head_weight = packed.topRows(packed.rows() - 1);
  model.head_bias = packed.row(packed.rows() - 1).transpose();
  return model;
}

}  // namespace mlt
