#include "mlt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlt {

namespace {

double softplus(double z) {
  // log(1 + e^z) without overflow for large |z|.
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<char> positive_mask(int num_classes, const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("label set must be nonempty");
  std::vector<char> mask(static_cast<std::size_t>(num_classes), 0);
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw std::invalid_argument("label index " + std::to_string(label) + " out of range");
    }
    mask[static_cast<std::size_t>(label)] = 1;
  }
  return mask;
}

void check_weights(const ClassWeights& weights, int num_classes) {
  if (weights.size() != num_classes) {
    throw std::invalid_argument("weight vector length " + std::to_string(weights.size()) +
                                " does not match class count " + std::to_string(num_classes));
  }
}

// log(1 + sum_k e^{deltas[k]}) via a shift by max(0, max delta); the "+1"
// enters as a virtual zero exponent.
double log1p_sum_exp(const std::vector<double>& deltas) {
  double m = 0.0;
  for (double d : deltas) m = std::max(m, d);
  double sum = std::exp(-m);  // the virtual zero exponent
  for (double d : deltas) sum += std::exp(d - m);
  return m + std::log(sum);
}

}  // namespace

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "bce") return LossKind::kBce;
  if (name == "warp") return LossKind::kWarp;
  if (name == "lsep") return LossKind::kLsep;
  if (name == "wlsep") return LossKind::kWlsep;
  throw std::invalid_argument("unknown loss: \"" + name + "\"");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kBce: return "bce";
    case LossKind::kWarp: return "warp";
    case LossKind::kLsep: return "lsep";
    case LossKind::kWlsep: return "wlsep";
  }
  return "?";
}

int rank_of(const Eigen::VectorXd& scores, int index) {
  if (index < 0 || index >= scores.size()) {
    throw std::invalid_argument("rank_of: class index out of range");
  }
  const double x = scores[index];
  int greater = 0;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (scores[j] > x) ++greater;
  }
  return 1 + greater;
}

double rank_weight(int rank) {
  if (rank < 1) throw std::invalid_argument("rank_weight: rank must be >= 1");
  double h = 0.0;
  for (int k = 1; k <= rank; ++k) h += 1.0 / static_cast<double>(k);
  return h;
}

LossResult bce_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                    const ClassWeights& weights) {
  const int num_classes = static_cast<int>(scores.size());
  const auto is_positive = positive_mask(num_classes, labels);
  check_weights(weights, num_classes);

  LossResult result;
  result.gradient = Eigen::VectorXd::Zero(num_classes);
  double total = 0.0;
  for (int i = 0; i < num_classes; ++i) {
    const double x = scores[i];
    const double w = weights[i];
    const double y = is_positive[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    // -log p = softplus(-x), -log(1-p) = softplus(x)
    total += w * softplus(y > 0.5 ? -x : x);
    result.gradient[i] = w * (sigmoid(x) - y) / static_cast<double>(num_classes);
  }
  result.value = total / static_cast<double>(num_classes);
  return result;
}

LossResult warp_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                     const ClassWeights& weights) {
  const int num_classes = static_cast<int>(scores.size());
  const auto is_positive = positive_mask(num_classes, labels);
  check_weights(weights, num_classes);
  if (static_cast<int>(labels.size()) >= num_classes) {
    throw std::invalid_argument("warp_loss: no negative classes");
  }

  const double inv_count = 1.0 / static_cast<double>(labels.size());
  LossResult result;
  result.gradient = Eigen::VectorXd::Zero(num_classes);
  for (int i : labels) {
    const double scale = weights[i] * rank_weight(rank_of(scores, i)) * inv_count;
    for (int j = 0; j < num_classes; ++j) {
      if (is_positive[static_cast<std::size_t>(j)]) continue;
      const double hinge = 1.0 + scores[j] - scores[i];
      if (hinge > 0.0) {
        result.value += scale * hinge;
        result.gradient[j] += scale;
        result.gradient[i] -= scale;
      }
    }
  }
  return result;
}

LossResult lsep_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  const int num_classes = static_cast<int>(scores.size());
  const auto is_positive = positive_mask(num_classes, labels);

  std::vector<double> deltas;
  deltas.reserve(labels.size() * static_cast<std::size_t>(num_classes - labels.size()));
  for (int i : labels) {
    for (int j = 0; j < num_classes; ++j) {
      if (!is_positive[static_cast<std::size_t>(j)]) deltas.push_back(scores[j] - scores[i]);
    }
  }

  LossResult result;
  result.gradient = Eigen::VectorXd::Zero(num_classes);
  result.value = log1p_sum_exp(deltas);
  // e^{delta} / Z = e^{delta - log Z}; always <= 1 since value >= max delta.
  for (int i : labels) {
    for (int j = 0; j < num_classes; ++j) {
      if (is_positive[static_cast<std::size_t>(j)]) continue;
      const double r = std::exp(scores[j] - scores[i] - result.value);
      result.gradient[j] += r;
      result.gradient[i] -= r;
    }
  }
  return result;
}

LossResult wlsep_loss(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                      const ClassWeights& weights) {
  const int num_classes = static_cast<int>(scores.size());
  const auto is_positive = positive_mask(num_classes, labels);
  check_weights(weights, num_classes);

  const double inv_count = 1.0 / static_cast<double>(labels.size());
  LossResult result;
  result.gradient = Eigen::VectorXd::Zero(num_classes);
  std::vector<double> deltas;
  for (int i : labels) {
    deltas.clear();
    for (int j = 0; j < num_classes; ++j) {
      if (!is_positive[static_cast<std::size_t>(j)]) deltas.push_back(scores[j] - scores[i]);
    }
    const double term = log1p_sum_exp(deltas);
    result.value += weights[i] * inv_count * term;
    for (int j = 0; j < num_classes; ++j) {
      if (is_positive[static_cast<std::size_t>(j)]) continue;
      const double r = std::exp(scores[j] - scores[i] - term);
      result.gradient[j] += weights[i] * inv_count * r;
      result.gradient[i] -= weights[i] * inv_count * r;
    }
  }
  return result;
}

LossResult compute_loss(LossKind kind, const Eigen::VectorXd& scores,
                        const std::vector<int>& labels, const ClassWeights& weights) {
  switch (kind) {
    case LossKind::kBce: return bce_loss(scores, labels, weights);
    case LossKind::kWarp: return warp_loss(scores, labels, weights);
    case LossKind::kLsep: return lsep_loss(scores, labels);
    case LossKind::kWlsep: return wlsep_loss(scores, labels, weights);
  }
  throw std::invalid_argument("unknown loss kind");
}

}  // namespace mlt
