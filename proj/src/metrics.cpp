#include "mlt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mlt {

namespace {

void check_aligned(const PredictionSet& predictions, const Dataset& dataset) {
  if (dataset.num_examples() == 0) throw std::invalid_argument("empty dataset");
  if (static_cast<int>(predictions.size()) != dataset.num_examples()) {
    throw std::invalid_argument("prediction count does not match example count");
  }
  for (const auto& p : predictions) {
    if (static_cast<int>(p.size()) != dataset.num_classes()) {
      throw std::invalid_argument("score vector length does not match class count");
    }
  }
}

// Item indices sorted by descending score; equal scores keep ascending
// item order (stable sort over an ascending index sequence).
std::vector<int> descending_order(const Eigen::VectorXd& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

double ap_over_order(const std::vector<int>& order, const std::vector<char>& is_positive,
                     int positive_count) {
  double sum = 0.0;
  int hits = 0;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (is_positive[static_cast<std::size_t>(order[pos])]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return sum / static_cast<double>(positive_count);
}

}  // namespace

double average_precision(const Eigen::VectorXd& scores, const std::vector<int>& positives) {
  if (positives.empty()) throw std::invalid_argument("average_precision: empty positive set");
  std::vector<char> is_positive(static_cast<std::size_t>(scores.size()), 0);
  for (int p : positives) {
    if (p < 0 || p >= scores.size()) {
      throw std::invalid_argument("average_precision: positive index out of range");
    }
    is_positive[static_cast<std::size_t>(p)] = 1;
  }
  return ap_over_order(descending_order(scores), is_positive, static_cast<int>(positives.size()));
}

double top_k_accuracy(const PredictionSet& predictions, const Dataset& dataset, int k) {
  check_aligned(predictions, dataset);
  if (k < 1) throw std::invalid_argument("top_k_accuracy: k must be >= 1");
  const int effective_k = std::min(k, dataset.num_classes());

  int hits = 0;
  for (int e = 0; e < dataset.num_examples(); ++e) {
    const auto order = descending_order(predictions[static_cast<std::size_t>(e)]);
    const auto& labels = dataset.examples()[static_cast<std::size_t>(e)].labels;
    for (int pos = 0; pos < effective_k; ++pos) {
      if (std::binary_search(labels.begin(), labels.end(), order[static_cast<std::size_t>(pos)])) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(dataset.num_examples());
}

double micro_map(const PredictionSet& predictions, const Dataset& dataset) {
  check_aligned(predictions, dataset);
  double sum = 0.0;
  for (int e = 0; e < dataset.num_examples(); ++e) {
    sum += average_precision(predictions[static_cast<std::size_t>(e)],
                             dataset.examples()[static_cast<std::size_t>(e)].labels);
  }
  return sum / static_cast<double>(dataset.num_examples());
}

double macro_map(const PredictionSet& predictions, const Dataset& dataset,
                 Eigen::VectorXd* per_class_ap) {
  check_aligned(predictions, dataset);
  const int num_classes = dataset.num_classes();
  const int num_examples = dataset.num_examples();

  Eigen::VectorXd ap = Eigen::VectorXd::Constant(num_classes,
                                                 std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int defined = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<char> is_positive(static_cast<std::size_t>(num_examples), 0);
    int positive_count = 0;
    for (int e = 0; e < num_examples; ++e) {
      const auto& labels = dataset.examples()[static_cast<std::size_t>(e)].labels;
      if (std::binary_search(labels.begin(), labels.end(), c)) {
        is_positive[static_cast<std::size_t>(e)] = 1;
        ++positive_count;
      }
    }
    if (positive_count == 0) continue;

    Eigen::VectorXd class_scores(num_examples);
    for (int e = 0; e < num_examples; ++e) {
      class_scores[e] = predictions[static_cast<std::size_t>(e)][c];
    }
    ap[c] = ap_over_order(descending_order(class_scores), is_positive, positive_count);
    sum += ap[c];
    ++defined;
  }
  if (defined == 0) throw std::invalid_argument("macro_map: no class has positive examples");
  if (per_class_ap != nullptr) *per_class_ap = ap;
  return sum / static_cast<double>(defined);
}

MetricsReport compute_metrics(const PredictionSet& predictions, const Dataset& dataset) {
  MetricsReport report;
  report.top1 = top_k_accuracy(predictions, dataset, 1);
  report.top5 = top_k_accuracy(predictions, dataset, 5);
  report.micro_map = micro_map(predictions, dataset);
  report.macro_map = macro_map(predictions, dataset, &report.per_class_ap);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["top1"] = report.top1;
  j["top5"] = report.top5;
  j["micro_map"] = report.micro_map;
  j["macro_map"] = report.macro_map;
  auto& arr = j["per_class_ap"] = nlohmann::ordered_json::array();
  for (Eigen::Index c = 0; c < report.per_class_ap.size(); ++c) {
    if (std::isnan(report.per_class_ap[c])) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(report.per_class_ap[c]);
    }
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
  nlohmann::ordered_json num;  // reuse the JSON double formatter for stable text
  std::string out = "metric,value\n";
  const auto fmt = [&num](double v) {
    num = v;
    return num.dump();
  };
  out += "top1," + fmt(report.top1) + "\n";
  out += "top5," + fmt(report.top5) + "\n";
  out += "micro_map," + fmt(report.micro_map) + "\n";
  out += "macro_map," + fmt(report.macro_map) + "\n";
  for (Eigen::Index c = 0; c < report.per_class_ap.size(); ++c) {
    out += "per_class_ap[" + std::to_string(c) + "],";
    if (!std::isnan(report.per_class_ap[c])) out += fmt(report.per_class_ap[c]);
    out += "\n";
  }
  return out;
}

}  // namespace mlt
