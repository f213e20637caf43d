#ifndef MLT_METRICS_HPP_
#define MLT_METRICS_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mlt/dataset.hpp"

namespace mlt {

// One raw score vector per dataset example, aligned by position.
using PredictionSet = std::vector<Eigen::VectorXd>;

struct MetricsReport {
  double top1 = 0.0;
  double top5 = 0.0;
  double micro_map = 0.0;
  double macro_map = 0.0;
  // Per-class retrieval AP; NaN marks classes with no positive examples.
  Eigen::VectorXd per_class_ap;
};

// AP of ranking classes by score for one example. Ties broken by ascending
// class index. `positives` must be nonempty.
double average_precision(const Eigen::VectorXd& scores, const std::vector<int>& positives);

// Fraction of examples whose top min(k, C) classes hit the label set.
double top_k_accuracy(const PredictionSet& predictions, const Dataset& dataset, int k);

// Mean over examples of per-example AP (class ranking per example).
double micro_map(const PredictionSet& predictions, const Dataset& dataset);

// Mean over classes with >= 1 positive of per-class AP (example ranking per
// class, ties by example order). Zero-positive classes are excluded and
// reported as NaN in per_class_ap.
double macro_map(const PredictionSet& predictions, const Dataset& dataset,
                 Eigen::VectorXd* per_class_ap = nullptr);

MetricsReport compute_metrics(const PredictionSet& predictions, const Dataset& dataset);

// Key set is exactly {top1, top5, micro_map, macro_map, per_class_ap};
// undefined per-class entries serialize as null (JSON) / empty (CSV).
std::string report_to_json(const MetricsReport& report);
std::string report_to_csv(const MetricsReport& report);

}  // namespace mlt

#endif  // MLT_METRICS_HPP_
