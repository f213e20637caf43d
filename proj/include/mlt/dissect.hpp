#ifndef MLT_DISSECT_HPP_
#define MLT_DISSECT_HPP_

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "mlt/mcam.hpp"
#include "mlt/trainer.hpp"

namespace mlt {

enum class ConceptCategory { kObject, kScene, kPart, kMaterial, kTexture, kColor, kAction };

ConceptCategory concept_category_from_string(const std::string& name);
std::string to_string(ConceptCategory category);

struct Concept {
  int id = 0;
  std::string name;
  ConceptCategory category = ConceptCategory::kObject;
};

// Binary segmentation of one concept in one image, at mask resolution.
struct ConceptMask {
  std::string image_id;
  int concept_id = 0;
  BoolGrid mask;
};

// Activations of one unit across the image set, all h x w (h, w may be
// smaller than the mask resolution).
struct UnitActivations {
  int unit_id = 0;
  std::vector<Eigen::MatrixXd> images;
};

// Smallest pooled activation value t such that the top `quantile` fraction
// of this unit's values (across all images) exceeds t: the order statistic
// at index n - floor(quantile * n) - 1 of the ascending sort.
double unit_threshold(const UnitActivations& activations, double quantile = 0.005);

// Corner-aligned bilinear upsampling to target_h x target_w, then strict
// > threshold.
BoolGrid binarize_and_upsample(const Eigen::MatrixXd& grid, double threshold, int target_h,
                               int target_w);

// Dataset-pooled IoU: sum of intersections over sum of unions; 0 when the
// total union is empty.
double unit_concept_iou(const std::vector<BoolGrid>& unit_masks,
                        const std::vector<BoolGrid>& concept_masks);

struct UnitInterpretation {
  int unit_id = 0;
  int concept_id = 0;
  ConceptCategory category = ConceptCategory::kObject;
  double iou = 0.0;
  bool interpretable = false;
};

struct InterpretationReport {
  std::vector<UnitInterpretation> units;
  // Distinct concepts assigned to interpretable units, per category.
  std::map<std::string, int> concepts_per_category;
  int interpretable_units = 0;
  double iou_threshold = 0.0;
};

// Labels each unit with its argmax-IoU concept (ties to the lowest concept
// id); a unit is interpretable iff its best IoU >= iou_threshold.
// iou_table is units x concepts, columns aligned with `concepts`.
InterpretationReport assign_concepts(const Eigen::MatrixXd& iou_table,
                                     const std::vector<Concept>& concepts,
                                     double iou_threshold = 0.04,
                                     const std::vector<int>* unit_ids = nullptr);

// Classes ranked by the output obtained from a one-hot input at `unit`
// with all biases zeroed: the argsort of the final head's weight row,
// descending, ties by class index.
std::vector<int> probe_unit(const ModelParameters& model, int unit);

// Full pipeline: per-unit thresholds, binarized/upsampled activation masks,
// pooled IoU against every concept, then assignment.
struct DissectInputs {
  std::vector<std::string> image_ids;     // order matches activation image axis
  std::vector<UnitActivations> units;
  std::vector<Concept> concepts;
  std::vector<ConceptMask> masks;
  int mask_height = 0;
  int mask_width = 0;
};

struct DissectResult {
  Eigen::MatrixXd iou_table;  // units x concepts
  InterpretationReport report;
};

DissectResult run_dissection(const DissectInputs& inputs, double quantile = 0.005,
                             double iou_threshold = 0.04);

}  // namespace mlt

#endif  // MLT_DISSECT_HPP_
