#include "mlt/dissect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace mlt {

ConceptCategory concept_category_from_string(const std::string& name) {
  if (name == "object") return ConceptCategory::kObject;
  if (name == "scene") return ConceptCategory::kScene;
  if (name == "part") return ConceptCategory::kPart;
  if (name == "material") return ConceptCategory::kMaterial;
  if (name == "texture") return ConceptCategory::kTexture;
  if (name == "color") return ConceptCategory::kColor;
  if (name == "action") return ConceptCategory::kAction;
  throw std::invalid_argument("unknown concept category: \"" + name + "\"");
}

std::string to_string(ConceptCategory category) {
  switch (category) {
    case ConceptCategory::kObject: return "object";
    case ConceptCategory::kScene: return "scene";
    case ConceptCategory::kPart: return "part";
    case ConceptCategory::kMaterial: return "material";
    case ConceptCategory::kTexture: return "texture";
    case ConceptCategory::kColor: return "color";
    case ConceptCategory::kAction: return "action";
  }
  return "?";
}

double unit_threshold(const UnitActivations& activations, double quantile) {
  if (quantile <= 0.0 || quantile > 0.5) {
    throw std::invalid_argument("quantile must be in (0, 0.5]");
  }
  std::vector<double> pooled;
  for (const auto& grid : activations.images) {
    pooled.insert(pooled.end(), grid.data(), grid.data() + grid.size());
  }
  if (pooled.empty()) throw std::invalid_argument("unit has no activations");

  std::sort(pooled.begin(), pooled.end());
  const std::size_t n = pooled.size();
  const std::size_t top = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(n)));
  return pooled[n - top - 1];
}

BoolGrid binarize_and_upsample(const Eigen::MatrixXd& grid, double threshold, int target_h,
                               int target_w) {
  const int h = static_cast<int>(grid.rows());
  const int w = static_cast<int>(grid.cols());
  if (h < 1 || w < 1) throw std::invalid_argument("empty activation grid");
  if (target_h < h || target_w < w) {
    throw std::invalid_argument("target resolution must not shrink the grid");
  }

  BoolGrid out(target_h, target_w);
  const double row_scale = target_h > 1 ? static_cast<double>(h - 1) / (target_h - 1) : 0.0;
  const double col_scale = target_w > 1 ? static_cast<double>(w - 1) / (target_w - 1) : 0.0;
  for (int r = 0; r < target_h; ++r) {
    const double src_r = r * row_scale;
    const int r0 = static_cast<int>(std::floor(src_r));
    const int r1 = std::min(r0 + 1, h - 1);
    const double fr = src_r - r0;
    for (int c = 0; c < target_w; ++c) {
      const double src_c = c * col_scale;
      const int c0 = static_cast<int>(std::floor(src_c));
      const int c1 = std::min(c0 + 1, w - 1);
      const double fc = src_c - c0;
      const double value = (1.0 - fr) * ((1.0 - fc) * grid(r0, c0) + fc * grid(r0, c1)) +
                           fr * ((1.0 - fc) * grid(r1, c0) + fc * grid(r1, c1));
      out(r, c) = value > threshold;
    }
  }
  return out;
}

double unit_concept_iou(const std::vector<BoolGrid>& unit_masks,
                        const std::vector<BoolGrid>& concept_masks) {
  if (unit_masks.size() != concept_masks.size()) {
    throw std::invalid_argument("mask lists must cover the same images");
  }
  std::int64_t intersection = 0;
  std::int64_t union_ = 0;
  for (std::size_t i = 0; i < unit_masks.size(); ++i) {
    const auto& a = unit_masks[i];
    const auto& b = concept_masks[i];
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw std::invalid_argument("mask shapes differ on image " + std::to_string(i));
    }
    intersection += (a && b).count();
    union_ += (a || b).count();
  }
  return union_ == 0 ? 0.0 : static_cast<double>(intersection) / static_cast<double>(union_);
}

InterpretationReport assign_concepts(const Eigen::MatrixXd& iou_table,
                                     const std::vector<Concept>& concepts, double iou_threshold,
                                     const std::vector<int>* unit_ids) {
  if (iou_table.cols() != static_cast<Eigen::Index>(concepts.size())) {
    throw std::invalid_argument("iou table columns must match concept count");
  }
  if (concepts.empty()) throw std::invalid_argument("concept list is empty");
  if (unit_ids != nullptr && static_cast<Eigen::Index>(unit_ids->size()) != iou_table.rows()) {
    throw std::invalid_argument("unit id list must match iou table rows");
  }

  // Columns ordered by concept id make the argmax tie-break explicit.
  std::vector<int> column_order(concepts.size());
  std::iota(column_order.begin(), column_order.end(), 0);
  std::sort(column_order.begin(), column_order.end(),
            [&](int a, int b) { return concepts[a].id < concepts[b].id; });

  InterpretationReport report;
  report.iou_threshold = iou_threshold;
  std::map<std::string, std::set<int>> assigned;
  for (Eigen::Index u = 0; u < iou_table.rows(); ++u) {
    int best_col = column_order.front();
    for (int col : column_order) {
      if (iou_table(u, col) > iou_table(u, best_col)) best_col = col;
    }
    UnitInterpretation unit;
    unit.unit_id = unit_ids != nullptr ? (*unit_ids)[static_cast<std::size_t>(u)]
                                       : static_cast<int>(u);
    unit.concept_id = concepts[static_cast<std::size_t>(best_col)].id;
    unit.category = concepts[static_cast<std::size_t>(best_col)].category;
    unit.iou = iou_table(u, best_col);
    unit.interpretable = unit.iou >= iou_threshold;
    if (unit.interpretable) {
      ++report.interpretable_units;
      assigned[to_string(unit.category)].insert(unit.concept_id);
    }
    report.units.push_back(unit);
  }
  for (const auto& [category, ids] : assigned) {
    report.concepts_per_category[category] = static_cast<int>(ids.size());
  }
  return report;
}

std::vector<int> probe_unit(const ModelParameters& model, int unit) {
  if (unit < 0 || unit >= model.head_weight.rows()) {
    throw std::invalid_argument("unit index " + std::to_string(unit) + " out of range [0, " +
                                std::to_string(model.head_weight.rows()) + ")");
  }
  const Eigen::VectorXd scores = model.head_weight.row(unit).transpose();
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

DissectResult run_dissection(const DissectInputs& inputs, double quantile, double iou_threshold) {
  if (inputs.units.empty()) throw std::invalid_argument("no units to dissect");
  if (inputs.mask_height < 1 || inputs.mask_width < 1) {
    throw std::invalid_argument("mask resolution not set");
  }
  const std::size_t image_count = inputs.image_ids.size();
  std::unordered_map<std::string, std::size_t> image_index;
  for (std::size_t i = 0; i < image_count; ++i) image_index.emplace(inputs.image_ids[i], i);
  if (image_index.size() != image_count) throw std::invalid_argument("duplicate image ids");

  for (const auto& unit : inputs.units) {
    if (unit.images.size() != image_count) {
      throw std::invalid_argument("unit " + std::to_string(unit.unit_id) +
                                  " activations unaligned with image set");
    }
  }

  // Per-concept mask stacks; images without a mask for a concept stay empty.
  const BoolGrid empty = BoolGrid::Constant(inputs.mask_height, inputs.mask_width, false);
  std::unordered_map<int, std::vector<BoolGrid>> concept_stacks;
  for (const auto& entry : inputs.concepts) {
    concept_stacks.emplace(entry.id, std::vector<BoolGrid>(image_count, empty));
  }
  for (const auto& mask : inputs.masks) {
    const auto img = image_index.find(mask.image_id);
    if (img == image_index.end()) {
      throw std::invalid_argument("mask references unknown image \"" + mask.image_id + "\"");
    }
    auto stack = concept_stacks.find(mask.concept_id);
    if (stack == concept_stacks.end()) {
      throw std::invalid_argument("mask references unknown concept " +
                                  std::to_string(mask.concept_id));
    }
    if (mask.mask.rows() != inputs.mask_height || mask.mask.cols() != inputs.mask_width) {
      throw std::invalid_argument("mask shape mismatch for image \"" + mask.image_id + "\"");
    }
    stack->second[img->second] = stack->second[img->second] || mask.mask;
  }

  DissectResult result;
  result.iou_table.resize(static_cast<Eigen::Index>(inputs.units.size()),
                          static_cast<Eigen::Index>(inputs.concepts.size()));
  std::vector<int> unit_ids;
  for (std::size_t u = 0; u < inputs.units.size(); ++u) {
    const auto& unit = inputs.units[u];
    unit_ids.push_back(unit.unit_id);
    const double threshold = unit_threshold(unit, quantile);
    std::vector<BoolGrid> unit_masks;
    unit_masks.reserve(image_count);
    for (const auto& grid : unit.images) {
      unit_masks.push_back(
          binarize_and_upsample(grid, threshold, inputs.mask_height, inputs.mask_width));
    }
    for (std::size_t c = 0; c < inputs.concepts.size(); ++c) {
      result.iou_table(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(c)) =
          unit_concept_iou(unit_masks, concept_stacks.at(inputs.concepts[c].id));
    }
  }
  result.report = assign_concepts(result.iou_table, inputs.concepts, iou_threshold, &unit_ids);
  return result;
}

}  // namespace mlt
