#ifndef MLT_MCAM_HPP_
#define MLT_MCAM_HPP_

#include <Eigen/Core>
#include <map>
#include <optional>
#include <vector>

namespace mlt {

using BoolGrid = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// One spatial activation grid, optionally tagged with the class it maps.
struct ActivationMap {
  Eigen::MatrixXd grid;  // H x W
  std::optional<int> class_id;
};

// D feature maps of uniform shape (final convolutional layer stand-in).
using FeatureStack = std::vector<Eigen::MatrixXd>;

struct SeparationParams {
  // Pairs at cosine distance <= threshold count as the same region and are
  // left untouched (e.g. emptying vs pouring).
  double cosine_threshold = 1e-4;
  double similarity_delta = 0.1;
  double activation_floor = 0.2;
};

struct RegionMap {
  Eigen::MatrixXd composite;              // max-pooled, then Gaussian smoothed
  std::map<int, BoolGrid> per_class_masks;  // pairwise disjoint
  BoolGrid boundaries;
};

// CAM_c(p) = sum_d head_weights(d, c) * features[d](p).
ActivationMap compute_cam(const FeatureStack& features, const Eigen::MatrixXd& head_weights,
                          int class_index);

// (v - min) / (max - min); constant grids map to all-zero.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& grid);

// Min-max normalizes every map, then for each unordered pair whose cosine
// distance exceeds the threshold zeroes pixels with similar strong values
// in both maps. Erase sets for all pairs are collected against the
// normalized inputs first, then applied, so the result does not depend on
// pair order.
std::vector<ActivationMap> separate_regions(const std::vector<ActivationMap>& cams,
                                            const SeparationParams& params = {});

// Max-pools the separated maps into a composite, assigns each strictly
// positive pixel to the map attaining the maximum (ties to the lowest
// class id), marks zero pixels adjacent to two or more distinct masks as
// boundaries, and smooths the composite.
RegionMap compose_multi_cam(const std::vector<ActivationMap>& separated, int kernel_size = 5,
                            double sigma = 1.0);

// 2-D convolution with a normalized Gaussian kernel, reflect padding.
Eigen::MatrixXd gaussian_smooth(const Eigen::MatrixXd& grid, int kernel_size = 5,
                                double sigma = 1.0);

}  // namespace mlt

#endif  // MLT_MCAM_HPP_
