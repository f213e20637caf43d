#include "mlt/mcam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlt {

namespace {

void check_uniform_shape(const std::vector<ActivationMap>& maps) {
  if (maps.empty()) throw std::invalid_argument("need at least one activation map");
  const auto rows = maps.front().grid.rows();
  const auto cols = maps.front().grid.cols();
  if (rows < 1 || cols < 1) throw std::invalid_argument("activation maps must be non-empty");
  for (const auto& m : maps) {
    if (m.grid.rows() != rows || m.grid.cols() != cols) {
      throw std::invalid_argument("activation maps must share one shape");
    }
  }
}

// Cosine distance over flattened grids; any all-zero map is at distance 0
// to everything (avoids 0/0 and keeps degenerate maps untouched).
double cosine_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double dot = (a.array() * b.array()).sum();
  return 1.0 - dot / (na * nb);
}

// Mirror index into [0, n) without repeating the edge sample.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

}  // namespace

ActivationMap compute_cam(const FeatureStack& features, const Eigen::MatrixXd& head_weights,
                          int class_index) {
  if (features.empty()) throw std::invalid_argument("feature stack is empty");
  if (static_cast<Eigen::Index>(features.size()) != head_weights.rows()) {
    throw std::invalid_argument("head weight rows must equal feature map count");
  }
  if (class_index < 0 || class_index >= head_weights.cols()) {
    throw std::invalid_argument("class index out of range");
  }
  const auto rows = features.front().rows();
  const auto cols = features.front().cols();
  Eigen::MatrixXd cam = Eigen::MatrixXd::Zero(rows, cols);
  for (std::size_t d = 0; d < features.size(); ++d) {
    if (features[d].rows() != rows || features[d].cols() != cols) {
      throw std::invalid_argument("feature maps must share one shape");
    }
    cam += head_weights(static_cast<Eigen::Index>(d), class_index) * features[d];
  }
  return ActivationMap{std::move(cam), class_index};
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& grid) {
  const double lo = grid.minCoeff();
  const double hi = grid.maxCoeff();
  if (hi == lo) return Eigen::MatrixXd::Zero(grid.rows(), grid.cols());
  return (grid.array() - lo) / (hi - lo);
}

std::vector<ActivationMap> separate_regions(const std::vector<ActivationMap>& cams,
                                            const SeparationParams& params) {
  check_uniform_shape(cams);

  std::vector<ActivationMap> out;
  out.reserve(cams.size());
  for (const auto& cam : cams) out.push_back({minmax_normalize(cam.grid), cam.class_id});

  const std::size_t n = out.size();
  const auto rows = out.front().grid.rows();
  const auto cols = out.front().grid.cols();
  std::vector<BoolGrid> erase(n, BoolGrid::Constant(rows, cols, false));

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (cosine_distance(out[a].grid, out[b].grid) <= params.cosine_threshold) continue;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          const double va = out[a].grid(r, c);
          const double vb = out[b].grid(r, c);
          if (std::abs(va - vb) <= params.similarity_delta &&
              std::min(va, vb) >= params.activation_floor) {
            erase[a](r, c) = true;
            erase[b](r, c) = true;
          }
        }
      }
    }
  }
  for (std::size_t m = 0; m < n; ++m) {
    out[m].grid = erase[m].select(Eigen::MatrixXd::Zero(rows, cols), out[m].grid);
  }
  return out;
}

RegionMap compose_multi_cam(const std::vector<ActivationMap>& separated, int kernel_size,
                            double sigma) {
  check_uniform_shape(separated);
  const auto rows = separated.front().grid.rows();
  const auto cols = separated.front().grid.cols();

  // Maps ordered by class id (list position when untagged) so max ties go
  // to the lowest class index.
  std::vector<std::pair<int, const Eigen::MatrixXd*>> by_class;
  by_class.reserve(separated.size());
  for (std::size_t m = 0; m < separated.size(); ++m) {
    by_class.emplace_back(separated[m].class_id.value_or(static_cast<int>(m)),
                          &separated[m].grid);
  }
  std::sort(by_class.begin(), by_class.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  RegionMap region;
  Eigen::MatrixXd composite = *by_class.front().second;
  for (const auto& [class_id, grid] : by_class) {
    composite = composite.cwiseMax(*grid);
    if (!region.per_class_masks.emplace(class_id, BoolGrid::Constant(rows, cols, false)).second) {
      throw std::invalid_argument("duplicate class id " + std::to_string(class_id));
    }
  }

  Eigen::MatrixXi owner = Eigen::MatrixXi::Constant(rows, cols, -1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (composite(r, c) <= 0.0) continue;
      for (const auto& [class_id, grid] : by_class) {
        if ((*grid)(r, c) == composite(r, c)) {
          region.per_class_masks[class_id](r, c) = true;
          owner(r, c) = class_id;
          break;
        }
      }
    }
  }

  region.boundaries = BoolGrid::Constant(rows, cols, false);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (composite(r, c) != 0.0) continue;
      int first = -1;
      bool multiple = false;
      for (Eigen::Index dr = -1; dr <= 1 && !multiple; ++dr) {
        for (Eigen::Index dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const Eigen::Index rr = r + dr;
          const Eigen::Index cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          const int neighbour = owner(rr, cc);
          if (neighbour < 0) continue;
          if (first < 0) {
            first = neighbour;
          } else if (neighbour != first) {
            multiple = true;
            break;
          }
        }
      }
      region.boundaries(r, c) = multiple;
    }
  }

  region.composite = gaussian_smooth(composite, kernel_size, sigma);
  return region;
}

Eigen::MatrixXd gaussian_smooth(const Eigen::MatrixXd& grid, int kernel_size, double sigma) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw std::invalid_argument("kernel_size must be odd and positive");
  }
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");

  const int radius = kernel_size / 2;
  Eigen::MatrixXd kernel(kernel_size, kernel_size);
  for (int dr = -radius; dr <= radius; ++dr) {
    for (int dc = -radius; dc <= radius; ++dc) {
      kernel(dr + radius, dc + radius) =
          std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
    }
  }
  kernel /= kernel.sum();

  const auto rows = grid.rows();
  const auto cols = grid.cols();
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (int dr = -radius; dr <= radius; ++dr) {
        for (int dc = -radius; dc <= radius; ++dc) {
          const Eigen::Index rr = reflect_index(r + dr, rows);
          const Eigen::Index cc = reflect_index(c + dc, cols);
          acc += kernel(dr + radius, dc + radius) * grid(rr, cc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace mlt
