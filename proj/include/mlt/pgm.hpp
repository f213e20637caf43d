#ifndef MLT_PGM_HPP_
#define MLT_PGM_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>

#include "mlt/mcam.hpp"

namespace mlt {

// Binary (P5) 8-bit grayscale PGM.
struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(c)];
  }
};

void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_pgm(const std::string& path);

// Min-max scales the grid to 0..255 (constant grids become all-zero).
GrayImage gray_from_grid(const Eigen::MatrixXd& grid);
// Mask pixels become 255, the rest 0.
GrayImage gray_from_mask(const BoolGrid& mask);
// Nonzero pixels are true.
BoolGrid mask_from_gray(const GrayImage& image);

}  // namespace mlt

#endif  // MLT_PGM_HPP_
